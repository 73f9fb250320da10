//! Closed-form scattering solutions for piecewise-exponential control
//! profiles: the Bessel-quotient form on an exponential switch-off window,
//! the stopped plateau once the field is off, the trigonometric form after
//! an instantaneous restore, and the step-off tail.

use super::special::{bessel_j, ln_half, recip_gamma};
use super::{
    constant_background, k_of_lambda, sqrt_branch, Method, Region, RegionForm,
    ScatteringSolution,
};
use crate::error::{Error, Result};
use crate::matrix3::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Exponent budget before `(x/2)^{±γ}` style factors overflow f64.
const EXPONENT_BUDGET: f64 = 600.0;

/// Scattering data on the window where `Ω(τ) = Ω₀ e^{−ατ}`, expressed as a
/// quotient of Bessel functions of complex order `γ = (α + iλ)/(2α)` in the
/// argument `x(τ) = −Ω₀ e^{−ατ}/(2α)`.
#[derive(Clone, Debug)]
pub struct BesselRegion {
    pub lambda: C64,
    pub omega0: f64,
    pub alpha: f64,
    pub gamma: C64,
    /// Matching constant fixing `w(0) = w₀` on the incoming background.
    pub c1: C64,
    /// Denominator at the window entry, `c1·J_{−γ}(x₀) + J_γ(x₀)`.
    pub den0: C64,
    /// τ → ∞ limit of z (exact for an uncut decay; for a cut window it is
    /// the printed plateau that discards the tail beyond the cut).
    pub z2: C64,
    /// Beyond this τ the Bessel quotient is evaluated by its asymptote.
    pub tau_cap: f64,
    /// Whether w → 0 and z → z₂ as τ → ∞ (true iff Im λ < 0).
    pub decays: bool,
}

impl BesselRegion {
    pub fn new(lambda: C64, omega0: f64, alpha: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !(alpha > 0.0) {
            return Err(Error::validation(
                "exponential switch-off needs omega0 > 0 and alpha > 0",
            ));
        }
        let x0 = -omega0 / (2.0 * alpha);
        if x0.abs() > 50.0 {
            return Err(Error::numeric(
                "switch-off is too slow for the series evaluation (|omega0/(2 alpha)| > 50); \
                 use the ODE solver",
            ));
        }
        let gamma = (alpha + I * lambda) / (2.0 * alpha);
        let nearest_int = gamma.re.round();
        if (gamma - nearest_int).norm() < 1e-9 {
            return Err(Error::validation(
                "resonant spectral point: the Bessel order pair degenerates at integer gamma; \
                 use the ODE solver",
            ));
        }
        let (w0, _) = constant_background(lambda, omega0, 0.0, 0.0)?;
        let x0c = C64::new(x0, 0.0);
        let jg = bessel_j(gamma, x0c)?;
        let jmg = bessel_j(-gamma, x0c)?;
        let jgm1 = bessel_j(gamma - 1.0, x0c)?;
        let j1mg = bessel_j(1.0 - gamma, x0c)?;
        let c1_den = j1mg + I * w0 * jmg;
        if c1_den.norm() == 0.0 {
            return Err(Error::numeric(
                "degenerate matching at the switch-off entry (zero denominator)",
            ));
        }
        let c1 = (-I * w0 * jg + jgm1) / c1_den;
        let den0 = c1 * jmg + jg;
        if den0.norm() == 0.0 {
            return Err(Error::numeric("scattering pole at the switch-off entry"));
        }
        // z₂ = ln[ c1 (x₀/2)^{−γ} / Γ(1−γ) / den0 ], evaluated as one
        // principal log of the full product so the real part is exact and
        // the imaginary part is a consistent branch.
        let pow_exp = -gamma * ln_half(x0c);
        if pow_exp.re.abs() > EXPONENT_BUDGET {
            return Err(Error::numeric(
                "plateau constant overflows for this spectral point",
            ));
        }
        let z2 = (c1 * pow_exp.exp() * recip_gamma(1.0 - gamma) / den0).ln();
        // |x(τ)/2| shrinks like e^{−ατ}; stop trusting the series once the
        // dominant (x/2)^{±γ} factors approach the f64 exponent range.
        let ln_half_x0 = (x0.abs() / 2.0).ln();
        let tau_cap = (EXPONENT_BUDGET / (gamma.re.abs() + 2.0) + ln_half_x0) / alpha;
        Ok(BesselRegion {
            lambda,
            omega0,
            alpha,
            gamma,
            c1,
            den0,
            z2,
            tau_cap,
            decays: lambda.im < 0.0,
        })
    }

    /// Window argument `x(τ) = −Ω₀ e^{−ατ} / (2α)`.
    pub fn argument(&self, tau: f64) -> f64 {
        -self.omega0 * (-self.alpha * tau).exp() / (2.0 * self.alpha)
    }

    pub fn eval(&self, tau: f64) -> Result<(C64, C64)> {
        if tau > self.tau_cap {
            if self.decays {
                return Ok((C64::new(0.0, 0.0), self.z2));
            }
            return Err(Error::numeric(format!(
                "Bessel form not evaluable at tau = {tau}: the quotient grows without a \
                 plateau for Im lambda >= 0",
            )));
        }
        let x = C64::new(self.argument(tau), 0.0);
        let g = self.gamma;
        let num = self.c1 * bessel_j(1.0 - g, x)? - bessel_j(g - 1.0, x)?;
        let den = self.c1 * bessel_j(-g, x)? + bessel_j(g, x)?;
        if den.norm() == 0.0 {
            return Err(Error::numeric(format!(
                "scattering pole inside the switch-off window at tau = {tau}"
            )));
        }
        let w = I * num / den;
        let z = -self.alpha * g * tau + (den / self.den0).ln();
        Ok((w, z))
    }
}

/// Scattering data after the control field is restored to Ω₀ at τ = T with
/// `w(T) = 0`: a quotient of trigonometric functions of `u = S(τ−T)/2`,
/// `S = √(λ² + Ω₀²)`.
#[derive(Clone, Debug)]
pub struct TangentRegion {
    pub lambda: C64,
    pub omega0: f64,
    pub t_on: f64,
    pub s_freq: C64,
    /// `(S − λ)/(S + λ)`, the weight enforcing w(T) = 0.
    pub c3: C64,
    /// z value carried into the region, `z(T)`.
    pub z_entry: C64,
}

impl TangentRegion {
    pub fn new(lambda: C64, omega0: f64, t_on: f64, z_entry: C64) -> Result<Self> {
        if !(omega0 > 0.0) {
            return Err(Error::validation("restored background needs omega0 > 0"));
        }
        let s = sqrt_branch(lambda, omega0);
        if s.norm() == 0.0 {
            return Err(Error::validation(
                "spectral point sits at the branch point lambda = ±i omega0",
            ));
        }
        Ok(TangentRegion {
            lambda,
            omega0,
            t_on,
            s_freq: s,
            c3: (s - lambda) / (s + lambda),
            z_entry,
        })
    }

    pub fn eval(&self, tau: f64) -> Result<(C64, C64)> {
        let dt = tau - self.t_on;
        let u = self.s_freq * dt * 0.5;
        let (sin_u, cos_u) = (u.sin(), u.cos());
        let den = self.lambda * sin_u - I * self.s_freq * cos_u;
        if den.norm() == 0.0 {
            return Err(Error::numeric(format!(
                "scattering pole on the restored background at tau = {tau}"
            )));
        }
        let w = self.omega0 * sin_u / den;
        // z − z_entry = ln[(c3 e^{−i(λ+S)dt/2} + e^{−i(λ−S)dt/2})/(c3 + 1)],
        // computed with the larger exponential factored out.
        let a = -I * (self.lambda + self.s_freq) * dt * 0.5;
        let b = -I * (self.lambda - self.s_freq) * dt * 0.5;
        let m = a.re.max(b.re);
        let mixture = self.c3 * (a - m).exp() + (b - m).exp();
        if mixture.norm() == 0.0 || (self.c3 + 1.0).norm() == 0.0 {
            return Err(Error::numeric(format!(
                "log-phase pole on the restored background at tau = {tau}"
            )));
        }
        let z = self.z_entry + mixture.ln() + m - (self.c3 + 1.0).ln();
        Ok((w, z))
    }
}

/// Closed form for `Ω(τ) = Ω₀ e^{−ατ}` on τ ≥ 0 (uncut decay), evaluated at
/// one point.
pub fn exponential_background(lambda: C64, omega0: f64, alpha: f64, tau: f64) -> Result<(C64, C64)> {
    if tau < 0.0 {
        return Err(Error::validation(
            "the switch-off form applies for tau >= 0; the constant-background fixed point \
             holds before the switch",
        ));
    }
    BesselRegion::new(lambda, omega0, alpha)?.eval(tau)
}

/// Full uncut exponential decay: constant background for τ ≤ 0, Bessel form
/// beyond.
pub fn exponential_decay_scenario(
    lambda: C64,
    omega0: f64,
    alpha: f64,
) -> Result<ScatteringSolution> {
    let (w0, z_rate) = constant_background(lambda, omega0, 0.0, 0.0)?;
    let bessel = BesselRegion::new(lambda, omega0, alpha)?;
    let z_plateau = bessel.decays.then_some(bessel.z2);
    let regions = vec![
        Region {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
            form: RegionForm::Constant {
                w0,
                z_rate,
                z_off: C64::new(0.0, 0.0),
            },
        },
        Region {
            lo: 0.0,
            hi: f64::INFINITY,
            form: RegionForm::Bessel(bessel),
        },
    ];
    Ok(ScatteringSolution::from_regions(
        lambda,
        Method::ClosedForm,
        k_of_lambda(lambda, omega0),
        z_plateau,
        regions,
    ))
}

/// Printed piecewise closed form for the switch-off/dark/restore profile:
/// constant for τ ≤ 0, Bessel on (0, t1], stopped plateau on the dark
/// window, trigonometric form after the restore at `t_on` (when given).
///
/// On the dark window the printed form is `w ≡ 0`, `z ≡ z₂` with `z₂` the
/// τ → ∞ limit of the uncut decay; it therefore differs from the exact
/// Cauchy evolution of the cut profile by the O(e^{−α t1}) tail the cut
/// discards. Both satisfy the flow equations on the window.
pub fn piecewise_scenario(
    lambda: C64,
    omega0: f64,
    alpha: f64,
    t1: f64,
    t_on: Option<f64>,
) -> Result<ScatteringSolution> {
    if !(t1 > 0.0) || !t1.is_finite() {
        return Err(Error::validation("switch-off cut t1 must be positive and finite"));
    }
    if let Some(t) = t_on {
        if !(t > t1) || !t.is_finite() {
            return Err(Error::validation(
                "restore time t_on must be finite and later than the cut t1",
            ));
        }
    }
    let (w0, z_rate) = constant_background(lambda, omega0, 0.0, 0.0)?;
    let bessel = BesselRegion::new(lambda, omega0, alpha)?;
    let z2 = bessel.z2;
    let mut regions = vec![
        Region {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
            form: RegionForm::Constant {
                w0,
                z_rate,
                z_off: C64::new(0.0, 0.0),
            },
        },
        Region {
            lo: 0.0,
            hi: t1,
            form: RegionForm::Bessel(bessel),
        },
        Region {
            lo: t1,
            hi: t_on.unwrap_or(f64::INFINITY),
            form: RegionForm::Stopped { z2 },
        },
    ];
    if let Some(t) = t_on {
        regions.push(Region {
            lo: t,
            hi: f64::INFINITY,
            form: RegionForm::Tangent(TangentRegion::new(lambda, omega0, t, z2)?),
        });
    }
    Ok(ScatteringSolution::from_regions(
        lambda,
        Method::ClosedForm,
        k_of_lambda(lambda, omega0),
        Some(z2),
        regions,
    ))
}

/// Instantaneous switch-off at τ = 0: w rings down freely, z freezes at 0.
pub fn step_off_scenario(lambda: C64, omega0: f64) -> Result<ScatteringSolution> {
    let (w0, z_rate) = constant_background(lambda, omega0, 0.0, 0.0)?;
    let regions = vec![
        Region {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
            form: RegionForm::Constant {
                w0,
                z_rate,
                z_off: C64::new(0.0, 0.0),
            },
        },
        Region {
            lo: 0.0,
            hi: f64::INFINITY,
            form: RegionForm::StepTail {
                w_edge: w0,
                tau_edge: 0.0,
                z_const: C64::new(0.0, 0.0),
                lambda,
            },
        },
    ];
    Ok(ScatteringSolution::from_regions(
        lambda,
        Method::ClosedForm,
        k_of_lambda(lambda, omega0),
        Some(C64::new(0.0, 0.0)),
        regions,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::BackgroundProfile;
    use crate::scattering::{riccati_rhs, z_rhs};
    use std::f64::consts::PI;

    const OMEGA0: f64 = 3.0;
    const ALPHA: f64 = 4.0;

    fn im(x: f64) -> C64 {
        C64::new(0.0, x)
    }

    #[test]
    fn matching_constant_and_plateau_match_frozen_values() {
        let b = BesselRegion::new(im(-4.1), OMEGA0, ALPHA).unwrap();
        assert!((b.gamma - C64::new(1.0125, 0.0)).norm() < 1e-14);
        assert!(
            (b.c1 - C64::new(1.004_917_422_961_266_6, 0.079_088_716_404_848_42)).norm() < 1e-11
        );
        assert!((b.z2.re - (-0.120_585_401_506_299_7)).abs() < 1e-11);
        assert!(b.z2.im.abs() < 1e-11);
        assert!(b.decays);

        let b_up = BesselRegion::new(im(4.1), OMEGA0, ALPHA).unwrap();
        assert!((b_up.gamma - C64::new(-0.0125, 0.0)).norm() < 1e-14);
        assert!(
            (b_up.c1 - C64::new(-0.726_684_187_272_750_3, 0.057_191_285_860_825_92)).norm()
                < 1e-11
        );
        assert!((b_up.z2.re - 0.929_706_594_774_484_6).abs() < 1e-11);
        // The plateau constant is real-negative in e^z terms: the log's
        // imaginary part sits on the ±π branch boundary.
        assert!((b_up.z2.im.abs() - PI).abs() < 1e-9);
        assert!(!b_up.decays);
    }

    #[test]
    fn window_entry_is_continuous_with_the_constant_background() {
        for lam in [im(-4.1), im(4.1), C64::new(0.8, -2.6)] {
            let b = BesselRegion::new(lam, OMEGA0, ALPHA).unwrap();
            let (w_at_0, z_at_0) = b.eval(0.0).unwrap();
            let (w0, _) = constant_background(lam, OMEGA0, 0.0, 0.0).unwrap();
            assert!((w_at_0 - w0).norm() < 1e-12, "w mismatch at entry for {lam}");
            assert!(z_at_0.norm() < 1e-12, "z must vanish at the entry");
        }
    }

    #[test]
    fn cut_discards_a_small_tail() {
        let b = BesselRegion::new(im(-4.1), OMEGA0, ALPHA).unwrap();
        let (w_t1, z_t1) = b.eval(1.0).unwrap();
        assert!((w_t1.norm() - 0.034_788_066_555_457_024).abs() < 1e-12);
        let jump = b.z2 - z_t1;
        assert!((jump.re - (-0.000_129_649_328_037_181_1)).abs() < 1e-12);
        assert!(jump.im.abs() < 1e-11);
    }

    #[test]
    fn mid_window_values_match_frozen_references() {
        let b = BesselRegion::new(im(-4.1), OMEGA0, ALPHA).unwrap();
        let (w, z) = b.eval(0.5).unwrap();
        assert!((w - im(0.165_255_821_753_335_09)).norm() < 1e-11);
        assert!((z - C64::new(-0.115_797_769_922_760_77, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn bessel_window_satisfies_both_flows() {
        // Central differences of w and of e^z against the flow RHS.
        let h = 1e-4;
        for lam in [im(-4.1), im(4.1)] {
            let b = BesselRegion::new(lam, OMEGA0, ALPHA).unwrap();
            for tau in [0.15, 0.5, 0.85] {
                let om = |t: f64| C64::new(OMEGA0 * (-ALPHA * t).exp(), 0.0);
                let (wm, zm) = b.eval(tau - h).unwrap();
                let (w0, z0) = b.eval(tau).unwrap();
                let (wp, zp) = b.eval(tau + h).unwrap();
                let dw = (wp - wm) / (2.0 * h);
                assert!(
                    (dw - riccati_rhs(lam, om(tau), w0)).norm() < 1e-6,
                    "Riccati residual at tau={tau}, lambda={lam}"
                );
                let de = (zp.exp() - zm.exp()) / (2.0 * h);
                assert!(
                    (de - z_rhs(om(tau), w0) * z0.exp()).norm() < 1e-6,
                    "log-phase residual at tau={tau}, lambda={lam}"
                );
            }
        }
    }

    #[test]
    fn restored_background_form_starts_clean_and_flows() {
        let t_on = 4.0;
        let h = 1e-4;
        for lam in [im(-4.1), im(4.1)] {
            let b = BesselRegion::new(lam, OMEGA0, ALPHA).unwrap();
            let t = TangentRegion::new(lam, OMEGA0, t_on, b.z2).unwrap();
            let (w_start, z_start) = t.eval(t_on).unwrap();
            assert!(w_start.norm() < 1e-14);
            assert!((z_start - b.z2).norm() < 1e-14);
            let om = C64::new(OMEGA0, 0.0);
            // Dodge the pole of the Im λ > 0 branch near dt ≈ 0.6. The
            // comparisons are relative: e^z and the slopes grow fast on the
            // Im λ > 0 branch.
            for dt in [0.1, 1.7, 2.9] {
                let tau = t_on + dt;
                let (wm, zm) = t.eval(tau - h).unwrap();
                let (w0, z0) = t.eval(tau).unwrap();
                let (wp, zp) = t.eval(tau + h).unwrap();
                let w_rhs = riccati_rhs(lam, om, w0);
                assert!(
                    ((wp - wm) / (2.0 * h) - w_rhs).norm() < 1e-6 * (1.0 + w_rhs.norm()),
                    "Riccati residual at dt={dt}, lambda={lam}"
                );
                let e_rhs = z_rhs(om, w0) * z0.exp();
                assert!(
                    ((zp.exp() - zm.exp()) / (2.0 * h) - e_rhs).norm()
                        < 1e-6 * (1.0 + e_rhs.norm()),
                    "log-phase residual at dt={dt}, lambda={lam}"
                );
            }
        }
    }

    #[test]
    fn scenario_assembles_continuous_regions() {
        let sol = piecewise_scenario(im(-4.1), OMEGA0, ALPHA, 1.0, Some(4.0)).unwrap();
        // Constant region value.
        let (w_pre, z_pre) = sol.w_z(-2.0).unwrap();
        assert!((w_pre - im(0.435_120_759_167_858_64)).norm() < 1e-14);
        assert!((z_pre - C64::new(2.0 * 0.652_681_138_751_788, 0.0)).norm() < 1e-12);
        // Dark window: stopped.
        let (w_dark, z_dark) = sol.w_z(2.5).unwrap();
        assert_eq!(w_dark, C64::new(0.0, 0.0));
        assert!((z_dark.re - (-0.120_585_401_506_299_7)).abs() < 1e-11);
        assert_eq!(sol.z_plateau.unwrap(), z_dark);
        // Restored region begins at the plateau.
        let (w_on, z_on) = sol.w_z(4.0 + 1e-12).unwrap();
        assert!(w_on.norm() < 1e-11);
        assert!((z_on - z_dark).norm() < 1e-10);
        // Late times: w returns toward the constant-background magnitude.
        let (w_late, _) = sol.w_z(40.0).unwrap();
        assert!(w_late.norm() < 1.0);
    }

    #[test]
    fn decay_scenario_reaches_its_plateau() {
        let sol = exponential_decay_scenario(im(-4.1), 0.5, ALPHA).unwrap();
        let plateau = sol.z_plateau.unwrap();
        let (w_far, z_far) = sol.w_z(300.0).unwrap();
        assert_eq!(w_far, C64::new(0.0, 0.0));
        assert_eq!(z_far, plateau);
        // At moderate τ the Bessel form is already exponentially close.
        let (w_mid, z_mid) = sol.w_z(8.0).unwrap();
        assert!(w_mid.norm() < 1e-10);
        assert!((z_mid - plateau).norm() < 1e-10);
    }

    #[test]
    fn step_off_rings_down_without_phase_accumulation() {
        let lam = im(-4.1);
        let sol = step_off_scenario(lam, OMEGA0).unwrap();
        let (w0, _) = constant_background(lam, OMEGA0, 0.0, 0.0).unwrap();
        let (w_tail, z_tail) = sol.w_z(2.0).unwrap();
        assert!((w_tail - w0 * (-I * lam * 2.0).exp()).norm() < 1e-14);
        assert_eq!(z_tail, C64::new(0.0, 0.0));
        // |w| must decay for Im λ < 0.
        assert!(w_tail.norm() < w0.norm());
        assert_eq!(sol.z_plateau.unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn closed_form_dispatch_covers_profiles() {
        let lam = im(-4.1);
        let ok = BackgroundProfile::ExponentialSwitch {
            omega0: OMEGA0,
            alpha: ALPHA,
            t1: 1.0,
            t_on: Some(4.0),
        };
        assert!(ScatteringSolution::closed_form(&ok, lam).is_ok());
        let none = BackgroundProfile::SmoothSwitch {
            omega0: OMEGA0,
            rate: 2.0,
        };
        assert!(ScatteringSolution::closed_form(&none, lam).is_err());
    }

    #[test]
    fn degenerate_orders_are_rejected() {
        // γ integer ⟺ λ = i α (2n − 1): resonance.
        assert!(BesselRegion::new(im(-4.0), OMEGA0, ALPHA).is_err());
        assert!(BesselRegion::new(im(4.0 * 3.0), OMEGA0, ALPHA).is_err());
        // Branch point of the restored background.
        let b = BesselRegion::new(im(-4.1), OMEGA0, ALPHA).unwrap();
        assert!(TangentRegion::new(im(-OMEGA0), OMEGA0, 4.0, b.z2).is_err());
        // Bad windows.
        assert!(piecewise_scenario(im(-4.1), OMEGA0, ALPHA, -1.0, None).is_err());
        assert!(piecewise_scenario(im(-4.1), OMEGA0, ALPHA, 1.0, Some(0.5)).is_err());
    }
}
