//! The auxiliary scattering problem on a given control-field background.
//!
//! For each complex spectral parameter λ the pair `(w, z)` solves
//!
//! * `∂τ w = −iλ w + i Ω/2 − i Ω* w²/2`   (Riccati flow)
//! * `∂τ z = (i/2) Ω* w`                   (log-phase flow)
//!
//! with the constant-background fixed point as the τ → −∞ boundary
//! condition. Four interchangeable solution methods are provided: closed
//! forms (constant, exponential switch via Bessel functions, post-restore
//! tangent form, step-off), an adaptive Runge–Kutta integrator, a causal
//! integral-equation iteration, and the adiabatic approximation.

pub mod iterate;
pub mod ode;
pub mod piecewise;
pub mod special;

use crate::background::BackgroundProfile;
use crate::error::{Error, Result};
use crate::matrix3::C64;

/// Branch of `√(λ² + Ω₀²)` selected so that `Re(conj(λ)·s) ≥ 0`; this is the
/// branch continuous in Ω₀ that reduces to `s = λ` at Ω₀ = 0.
pub fn sqrt_branch(lambda: C64, omega0: f64) -> C64 {
    let s = (lambda * lambda + omega0 * omega0).sqrt();
    if (lambda.conj() * s).re < 0.0 {
        -s
    } else {
        s
    }
}

/// Wavenumber `k(λ) = (λ + √(λ² + Ω₀²))/2` of the causal kernel.
pub fn k_of_lambda(lambda: C64, omega0: f64) -> C64 {
    (lambda + sqrt_branch(lambda, omega0)) * 0.5
}

/// Constant-background fixed point: returns `(w₀, ż₀)` with
/// `w₀ = Ω₀ e^{ikζ}/(λ + √(λ²+Ω₀²))` and `z(τ) = ż₀ τ`,
/// `ż₀ = i Ω₀² / (2(λ + √(λ²+Ω₀²)))` (independent of the spatial phase).
pub fn constant_background(
    lambda: C64,
    omega0: f64,
    k_phase: f64,
    zeta: f64,
) -> Result<(C64, C64)> {
    if omega0 < 0.0 {
        return Err(Error::validation("omega0 must be non-negative"));
    }
    let denom = lambda + sqrt_branch(lambda, omega0);
    if denom.norm() == 0.0 {
        return Err(Error::validation(
            "degenerate scattering point: lambda = 0 on a vanishing background",
        ));
    }
    let w0 = C64::from_polar(omega0, k_phase * zeta) / denom;
    let z_rate = C64::new(0.0, 0.5) * omega0 * omega0 / denom;
    Ok((w0, z_rate))
}

/// How a `ScatteringSolution` was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Ode,
    Iterative,
    Adiabatic,
}

/// Scattering data `(w(τ), z(τ))` at one λ on one background, evaluable at
/// arbitrary τ inside its domain.
#[derive(Clone, Debug)]
pub struct ScatteringSolution {
    pub lambda: C64,
    pub method: Method,
    /// Kernel wavenumber on the left (τ → −∞) background.
    pub k: C64,
    /// Plateau value of z after a completed switch-off, when defined.
    pub z_plateau: Option<C64>,
    regions: Vec<Region>,
}

#[derive(Clone, Debug)]
pub(crate) struct Region {
    pub lo: f64,
    pub hi: f64,
    pub form: RegionForm,
}

#[derive(Clone, Debug)]
pub(crate) enum RegionForm {
    /// `w = w₀`, `z = z_off + ż₀ τ`.
    Constant { w0: C64, z_rate: C64, z_off: C64 },
    /// Decaying Bessel-quotient form on the exponential switch-off window.
    Bessel(piecewise::BesselRegion),
    /// Field off, scattering stopped: `w ≡ 0`, `z ≡ z₂`.
    Stopped { z2: C64 },
    /// Field off after an instantaneous step: `w = w_edge e^{−iλ(τ−τ_e)}`,
    /// `z` constant.
    StepTail {
        w_edge: C64,
        tau_edge: f64,
        z_const: C64,
        lambda: C64,
    },
    /// Background restored: trigonometric form.
    Tangent(piecewise::TangentRegion),
    /// Node values with exact nodal derivatives, cubic-Hermite interpolated.
    Sampled(SampledRegion),
}

impl ScatteringSolution {
    pub(crate) fn from_regions(
        lambda: C64,
        method: Method,
        k: C64,
        z_plateau: Option<C64>,
        regions: Vec<Region>,
    ) -> Self {
        ScatteringSolution {
            lambda,
            method,
            k,
            z_plateau,
            regions,
        }
    }

    /// Constant background at a given propagation distance (the spatial
    /// phase of the control field enters w₀).
    pub fn constant(lambda: C64, omega0: f64, k_phase: f64, zeta: f64) -> Result<Self> {
        let (w0, z_rate) = constant_background(lambda, omega0, k_phase, zeta)?;
        Ok(Self::from_regions(
            lambda,
            Method::ClosedForm,
            k_of_lambda(lambda, omega0),
            None,
            vec![Region {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
                form: RegionForm::Constant {
                    w0,
                    z_rate,
                    z_off: C64::new(0.0, 0.0),
                },
            }],
        ))
    }

    /// Dispatch to the closed form matching the profile, when one exists.
    pub fn closed_form(profile: &BackgroundProfile, lambda: C64) -> Result<Self> {
        profile.validate()?;
        match profile {
            BackgroundProfile::Constant { omega0 } => {
                Self::constant(lambda, *omega0, 0.0, 0.0)
            }
            BackgroundProfile::ExponentialSwitch {
                omega0,
                alpha,
                t1,
                t_on,
            } => piecewise::piecewise_scenario(lambda, *omega0, *alpha, *t1, *t_on),
            BackgroundProfile::ExponentialDecay { omega0, alpha } => {
                piecewise::exponential_decay_scenario(lambda, *omega0, *alpha)
            }
            BackgroundProfile::StepOff { omega0 } => {
                piecewise::step_off_scenario(lambda, *omega0)
            }
            BackgroundProfile::SmoothSwitch { .. } | BackgroundProfile::Tabulated(_) => {
                Err(Error::validation(
                    "no closed form for this profile; use the ODE or iterative solver",
                ))
            }
        }
    }

    fn region_at(&self, tau: f64) -> Result<&Region> {
        // Regions are contiguous, ordered, left-open/right-closed with the
        // first extending to its stated lo (possibly −∞).
        if self.regions.is_empty() {
            return Err(Error::numeric("scattering solution holds no regions"));
        }
        for r in &self.regions {
            if tau <= r.hi {
                if tau >= r.lo {
                    return Ok(r);
                }
                break;
            }
        }
        Err(Error::numeric(format!(
            "tau = {tau} outside the scattering solution domain [{}, {}]",
            self.regions[0].lo,
            self.regions[self.regions.len() - 1].hi
        )))
    }

    pub fn w(&self, tau: f64) -> Result<C64> {
        Ok(self.w_z(tau)?.0)
    }

    pub fn z(&self, tau: f64) -> Result<C64> {
        Ok(self.w_z(tau)?.1)
    }

    pub fn w_z(&self, tau: f64) -> Result<(C64, C64)> {
        let region = self.region_at(tau)?;
        match &region.form {
            RegionForm::Constant { w0, z_rate, z_off } => Ok((*w0, z_off + z_rate * tau)),
            RegionForm::Bessel(b) => b.eval(tau),
            RegionForm::Stopped { z2 } => Ok((C64::new(0.0, 0.0), *z2)),
            RegionForm::StepTail {
                w_edge,
                tau_edge,
                z_const,
                lambda,
            } => {
                let w = w_edge * (-C64::new(0.0, 1.0) * lambda * (tau - tau_edge)).exp();
                Ok((w, *z_const))
            }
            RegionForm::Tangent(t) => t.eval(tau),
            RegionForm::Sampled(s) => s.eval(tau),
        }
    }

    /// Domain on which the solution is defined.
    pub fn domain(&self) -> (f64, f64) {
        (self.regions[0].lo, self.regions[self.regions.len() - 1].hi)
    }
}

/// Sampled solution with exact nodal derivatives (from the flow equations),
/// interpolated by cubic Hermite polynomials between nodes.
#[derive(Clone, Debug)]
pub(crate) struct SampledRegion {
    pub taus: Vec<f64>,
    pub w: Vec<C64>,
    pub dw: Vec<C64>,
    pub z: Vec<C64>,
    pub dz: Vec<C64>,
}

impl SampledRegion {
    pub fn eval(&self, tau: f64) -> Result<(C64, C64)> {
        let n = self.taus.len();
        if tau < self.taus[0] || tau > self.taus[n - 1] {
            return Err(Error::numeric(format!(
                "tau = {tau} outside the sampled domain [{}, {}]",
                self.taus[0],
                self.taus[n - 1]
            )));
        }
        let i = match self
            .taus
            .binary_search_by(|probe| probe.partial_cmp(&tau).unwrap())
        {
            Ok(i) => return Ok((self.w[i], self.z[i])), // exact node
            Err(i) => i - 1,
        };
        let i = i.min(n - 2);
        let h = self.taus[i + 1] - self.taus[i];
        let s = (tau - self.taus[i]) / h;
        let hermite = |y0: C64, y1: C64, d0: C64, d1: C64| {
            let (m0, m1) = (d0 * h, d1 * h);
            let s2 = s * s;
            let s3 = s2 * s;
            y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + m0 * (s3 - 2.0 * s2 + s)
                + y1 * (-2.0 * s3 + 3.0 * s2)
                + m1 * (s3 - s2)
        };
        Ok((
            hermite(self.w[i], self.w[i + 1], self.dw[i], self.dw[i + 1]),
            hermite(self.z[i], self.z[i + 1], self.dz[i], self.dz[i + 1]),
        ))
    }
}

/// Right-hand sides of the two flow equations at instantaneous (Ω, w).
pub fn riccati_rhs(lambda: C64, omega: C64, w: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    -i * lambda * w + i * omega * 0.5 - i * omega.conj() * w * w * 0.5
}

pub fn z_rhs(omega: C64, w: C64) -> C64 {
    C64::new(0.0, 0.5) * omega.conj() * w
}

/// `∫_{−∞}^{τ} (|Ω(s)|² − |Ω(−∞)|²) ds`, the intensity deficit of a
/// switch-off profile (analytic for the analytic variants).
pub fn intensity_deficit(profile: &BackgroundProfile, tau: f64) -> Result<f64> {
    let om0sq = profile.omega0_left().powi(2);
    match profile {
        BackgroundProfile::Constant { .. } => Ok(0.0),
        BackgroundProfile::StepOff { .. } => Ok(if tau <= 0.0 { 0.0 } else { -om0sq * tau }),
        BackgroundProfile::ExponentialDecay { omega0, alpha } => {
            Ok(decay_deficit(*omega0, *alpha, tau.max(0.0)))
        }
        BackgroundProfile::ExponentialSwitch {
            omega0,
            alpha,
            t1,
            t_on,
        } => {
            if tau <= 0.0 {
                return Ok(0.0);
            }
            let mut d = decay_deficit(*omega0, *alpha, tau.min(*t1));
            if tau > *t1 {
                // Dark window contributes −Ω₀² per unit time; after the
                // restore (if any) the integrand vanishes again.
                let t_off_end = t_on.unwrap_or(f64::INFINITY).min(tau);
                d -= om0sq * (t_off_end - t1);
            }
            Ok(d)
        }
        BackgroundProfile::SmoothSwitch { omega0, rate } => {
            // Antiderivative of Ω₀²[(1−tanh rs)²/4 − 1] with its τ → −∞
            // limit subtracted.
            let f = |s: f64| -> f64 {
                let rs = rate * s;
                // ln cosh computed overflow-safely.
                let ln_cosh = rs.abs() + (1.0 + (-2.0 * rs.abs()).exp()).ln() - 2f64.ln();
                omega0 * omega0
                    * ((2.0 * s - (2.0 * ln_cosh + rs.tanh()) / rate) / 4.0 - s)
            };
            let f_minus_inf = omega0 * omega0 * (2.0 * 2f64.ln() + 1.0) / (4.0 * rate);
            Ok(f(tau) - f_minus_inf)
        }
        BackgroundProfile::Tabulated(t) => {
            let (lo, _) = t.sample_range();
            if tau <= lo {
                return Ok(0.0);
            }
            // Corrected-trapezoid quadrature of |Ω|² − |Ω(−∞)|² on a fine
            // uniform grid (the profile is only C¹, so a fixed fine grid is
            // as good as adaptivity here).
            let n = 4097;
            let h = (tau - lo) / (n - 1) as f64;
            let mut acc = 0.0;
            let mut prev_g = 0.0;
            let mut prev_dg = 0.0;
            for j in 0..n {
                let s = lo + j as f64 * h;
                let (v, dv) = t.eval_with_deriv(s)?;
                let g = v.norm_sqr() - om0sq;
                let dg = 2.0 * (v.conj() * dv).re;
                if j > 0 {
                    acc += h * (prev_g + g) / 2.0 - h * h * (dg - prev_dg) / 12.0;
                }
                prev_g = g;
                prev_dg = dg;
            }
            Ok(acc)
        }
    }
}

fn decay_deficit(omega0: f64, alpha: f64, tau: f64) -> f64 {
    // ∫_0^τ (Ω₀² e^{−2αs} − Ω₀²) ds
    omega0 * omega0 * ((1.0 - (-2.0 * alpha * tau).exp()) / (2.0 * alpha) - tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::BackgroundProfile;

    const EPS: f64 = 4.1;
    const OMEGA0: f64 = 3.0;

    fn im(x: f64) -> C64 {
        C64::new(0.0, x)
    }

    #[test]
    fn branch_matches_frozen_constant_background_values() {
        // λ = +4.1i: s = +2.7946…i, w₀ = −0.4351…i, ż₀ = +0.6527…
        let (w0, z0) = constant_background(im(EPS), OMEGA0, 0.0, 0.0).unwrap();
        assert!((w0 - im(-0.435_120_759_167_858_64)).norm() < 1e-15);
        assert!((z0 - C64::new(0.652_681_138_751_788, 0.0)).norm() < 1e-15);
        // λ = −4.1i: the mirror values.
        let (w0m, z0m) = constant_background(im(-EPS), OMEGA0, 0.0, 0.0).unwrap();
        assert!((w0m - im(0.435_120_759_167_858_64)).norm() < 1e-15);
        assert!((z0m - C64::new(-0.652_681_138_751_788, 0.0)).norm() < 1e-15);
        assert!((w0.norm_sqr() - 0.189_330_075_058_813_66).abs() < 1e-15);
    }

    #[test]
    fn kernel_wavenumber_signs() {
        let k_minus = k_of_lambda(im(-EPS), OMEGA0);
        assert!((k_minus - im(-3.447_318_861_248_211_5)).norm() < 1e-12);
        assert!(k_minus.im < 0.0, "decaying causal kernel for Im lambda < 0");
        let k_plus = k_of_lambda(im(EPS), OMEGA0);
        assert!(k_plus.im > 0.0);
    }

    #[test]
    fn branch_is_continuous_to_the_vanishing_background() {
        for lam in [C64::new(0.7, 2.0), C64::new(-1.0, -3.3), im(4.1), im(-4.1)] {
            let mut prev = sqrt_branch(lam, 1.0);
            for i in (0..=100).rev() {
                let om = i as f64 / 100.0;
                let s = sqrt_branch(lam, om);
                assert!(
                    (s - prev).norm() < 0.1,
                    "branch jumped near omega0 = {om} for lambda = {lam}"
                );
                prev = s;
            }
            assert!((prev - lam).norm() < 1e-12, "s(lambda, 0) must equal lambda");
        }
    }

    #[test]
    fn spatial_phase_rotates_w0_only() {
        let (w_plain, z_plain) = constant_background(im(-EPS), OMEGA0, 0.0, 0.0).unwrap();
        let (w_rot, z_rot) = constant_background(im(-EPS), OMEGA0, 0.05, 2.0).unwrap();
        assert!((w_rot.norm() - w_plain.norm()).abs() < 1e-15);
        assert!((w_rot.arg() - w_plain.arg() - 0.1).abs() < 1e-12);
        assert_eq!(z_rot, z_plain);
    }

    #[test]
    fn constant_solution_is_a_fixed_point_of_both_flows() {
        let sol = ScatteringSolution::constant(im(-EPS), OMEGA0, 0.0, 0.0).unwrap();
        let om = C64::new(OMEGA0, 0.0);
        for tau in [-7.0, 0.0, 3.3] {
            let (w, z) = sol.w_z(tau).unwrap();
            assert!(riccati_rhs(sol.lambda, om, w).norm() < 1e-15);
            assert!((z_rhs(om, w) * tau - z).norm() < 1e-14);
        }
        assert_eq!(sol.method, Method::ClosedForm);
    }

    #[test]
    fn degenerate_point_is_rejected() {
        assert!(constant_background(C64::new(0.0, 0.0), 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn intensity_deficit_matches_quadrature() {
        let profiles = vec![
            BackgroundProfile::ExponentialSwitch {
                omega0: 3.0,
                alpha: 4.0,
                t1: 1.0,
                t_on: None,
            },
            BackgroundProfile::ExponentialDecay {
                omega0: 0.5,
                alpha: 4.0,
            },
            BackgroundProfile::SmoothSwitch {
                omega0: 3.0,
                rate: 2.0,
            },
            BackgroundProfile::StepOff { omega0: 2.0 },
        ];
        for p in profiles {
            for tau in [0.5, 1.7, 4.0] {
                let analytic = intensity_deficit(&p, tau).unwrap();
                // Brute-force trapezoid from deep inside the left plateau.
                let lo = -30.0;
                let n = 400_001;
                let h = (tau - lo) / (n - 1) as f64;
                let om0sq = p.omega0_left().powi(2);
                let mut acc = 0.0;
                for j in 0..n {
                    let s = lo + j as f64 * h;
                    let g = p.eval(s).unwrap().norm_sqr() - om0sq;
                    acc += if j == 0 || j == n - 1 { 0.5 * g } else { g };
                }
                acc *= h;
                // The brute-force trapezoid is the weak side here: its cell
                // straddling a field jump carries an O(h) error.
                assert!(
                    (analytic - acc).abs() < 5e-4,
                    "deficit mismatch for {p:?} at tau={tau}: {analytic} vs {acc}"
                );
            }
        }
    }

    #[test]
    fn sampled_region_interpolates_between_exact_nodes() {
        // Sample w = e^{−iλτ} (a Riccati solution at Ω = 0) and check the
        // Hermite interpolant against the analytic value off the nodes.
        let lambda = im(-1.3);
        let taus: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let f = |t: f64| (-C64::new(0.0, 1.0) * lambda * t).exp();
        let w: Vec<C64> = taus.iter().map(|&t| f(t)).collect();
        let dw: Vec<C64> = taus
            .iter()
            .map(|&t| riccati_rhs(lambda, C64::new(0.0, 0.0), f(t)))
            .collect();
        let z = vec![C64::new(0.0, 0.0); taus.len()];
        let dz = z.clone();
        let region = SampledRegion {
            taus: taus.clone(),
            w,
            dw,
            z,
            dz,
        };
        let (w_mid, _) = region.eval(0.512).unwrap();
        // Cubic Hermite on h = 0.05 with |λ| = 1.3: error ~ h⁴|w⁗|/384.
        assert!((w_mid - f(0.512)).norm() < 1e-7);
        let (w_node, _) = region.eval(0.5).unwrap();
        assert_eq!(w_node, f(0.5));
        assert!(region.eval(2.5).is_err());
    }
}
