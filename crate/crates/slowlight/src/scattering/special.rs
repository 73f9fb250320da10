//! Special functions for the switch-off scattering forms: log-gamma,
//! reciprocal gamma, and Bessel functions of complex order and complex
//! argument evaluated by their ascending power series.
//!
//! Branch convention: powers `(x/2)^γ` use the principal logarithm with
//! `arg(x) = +π` on the negative real axis, so for the switched background
//! (where the natural argument is negative real) all orders share one
//! consistent branch and the standard recurrence holds exactly.

use crate::error::{Error, Result};
use crate::matrix3::C64;

/// Lanczos approximation (g = 7, 9 coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal log-gamma for `Re z ≥ 0.5`; continued by the reflection
/// formula otherwise (imaginary part then defined up to multiples of 2π,
/// which cancels in every exponentiated use below).
pub fn ln_gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        // ln Γ(z) = ln π − ln sin(πz) − ln Γ(1−z)
        let pi = std::f64::consts::PI;
        let s = (C64::new(pi, 0.0) * z).sin();
        C64::new(pi.ln(), 0.0) - s.ln() - ln_gamma(C64::new(1.0, 0.0) - z)
    } else {
        let zm = z - 1.0;
        let mut x = C64::new(LANCZOS[0], 0.0);
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            x += C64::new(*c, 0.0) / (zm + i as f64);
        }
        let t = zm + LANCZOS_G + 0.5;
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        C64::new(half_ln_2pi, 0.0) + (zm + 0.5) * t.ln() - t + x.ln()
    }
}

/// Entire reciprocal gamma `1/Γ(z)`; exactly representable at the poles of
/// Γ (returns a value ~rounding there).
pub fn recip_gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        // 1/Γ(z) = sin(πz) Γ(1−z) / π
        let pi = std::f64::consts::PI;
        let s = (C64::new(pi, 0.0) * z).sin();
        s * ln_gamma(C64::new(1.0, 0.0) - z).exp() / pi
    } else {
        (-ln_gamma(z)).exp()
    }
}

/// Principal `ln(x/2)` with the negative real axis assigned `arg = +π`
/// (a negative-zero imaginary part would otherwise flip the branch).
pub(crate) fn ln_half(x: C64) -> C64 {
    let xh = C64::new(x.re * 0.5, if x.im == 0.0 { 0.0 } else { x.im * 0.5 });
    xh.ln()
}

/// Bessel function `J_γ(x)` for complex order γ and complex argument x via
/// the ascending series `Σ_m (−x²/4)^m / (m! Γ(γ+m+1)) · (x/2)^γ`.
///
/// Restricted to `|x| ≤ 50`: beyond that the alternating series loses
/// precision and a different expansion would be required.
pub fn bessel_j(gamma: C64, x: C64) -> Result<C64> {
    if !gamma.is_finite() || !x.is_finite() {
        return Err(Error::validation("bessel_j: non-finite input"));
    }
    if x.norm() > 50.0 {
        return Err(Error::numeric(format!(
            "bessel_j: |x| = {:.3} exceeds the series domain |x| <= 50",
            x.norm()
        )));
    }
    if x.norm() == 0.0 {
        return if gamma.norm() == 0.0 {
            Ok(C64::new(1.0, 0.0))
        } else if gamma.re > 0.0 {
            Ok(C64::new(0.0, 0.0))
        } else {
            Err(Error::numeric(
                "bessel_j: J_gamma(0) is singular for Re(gamma) < 0",
            ))
        };
    }
    // Leading power (x/2)^gamma on the fixed branch.
    let lead = (gamma * ln_half(x)).exp();
    let q = -x * x * 0.25;
    let mut p = lead;
    let mut sum = C64::new(0.0, 0.0);
    let mut small_streak = 0;
    for m in 0..400 {
        let term = p * recip_gamma(gamma + (m as f64 + 1.0));
        sum += term;
        if term.norm() <= 1e-18 * sum.norm().max(1e-300) {
            small_streak += 1;
            if small_streak >= 2 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
        p = p * q / (m as f64 + 1.0);
    }
    Err(Error::numeric(
        "bessel_j: series did not converge within 400 terms",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gamma_at_classical_points() {
        // Γ(0.5) = √π, Γ(4) = 6, Γ(1) = 1.
        let g_half = ln_gamma(c(0.5, 0.0)).exp();
        assert!((g_half.re - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        let g4 = ln_gamma(c(4.0, 0.0)).exp();
        assert!((g4.re - 6.0).abs() < 1e-12);
        assert!((ln_gamma(c(1.0, 0.0)).norm()) < 1e-14);
    }

    #[test]
    fn reciprocal_gamma_inverts_gamma_off_the_poles() {
        for z in [
            c(0.3, 0.7),
            c(-1.3, 0.4),
            c(2.5, -1.0),
            c(1.0125, 0.0),
            c(-0.0125, 0.0),
            c(0.5, 0.25),
        ] {
            let prod = recip_gamma(z) * ln_gamma(z).exp();
            assert!(
                (prod - c(1.0, 0.0)).norm() < 1e-12,
                "1/Γ · Γ != 1 at {z}: {prod}"
            );
        }
    }

    #[test]
    fn reciprocal_gamma_vanishes_at_poles() {
        for n in 0..4 {
            let v = recip_gamma(c(-(n as f64), 0.0));
            assert!(v.norm() < 1e-14, "1/Γ(-{n}) = {v}");
        }
    }

    #[test]
    fn half_order_closed_forms() {
        // J_{1/2}(x) = sqrt(2/(πx)) sin x ; J_{−1/2}(x) = sqrt(2/(πx)) cos x ;
        // J_{3/2}(x) = sqrt(2/(πx)) (sin x / x − cos x).
        for &x in &[0.375, 1.0, 2.7] {
            let f = (2.0 / (std::f64::consts::PI * x)).sqrt();
            let j_half = bessel_j(c(0.5, 0.0), c(x, 0.0)).unwrap();
            assert!((j_half.re - f * x.sin()).abs() < 1e-12, "J_1/2({x})");
            assert!(j_half.im.abs() < 1e-15);
            let j_mhalf = bessel_j(c(-0.5, 0.0), c(x, 0.0)).unwrap();
            assert!((j_mhalf.re - f * x.cos()).abs() < 1e-12, "J_-1/2({x})");
            let j_3half = bessel_j(c(1.5, 0.0), c(x, 0.0)).unwrap();
            assert!(
                (j_3half.re - f * (x.sin() / x - x.cos())).abs() < 1e-12,
                "J_3/2({x})"
            );
        }
        let j = bessel_j(c(0.5, 0.0), c(0.375, 0.0)).unwrap();
        assert!((j.re - 0.477_231_140_673_275_03).abs() < 1e-15);
    }

    #[test]
    fn switchoff_orders_at_negative_argument() {
        // Orders γ = (α + iλ)/(2α) for λ = ∓4.1i, α = 4, at x₀ = −3/8.
        let x = c(-0.375, 0.0);
        let cases = [
            (c(1.0125, 0.0), c(-0.179_330_044_205_868_24, -0.007_045_896_626_538_690_2)),
            (c(-1.0125, 0.0), c(0.254_082_443_725_477_11, -0.009_982_926_402_744_195_3)),
            (c(0.0125, 0.0), c(0.951_576_733_765_880_89, 0.037_387_551_695_670_224)),
            (c(-0.0125, 0.0), c(0.977_148_801_582_666_52, -0.038_392_280_976_599_117)),
        ];
        for (gamma, expect) in cases {
            let j = bessel_j(gamma, x).unwrap();
            assert!(
                (j - expect).norm() < 1e-14,
                "J_{gamma}({x}) = {j}, expected {expect}"
            );
        }
    }

    #[test]
    fn complex_order_at_negative_argument() {
        let j = bessel_j(c(0.5, 0.25), c(-0.8, 0.0)).unwrap();
        let expect = c(0.066_356_953_259_468_677, 0.293_907_104_697_198_28);
        assert!((j - expect).norm() < 1e-14, "got {j}");
    }

    #[test]
    fn recurrence_holds_on_the_fixed_branch() {
        // J_{γ−1}(x) + J_{γ+1}(x) = (2γ/x) J_γ(x), including negative x.
        let cases = [
            (c(1.0125, 0.0), c(-0.375, 0.0)),
            (c(0.3, 0.2), c(0.8, 0.0)),
            (c(-0.7, 0.5), c(-1.3, 0.0)),
            (c(0.5, 0.25), c(-0.8, 0.4)),
        ];
        for (gamma, x) in cases {
            let jm = bessel_j(gamma - 1.0, x).unwrap();
            let jp = bessel_j(gamma + 1.0, x).unwrap();
            let j = bessel_j(gamma, x).unwrap();
            let resid = (jm + jp - 2.0 * gamma / x * j).norm();
            let scale = jm.norm().max(jp.norm()).max(1.0);
            assert!(resid / scale < 1e-12, "recurrence residual {resid} at {gamma}, {x}");
        }
    }

    #[test]
    fn series_domain_guards() {
        assert!(bessel_j(c(0.5, 0.0), c(60.0, 0.0)).is_err());
        assert!(bessel_j(c(-0.5, 0.0), c(0.0, 0.0)).is_err());
        assert_eq!(bessel_j(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(bessel_j(c(2.0, 0.0), c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }
}
