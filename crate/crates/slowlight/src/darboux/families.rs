//! Named dressed-solution families: constructors that validate the
//! parameter regime for each physically distinct configuration and tag the
//! result. All of them produce an ordinary [`DressedSolution`]; the family
//! constructors only restrict the coefficient pattern and background.

use super::dress::{DressedSolution, FamilyTag, Seed};
use super::seed::{TimeDepSeed, UniformSeed};
use crate::background::BackgroundProfile;
use crate::error::{Error, Result};
use crate::model::{PhysicalParams, SpectralConfig};
use crate::scattering::ScatteringSolution;

/// Generic two-branch solution on a uniform background: both coefficients
/// free, slow and fast structures coexist and interact.
pub fn dressed_general(
    params: &PhysicalParams,
    spectral: &SpectralConfig,
) -> Result<DressedSolution> {
    spectral.require_solitonic(params.omega0)?;
    let seed = UniformSeed::new(params, spectral.lambda0)?;
    DressedSolution::new(Seed::Uniform(seed), *spectral)
}

/// Slow branch only (`c₃ = 0`): a probe pulse dragging a matter-polarization
/// wave at a group velocity far below the light speed.
pub fn slow_soliton(params: &PhysicalParams, spectral: &SpectralConfig) -> Result<DressedSolution> {
    if spectral.c3.norm() != 0.0 {
        return Err(Error::validation(
            "slow-soliton family requires c3 = 0 (no fast branch); use the general family instead",
        ));
    }
    if spectral.c2.norm() == 0.0 {
        return Err(Error::validation(
            "slow-soliton family requires c2 != 0 (the slow branch must be populated)",
        ));
    }
    Ok(dressed_general(params, spectral)?.with_family(FamilyTag::Slow))
}

/// Fast branch only (`c₂ = 0`): a signal riding the background at the light
/// speed.
pub fn fast_soliton(params: &PhysicalParams, spectral: &SpectralConfig) -> Result<DressedSolution> {
    if spectral.c2.norm() != 0.0 {
        return Err(Error::validation(
            "fast-soliton family requires c2 = 0 (no slow branch); use the general family instead",
        ));
    }
    if spectral.c3.norm() == 0.0 {
        return Err(Error::validation(
            "fast-soliton family requires c3 != 0 (the fast branch must be populated)",
        ));
    }
    Ok(dressed_general(params, spectral)?.with_family(FamilyTag::Fast))
}

/// Vacuum background (`Ω₀ = 0`): the fast branch writes a stationary spin
/// excitation that persists after the fields leave (`c₃ = 0` leaves both
/// fields identically zero with the excitation frozen in place).
pub fn zero_background_memory(
    params: &PhysicalParams,
    spectral: &SpectralConfig,
) -> Result<DressedSolution> {
    if params.omega0 != 0.0 {
        return Err(Error::validation(format!(
            "family mismatch: zero-background memory requires omega0 = 0 (got {})",
            params.omega0
        )));
    }
    Ok(dressed_general(params, spectral)?.with_family(FamilyTag::ZeroBackground))
}

/// Slow soliton riding a time-dependent control profile. The scattering data
/// must have been computed for the same profile at `spectral.lambda0`;
/// only the slow branch exists, so `c₃ = 0` is required.
pub fn one_soliton_timedep(
    params: &PhysicalParams,
    profile: &BackgroundProfile,
    scattering: ScatteringSolution,
    spectral: &SpectralConfig,
) -> Result<DressedSolution> {
    if params.k_phase != 0.0 {
        return Err(Error::validation(
            "time-dependent backgrounds assume k_phase = 0 (no spatial control modulation)",
        ));
    }
    spectral.require_solitonic(profile.omega0_left())?;
    if (scattering.lambda - spectral.lambda0).norm() != 0.0 {
        return Err(Error::validation(
            "scattering data was computed at a different spectral point than the dressing",
        ));
    }
    let seed = TimeDepSeed::new(params.nu0, params.delta, profile.clone(), scattering)?;
    Ok(DressedSolution::new(Seed::TimeDependent(seed), *spectral)?
        .with_family(FamilyTag::TimeDependent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux::dress::MatterState;
    use crate::matrix3::C64;

    const ONE: C64 = C64::new(1.0, 0.0);
    const ZERO: C64 = C64::new(0.0, 0.0);

    fn im(x: f64) -> C64 {
        C64::new(0.0, x)
    }

    fn demo() -> PhysicalParams {
        PhysicalParams::demo()
    }

    fn spectral(lambda0: C64, c2: C64, c3: C64) -> SpectralConfig {
        SpectralConfig::new(lambda0, 0.0, c2, c3)
    }

    /// Scan |Ω̃ₐ(τ, 0)| on a fine grid and return (argmax, max).
    fn probe_peak(sol: &DressedSolution, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        let mut best = (lo, -1.0);
        for i in 0..=n {
            let tau = lo + (hi - lo) * i as f64 / n as f64;
            let a = sol.evaluate(tau, 0.0).unwrap().omega_a.norm();
            if a > best.1 {
                best = (tau, a);
            }
        }
        best
    }

    #[test]
    fn general_reduces_to_single_branch_families() {
        let lam0 = im(4.1);
        let slow_cfg = spectral(lam0, ONE, ZERO);
        let general = dressed_general(&demo(), &slow_cfg).unwrap();
        let slow = slow_soliton(&demo(), &slow_cfg).unwrap();
        assert_eq!(slow.family, FamilyTag::Slow);
        let fast_cfg = spectral(lam0, ZERO, ONE);
        let general_f = dressed_general(&demo(), &fast_cfg).unwrap();
        let fast = fast_soliton(&demo(), &fast_cfg).unwrap();
        assert_eq!(fast.family, FamilyTag::Fast);
        for &(tau, zeta) in &[(0.0, 0.0), (0.5, 1.2), (-1.3, 0.4)] {
            let (a, b) = (
                general.evaluate(tau, zeta).unwrap(),
                slow.evaluate(tau, zeta).unwrap(),
            );
            assert!((a.omega_a - b.omega_a).norm() < 1e-12);
            assert!((a.omega_b - b.omega_b).norm() < 1e-12);
            let (a, b) = (
                general_f.evaluate(tau, zeta).unwrap(),
                fast.evaluate(tau, zeta).unwrap(),
            );
            assert!((a.omega_a - b.omega_a).norm() < 1e-12);
            assert!((a.omega_b - b.omega_b).norm() < 1e-12);
        }
    }

    #[test]
    fn slow_soliton_peak_amplitude_and_asymptotics() {
        let sol = slow_soliton(&demo(), &spectral(im(4.1), ONE, ZERO)).unwrap();
        let (tau_peak, peak) = probe_peak(&sol, -2.0, 2.0, 4000);
        // Peak |Ω̃ₐ| = 2ε |w₀| / √(1 + |w₀|²) for ε = 4.1, Ω₀ = 3.
        assert!(
            (peak - 3.271_692_325_926_954).abs() < 1e-6,
            "peak = {peak}"
        );
        // Excited-level population at the ridge center.
        let p = sol
            .evaluate(tau_peak, 0.0)
            .unwrap()
            .populations()
            .unwrap();
        assert!((p[2] - 0.159_190_521_646_777_55).abs() < 1e-5, "P3 = {}", p[2]);
        // Control field returns to the background far from the ridge and the
        // probe vanishes (sech tail ~ e^{−0.65 |τ|}).
        for tau in [-40.0, 40.0] {
            let point = sol.evaluate(tau, 0.0).unwrap();
            assert!((point.omega_b.norm() - 3.0).abs() < 1e-9);
            assert!(point.omega_a.norm() < 1e-9);
        }
    }

    #[test]
    fn fast_soliton_peak_amplitude_and_population() {
        let sol = fast_soliton(&demo(), &spectral(im(4.1), ZERO, ONE)).unwrap();
        let (tau_peak, peak) = probe_peak(&sol, -1.0, 1.0, 4000);
        // Peak |Ω̃ₐ| = 2ε / √(1 + |w₀|²).
        assert!(
            (peak - 7.519_044_442_246_014).abs() < 1e-6,
            "peak = {peak}"
        );
        let p = sol
            .evaluate(tau_peak, 0.0)
            .unwrap()
            .populations()
            .unwrap();
        // Peak P₃ = |Ω̃ₐ|²/(4 |λ₀|²).
        assert!((p[2] - 0.840_809_478_353_222_4).abs() < 1e-5, "P3 = {}", p[2]);
    }

    #[test]
    fn zero_background_fields_vanish_without_the_fast_branch() {
        let params = PhysicalParams {
            omega0: 0.0,
            ..demo()
        };
        let sol = zero_background_memory(&params, &spectral(im(-4.1), ONE, ZERO)).unwrap();
        assert_eq!(sol.family, FamilyTag::ZeroBackground);
        for &(tau, zeta) in &[(-3.0, 0.0), (0.0, 1.0), (2.5, -1.5)] {
            let point = sol.evaluate(tau, zeta).unwrap();
            // Both fields are exactly zero; only the matter excitation
            // remains (a stopped polariton).
            assert_eq!(point.omega_a.norm(), 0.0);
            assert_eq!(point.omega_b.norm(), 0.0);
            match point.matter {
                MatterState::Pure(psi) => assert!((psi.norm() - 1.0).abs() < 1e-12),
                MatterState::Mixed(_) => panic!("vacuum seed is pure"),
            }
        }
        // With both branches the ground-sublevel transfer becomes visible:
        // after the writing pulse has passed (Im λ < 0 ⇒ the fast exponential
        // dies out at late τ) the standing pattern reaches P₂ = 1 at Δ = 0.
        let sol = zero_background_memory(&params, &spectral(im(-4.1), ONE, ONE)).unwrap();
        let mut max_p2: f64 = 0.0;
        for i in 0..=40 {
            let tau = 3.0 + 3.0 * i as f64 / 40.0;
            for j in 0..=100 {
                let zeta = -2.0 + 4.0 * j as f64 / 100.0;
                let p = sol.evaluate(tau, zeta).unwrap().populations().unwrap();
                max_p2 = max_p2.max(p[1]);
            }
        }
        assert!(max_p2 > 0.999, "max P2 = {max_p2}");
    }

    #[test]
    fn timedep_on_constant_profile_matches_slow_soliton() {
        let lam0 = im(4.1);
        let profile = BackgroundProfile::Constant { omega0: 3.0 };
        let scattering = ScatteringSolution::closed_form(&profile, lam0).unwrap();
        let cfg = spectral(lam0, C64::new(0.8, 0.3), ZERO);
        let timedep = one_soliton_timedep(&demo(), &profile, scattering, &cfg).unwrap();
        assert_eq!(timedep.family, FamilyTag::TimeDependent);
        let slow = slow_soliton(&demo(), &cfg).unwrap();
        for &(tau, zeta) in &[(0.0, 0.0), (0.7, 2.4), (-2.1, 5.0)] {
            let (a, b) = (
                timedep.evaluate(tau, zeta).unwrap(),
                slow.evaluate(tau, zeta).unwrap(),
            );
            assert!((a.omega_a - b.omega_a).norm() < 1e-10);
            assert!((a.omega_b - b.omega_b).norm() < 1e-10);
            match (a.matter, b.matter) {
                (MatterState::Pure(x), MatterState::Pure(y)) => {
                    for k in 0..3 {
                        assert!((x.0[k] - y.0[k]).norm() < 1e-10);
                    }
                }
                _ => panic!("both must be pure"),
            }
        }
    }

    #[test]
    fn dark_window_of_a_switched_profile_silences_both_fields() {
        // On the exponential switch-off, w ≡ 0 in the dark window, so the
        // dressed corrections vanish there along with the background itself.
        let profile = BackgroundProfile::ExponentialSwitch {
            omega0: 3.0,
            alpha: 4.0,
            t1: 1.0,
            t_on: None,
        };
        let lam0 = im(-4.1);
        let scattering = ScatteringSolution::closed_form(&profile, lam0).unwrap();
        let cfg = spectral(lam0, ONE, ZERO);
        let sol = one_soliton_timedep(&demo(), &profile, scattering, &cfg).unwrap();
        for tau in [2.0, 5.0, 20.0] {
            let point = sol.evaluate(tau, 0.5).unwrap();
            assert!(point.omega_a.norm() < 1e-30, "probe at tau = {tau}");
            assert!(point.omega_b.norm() < 1e-30, "control at tau = {tau}");
        }
    }

    #[test]
    fn gauge_phase_changes_no_intensity_or_population() {
        let base = slow_soliton(&demo(), &spectral(im(4.1), ONE, ZERO)).unwrap();
        let rotated = slow_soliton(
            &demo(),
            &SpectralConfig::new(im(4.1), 0.9, ONE, ZERO),
        )
        .unwrap();
        for &(tau, zeta) in &[(0.0, 0.0), (0.4, 1.3)] {
            let (a, b) = (
                base.evaluate(tau, zeta).unwrap(),
                rotated.evaluate(tau, zeta).unwrap(),
            );
            assert!((a.omega_a.norm() - b.omega_a.norm()).abs() < 1e-12);
            // The control channel is untouched by the first-coefficient phase.
            assert!((a.omega_b - b.omega_b).norm() < 1e-12);
            let (pa, pb) = (a.populations().unwrap(), b.populations().unwrap());
            for k in 0..3 {
                assert!((pa[k] - pb[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_c2_translates_the_slow_phase_only() {
        let lam0 = im(4.1);
        let s = C64::new(0.37, 1.1);
        let base = dressed_general(&demo(), &spectral(lam0, ONE, ONE)).unwrap();
        let scaled =
            dressed_general(&demo(), &spectral(lam0, s.exp(), ONE)).unwrap();
        for &(tau, zeta) in &[(0.2, 0.5), (-1.0, 2.0)] {
            let shift = scaled.slow_phase(tau, zeta).unwrap() - base.slow_phase(tau, zeta).unwrap();
            assert!((shift - s.re).abs() < 1e-12);
            let fast_a = base.fast_phase(tau, zeta).unwrap().unwrap();
            let fast_b = scaled.fast_phase(tau, zeta).unwrap().unwrap();
            assert!((fast_a - fast_b).abs() < 1e-12);
        }
    }

    #[test]
    fn family_mismatches_are_rejected() {
        // Zero-background family on a nonzero background.
        let err = zero_background_memory(&demo(), &spectral(im(-4.1), ONE, ONE)).unwrap_err();
        assert!(err.to_string().contains("omega0"));
        // Slow family with a populated fast branch and vice versa.
        assert!(slow_soliton(&demo(), &spectral(im(4.1), ONE, ONE)).is_err());
        assert!(fast_soliton(&demo(), &spectral(im(4.1), ONE, ONE)).is_err());
        assert!(slow_soliton(&demo(), &spectral(im(4.1), ZERO, ZERO)).is_err());
        // Non-solitonic spectral point.
        assert!(slow_soliton(&demo(), &spectral(im(2.0), ONE, ZERO)).is_err());
        // Spatial modulation is incompatible with time-dependent profiles.
        let params = PhysicalParams {
            k_phase: 0.4,
            x_excited: Some(7.0),
            ..demo()
        };
        let profile = BackgroundProfile::Constant { omega0: 3.0 };
        let scattering = ScatteringSolution::closed_form(&profile, im(4.1)).unwrap();
        assert!(one_soliton_timedep(
            &params,
            &profile,
            scattering,
            &spectral(im(4.1), ONE, ZERO)
        )
        .is_err());
        // Mismatched spectral points between scattering and dressing.
        let scattering = ScatteringSolution::closed_form(&profile, im(4.1)).unwrap();
        assert!(one_soliton_timedep(
            &demo(),
            &profile,
            scattering,
            &spectral(im(-4.1), ONE, ZERO)
        )
        .is_err());
    }
}
