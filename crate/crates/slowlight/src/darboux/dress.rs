//! One-step dressing of a seed solution at a complex spectral point λ₀.
//!
//! The dressing vector is the seed fundamental matrix applied to a constant
//! coefficient vector, `v = Φ₀ c`. Everything observable depends on `v` only
//! through the unit projector `|n⟩⟨n|`, `n = v/‖v‖`, so the evaluation works
//! in log space: the common exponential `e^{E}` of the first column is
//! factored out, the branch phases `φ₂, φ₃` absorb `ln c₂, ln c₃`, and the
//! largest real part is subtracted before exponentiating. That keeps the
//! projector finite at arbitrarily large `|τ|, |ζ|` where the raw matrix
//! entries overflow.
//!
//! The dressed quantities are
//!
//! * `Ω̃_a = Ω_a − 2(λ₀ − λ₀*) n₃ conj(n₁)` (seed probe field is zero),
//! * `Ω̃_b = Ω_b − 2(λ₀ − λ₀*) n₃ conj(n₂)`,
//! * pure seeds: `ψ̃ = [(λ₀* − Δ) ê₁ + (λ₀ − λ₀*) conj(n₁) n]/|λ₀ − Δ|`,
//! * mixed seeds: `ρ̃ = Ξ ρ₀ Ξ† / |λ₀ − Δ|²` with
//!   `Ξ = (λ₀* − Δ) I + (λ₀ − λ₀*)|n⟩⟨n|` (Ξ†Ξ = |λ₀ − Δ|² I for real Δ, so
//!   the transform is unitary up to scale and preserves the spectrum).

use super::seed::{SeedData, TimeDepSeed, UniformSeed};
use crate::error::{Error, Result};
use crate::matrix3::{self, C64, Mat3, Vec3};
use crate::model::{AtomicState, DensityMatrix, SpectralConfig};

/// Seed solution underlying a dressed field: either a uniform control field
/// (both branch phases in closed form) or a time-dependent control profile
/// (slow branch only, scattering data from a solver).
#[derive(Clone, Debug)]
pub enum Seed {
    Uniform(UniformSeed),
    TimeDependent(TimeDepSeed),
}

impl Seed {
    pub fn lambda(&self) -> C64 {
        match self {
            Seed::Uniform(s) => s.lambda,
            Seed::TimeDependent(s) => s.lambda,
        }
    }

    pub fn nu0(&self) -> f64 {
        match self {
            Seed::Uniform(s) => s.nu0,
            Seed::TimeDependent(s) => s.nu0,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Seed::Uniform(s) => s.delta,
            Seed::TimeDependent(s) => s.delta,
        }
    }

    pub fn data(&self, tau: f64, zeta: f64) -> Result<SeedData> {
        match self {
            Seed::Uniform(s) => Ok(s.data(tau, zeta)),
            Seed::TimeDependent(s) => s.data(tau, zeta),
        }
    }

    /// Seed control field at the point.
    pub fn omega_b(&self, tau: f64, zeta: f64) -> Result<C64> {
        match self {
            Seed::Uniform(s) => Ok(s.omega_b(zeta)),
            Seed::TimeDependent(s) => s.omega_b(tau),
        }
    }

    /// Seed matter state (atoms in the decoupled ground level except for the
    /// spatially modulated mixed seed).
    pub fn density(&self, zeta: f64) -> DensityMatrix {
        match self {
            Seed::Uniform(s) => s.density(zeta),
            Seed::TimeDependent(_) => DensityMatrix::dark_state(),
        }
    }

    pub fn is_mixed(&self) -> bool {
        match self {
            Seed::Uniform(s) => s.is_mixed(),
            Seed::TimeDependent(_) => false,
        }
    }
}

/// Which named solution family a dressed solution belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyTag {
    /// Generic two-branch interplay (both coefficients free).
    General,
    /// Slow branch only (`c₃ = 0`) on a uniform background.
    Slow,
    /// Fast branch only (`c₂ = 0`) on a uniform background.
    Fast,
    /// Vacuum background (`Ω₀ = 0`): writing/reading a stopped excitation.
    ZeroBackground,
    /// Slow branch on a time-dependent control profile.
    TimeDependent,
}

impl FamilyTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyTag::General => "general",
            FamilyTag::Slow => "slow",
            FamilyTag::Fast => "fast",
            FamilyTag::ZeroBackground => "zero-background",
            FamilyTag::TimeDependent => "time-dependent",
        }
    }
}

/// Matter state of the dressed solution at one point.
#[derive(Clone, Debug)]
pub enum MatterState {
    Pure(AtomicState),
    Mixed(DensityMatrix),
}

/// Fields and matter state at one point of a dressed solution.
#[derive(Clone, Debug)]
pub struct PointState {
    pub tau: f64,
    pub zeta: f64,
    pub omega_a: C64,
    pub omega_b: C64,
    pub matter: MatterState,
}

impl PointState {
    /// Level populations `(P₁, P₂, P₃)`.
    pub fn populations(&self) -> Result<[f64; 3]> {
        match &self.matter {
            MatterState::Pure(psi) => psi.populations(),
            MatterState::Mixed(rho) => Ok(rho.populations()),
        }
    }
}

/// A seed dressed once at `spectral.lambda0`.
#[derive(Clone, Debug)]
pub struct DressedSolution {
    pub nu0: f64,
    pub delta: f64,
    pub spectral: SpectralConfig,
    pub family: FamilyTag,
    seed: Seed,
    ln_c2: C64,
    ln_c3: C64,
}

impl DressedSolution {
    pub fn new(seed: Seed, spectral: SpectralConfig) -> Result<Self> {
        spectral.validate()?;
        if (seed.lambda() - spectral.lambda0).norm() != 0.0 {
            return Err(Error::validation(
                "seed and dressing must use the same spectral point lambda0",
            ));
        }
        if matches!(seed, Seed::TimeDependent(_)) && spectral.c3.norm() != 0.0 {
            return Err(Error::validation(
                "time-dependent seeds provide only the slow branch: set c3 = 0 \
                 (the fast branch needs conjugate-point scattering data, available \
                 only on uniform backgrounds)",
            ));
        }
        let family = match seed {
            Seed::TimeDependent(_) => FamilyTag::TimeDependent,
            Seed::Uniform(_) => FamilyTag::General,
        };
        Ok(DressedSolution {
            nu0: seed.nu0(),
            delta: seed.delta(),
            ln_c2: spectral.c2.ln(),
            ln_c3: spectral.c3.ln(),
            family,
            seed,
            spectral,
        })
    }

    pub(crate) fn with_family(mut self, family: FamilyTag) -> Self {
        self.family = family;
        self
    }

    /// Slow branch phase `φ_s = Re(φ₂ + ln c₂) + ½ ln(1 + |w|²)`: the probe
    /// intensity of a single slow soliton is a sech ridge centered on
    /// `φ_s = 0`.
    pub fn slow_phase(&self, tau: f64, zeta: f64) -> Result<f64> {
        let data = self.seed.data(tau, zeta)?;
        Ok((data.phi2 + self.ln_c2).re + 0.5 * (1.0 + data.w.norm_sqr()).ln())
    }

    /// Fast branch phase `φ_f = Re(φ₃ + ln c₃) + ½ ln(1 + |w|²)`; `None` when
    /// the seed has no conjugate branch.
    pub fn fast_phase(&self, tau: f64, zeta: f64) -> Result<Option<f64>> {
        let data = self.seed.data(tau, zeta)?;
        Ok(data
            .phi3
            .map(|p| (p + self.ln_c3).re + 0.5 * (1.0 + data.w.norm_sqr()).ln()))
    }

    pub fn lambda0(&self) -> C64 {
        self.spectral.lambda0
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    /// Unit dressing vector `n` at the point (log-space route, safe at large
    /// phases). Defined up to a global phase.
    pub fn dressing_vector(&self, tau: f64, zeta: f64) -> Result<Vec3> {
        let data = self.seed.data(tau, zeta)?;
        self.vector_from_data(&data, tau, zeta)
    }

    fn vector_from_data(&self, data: &SeedData, tau: f64, zeta: f64) -> Result<Vec3> {
        let phi2 = data.phi2 + self.ln_c2;
        let phi3 = data.phi3.map(|p| p + self.ln_c3);
        let shift = phi2
            .re
            .max(phi3.map(|p| p.re).unwrap_or(f64::NEG_INFINITY))
            .max(0.0);
        let u1 = C64::new(-shift, self.spectral.c1_phase).exp();
        let e2 = (phi2 - shift).exp();
        let e3 = phi3.map(|p| (p - shift).exp()).unwrap_or_default();
        // w̄ is only ever multiplied by e₃, which is identically zero when the
        // conjugate branch is absent (c₃ = 0 enforced at construction).
        let u2 = e2 - data.w_bar.unwrap_or_default() * e3;
        let u3 = data.w * e2 + e3;
        let u = [u1, u2, u3];
        let norm = matrix3::norm(&u);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::numeric(format!(
                "dressing vector degenerate at (tau, zeta) = ({tau}, {zeta}): norm {norm}"
            )));
        }
        Ok(matrix3::scale_vec(&u, C64::new(1.0 / norm, 0.0)))
    }

    /// Fields and matter state at one point.
    pub fn evaluate(&self, tau: f64, zeta: f64) -> Result<PointState> {
        let data = self.seed.data(tau, zeta)?;
        let n = self.vector_from_data(&data, tau, zeta)?;
        let lam0 = self.spectral.lambda0;
        let eps2 = lam0 - lam0.conj();
        let omega_a = -2.0 * eps2 * n[2] * n[0].conj();
        let omega_b = self.seed.omega_b(tau, zeta)? - 2.0 * eps2 * n[2] * n[1].conj();
        let matter = if self.seed.is_mixed() {
            let xi = xi_matrix(&n, lam0, self.delta);
            let rho0 = self.seed.density(zeta);
            let scale = C64::new(1.0 / (lam0 - self.delta).norm_sqr(), 0.0);
            MatterState::Mixed(DensityMatrix((xi * rho0.0 * xi.dagger()).scale(scale)))
        } else {
            let denom = 1.0 / (lam0 - self.delta).norm();
            let coeff = eps2 * n[0].conj();
            let psi = [
                (lam0.conj() - self.delta + coeff * n[0]) * denom,
                coeff * n[1] * denom,
                coeff * n[2] * denom,
            ];
            MatterState::Pure(AtomicState(psi))
        };
        Ok(PointState {
            tau,
            zeta,
            omega_a,
            omega_b,
            matter,
        })
    }

    /// Normalization comparison at a point (uniform seeds only — needs the
    /// conjugate branch). Branch phases include the `ln c` offsets.
    pub fn norm_comparison(&self, tau: f64, zeta: f64) -> Result<Option<NormComparison>> {
        let data = self.seed.data(tau, zeta)?;
        let (Some(phi3), Some(w_bar)) = (data.phi3, data.w_bar) else {
            return Ok(None);
        };
        Ok(Some(compare_normalizations(
            self.spectral.lambda0,
            self.delta,
            data.w,
            w_bar.conj(),
            data.phi2 + self.ln_c2,
            phi3 + self.ln_c3,
        )))
    }
}

/// Dressing matrix `Ξ(Δ) = (λ₀* − Δ) I + (λ₀ − λ₀*) |n⟩⟨n|` for a unit
/// vector `n`. The dressed probe field is `−2 Ξ(0)₃₁` and the dressed
/// control correction `−2 Ξ(0)₃₂`.
pub fn xi_matrix(n: &Vec3, lambda0: C64, delta: f64) -> Mat3 {
    let eps2 = lambda0 - lambda0.conj();
    Mat3::identity().scale(lambda0.conj() - delta) + Mat3::outer(n, n).scale(eps2)
}

/// Cross-validation route: dressing vector straight from the full
/// fundamental matrix, `v = Φ₀ c`. Numerically exponentiated, so usable only
/// at moderate phases; agrees with the log-space route up to a global phase.
pub fn dressing_vector_from_matrix(
    seed: &UniformSeed,
    spectral: &SpectralConfig,
    tau: f64,
    zeta: f64,
) -> Result<Vec3> {
    let phi = seed.phi_matrix(tau, zeta);
    let c = [
        C64::from_polar(1.0, spectral.c1_phase),
        spectral.c2,
        spectral.c3,
    ];
    let v = phi.mul_vec(&c);
    let norm = matrix3::norm(&v);
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::numeric(format!(
            "matrix-route dressing vector degenerate at (tau, zeta) = ({tau}, {zeta}): \
             norm {norm} (phases too large for direct exponentiation?)"
        )));
    }
    Ok(matrix3::scale_vec(&v, C64::new(1.0 / norm, 0.0)))
}

/// Result of [`compare_normalizations`].
#[derive(Clone, Copy, Debug)]
pub struct NormComparison {
    /// Shorthand normalization: cross term counted once and both diagonal
    /// terms weighted by `1 + |w|²`.
    pub shorthand: f64,
    /// Exact squared norm `‖v‖²` of the dressing vector.
    pub exact: f64,
    /// Squared norm `⟨ψ|ψ⟩` of the dressed state computed with the shorthand
    /// normalization in the denominators; exactly 1 when the shorthand agrees
    /// with the exact norm.
    pub state_norm_sq_shorthand: f64,
}

impl NormComparison {
    /// Relative gap between the two normalizations.
    pub fn relative_gap(&self) -> f64 {
        (self.shorthand - self.exact).abs() / self.exact.abs().max(f64::MIN_POSITIVE)
    }
}

/// Compare the exact normalization of the dressing vector
/// `v = (1, e^{φ₂} − w̄ e^{φ₃}, w e^{φ₂} + e^{φ₃})`, `w̄ = conj(w⋆)`, against
/// the shorthand that counts the cross term once and weighs both diagonal
/// terms with `1 + |w|²`:
///
/// * exact: `1 + 2 Re[(w − w⋆) e^{φ₂ + conj(φ₃)}] + (1 + |w|²) e^{2Reφ₂} + (1 + |w⋆|²) e^{2Reφ₃}`
/// * shorthand: `1 + Re[(w − w⋆) e^{φ₂ + conj(φ₃)}] + (1 + |w|²)(e^{2Reφ₂} + e^{2Reφ₃})`
///
/// The two coincide whenever the phases carry the conjugation symmetry of a
/// single real-coefficient soliton (the cross term vanishes and
/// `|w| = |w⋆|`), but differ for complex coefficients or detuned collisions;
/// the returned state norm quantifies how far from unit the dressed state
/// would drift if the shorthand were used in the denominators.
pub fn compare_normalizations(
    lambda: C64,
    delta: f64,
    w: C64,
    w_star: C64,
    phi2: C64,
    phi3: C64,
) -> NormComparison {
    let cross = ((w - w_star) * (phi2 + phi3.conj()).exp()).re;
    let d2 = (2.0 * phi2.re).exp();
    let d3 = (2.0 * phi3.re).exp();
    let exact = 1.0 + 2.0 * cross + (1.0 + w.norm_sqr()) * d2 + (1.0 + w_star.norm_sqr()) * d3;
    let shorthand = 1.0 + cross + (1.0 + w.norm_sqr()) * (d2 + d3);

    // Dressed-state columns with the shorthand in the denominators.
    let v2 = phi2.exp() - w_star.conj() * phi3.exp();
    let v3 = w * phi2.exp() + phi3.exp();
    let eps2 = lambda - lambda.conj();
    let pole = 1.0 / (lambda - delta).norm();
    let psi1 = (lambda.conj() - delta + eps2 / shorthand) * pole;
    let psi2 = eps2 * v2 / shorthand * pole;
    let psi3 = eps2 * v3 / shorthand * pole;
    let state_norm_sq_shorthand = psi1.norm_sqr() + psi2.norm_sqr() + psi3.norm_sqr();
    NormComparison {
        shorthand,
        exact,
        state_norm_sq_shorthand,
    }
}

/// Two unit vectors completing a unit `n` to an orthonormal basis of ℂ³
/// (Gram–Schmidt against the standard basis vectors least aligned with `n`).
pub fn orthonormal_completion(n: &Vec3) -> (Vec3, Vec3) {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| n[a].norm().total_cmp(&n[b].norm()));
    let basis = |j: usize| -> Vec3 {
        let mut e = [C64::default(); 3];
        e[j] = C64::new(1.0, 0.0);
        e
    };
    let project_out = |v: &Vec3, onto: &Vec3| -> Vec3 {
        let coeff = matrix3::inner(onto, v);
        [
            v[0] - coeff * onto[0],
            v[1] - coeff * onto[1],
            v[2] - coeff * onto[2],
        ]
    };
    let normalize = |v: &Vec3| -> Vec3 {
        let norm = matrix3::norm(v);
        debug_assert!(norm > 1e-8, "completion degenerate");
        matrix3::scale_vec(v, C64::new(1.0 / norm, 0.0))
    };
    let m1 = normalize(&project_out(&basis(order[0]), n));
    let m2 = normalize(&project_out(&project_out(&basis(order[1]), n), &m1));
    (m1, m2)
}

/// Explicit dressing matrix `Ψ₁` with its matrix spectral parameter: the
/// third column is the dressing vector `v = Φ₀ c`, the first two are any
/// orthonormal completion, and `Ξ(Δ) = Ψ₁ (ℒ₁ − Δ·I) Ψ₁⁻¹` with
/// `ℒ₁ = diag(λ₀*, λ₀*, λ₀)`. Cross-validation form of the projector route
/// in [`xi_matrix`].
#[derive(Clone, Debug)]
pub struct DressingMatrix {
    pub psi1: Mat3,
    pub lambda0: C64,
    pub delta: f64,
}

impl DressingMatrix {
    /// `ℒ₁ = diag(λ₀*, λ₀*, λ₀)`.
    pub fn l1(&self) -> Mat3 {
        Mat3::diag(self.lambda0.conj(), self.lambda0.conj(), self.lambda0)
    }

    /// `Ξ(Δ) = Ψ₁ (ℒ₁ − Δ·I) Ψ₁⁻¹` by explicit adjugate inversion.
    pub fn xi(&self) -> Result<Mat3> {
        let inv = self.psi1.inverse().ok_or_else(|| {
            Error::numeric("degenerate dressing configuration: Psi1 is singular")
        })?;
        let shift = Mat3::identity().scale(C64::new(self.delta, 0.0));
        Ok(self.psi1 * (self.l1() - shift) * inv)
    }
}

/// Build the explicit `Ψ₁` at a point of a uniform seed (cross-validation
/// route; phases must be moderate enough for direct exponentiation).
pub fn dressing_matrix(
    seed: &UniformSeed,
    spectral: &SpectralConfig,
    tau: f64,
    zeta: f64,
) -> Result<DressingMatrix> {
    let v = dressing_vector_from_matrix(seed, spectral, tau, zeta)?;
    let (m1, m2) = orthonormal_completion(&v);
    let mut psi1 = Mat3::zeros();
    psi1.set_col(0, &m1);
    psi1.set_col(1, &m2);
    psi1.set_col(2, &v);
    Ok(DressingMatrix {
        psi1,
        lambda0: spectral.lambda0,
        delta: seed.delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhysicalParams;
    use std::f64::consts::FRAC_PI_4;

    const ONE: C64 = C64::new(1.0, 0.0);
    const ZERO: C64 = C64::new(0.0, 0.0);

    fn im(x: f64) -> C64 {
        C64::new(0.0, x)
    }

    fn demo_seed(lambda: C64) -> UniformSeed {
        UniformSeed::new(&PhysicalParams::demo(), lambda).unwrap()
    }

    fn dressed(lambda: C64, c1_phase: f64, c2: C64, c3: C64) -> DressedSolution {
        let seed = Seed::Uniform(demo_seed(lambda));
        DressedSolution::new(seed, SpectralConfig::new(lambda, c1_phase, c2, c3)).unwrap()
    }

    #[test]
    fn normalizations_agree_on_symmetric_configurations() {
        // Pure imaginary λ, real coefficients: the cross term vanishes and
        // |w| = |w⋆|, so the shorthand equals the exact norm and the dressed
        // state stays exactly unit — for zero and nonzero detuning alike.
        for delta in [0.0, 1.0] {
            let params = PhysicalParams {
                delta,
                ..PhysicalParams::demo()
            };
            let seed = UniformSeed::new(&params, im(4.1)).unwrap();
            let data = seed.data(0.37, 0.81);
            let cmp = compare_normalizations(
                im(4.1),
                delta,
                data.w,
                data.w_bar.unwrap().conj(),
                data.phi2,
                data.phi3.unwrap(),
            );
            assert!(
                (cmp.shorthand - cmp.exact).abs() < 1e-12 * cmp.exact,
                "delta = {delta}"
            );
            assert!((cmp.state_norm_sq_shorthand - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_gap_at_frozen_asymmetric_points() {
        // Rotating the fast-branch phase breaks the conjugation symmetry.
        let params = PhysicalParams {
            delta: 1.0,
            ..PhysicalParams::demo()
        };
        let seed = UniformSeed::new(&params, im(4.1)).unwrap();
        let data = seed.data(0.37, 0.81);
        let cmp = compare_normalizations(
            im(4.1),
            1.0,
            data.w,
            data.w_bar.unwrap().conj(),
            data.phi2,
            data.phi3.unwrap() + im(FRAC_PI_4),
        );
        assert!((cmp.shorthand - 7.209_237_832_672_347).abs() < 1e-12);
        assert!((cmp.exact - 5.997_161_740_470_272).abs() < 1e-12);
        assert!((cmp.state_norm_sq_shorthand - 0.911_952_918_686_727).abs() < 1e-12);

        // Fully generic point.
        let cmp = compare_normalizations(
            C64::new(0.7, 4.1),
            0.3,
            C64::new(0.30, -0.41),
            C64::new(-0.12, 0.27),
            C64::new(0.22, -0.91),
            C64::new(-0.47, 1.13),
        );
        assert!((cmp.shorthand - 2.824_653_050_997_517).abs() < 1e-12);
        assert!((cmp.exact - 2.137_677_036_442_131).abs() < 1e-12);
        assert!((cmp.state_norm_sq_shorthand - 0.658_840_700_862_918).abs() < 1e-12);
        assert!(cmp.relative_gap() > 0.3);
    }

    #[test]
    fn dressed_pure_state_is_normalized_everywhere() {
        let sol = dressed(im(4.1), 0.0, ONE, ZERO);
        for &tau in &[-25.0, -2.0, 0.0, 1.7, 40.0] {
            for &zeta in &[0.0, 3.3, 90.0] {
                let point = sol.evaluate(tau, zeta).unwrap();
                match point.matter {
                    MatterState::Pure(psi) => {
                        assert!(
                            (psi.norm() - 1.0).abs() < 1e-12,
                            "norm off at ({tau}, {zeta})"
                        );
                        let p = psi.populations().unwrap();
                        assert!((p[0] + p[1] + p[2] - 1.0).abs() < 1e-12);
                    }
                    MatterState::Mixed(_) => panic!("uniform k = 0 seed must stay pure"),
                }
                assert!(point.omega_a.norm() <= 2.0 * 4.1 + 1e-9);
            }
        }
    }

    #[test]
    fn log_space_route_matches_matrix_route() {
        // Generic complex coefficients and both branches populated; the two
        // routes must give the same projector, hence the same fields.
        let lam0 = im(4.1);
        let spectral = SpectralConfig::new(
            lam0,
            0.3,
            C64::from_polar(0.8, 0.2),
            C64::from_polar(1.1, -1.1),
        );
        let seed = demo_seed(lam0);
        let sol =
            DressedSolution::new(Seed::Uniform(seed.clone()), spectral.clone()).unwrap();
        for &(tau, zeta) in &[(0.3, 0.7), (-0.9, 1.2), (1.4, 0.0)] {
            let n_direct = dressing_vector_from_matrix(&seed, &spectral, tau, zeta).unwrap();
            let xi0 = xi_matrix(&n_direct, lam0, 0.0);
            let point = sol.evaluate(tau, zeta).unwrap();
            let omega_a_direct = -2.0 * xi0.0[2][0];
            let omega_b_direct = C64::new(3.0, 0.0) - 2.0 * xi0.0[2][1];
            assert!(
                (point.omega_a - omega_a_direct).norm() < 1e-10,
                "probe field mismatch at ({tau}, {zeta})"
            );
            assert!(
                (point.omega_b - omega_b_direct).norm() < 1e-10,
                "control field mismatch at ({tau}, {zeta})"
            );
        }
    }

    #[test]
    fn matrix_route_matches_on_modulated_mixed_seed() {
        let params = PhysicalParams {
            nu0: 4.5,
            delta: 0.25,
            omega0: 1.2,
            k_phase: 0.4,
            x_excited: Some(6.0),
        };
        let lam0 = C64::new(0.6, -2.2);
        let seed = UniformSeed::new(&params, lam0).unwrap();
        let spectral = SpectralConfig::new(lam0, 0.0, ONE, C64::new(0.4, 0.1));
        let sol =
            DressedSolution::new(Seed::Uniform(seed.clone()), spectral.clone()).unwrap();
        let (tau, zeta) = (0.45, 1.3);
        let n_direct = dressing_vector_from_matrix(&seed, &spectral, tau, zeta).unwrap();
        let point = sol.evaluate(tau, zeta).unwrap();
        // Fields.
        let xi0 = xi_matrix(&n_direct, lam0, 0.0);
        assert!((point.omega_a - (-2.0 * xi0.0[2][0])).norm() < 1e-10);
        // Density matrix through the direct Ξ route.
        let xi = xi_matrix(&n_direct, lam0, params.delta);
        let rho0 = seed.density(zeta);
        let scale = C64::new(1.0 / (lam0 - params.delta).norm_sqr(), 0.0);
        let rho_direct = (xi * rho0.0 * xi.dagger()).scale(scale);
        match point.matter {
            MatterState::Mixed(rho) => {
                assert!((rho.0 - rho_direct).max_abs() < 1e-10);
                // Unitary-similar to the seed: Hermitian, unit trace, same
                // purity, and genuinely mixed.
                assert!(rho.hermiticity_defect() < 1e-12);
                assert!(rho.trace_defect() < 1e-12);
                let purity = (rho.0 * rho.0).trace().re;
                let purity0 = (rho0.0 * rho0.0).trace().re;
                assert!((purity - purity0).abs() < 1e-12);
                assert!(!rho.is_pure());
            }
            MatterState::Pure(_) => panic!("modulated seed must dress to a mixed state"),
        }
    }

    #[test]
    fn time_dependent_seed_requires_zero_fast_coefficient() {
        use crate::background::BackgroundProfile;
        use crate::scattering::ScatteringSolution;
        let profile = BackgroundProfile::ExponentialSwitch {
            omega0: 3.0,
            alpha: 4.0,
            t1: 1.0,
            t_on: None,
        };
        let lam0 = im(-4.1);
        let scattering = ScatteringSolution::closed_form(&profile, lam0).unwrap();
        let seed = TimeDepSeed::new(4.5, 0.0, profile, scattering).unwrap();
        let err = DressedSolution::new(
            Seed::TimeDependent(seed.clone()),
            SpectralConfig::new(lam0, 0.0, ONE, ONE),
        )
        .unwrap_err();
        assert!(err.to_string().contains("c3"));
        // And with c3 = 0 it evaluates to a normalized pure state.
        let sol = DressedSolution::new(
            Seed::TimeDependent(seed),
            SpectralConfig::new(lam0, 0.0, ONE, ZERO),
        )
        .unwrap();
        let point = sol.evaluate(0.5, 2.0).unwrap();
        match point.matter {
            MatterState::Pure(psi) => assert!((psi.norm() - 1.0).abs() < 1e-12),
            MatterState::Mixed(_) => panic!("time-dependent seed is pure"),
        }
    }

    #[test]
    fn explicit_psi1_route_agrees_with_projector_form() {
        let lam0 = im(4.1);
        let spectral = SpectralConfig::new(
            lam0,
            0.2,
            C64::from_polar(0.9, 0.4),
            C64::from_polar(0.7, -0.3),
        );
        let seed = demo_seed(lam0);
        let dm = dressing_matrix(&seed, &spectral, 0.4, 0.9).unwrap();
        // Column orthogonality (Ψ₁⁽³⁾, Ψ₁⁽¹,²⁾) = 0 and unit columns.
        let v = dm.psi1.col(2);
        assert!(matrix3::inner(&v, &dm.psi1.col(0)).norm() < 1e-12);
        assert!(matrix3::inner(&v, &dm.psi1.col(1)).norm() < 1e-12);
        assert!((matrix3::norm(&dm.psi1.col(0)) - 1.0).abs() < 1e-12);
        assert!((matrix3::norm(&dm.psi1.col(1)) - 1.0).abs() < 1e-12);
        // Ξ has eigenpairs (λ₀ − Δ, v) and (λ₀* − Δ, m₁), and its trace and
        // determinant carry the full spectrum {λ₀*−Δ, λ₀*−Δ, λ₀−Δ}.
        let xi = dm.xi().unwrap();
        let ev = xi.mul_vec(&v);
        let expected_v = matrix3::scale_vec(&v, lam0);
        assert!(
            (ev[0] - expected_v[0]).norm()
                + (ev[1] - expected_v[1]).norm()
                + (ev[2] - expected_v[2]).norm()
                < 1e-10
        );
        let m1 = dm.psi1.col(0);
        let em = xi.mul_vec(&m1);
        let expected_m = matrix3::scale_vec(&m1, lam0.conj());
        assert!((em[0] - expected_m[0]).norm() + (em[1] - expected_m[1]).norm() < 1e-10);
        assert!((xi.trace() - (2.0 * lam0.conj() + lam0)).norm() < 1e-10);
        assert!((xi.det() - lam0.conj() * lam0.conj() * lam0).norm() < 1e-9);
        // And the similarity form agrees with the rank-one projector form.
        let xi_proj = xi_matrix(&v, lam0, 0.0);
        assert!((xi - xi_proj).max_abs() < 1e-10);
    }

    #[test]
    fn vanished_branches_still_give_a_unit_vector() {
        // c2 = 0 leaves only the constant and fast columns; the log of zero
        // (Re = −∞) must flow through the shift machinery without NaNs.
        let sol = dressed(im(4.1), 0.0, ZERO, ONE);
        let n = sol.dressing_vector(0.3, 0.5).unwrap();
        assert!((matrix3::norm(&n) - 1.0).abs() < 1e-12);
        let point = sol.evaluate(0.3, 0.5).unwrap();
        assert!(point.omega_a.norm().is_finite());
    }
}
