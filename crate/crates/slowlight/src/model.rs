//! Physical model of the three-level medium: parameter sets, atomic states,
//! density matrices, the interaction Hamiltonian and both equations of
//! motion, plus unit conversions and the retarded/lab coordinate maps.
//!
//! The dimensionless system evolves in retarded coordinates `(τ, ζ)`:
//!
//! * field propagation: `∂ζ Ω_a = i ν₀ ρ₃₁`, `∂ζ Ω_b = i ν₀ ρ₃₂`;
//! * atomic evolution:  `∂τ ρ = i [ (Δ/2) D − H_I , ρ ]`,
//!
//! with `D = diag(1, 1, −1)` and the interaction Hamiltonian `H_I` holding
//! `−Ω_a/2` and `−Ω_b/2` on the `|3⟩⟨1|` and `|3⟩⟨2|` couplings.

use crate::error::{Error, Result};
use crate::matrix3::{inner, C64, Mat3, Vec3, I, ONE, ZERO};

/// Speed of light in vacuum, m/s (for reporting conversions only).
pub const LIGHT_SPEED_M_S: f64 = 2.997_924_58e8;

/// Tolerance for state normalization checks.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for density-matrix purity checks.
pub const PURITY_TOL: f64 = 1e-10;

/// Medium and background parameters shared by every solution family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Coupling constant ν₀ between the field envelopes and the medium
    /// polarization (> 0).
    pub nu0: f64,
    /// One-photon detuning Δ of the excited level.
    pub delta: f64,
    /// Background (control) field amplitude Ω₀ at τ → −∞ (≥ 0).
    pub omega0: f64,
    /// Spatial phase gradient k of the control field, `Ω_b = Ω₀ e^{ikζ}`.
    /// Zero for all time-dependent scenarios.
    pub k_phase: f64,
    /// Excited-state population parameter x of the mixed seed used when
    /// `k_phase ≠ 0`; must satisfy `x > 2Δ`. Irrelevant (None) when k = 0.
    pub x_excited: Option<f64>,
}

impl PhysicalParams {
    /// Standard strong-coupling demo parameters (ν₀ = 4.5, Ω₀ = 3, Δ = 0).
    pub fn demo() -> Self {
        PhysicalParams {
            nu0: 4.5,
            delta: 0.0,
            omega0: 3.0,
            k_phase: 0.0,
            x_excited: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu0 > 0.0) || !self.nu0.is_finite() {
            return Err(Error::validation(format!(
                "coupling nu0 must be positive and finite, got {}",
                self.nu0
            )));
        }
        if !(self.omega0 >= 0.0) || !self.omega0.is_finite() {
            return Err(Error::validation(format!(
                "background amplitude omega0 must be non-negative, got {}",
                self.omega0
            )));
        }
        if !self.delta.is_finite() || !self.k_phase.is_finite() {
            return Err(Error::validation("delta and k_phase must be finite"));
        }
        if self.k_phase != 0.0 {
            let x = self.x_excited.ok_or_else(|| {
                Error::validation("x_excited is required when k_phase != 0")
            })?;
            if !(x > 2.0 * self.delta) {
                return Err(Error::validation(format!(
                    "x_excited must exceed 2*delta (x = {x}, delta = {})",
                    self.delta
                )));
            }
            if self.k_phase < 0.0 {
                return Err(Error::validation("k_phase must be non-negative"));
            }
            // The mixed seed density matrix must stay positive semidefinite.
            if self.k_phase * x > self.nu0 {
                return Err(Error::validation(
                    "k_phase * x_excited must not exceed nu0 (ground population)",
                ));
            }
            if x * x / 4.0 < self.delta * self.delta + self.omega0 * self.omega0 {
                return Err(Error::validation(
                    "x_excited too small: (x/2)^2 must be >= delta^2 + omega0^2",
                ));
            }
        }
        Ok(())
    }
}

/// Spectral (dressing) parameters: the complex eigenvalue λ₀ and the three
/// projection coefficients selecting the solution family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralConfig {
    /// Complex spectral parameter; `Im λ₀ ≠ 0`. Its imaginary part sets the
    /// soliton amplitude and width.
    pub lambda0: C64,
    /// Phase of the first coefficient (the coefficient itself is the pure
    /// phase `e^{i φ₁}`; its modulus is not observable).
    pub c1_phase: f64,
    /// Coefficient of the slow branch (position/phase of the slow soliton).
    pub c2: C64,
    /// Coefficient of the fast branch (position/phase of the fast signal).
    pub c3: C64,
}

impl SpectralConfig {
    pub fn new(lambda0: C64, c1_phase: f64, c2: C64, c3: C64) -> Self {
        SpectralConfig {
            lambda0,
            c1_phase,
            c2,
            c3,
        }
    }

    pub fn c1(&self) -> C64 {
        C64::from_polar(1.0, self.c1_phase)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda0.im == 0.0 || !self.lambda0.is_finite() {
            return Err(Error::validation(format!(
                "spectral parameter must have a nonzero imaginary part, got {}",
                self.lambda0
            )));
        }
        if !self.c1_phase.is_finite() || !self.c2.is_finite() || !self.c3.is_finite() {
            return Err(Error::validation("spectral coefficients must be finite"));
        }
        Ok(())
    }

    /// Solitonic regime on a background of amplitude Ω₀: `|Im λ₀| > Ω₀`.
    pub fn require_solitonic(&self, omega0: f64) -> Result<()> {
        self.validate()?;
        if self.lambda0.im.abs() <= omega0 {
            return Err(Error::validation(format!(
                "solitonic regime requires |Im lambda0| > omega0 ({} <= {})",
                self.lambda0.im.abs(),
                omega0
            )));
        }
        Ok(())
    }
}

/// `D = diag(1, 1, −1)`, the population-difference matrix between the
/// ground doublet and the excited level.
pub fn d_matrix() -> Mat3 {
    Mat3::diag(ONE, ONE, -ONE)
}

/// Interaction Hamiltonian for instantaneous field values:
/// `H_I = −½(Ω_a |3⟩⟨1| + Ω_b |3⟩⟨2|) + h.c.`
pub fn h_interaction(omega_a: C64, omega_b: C64) -> Mat3 {
    let mut h = Mat3::zeros();
    let half = C64::new(0.5, 0.0);
    h.0[2][0] = -half * omega_a;
    h.0[0][2] = -half * omega_a.conj();
    h.0[2][1] = -half * omega_b;
    h.0[1][2] = -half * omega_b.conj();
    h
}

/// Generator of the atomic evolution, `(Δ/2) D − H_I`.
pub fn liouville_generator(delta: f64, omega_a: C64, omega_b: C64) -> Mat3 {
    d_matrix().scale(C64::new(0.5 * delta, 0.0)) - h_interaction(omega_a, omega_b)
}

/// Right-hand side of `∂τ ρ = i [ (Δ/2) D − H_I , ρ ]`.
pub fn liouville_rhs(delta: f64, omega_a: C64, omega_b: C64, rho: &Mat3) -> Mat3 {
    Mat3::commutator(&liouville_generator(delta, omega_a, omega_b), rho).scale(I)
}

/// Right-hand side of the field propagation equations,
/// `(∂ζ Ω_a, ∂ζ Ω_b) = (i ν₀ ρ₃₁, i ν₀ ρ₃₂)`.
pub fn maxwell_rhs(nu0: f64, rho: &Mat3) -> (C64, C64) {
    let nu = C64::new(nu0, 0.0);
    (I * nu * rho.0[2][0], I * nu * rho.0[2][1])
}

/// Pure atomic state |ψ⟩ = ψ₁|1⟩ + ψ₂|2⟩ + ψ₃|3⟩.
///
/// Constructors do not normalize: the dressing formulas must produce unit
/// norm on their own, and silently renormalizing would hide defects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomicState(pub Vec3);

impl AtomicState {
    pub fn ground1() -> Self {
        AtomicState([ONE, ZERO, ZERO])
    }

    pub fn norm(&self) -> f64 {
        crate::matrix3::norm(&self.0)
    }

    /// Level populations `(P₁, P₂, P₃)`. Errors if the state is not
    /// normalized to within `NORM_TOL`.
    pub fn populations(&self) -> Result<[f64; 3]> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::numeric(format!(
                "state norm deviates from 1 by {:.3e}",
                (n - 1.0).abs()
            )));
        }
        Ok([
            self.0[0].norm_sqr(),
            self.0[1].norm_sqr(),
            self.0[2].norm_sqr(),
        ])
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(Mat3::outer(&self.0, &self.0))
    }

    pub fn inner(&self, other: &AtomicState) -> C64 {
        inner(&self.0, &other.0)
    }
}

/// Density matrix of the three-level atom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(pub Mat3);

impl DensityMatrix {
    /// Dark state `|1⟩⟨1|`: decoupled from the control field.
    pub fn dark_state() -> Self {
        let mut m = Mat3::zeros();
        m.0[0][0] = ONE;
        DensityMatrix(m)
    }

    /// Mixed seed compatible with a spatially rotating control phase
    /// `Ω_b = Ω₀ e^{ikζ}`: a dark-state/polarized mixture whose coherence
    /// between the ground sublevels exactly feeds the phase advance of the
    /// control field through the propagation equation.
    pub fn mixed_seed(params: &PhysicalParams, zeta: f64) -> Result<Self> {
        params.validate()?;
        let k = params.k_phase;
        if k == 0.0 {
            return Ok(Self::dark_state());
        }
        let x = params.x_excited.expect("validated above");
        let f = k / params.nu0;
        let phase = C64::from_polar(1.0, k * zeta);
        let mut m = Mat3::zeros();
        m.0[0][0] = C64::new(1.0 - f * x, 0.0);
        m.0[1][1] = C64::new(f * (x / 2.0 + params.delta), 0.0);
        m.0[2][2] = C64::new(f * (x / 2.0 - params.delta), 0.0);
        m.0[1][2] = C64::new(f * params.omega0, 0.0) * phase.conj();
        m.0[2][1] = C64::new(f * params.omega0, 0.0) * phase;
        Ok(DensityMatrix(m))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.dagger()).max_abs()
    }

    pub fn trace_defect(&self) -> f64 {
        (self.0.trace() - ONE).norm()
    }

    /// `max |ρ² − ρ|`: zero exactly when the matrix is a projector.
    pub fn idempotency_defect(&self) -> f64 {
        ((self.0 * self.0) - self.0).max_abs()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > NORM_TOL {
            return Err(Error::numeric(format!(
                "density matrix not Hermitian: defect {h:.3e}"
            )));
        }
        let t = self.trace_defect();
        if t > NORM_TOL {
            return Err(Error::numeric(format!(
                "density matrix trace deviates from 1 by {t:.3e}"
            )));
        }
        Ok(())
    }

    pub fn is_pure(&self) -> bool {
        self.idempotency_defect() <= PURITY_TOL
    }

    /// Diagonal populations `(P₁, P₂, P₃)`.
    pub fn populations(&self) -> [f64; 3] {
        [self.0 .0[0][0].re, self.0 .0[1][1].re, self.0 .0[2][2].re]
    }
}

/// Retarded → laboratory coordinates (scaled light speed 1):
/// `t = τ + ζ`, `z = ζ`.
pub fn to_lab_frame(tau: f64, zeta: f64) -> (f64, f64) {
    (tau + zeta, zeta)
}

/// Laboratory → retarded coordinates: `τ = t − z`, `ζ = z`.
pub fn from_lab_frame(t: f64, z: f64) -> (f64, f64) {
    (t - z, z)
}

/// Unit system for reporting. All internal computation is dimensionless;
/// these factors are pure scalings applied at the edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    /// Pulse time unit t_p in seconds (the dimensionless time unit).
    pub pulse_time_s: f64,
    /// Reference group velocity as a fraction of c, used to report
    /// slow-light speeds in laboratory terms.
    pub group_velocity_ref: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem {
            pulse_time_s: 1e-6,
            group_velocity_ref: 1e-7,
        }
    }
}

impl UnitSystem {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_time_s > 0.0) || !(self.group_velocity_ref > 0.0) {
            return Err(Error::validation(
                "unit scales must be positive (pulse_time_s, group_velocity_ref)",
            ));
        }
        Ok(())
    }

    pub fn time_to_seconds(&self, tau: f64) -> f64 {
        tau * self.pulse_time_s
    }

    pub fn time_from_seconds(&self, seconds: f64) -> f64 {
        seconds / self.pulse_time_s
    }

    /// Distance unit: light travel over one pulse time (ζ is measured in
    /// pulse times because the scaled light speed is 1).
    pub fn distance_to_meters(&self, zeta: f64) -> f64 {
        zeta * self.pulse_time_s * LIGHT_SPEED_M_S
    }

    pub fn distance_from_meters(&self, meters: f64) -> f64 {
        meters / (self.pulse_time_s * LIGHT_SPEED_M_S)
    }

    /// Dimensionless speed (fraction of c) → m/s.
    pub fn speed_to_m_s(&self, v_over_c: f64) -> f64 {
        v_over_c * LIGHT_SPEED_M_S
    }

    /// Reference slow-light group velocity in m/s.
    pub fn reference_group_velocity_m_s(&self) -> f64 {
        self.group_velocity_ref * LIGHT_SPEED_M_S
    }
}
