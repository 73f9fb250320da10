//! Seed (undressed) solutions of the linear pair
//!
//! * `∂τ Φ = (iλ/2) D Φ − i H_I Φ`
//! * `∂ζ Φ = (i/2) ν₀ ρ Φ / (λ − Δ)`
//!
//! on backgrounds with no probe field. Two kinds are supported: a uniform
//! control field (possibly spatially phase-modulated, `Ω_b = Ω₀ e^{ikζ}`,
//! including the zero-field limit) where everything is in closed form, and a
//! time-dependent control profile where the scattering data `(w, z)` comes
//! from a solver.
//!
//! The dressing needs the seed only through the relative phases
//! `φ₂ = Z₁₁ − E + ln c₂`, `φ₃ = Z₂₂ − E + ln c₃` of the three fundamental
//! columns and the Riccati variables `w`, `w̄`; those are what this module
//! exposes, plus full 3×3 matrices for cross-validation.

use crate::background::BackgroundProfile;
use crate::error::{Error, Result};
use crate::matrix3::{C64, Mat3};
use crate::model::{DensityMatrix, PhysicalParams};
use crate::scattering::{sqrt_branch, Method, ScatteringSolution};

const I: C64 = C64::new(0.0, 1.0);

/// Per-point seed data consumed by the dressing: branch phases (without the
/// `ln c` offsets) and Riccati variables. `phi3`/`w_bar` are `None` when the
/// conjugate-point data is unavailable (time-dependent backgrounds).
#[derive(Clone, Copy, Debug)]
pub struct SeedData {
    pub phi2: C64,
    pub phi3: Option<C64>,
    pub w: C64,
    pub w_bar: Option<C64>,
}

/// Uniform background `Ω_b = Ω₀ e^{ikζ}` (k = 0 gives a constant field,
/// Ω₀ = 0 the vacuum). For k ≠ 0 the medium carries the partially excited
/// spatially modulated state with inversion parameter `x`.
#[derive(Clone, Debug)]
pub struct UniformSeed {
    pub nu0: f64,
    pub delta: f64,
    pub omega0: f64,
    pub k_phase: f64,
    pub x_excited: f64,
    pub lambda: C64,
    s: C64,
}

impl UniformSeed {
    pub fn new(params: &PhysicalParams, lambda: C64) -> Result<Self> {
        params.validate()?;
        if (lambda - params.delta).norm() == 0.0 {
            return Err(Error::validation(
                "spectral point coincides with the detuning pole lambda = Delta",
            ));
        }
        let s = sqrt_branch(lambda, params.omega0);
        if (lambda + s).norm() == 0.0 {
            return Err(Error::validation(
                "degenerate spectral point: lambda + sqrt(lambda^2 + omega0^2) = 0",
            ));
        }
        Ok(UniformSeed {
            nu0: params.nu0,
            delta: params.delta,
            omega0: params.omega0,
            k_phase: params.k_phase,
            x_excited: params.x_excited.unwrap_or(0.0),
            lambda,
            s,
        })
    }

    /// Branch square root `S = √(λ² + Ω₀²)`.
    pub fn s_value(&self) -> C64 {
        self.s
    }

    /// Riccati fixed point at this ζ, `w = Ω₀ e^{ikζ}/(λ + S)`.
    pub fn w_at(&self, zeta: f64) -> C64 {
        C64::from_polar(self.omega0, self.k_phase * zeta) / (self.lambda + self.s)
    }

    /// Conjugate-branch companion `w̄ = conj(w(λ*))`; for a real uniform
    /// amplitude this is `Ω₀ e^{−ikζ}/(λ + S)`.
    pub fn w_bar_at(&self, zeta: f64) -> C64 {
        C64::from_polar(self.omega0, -self.k_phase * zeta) / (self.lambda + self.s)
    }

    /// Exponent of the first fundamental column,
    /// `E = (i/2)(λτ + (ν₀ − kx) ζ/(λ − Δ))`.
    pub fn e_exponent(&self, tau: f64, zeta: f64) -> C64 {
        let lam = self.lambda;
        I * 0.5
            * (lam * tau
                + (self.nu0 - self.k_phase * self.x_excited) * zeta / (lam - self.delta))
    }

    /// Relative branch phases (φ₂, φ₃) without the `ln c` offsets:
    ///
    /// * `φ₂ = i Ω₀² τ/(2(λ+S)) − ikζ/2 + i(3kx + 2kS − 2ν₀) ζ/(4(λ−Δ))`
    /// * `φ₃ = −i(λ+S)τ/2 + ikζ/2 + i(3kx − 2kS − 2ν₀) ζ/(4(λ−Δ))`
    ///
    /// (k = 0 reduces both to the constant-background phases.)
    pub fn phases(&self, tau: f64, zeta: f64) -> (C64, C64) {
        let lam = self.lambda;
        let k = self.k_phase;
        let kx = k * self.x_excited;
        let pole = lam - self.delta;
        let phi2 = I * self.omega0 * self.omega0 * tau / (2.0 * (lam + self.s))
            - I * k * zeta * 0.5
            + I * (3.0 * kx + 2.0 * k * self.s - 2.0 * self.nu0) * zeta / (4.0 * pole);
        let phi3 = -I * (lam + self.s) * tau * 0.5
            + I * k * zeta * 0.5
            + I * (3.0 * kx - 2.0 * k * self.s - 2.0 * self.nu0) * zeta / (4.0 * pole);
        (phi2, phi3)
    }

    pub fn data(&self, tau: f64, zeta: f64) -> SeedData {
        let (phi2, phi3) = self.phases(tau, zeta);
        SeedData {
            phi2,
            phi3: Some(phi3),
            w: self.w_at(zeta),
            w_bar: Some(self.w_bar_at(zeta)),
        }
    }

    /// Full fundamental matrix `Φ₀ = diag(e^E, T)`,
    /// `T = (1 + W) e^{Z}` with `W = [[0, −w̄],[w, 0]]` and the diagonal
    /// exponent `Z` shifted by the modulation. Overflows for
    /// `|Re phases| ≳ 700`; intended for cross-validation at moderate
    /// arguments.
    pub fn phi_matrix(&self, tau: f64, zeta: f64) -> Mat3 {
        let lam = self.lambda;
        let pole = lam - self.delta;
        let k = self.k_phase;
        let kx = k * self.x_excited;
        // z rate on the uniform background: ż₀ = i(S − λ)/2.
        let z_rate = I * (self.s - lam) * 0.5;
        let shifted = tau + k * zeta / pole;
        let common = I * kx * zeta / (4.0 * pole);
        let z11 = I * lam * shifted * 0.5 + z_rate * shifted + common - I * k * zeta * 0.5;
        // Conjugate-branch rate: conj(ż₀(λ*)) = −ż₀(λ) on a real uniform
        // amplitude.
        let z22 = -I * lam * shifted * 0.5 - z_rate * shifted + common + I * k * zeta * 0.5;
        let w = self.w_at(zeta);
        let w_bar = self.w_bar_at(zeta);
        let (e11, e22) = (z11.exp(), z22.exp());
        let mut m = Mat3::zeros();
        m.0[0][0] = self.e_exponent(tau, zeta).exp();
        m.0[1][1] = e11;
        m.0[1][2] = -w_bar * e22;
        m.0[2][1] = w * e11;
        m.0[2][2] = e22;
        m
    }

    /// Seed control field at this point.
    pub fn omega_b(&self, zeta: f64) -> C64 {
        C64::from_polar(self.omega0, self.k_phase * zeta)
    }

    /// Seed matter state: ground for k = 0, the modulated mixed state
    /// otherwise.
    pub fn density(&self, zeta: f64) -> DensityMatrix {
        if self.k_phase == 0.0 {
            DensityMatrix::dark_state()
        } else {
            let params = PhysicalParams {
                nu0: self.nu0,
                delta: self.delta,
                omega0: self.omega0,
                k_phase: self.k_phase,
                x_excited: Some(self.x_excited),
            };
            // The same parameters were validated at construction.
            DensityMatrix::mixed_seed(&params, zeta).expect("params validated at construction")
        }
    }

    pub fn is_mixed(&self) -> bool {
        self.k_phase != 0.0
    }
}

/// Background with a time-dependent control profile; the branch data comes
/// from a scattering solution at the same λ. Only the `φ₂` branch is
/// available (the conjugate branch would need a second solver run), so the
/// dressing must use `c₃ = 0` on such seeds.
#[derive(Clone, Debug)]
pub struct TimeDepSeed {
    pub nu0: f64,
    pub delta: f64,
    pub lambda: C64,
    pub profile: BackgroundProfile,
    pub scattering: ScatteringSolution,
}

impl TimeDepSeed {
    pub fn new(
        nu0: f64,
        delta: f64,
        profile: BackgroundProfile,
        scattering: ScatteringSolution,
    ) -> Result<Self> {
        if !(nu0 > 0.0) || !nu0.is_finite() {
            return Err(Error::validation("nu0 must be positive and finite"));
        }
        if !delta.is_finite() {
            return Err(Error::validation("delta must be finite"));
        }
        profile.validate()?;
        let lambda = scattering.lambda;
        if (lambda - delta).norm() == 0.0 {
            return Err(Error::validation(
                "spectral point coincides with the detuning pole lambda = Delta",
            ));
        }
        Ok(TimeDepSeed {
            nu0,
            delta,
            lambda,
            profile,
            scattering,
        })
    }

    pub fn data(&self, tau: f64, zeta: f64) -> Result<SeedData> {
        let (w, z) = self.scattering.w_z(tau)?;
        let phi2 = z - I * self.nu0 * zeta / (2.0 * (self.lambda - self.delta));
        Ok(SeedData {
            phi2,
            phi3: None,
            w,
            w_bar: None,
        })
    }

    pub fn omega_b(&self, tau: f64) -> Result<C64> {
        self.profile.eval(tau)
    }

    pub fn method(&self) -> Method {
        self.scattering.method
    }
}
