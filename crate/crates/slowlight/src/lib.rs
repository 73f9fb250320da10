//! Exact slow-light and fast soliton solutions of a three-level (Λ-type)
//! Maxwell–Bloch medium, constructed by a Darboux dressing of a scattering
//! seed, together with the derived observables (group velocity, memory-bit
//! width, stopping distance) and an independent finite-difference oracle
//! that certifies every analytic object numerically.
//!
//! Conventions used throughout (dimensionless; the scaled light speed is 1):
//!
//! * retarded coordinates `τ = t − z/c`, `ζ = z/c`;
//! * channel-a probe field `Ω_a`, channel-b control field `Ω_b` (Rabi
//!   frequencies);
//! * atomic basis `|1⟩, |2⟩` (ground sublevels), `|3⟩` (excited);
//! * coupling constant `ν₀`, one-photon detuning `Δ`.
//!
//! The library layers are:
//!
//! * [`model`] — state types, Hamiltonian/Liouville right-hand sides, units;
//! * [`background`] — control-field profiles `Ω(τ)` and their switch points;
//! * [`scattering`] — the auxiliary Riccati/log-phase problem `(w, z)` on a
//!   given background: closed forms, an adaptive ODE integrator, a causal
//!   integral-equation iteration, and the adiabatic approximation;
//! * [`darboux`] — the dressing step turning seed data into soliton
//!   solutions and atomic states;
//! * [`observables`] — velocities, widths, stopping distances, ridge
//!   tracking, conserved-functional estimates;
//! * [`oracle`] — finite-difference integration and residual checks that
//!   never reuse the analytic machinery;
//! * [`fieldmap`], [`scenario`], [`figures`], [`selfcheck`] — artifact
//!   plumbing used by the command-line front end.

pub mod background;
pub mod darboux;
pub mod error;
pub mod fieldmap;
pub mod figures;
pub mod matrix3;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod scattering;
pub mod scenario;
pub mod selfcheck;

pub use error::{Error, Result};
pub use matrix3::{C64, Mat3, Vec3};
