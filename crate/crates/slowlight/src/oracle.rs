//! Independent finite-difference verification of field–matter solutions.
//!
//! Every check in this module works directly on the governing equations with
//! second-order discretizations:
//!
//! * [`integrate_maxwell_bloch`] marches the coupled system
//!   `∂ζ H_I = (iν₀/4)[D, ρ]`, `∂τ ρ = i[ΔD/2 − H_I, ρ]` with a Heun
//!   predictor–corrector in ζ, closing each ζ-slice with a method-of-lines
//!   Heun sweep of the matter equation in τ;
//! * [`nonlinear_residual`] substitutes a candidate solution into both
//!   equations via central differences;
//! * [`zero_curvature_residual`] evaluates the compatibility condition
//!   `U_ζ − V_τ + [U, V] = 0` of the associated linear pair at probe values
//!   of the spectral parameter;
//! * [`linear_solution_residual`] checks a fundamental-solution candidate
//!   against both halves of the linear pair,
//!   `∂τΦ = (iλD/2 − iH_I)Φ` and `∂ζΦ = (iν₀ρ/(2(λ−Δ)))Φ`.
//!
//! Candidates enter as plain point samples of fields and matter, so a pass
//! certifies a solution independently of how it was constructed. None of the
//! analytic dressing or closed-form scattering machinery is reused here.

use rayon::prelude::*;
use serde::Serialize;

use crate::darboux::dress::{DressedSolution, MatterState, Seed};
use crate::error::{Error, Result};
use crate::matrix3::{C64, Mat3, I, ONE, ZERO};
use crate::model::{d_matrix, h_interaction, liouville_rhs, maxwell_rhs};
use crate::observables::sech_half_width;
use crate::scattering::k_of_lambda;

/// Per-step tolerance on trace and Hermiticity preservation of ρ.
pub const DRIFT_TOLERANCE: f64 = 1e-10;

/// Field growth factor beyond which the ζ-march is declared unstable.
pub const GROWTH_LIMIT: f64 = 1e3;

/// Residual channels below this sup-norm are treated as converged to
/// rounding: they carry no convergence-order information and are omitted
/// from [`ResidualReport::orders`].
pub const ROUNDING_FLOOR: f64 = 1e-13;

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Uniform rectangular grid in (τ, ζ) with a refinement-level count.
///
/// Residual operations evaluate at `levels` grids: level `k` halves both
/// steps `k` times. Axes are `lo + i·h`; when the span is not an integral
/// number of steps the last point falls short of the upper bound.
#[derive(Clone, Debug)]
pub struct OracleGrid {
    pub tau: (f64, f64),
    pub h_tau: f64,
    pub zeta: (f64, f64),
    pub h_zeta: f64,
    /// Number of refinement levels residual operations run (≥ 1).
    pub levels: u32,
}

impl OracleGrid {
    pub fn new(tau: (f64, f64), h_tau: f64, zeta: (f64, f64), h_zeta: f64) -> Result<Self> {
        let grid = OracleGrid {
            tau,
            h_tau,
            zeta,
            h_zeta,
            levels: 1,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Same grid evaluated at `levels` successive step-halvings.
    pub fn with_levels(mut self, levels: u32) -> Result<Self> {
        self.levels = levels;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bounds = [self.tau.0, self.tau.1, self.zeta.0, self.zeta.1];
        if bounds.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("grid bounds must be finite"));
        }
        if !(self.h_tau > 0.0 && self.h_tau.is_finite())
            || !(self.h_zeta > 0.0 && self.h_zeta.is_finite())
        {
            return Err(Error::validation("grid steps must be positive and finite"));
        }
        if self.tau.1 <= self.tau.0 || self.zeta.1 <= self.zeta.0 {
            return Err(Error::validation(
                "grid ranges must have positive extent (upper bound above lower)",
            ));
        }
        if self.levels == 0 {
            return Err(Error::validation("refinement level count must be at least 1"));
        }
        Ok(())
    }

    /// The grid with both steps halved `k` times (refinement level `k`).
    pub fn refined(&self, k: u32) -> OracleGrid {
        let f = 0.5f64.powi(k as i32);
        OracleGrid {
            h_tau: self.h_tau * f,
            h_zeta: self.h_zeta * f,
            ..self.clone()
        }
    }

    pub fn taus(&self) -> Vec<f64> {
        axis(self.tau.0, self.tau.1, self.h_tau)
    }

    pub fn zetas(&self) -> Vec<f64> {
        axis(self.zeta.0, self.zeta.1, self.h_zeta)
    }
}

fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let steps = ((hi - lo) / h + 1e-9).floor() as usize;
    (0..=steps).map(|i| lo + i as f64 * h).collect()
}

// ---------------------------------------------------------------------------
// Residual report
// ---------------------------------------------------------------------------

/// Sup-norm and root-mean-square residual of one equation channel.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualNorms {
    pub sup: f64,
    /// Root mean square over all interior samples of the channel.
    pub l2: f64,
}

/// Sup-norms per channel at one refinement level.
#[derive(Clone, Debug, Serialize)]
pub struct RefinementLevel {
    pub h_tau: f64,
    pub h_zeta: f64,
    pub sup: Vec<(String, f64)>,
}

/// Residual norms per equation channel, with the per-level history and
/// measured convergence orders when at least three refinement levels ran.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// Norms at the finest level evaluated.
    pub channels: Vec<(String, ResidualNorms)>,
    /// Coarse-to-fine history of sup-norms.
    pub refinements: Vec<RefinementLevel>,
    /// Least-squares slope of `ln sup` against `ln h` per channel. Empty
    /// unless ≥ 3 levels ran; channels at rounding level are omitted
    /// (nothing left to converge).
    pub orders: Vec<(String, f64)>,
}

impl ResidualReport {
    fn assemble(levels: Vec<(f64, f64, Vec<(String, ResidualNorms)>)>) -> Self {
        let refinements = levels
            .iter()
            .map(|(ht, hz, ch)| RefinementLevel {
                h_tau: *ht,
                h_zeta: *hz,
                sup: ch.iter().map(|(n, r)| (n.clone(), r.sup)).collect(),
            })
            .collect();
        let (_, _, finest) = levels.last().expect("at least one level");
        let channels = finest.clone();
        let mut orders = Vec::new();
        if levels.len() >= 3 {
            for (ci, (name, _)) in finest.iter().enumerate() {
                let mut xs = Vec::with_capacity(levels.len());
                let mut ys = Vec::with_capacity(levels.len());
                let mut at_rounding = false;
                for (ht, _, ch) in &levels {
                    let sup = ch[ci].1.sup;
                    if sup < ROUNDING_FLOOR {
                        at_rounding = true;
                        break;
                    }
                    xs.push(ht.ln());
                    ys.push(sup.ln());
                }
                if !at_rounding {
                    orders.push((name.clone(), lsq_slope(&xs, &ys)));
                }
            }
        }
        ResidualReport {
            channels,
            refinements,
            orders,
        }
    }

    /// Finest-level norms of a named channel.
    pub fn norms(&self, channel: &str) -> Option<ResidualNorms> {
        self.channels
            .iter()
            .find(|(n, _)| n == channel)
            .map(|(_, r)| *r)
    }

    /// Finest-level sup-norm of a named channel.
    pub fn sup(&self, channel: &str) -> Option<f64> {
        self.norms(channel).map(|r| r.sup)
    }

    /// Largest finest-level sup-norm over all channels.
    pub fn max_sup(&self) -> f64 {
        self.channels
            .iter()
            .map(|(_, r)| r.sup)
            .fold(0.0, f64::max)
    }

    /// Measured convergence order of a named channel, if reported.
    pub fn order(&self, channel: &str) -> Option<f64> {
        self.orders
            .iter()
            .find(|(n, _)| n == channel)
            .map(|(_, p)| *p)
    }

    /// Smallest reported convergence order, if any orders were reported.
    pub fn min_order(&self) -> Option<f64> {
        self.orders
            .iter()
            .map(|(_, p)| *p)
            .fold(None, |acc, p| Some(acc.map_or(p, |a: f64| a.min(p))))
    }
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Point samples
// ---------------------------------------------------------------------------

/// Fields and matter at one point: the two control-field values entering
/// `H_I` plus the 3×3 density matrix.
#[derive(Clone, Copy, Debug)]
pub struct FieldMatterSample {
    pub omega_a: C64,
    pub omega_b: C64,
    pub rho: Mat3,
}

/// Point sampler feeding residual operations.
pub type SampleFn<'a> = &'a (dyn Fn(f64, f64) -> Result<FieldMatterSample> + Sync);

/// Fundamental-matrix sampler for the linear pair.
pub type PhiFn<'a> = &'a (dyn Fn(f64, f64) -> Result<Mat3> + Sync);

/// Sampler view of a dressed solution (the candidate under test).
pub fn solution_sampler(
    solution: &DressedSolution,
) -> impl Fn(f64, f64) -> Result<FieldMatterSample> + Sync + '_ {
    move |tau, zeta| {
        let p = solution.evaluate(tau, zeta)?;
        let rho = match &p.matter {
            MatterState::Pure(psi) => psi.density().0,
            MatterState::Mixed(d) => d.0,
        };
        Ok(FieldMatterSample {
            omega_a: p.omega_a,
            omega_b: p.omega_b,
            rho,
        })
    }
}

/// Sampler view of an undressed seed background.
pub fn seed_sampler(seed: &Seed) -> impl Fn(f64, f64) -> Result<FieldMatterSample> + Sync + '_ {
    move |tau, zeta| {
        Ok(FieldMatterSample {
            omega_a: ZERO,
            omega_b: seed.omega_b(tau, zeta)?,
            rho: seed.density(zeta).0,
        })
    }
}

/// Row-major samples (τ-major) over the tensor grid; rows in parallel.
fn sample_grid(sample: SampleFn, taus: &[f64], zetas: &[f64]) -> Result<Vec<FieldMatterSample>> {
    let rows: Result<Vec<Vec<FieldMatterSample>>> = taus
        .par_iter()
        .map(|&t| zetas.iter().map(|&z| sample(t, z)).collect())
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

fn require_axes(taus: &[f64], zetas: &[f64]) -> Result<()> {
    if taus.len() < 3 || zetas.len() < 3 {
        return Err(Error::validation(
            "central differences need at least 3 grid points along each axis",
        ));
    }
    Ok(())
}

/// Runs one residual evaluation per refinement level (in parallel) and
/// assembles the combined report.
fn run_levels<F>(grid: &OracleGrid, eval: F) -> Result<ResidualReport>
where
    F: Fn(&OracleGrid) -> Result<Vec<(String, ResidualNorms)>> + Sync,
{
    let grids: Vec<OracleGrid> = (0..grid.levels).map(|k| grid.refined(k)).collect();
    let levels: Result<Vec<_>> = grids
        .par_iter()
        .map(|g| eval(g).map(|ch| (g.h_tau, g.h_zeta, ch)))
        .collect();
    Ok(ResidualReport::assemble(levels?))
}

// ---------------------------------------------------------------------------
// Nonlinear residual
// ---------------------------------------------------------------------------

const LIOUVILLE_NAMES: [&str; 9] = [
    "liouville_11",
    "liouville_12",
    "liouville_13",
    "liouville_21",
    "liouville_22",
    "liouville_23",
    "liouville_31",
    "liouville_32",
    "liouville_33",
];

/// Central-difference residuals of the propagation and evolution equations
/// for a dressed solution, across the grid's refinement levels.
///
/// Errors with a resolution message when fewer than 8 grid points span the
/// narrowest soliton width implied by the candidate's spectral data.
pub fn nonlinear_residual(candidate: &DressedSolution, grid: &OracleGrid) -> Result<ResidualReport> {
    check_soliton_resolution(candidate, grid)?;
    let sampler = solution_sampler(candidate);
    nonlinear_residual_of(
        &sampler,
        candidate.seed().nu0(),
        candidate.seed().delta(),
        grid,
    )
}

/// Same residuals for an arbitrary sampled candidate.
pub fn nonlinear_residual_of(
    sample: SampleFn,
    nu0: f64,
    delta: f64,
    grid: &OracleGrid,
) -> Result<ResidualReport> {
    run_levels(grid, |g| nonlinear_level(sample, nu0, delta, g))
}

fn nonlinear_level(
    sample: SampleFn,
    nu0: f64,
    delta: f64,
    grid: &OracleGrid,
) -> Result<Vec<(String, ResidualNorms)>> {
    let taus = grid.taus();
    let zetas = grid.zetas();
    require_axes(&taus, &zetas)?;
    let s = sample_grid(sample, &taus, &zetas)?;
    let (nt, nz) = (taus.len(), zetas.len());
    let inv2ht = C64::new(0.5 / grid.h_tau, 0.0);
    let inv2hz = 0.5 / grid.h_zeta;

    const NCH: usize = 11;
    let mut sup = [0.0f64; NCH];
    let mut ssq = [0.0f64; NCH];
    for i in 1..nt - 1 {
        for j in 1..nz - 1 {
            let c = &s[i * nz + j];
            let da = (s[i * nz + j + 1].omega_a - s[i * nz + j - 1].omega_a) * inv2hz;
            let db = (s[i * nz + j + 1].omega_b - s[i * nz + j - 1].omega_b) * inv2hz;
            let (ma, mb) = maxwell_rhs(nu0, &c.rho);
            let ra = (da - ma).norm();
            let rb = (db - mb).norm();
            sup[0] = sup[0].max(ra);
            ssq[0] += ra * ra;
            sup[1] = sup[1].max(rb);
            ssq[1] += rb * rb;

            let drho = (s[(i + 1) * nz + j].rho - s[(i - 1) * nz + j].rho).scale(inv2ht);
            let r = drho - liouville_rhs(delta, c.omega_a, c.omega_b, &c.rho);
            for rr in 0..3 {
                for cc in 0..3 {
                    let v = r.0[rr][cc].norm();
                    let ch = 2 + 3 * rr + cc;
                    sup[ch] = sup[ch].max(v);
                    ssq[ch] += v * v;
                }
            }
        }
    }
    let n = ((nt - 2) * (nz - 2)) as f64;
    let mut out = Vec::with_capacity(NCH);
    for (ch, s0) in sup.iter().enumerate() {
        let name = match ch {
            0 => "maxwell_a".to_string(),
            1 => "maxwell_b".to_string(),
            _ => LIOUVILLE_NAMES[ch - 2].to_string(),
        };
        out.push((
            name,
            ResidualNorms {
                sup: *s0,
                l2: (ssq[ch] / n).sqrt(),
            },
        ));
    }
    Ok(out)
}

/// Rejects grids that place fewer than 8 points across the narrowest
/// soliton width implied by the candidate's spectral parameter.
fn check_soliton_resolution(candidate: &DressedSolution, grid: &OracleGrid) -> Result<()> {
    let lambda = candidate.lambda0();
    let seed = candidate.seed();
    let omega_ref = match seed {
        Seed::Uniform(u) => u.omega0,
        Seed::TimeDependent(t) => t.profile.asymptotics().0.norm(),
    };
    let k = k_of_lambda(lambda, omega_ref);
    // Branch decay rates in τ: the two exponents of the dressing phases.
    let rate_tau = k.im.abs().max((lambda.im - k.im).abs());
    let half = sech_half_width();
    if rate_tau > 0.0 {
        let width = 2.0 * half / rate_tau;
        if grid.h_tau * 8.0 > width * (1.0 + 1e-12) {
            return Err(Error::validation(format!(
                "grid too coarse: fewer than 8 τ samples across the narrowest soliton width \
                 ≈ {width:.4}; reduce h_tau to at most {:.4e}",
                width / 8.0
            )));
        }
    }
    let pole = lambda - seed.delta();
    let rate_zeta = 0.5 * seed.nu0() * (pole.inv().im).abs();
    if rate_zeta > 0.0 {
        let width = 2.0 * half / rate_zeta;
        if grid.h_zeta * 8.0 > width * (1.0 + 1e-12) {
            return Err(Error::validation(format!(
                "grid too coarse: fewer than 8 ζ samples across the soliton imprint width \
                 ≈ {width:.4}; reduce h_zeta to at most {:.4e}",
                width / 8.0
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Zero-curvature residual
// ---------------------------------------------------------------------------

/// `U = (iλ/2)D − iH_I` from one sample.
fn u_matrix(lambda: C64, s: &FieldMatterSample) -> Mat3 {
    d_matrix().scale(I * lambda * 0.5) - h_interaction(s.omega_a, s.omega_b).scale(I)
}

/// `V = iν₀ ρ / (2(λ − Δ))` from one sample.
fn v_matrix(lambda: C64, nu0: f64, delta: f64, s: &FieldMatterSample) -> Mat3 {
    s.rho.scale(I * (0.5 * nu0) / (lambda - delta))
}

/// Compatibility residual `U_ζ − V_τ + [U, V]` of the linear pair, evaluated
/// at each probe λ (one report channel per probe, in probe order).
pub fn zero_curvature_residual(
    sample: SampleFn,
    nu0: f64,
    delta: f64,
    grid: &OracleGrid,
    probes: &[C64],
) -> Result<ResidualReport> {
    if probes.len() < 2 {
        return Err(Error::validation(
            "zero-curvature check needs at least two distinct probe values of lambda",
        ));
    }
    for (i, a) in probes.iter().enumerate() {
        for b in probes.iter().skip(i + 1) {
            if (a - b).norm() == 0.0 {
                return Err(Error::validation("probe values of lambda must be distinct"));
            }
        }
        if (a - delta).norm() == 0.0 {
            return Err(Error::validation(format!(
                "spectral pole: probe lambda = delta = {delta} is outside the \
                 domain of the linear pair"
            )));
        }
    }
    run_levels(grid, |g| curvature_level(sample, nu0, delta, g, probes))
}

/// [`zero_curvature_residual`] for a dressed solution.
pub fn zero_curvature_of(
    candidate: &DressedSolution,
    grid: &OracleGrid,
    probes: &[C64],
) -> Result<ResidualReport> {
    let sampler = solution_sampler(candidate);
    zero_curvature_residual(
        &sampler,
        candidate.seed().nu0(),
        candidate.seed().delta(),
        grid,
        probes,
    )
}

fn curvature_level(
    sample: SampleFn,
    nu0: f64,
    delta: f64,
    grid: &OracleGrid,
    probes: &[C64],
) -> Result<Vec<(String, ResidualNorms)>> {
    let taus = grid.taus();
    let zetas = grid.zetas();
    require_axes(&taus, &zetas)?;
    let s = sample_grid(sample, &taus, &zetas)?;
    let (nt, nz) = (taus.len(), zetas.len());
    let inv2ht = C64::new(0.5 / grid.h_tau, 0.0);
    let inv2hz = C64::new(0.5 / grid.h_zeta, 0.0);

    let out: Vec<(String, ResidualNorms)> = probes
        .par_iter()
        .enumerate()
        .map(|(pi, &lam)| {
            let mut sup = 0.0f64;
            let mut ssq = 0.0f64;
            for i in 1..nt - 1 {
                for j in 1..nz - 1 {
                    let du = (u_matrix(lam, &s[i * nz + j + 1])
                        - u_matrix(lam, &s[i * nz + j - 1]))
                    .scale(inv2hz);
                    let dv = (v_matrix(lam, nu0, delta, &s[(i + 1) * nz + j])
                        - v_matrix(lam, nu0, delta, &s[(i - 1) * nz + j]))
                    .scale(inv2ht);
                    let c = &s[i * nz + j];
                    let comm = Mat3::commutator(
                        &u_matrix(lam, c),
                        &v_matrix(lam, nu0, delta, c),
                    );
                    let r = du - dv + comm;
                    for rr in 0..3 {
                        for cc in 0..3 {
                            let v = r.0[rr][cc].norm();
                            sup = sup.max(v);
                            ssq += v * v;
                        }
                    }
                }
            }
            let n = (9 * (nt - 2) * (nz - 2)) as f64;
            (
                format!("curvature_{pi}"),
                ResidualNorms {
                    sup,
                    l2: (ssq / n).sqrt(),
                },
            )
        })
        .collect();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Linear-pair residual
// ---------------------------------------------------------------------------

/// Residuals of a fundamental-solution candidate against both halves of the
/// linear pair: channels `linear_tau` for `∂τΦ − UΦ` and `linear_zeta` for
/// `∂ζΦ − VΦ`.
///
/// A single solution column can be checked by placing it in one column of Φ
/// and zeroing the others (both operators act column-wise).
pub fn linear_solution_residual(
    phi: PhiFn,
    sample: SampleFn,
    nu0: f64,
    delta: f64,
    lambda: C64,
    grid: &OracleGrid,
) -> Result<ResidualReport> {
    if (lambda - delta).norm() == 0.0 {
        return Err(Error::validation(format!(
            "spectral pole: lambda = delta = {delta} is outside the domain of the linear pair"
        )));
    }
    run_levels(grid, |g| linear_level(phi, sample, nu0, delta, lambda, g))
}

fn linear_level(
    phi: PhiFn,
    sample: SampleFn,
    nu0: f64,
    delta: f64,
    lambda: C64,
    grid: &OracleGrid,
) -> Result<Vec<(String, ResidualNorms)>> {
    let taus = grid.taus();
    let zetas = grid.zetas();
    require_axes(&taus, &zetas)?;
    let nz = zetas.len();
    let nt = taus.len();
    let phis: Result<Vec<Vec<Mat3>>> = taus
        .par_iter()
        .map(|&t| zetas.iter().map(|&z| phi(t, z)).collect())
        .collect();
    let phis: Vec<Mat3> = phis?.into_iter().flatten().collect();
    let s = sample_grid(sample, &taus, &zetas)?;
    let inv2ht = C64::new(0.5 / grid.h_tau, 0.0);
    let inv2hz = C64::new(0.5 / grid.h_zeta, 0.0);

    let mut sup = [0.0f64; 2];
    let mut ssq = [0.0f64; 2];
    for i in 1..nt - 1 {
        for j in 1..nz - 1 {
            let c = i * nz + j;
            let dt = (phis[(i + 1) * nz + j] - phis[(i - 1) * nz + j]).scale(inv2ht);
            let dz = (phis[i * nz + j + 1] - phis[i * nz + j - 1]).scale(inv2hz);
            let rt = dt - u_matrix(lambda, &s[c]) * phis[c];
            let rz = dz - v_matrix(lambda, nu0, delta, &s[c]) * phis[c];
            for rr in 0..3 {
                for cc in 0..3 {
                    let vt = rt.0[rr][cc].norm();
                    let vz = rz.0[rr][cc].norm();
                    sup[0] = sup[0].max(vt);
                    ssq[0] += vt * vt;
                    sup[1] = sup[1].max(vz);
                    ssq[1] += vz * vz;
                }
            }
        }
    }
    let n = (9 * (nt - 2) * (nz - 2)) as f64;
    Ok(vec![
        (
            "linear_tau".to_string(),
            ResidualNorms {
                sup: sup[0],
                l2: (ssq[0] / n).sqrt(),
            },
        ),
        (
            "linear_zeta".to_string(),
            ResidualNorms {
                sup: sup[1],
                l2: (ssq[1] / n).sqrt(),
            },
        ),
    ])
}

// ---------------------------------------------------------------------------
// Direct integration
// ---------------------------------------------------------------------------

/// Field and matter values along one ζ-slice (one entry per grid τ).
#[derive(Clone, Debug)]
pub struct StateSlice {
    pub omega_a: Vec<C64>,
    pub omega_b: Vec<C64>,
    pub rho: Vec<Mat3>,
}

impl StateSlice {
    /// Samples a slice at fixed ζ from a point sampler.
    pub fn from_sampler(sample: SampleFn, taus: &[f64], zeta: f64) -> Result<Self> {
        let mut omega_a = Vec::with_capacity(taus.len());
        let mut omega_b = Vec::with_capacity(taus.len());
        let mut rho = Vec::with_capacity(taus.len());
        for &t in taus {
            let p = sample(t, zeta)?;
            omega_a.push(p.omega_a);
            omega_b.push(p.omega_b);
            rho.push(p.rho);
        }
        Ok(StateSlice {
            omega_a,
            omega_b,
            rho,
        })
    }

    pub fn len(&self) -> usize {
        self.omega_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_a.is_empty()
    }
}

/// Output of [`integrate_maxwell_bloch`]: one [`StateSlice`] per grid ζ plus
/// the worst per-step conservation drifts observed (before re-Hermitization;
/// logged, never hidden).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    pub zetas: Vec<f64>,
    pub slices: Vec<StateSlice>,
    /// Largest |trace(ρ) − 1| seen at any step.
    pub max_trace_drift: f64,
    /// Largest Hermiticity defect max|ρ − ρ†|/2 seen at any step.
    pub max_hermiticity_drift: f64,
}

impl Trajectory {
    pub fn final_slice(&self) -> &StateSlice {
        self.slices.last().expect("trajectory has at least one slice")
    }
}

fn herm_defect(m: &Mat3) -> f64 {
    let mut d = 0.0f64;
    for r in 0..3 {
        for c in 0..3 {
            d = d.max(0.5 * (m.0[r][c] - m.0[c][r].conj()).norm());
        }
    }
    d
}

fn trace_defect(m: &Mat3) -> f64 {
    (m.trace() - ONE).norm()
}

struct SweepOutcome {
    rho: Vec<Mat3>,
    trace_drift: f64,
    herm_drift: f64,
}

/// Heun sweep of `∂τ ρ = i[ΔD/2 − H_I, ρ]` along one ζ-slice, re-Hermitizing
/// after every step and recording the pre-projection drifts.
fn matter_sweep(
    taus: &[f64],
    omega_a: &[C64],
    omega_b: &[C64],
    rho_left: Mat3,
    delta: f64,
    h_tau: f64,
    suggestion: &str,
) -> Result<SweepOutcome> {
    let n = taus.len();
    let mut rho = Vec::with_capacity(n);
    let mut cur = rho_left;
    let mut trace_drift = 0.0f64;
    let mut herm_drift = 0.0f64;
    rho.push(cur);
    let h = C64::new(h_tau, 0.0);
    let h2 = C64::new(0.5 * h_tau, 0.0);
    for j in 0..n - 1 {
        let k1 = liouville_rhs(delta, omega_a[j], omega_b[j], &cur);
        let pred = cur + k1.scale(h);
        let k2 = liouville_rhs(delta, omega_a[j + 1], omega_b[j + 1], &pred);
        let next = cur + (k1 + k2).scale(h2);
        let td = trace_defect(&next);
        let hd = herm_defect(&next);
        if !(td <= DRIFT_TOLERANCE && hd <= DRIFT_TOLERANCE) {
            return Err(Error::numeric(format!(
                "matter integration drift exceeded {DRIFT_TOLERANCE:.0e} near tau = {:.6}: \
                 trace defect {td:.3e}, Hermiticity defect {hd:.3e}; the step is unstable — {suggestion}",
                taus[j + 1]
            )));
        }
        trace_drift = trace_drift.max(td);
        herm_drift = herm_drift.max(hd);
        cur = next.hermitize();
        rho.push(cur);
    }
    Ok(SweepOutcome {
        rho,
        trace_drift,
        herm_drift,
    })
}

fn checked_left(rho: Mat3, zeta: f64) -> Result<Mat3> {
    let td = trace_defect(&rho);
    let hd = herm_defect(&rho);
    if !(td <= DRIFT_TOLERANCE && hd <= DRIFT_TOLERANCE) {
        return Err(Error::validation(format!(
            "left matter boundary at zeta = {zeta:.6} is inconsistent: trace defect {td:.3e}, \
             Hermiticity defect {hd:.3e} (need a Hermitian, trace-one density matrix)"
        )));
    }
    Ok(rho)
}

/// Marches the coupled system from a ζ-boundary slice across the grid.
///
/// * `boundary` holds fields and matter on the grid τ-axis at the first grid
///   ζ; the density matrices must be Hermitian with unit trace.
/// * `matter_left` supplies ρ at the τ lower edge for every ζ (the state the
///   medium is in before the fields arrive there).
///
/// The fields advance by a Heun predictor–corrector on
/// `∂ζ H_I = (iν₀/4)[D, ρ]` (evaluated in field form, channel by channel);
/// each stage recomputes the matter slice by a method-of-lines Heun sweep of
/// `∂τ ρ = i[ΔD/2 − H_I, ρ]`. ρ is re-Hermitized after every step; the worst
/// drifts are reported on the trajectory. Field growth beyond
/// [`GROWTH_LIMIT`] × the boundary scale, or conservation drift beyond
/// [`DRIFT_TOLERANCE`], aborts with an instability error suggesting halved
/// steps.
pub fn integrate_maxwell_bloch(
    boundary: &StateSlice,
    matter_left: &(dyn Fn(f64) -> Result<Mat3> + Sync),
    nu0: f64,
    delta: f64,
    grid: &OracleGrid,
) -> Result<Trajectory> {
    let taus = grid.taus();
    let zetas = grid.zetas();
    if taus.len() < 2 || zetas.len() < 2 {
        return Err(Error::validation(
            "integration grid needs at least 2 points along each axis",
        ));
    }
    if boundary.len() != taus.len()
        || boundary.omega_b.len() != taus.len()
        || boundary.rho.len() != taus.len()
    {
        return Err(Error::validation(format!(
            "boundary slice holds {} points but the grid τ-axis has {}",
            boundary.len(),
            taus.len()
        )));
    }
    for (i, r) in boundary.rho.iter().enumerate() {
        let td = trace_defect(r);
        let hd = herm_defect(r);
        if !(td <= DRIFT_TOLERANCE && hd <= DRIFT_TOLERANCE) {
            return Err(Error::validation(format!(
                "boundary density matrix at tau = {:.6} is inconsistent: trace defect {td:.3e}, \
                 Hermiticity defect {hd:.3e}",
                taus[i]
            )));
        }
    }

    let suggestion = format!(
        "retry with h_tau = {:.3e} and h_zeta = {:.3e}",
        0.5 * grid.h_tau,
        0.5 * grid.h_zeta
    );
    let ref_scale = boundary
        .omega_a
        .iter()
        .chain(boundary.omega_b.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        + 1.0;

    let mut fa = boundary.omega_a.clone();
    let mut fb = boundary.omega_b.clone();
    let mut slices = Vec::with_capacity(zetas.len());
    let mut trace_drift = 0.0f64;
    let mut herm_drift = 0.0f64;
    let h = C64::new(grid.h_zeta, 0.0);
    let h2 = C64::new(0.5 * grid.h_zeta, 0.0);

    for (jz, &z) in zetas.iter().enumerate() {
        let left = checked_left(matter_left(z)?, z)?;
        let sweep = matter_sweep(&taus, &fa, &fb, left, delta, grid.h_tau, &suggestion)?;
        trace_drift = trace_drift.max(sweep.trace_drift);
        herm_drift = herm_drift.max(sweep.herm_drift);
        slices.push(StateSlice {
            omega_a: fa.clone(),
            omega_b: fb.clone(),
            rho: sweep.rho,
        });
        if jz + 1 == zetas.len() {
            break;
        }
        let zn = zetas[jz + 1];
        let rho_now = &slices[jz].rho;

        // Predictor: Euler step on the fields with the current matter slice.
        let k1: Vec<(C64, C64)> = rho_now.iter().map(|r| maxwell_rhs(nu0, r)).collect();
        let pa: Vec<C64> = fa.iter().zip(&k1).map(|(f, k)| f + k.0 * h).collect();
        let pb: Vec<C64> = fb.iter().zip(&k1).map(|(f, k)| f + k.1 * h).collect();

        // Corrector: matter slice from the predicted fields at the next ζ.
        let left_n = checked_left(matter_left(zn)?, zn)?;
        let sweep_p = matter_sweep(&taus, &pa, &pb, left_n, delta, grid.h_tau, &suggestion)?;
        trace_drift = trace_drift.max(sweep_p.trace_drift);
        herm_drift = herm_drift.max(sweep_p.herm_drift);
        let k2: Vec<(C64, C64)> = sweep_p.rho.iter().map(|r| maxwell_rhs(nu0, r)).collect();

        let mut grown = 0.0f64;
        for i in 0..fa.len() {
            fa[i] += (k1[i].0 + k2[i].0) * h2;
            fb[i] += (k1[i].1 + k2[i].1) * h2;
            grown = grown.max(fa[i].norm()).max(fb[i].norm());
        }
        if !(grown <= GROWTH_LIMIT * ref_scale) {
            return Err(Error::numeric(format!(
                "ζ-march unstable at zeta = {zn:.6}: field amplitude {grown:.3e} exceeds \
                 {GROWTH_LIMIT:.0e} × the boundary scale {ref_scale:.3e}; {suggestion}"
            )));
        }
    }

    Ok(Trajectory {
        taus,
        zetas,
        slices,
        max_trace_drift: trace_drift,
        max_hermiticity_drift: herm_drift,
    })
}

// ---------------------------------------------------------------------------
