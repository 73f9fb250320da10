//! Two further routes to the scattering data: a causal integral-equation
//! iteration (independent of the ODE integrator, used for cross-checks) and
//! the adiabatic approximation (which deliberately ignores retardation and
//! is expected to fail for fast switching).
//!
//! The integral form follows from solving the linear part of the Riccati
//! flow against the causal kernel `e^{−ik(τ−s)}`, `k = (λ + √(λ²+Ω₀²))/2`:
//! with `w = i∫_{−∞}^τ e^{−ik(τ−s)} w̃(s) ds` the iterated map reads
//! `w̃ ← Ω/2 + (Ω*/2)(J w̃)² + i(Ω₀²/(4k)) J w̃`. Convergence requires a
//! decaying kernel, i.e. Im k < 0.

use super::{
    constant_background, k_of_lambda, riccati_rhs, z_rhs, Method, Region, RegionForm,
    SampledRegion, ScatteringSolution,
};
use crate::background::{BackgroundProfile, Bias};
use crate::error::{Error, Result};
use crate::matrix3::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Causal exponential-kernel convolution on a uniform grid by the
/// product-trapezoid rule (exact when the integrand is piecewise linear).
/// `j0` supplies `J(grid[0])`, normally `g[0]/(ik)` for a constant left
/// continuation of the integrand.
pub(crate) fn causal_convolution(k: C64, h: f64, g: &[C64], j0: C64) -> Vec<C64> {
    let ik = I * k;
    let u = ik * h;
    let decay = (-u).exp();
    // P = ∫_0^h e^{−ik(h−s)} ds, Q = ∫_0^h e^{−ik(h−s)} s/h ds; the cell
    // update is J ← decay·J + (P−Q)·g_left + Q·g_right.
    let (a, b) = if u.norm() < 1e-4 {
        // Series in u keeps full precision where the exact expressions
        // cancel catastrophically.
        let a = h * (0.5 - u / 3.0 + u * u / 8.0 - u * u * u / 30.0);
        let b = h * (0.5 - u / 6.0 + u * u / 24.0 - u * u * u / 120.0);
        (a, b)
    } else {
        let p = (1.0 - decay) / ik;
        let q = (h - p) / (ik * h);
        (p - q, q)
    };
    let mut out = Vec::with_capacity(g.len());
    let mut j = j0;
    out.push(j);
    for cell in g.windows(2) {
        j = decay * j + a * cell[0] + b * cell[1];
        out.push(j);
    }
    out
}

fn require_uniform(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::validation("tau grid needs at least two nodes"));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::validation("tau grid must be strictly increasing"));
    }
    for (i, pair) in grid.windows(2).enumerate() {
        let hi = pair[1] - pair[0];
        if ((hi - h) / h).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "the integral-equation route needs a uniform grid; spacing deviates at node {}",
                i + 1
            )));
        }
    }
    Ok(h)
}

/// Solve the scattering flow by fixed-point iteration of the causal
/// integral form. Fails with the residual history if the contraction has
/// not reached `tol` after `max_iter` sweeps.
pub fn solve_integral_iteration(
    profile: &BackgroundProfile,
    lambda: C64,
    tau_grid: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<ScatteringSolution> {
    profile.validate()?;
    let h = require_uniform(tau_grid)?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::validation("need tol > 0 and at least one iteration"));
    }
    let omega_left = profile.omega0_left();
    let k = k_of_lambda(lambda, omega_left);
    if !(k.im < 0.0) {
        return Err(Error::validation(
            "the causal kernel does not decay for this spectral point (Im k >= 0); \
             use the conjugate point or the ODE solver",
        ));
    }
    let t0 = tau_grid[0];
    let at_start = profile.eval(t0)?;
    if (at_start - omega_left).norm() > 1e-9 * (1.0 + omega_left.abs()) {
        return Err(Error::validation(format!(
            "grid starts at tau = {t0} where the profile has already left its plateau"
        )));
    }

    let omega: Vec<C64> = tau_grid
        .iter()
        .map(|&t| profile.eval(t))
        .collect::<Result<_>>()?;
    let n = omega.len();
    let z0_rate = constant_background(lambda, omega_left, 0.0, 0.0)?.1;
    let coupling = I * omega_left * omega_left / (4.0 * k);

    let mut iterand: Vec<C64> = omega.iter().map(|om| om * 0.5).collect();
    let mut conv = causal_convolution(k, h, &iterand, iterand[0] / (I * k));
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut delta = 0.0f64;
        let mut next = Vec::with_capacity(n);
        for j in 0..n {
            let val = omega[j] * 0.5
                + omega[j].conj() * 0.5 * conv[j] * conv[j]
                + coupling * conv[j];
            delta = delta.max((val - iterand[j]).norm());
            next.push(val);
        }
        history.push(delta);
        iterand = next;
        conv = causal_convolution(k, h, &iterand, iterand[0] / (I * k));
        if delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let tail: Vec<String> = history
            .iter()
            .rev()
            .take(8)
            .rev()
            .map(|d| format!("{d:.3e}"))
            .collect();
        return Err(Error::numeric(format!(
            "integral-equation iteration did not reach {tol:.1e} after {max_iter} sweeps; \
             recent residuals: {}",
            tail.join(", ")
        )));
    }

    let w: Vec<C64> = conv.iter().map(|j| I * j).collect();

    // z(τ) = ż₀ τ + ∫_{−∞}^τ [(i/2)Ω* w − ż₀] ds; the integrand vanishes on
    // the left plateau, so the cumulative quadrature starts at zero. Each
    // cell gets the h²/12 endpoint-slope correction, with one-sided slopes
    // so field jumps at nodes stay on their own side.
    let g_at = |j: usize, bias: Bias| -> Result<(C64, C64)> {
        let (om, om_p) = profile.eval_with_deriv(tau_grid[j], bias)?;
        let g = z_rhs(om, w[j]) - z0_rate;
        let wp = riccati_rhs(lambda, om, w[j]);
        let gp = I * 0.5 * (om_p.conj() * w[j] + om.conj() * wp);
        Ok((g, gp))
    };
    let mut z = Vec::with_capacity(n);
    let mut acc = C64::new(0.0, 0.0);
    z.push(z0_rate * tau_grid[0]);
    for j in 0..n - 1 {
        let (g_l, gp_l) = g_at(j, Bias::Right)?;
        let (g_r, gp_r) = g_at(j + 1, Bias::Left)?;
        acc += h * (g_l + g_r) * 0.5 - h * h * (gp_r - gp_l) / 12.0;
        z.push(z0_rate * tau_grid[j + 1] + acc);
    }

    let mut dw = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for j in 0..n {
        let bias = if j + 1 == n { Bias::Left } else { Bias::Right };
        let (om, _) = profile.eval_with_deriv(tau_grid[j], bias)?;
        dw.push(riccati_rhs(lambda, om, w[j]));
        dz.push(z_rhs(om, w[j]));
    }
    Ok(ScatteringSolution::from_regions(
        lambda,
        Method::Iterative,
        k,
        None,
        vec![Region {
            lo: tau_grid[0],
            hi: tau_grid[n - 1],
            form: RegionForm::Sampled(SampledRegion {
                taus: tau_grid.to_vec(),
                w,
                dw,
                z,
                dz,
            }),
        }],
    ))
}

/// Adiabatic approximation: the scattering data instantaneously follows the
/// control field, `w = Ω(τ)/(2k)`, with the z phase corrected by the
/// accumulated intensity deficit. Algebraic — no retardation.
pub fn adiabatic_point(
    profile: &BackgroundProfile,
    lambda: C64,
    tau: f64,
) -> Result<(C64, C64)> {
    profile.validate()?;
    let omega_left = profile.omega0_left();
    let k = k_of_lambda(lambda, omega_left);
    if k.norm() == 0.0 {
        return Err(Error::validation(
            "degenerate spectral point: k = 0 has no adiabatic form",
        ));
    }
    let omega = profile.eval(tau)?;
    let w = omega / (2.0 * k);
    let z0_rate = I * omega_left * omega_left / (4.0 * k);
    let deficit = super::intensity_deficit(profile, tau)?;
    let z = z0_rate * tau + I / (4.0 * k) * deficit;
    Ok((w, z))
}

/// Adiabatic data sampled onto a grid, packaged like any other solution.
pub fn adiabatic_solution(
    profile: &BackgroundProfile,
    lambda: C64,
    tau_grid: &[f64],
) -> Result<ScatteringSolution> {
    profile.validate()?;
    super::ode::validate_grid(tau_grid)?;
    let omega_left = profile.omega0_left();
    let k = k_of_lambda(lambda, omega_left);
    if k.norm() == 0.0 {
        return Err(Error::validation(
            "degenerate spectral point: k = 0 has no adiabatic form",
        ));
    }
    let n = tau_grid.len();
    let z0_rate = I * omega_left * omega_left / (4.0 * k);
    let mut w = Vec::with_capacity(n);
    let mut dw = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for (j, &tau) in tau_grid.iter().enumerate() {
        let bias = if j + 1 == n { Bias::Left } else { Bias::Right };
        let (om, om_p) = profile.eval_with_deriv(tau, bias)?;
        w.push(om / (2.0 * k));
        dw.push(om_p / (2.0 * k));
        let deficit = super::intensity_deficit(profile, tau)?;
        z.push(z0_rate * tau + I / (4.0 * k) * deficit);
        dz.push(z0_rate + I / (4.0 * k) * (om.norm_sqr() - omega_left * omega_left));
    }
    Ok(ScatteringSolution::from_regions(
        lambda,
        Method::Adiabatic,
        k,
        None,
        vec![Region {
            lo: tau_grid[0],
            hi: tau_grid[n - 1],
            form: RegionForm::Sampled(SampledRegion {
                taus: tau_grid.to_vec(),
                w,
                dw,
                z,
                dz,
            }),
        }],
    ))
}
