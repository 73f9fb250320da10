//! Adaptive Runge–Kutta integration of the scattering flow
//! `∂τ(w, z) = (−iλw + iΩ/2 − iΩ*w²/2, (i/2)Ω*w)` for an arbitrary
//! background profile, with dense (quintic Hermite) output sampled onto the
//! caller's τ grid.
//!
//! Dormand–Prince 5(4) pairs drive the step size at absolute and relative
//! tolerance 1e-10; integration restarts at every switch time of the
//! profile so no step straddles a kink or jump of Ω.

use super::{
    constant_background, k_of_lambda, riccati_rhs, z_rhs, Method, Region, RegionForm,
    SampledRegion, ScatteringSolution,
};
use crate::background::{BackgroundProfile, Bias};
use crate::error::{Error, Result};
use crate::matrix3::C64;

const ATOL: f64 = 1e-10;
const RTOL: f64 = 1e-10;
/// |w| beyond which the Riccati flow is declared to have hit a pole.
const BLOWUP: f64 = 1e8;

type Y = [C64; 2];

fn axpy(y: &Y, h: f64, slopes: &[(f64, &Y)]) -> Y {
    let mut out = *y;
    for &(c, k) in slopes {
        if c != 0.0 {
            out[0] += h * c * k[0];
            out[1] += h * c * k[1];
        }
    }
    out
}

/// Solve the flow on `tau_grid` (strictly increasing). The boundary value
/// defaults to the constant-background fixed point of the left plateau; an
/// explicit `(w, z)` at `tau_grid[0]` overrides it.
pub fn solve_riccati_ode(
    profile: &BackgroundProfile,
    lambda: C64,
    tau_grid: &[f64],
    initial: Option<(C64, C64)>,
) -> Result<ScatteringSolution> {
    profile.validate()?;
    validate_grid(tau_grid)?;
    let omega_left = profile.omega0_left();
    let t0 = tau_grid[0];
    let t_end = tau_grid[tau_grid.len() - 1];

    let y0: Y = match initial {
        Some((w, z)) => [w, z],
        None => {
            let at_start = profile.eval(t0)?;
            if (at_start - omega_left).norm() > 1e-9 * (1.0 + omega_left.abs()) {
                return Err(Error::validation(format!(
                    "grid starts at tau = {t0} where the profile has already left its plateau; \
                     start earlier or pass an explicit boundary value",
                )));
            }
            let (w0, z_rate) = constant_background(lambda, omega_left, 0.0, 0.0)?;
            [w0, z_rate * t0]
        }
    };

    // Segment boundaries: switch times interior to the grid span.
    let mut cuts: Vec<f64> = profile
        .switch_times()
        .into_iter()
        .filter(|t| *t > t0 && *t < t_end)
        .collect();
    cuts.push(t_end);

    let mut sampler = GridSampler::new(tau_grid);
    sampler.record(0, y0);

    let mut t = t0;
    let mut y = y0;
    for seg_end in cuts {
        y = integrate_segment(profile, lambda, t, seg_end, y, &mut sampler)?;
        t = seg_end;
    }
    debug_assert_eq!(sampler.next, tau_grid.len());

    // Nodal derivatives from the flow itself (right-biased except at the
    // final node) make the between-node Hermite interpolation O(h⁴).
    let n = tau_grid.len();
    let mut dw = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for (i, &tau) in tau_grid.iter().enumerate() {
        let bias = if i + 1 == n { Bias::Left } else { Bias::Right };
        let (om, _) = profile.eval_with_deriv(tau, bias)?;
        dw.push(riccati_rhs(lambda, om, sampler.w[i]));
        dz.push(z_rhs(om, sampler.w[i]));
    }
    let region = SampledRegion {
        taus: tau_grid.to_vec(),
        w: sampler.w,
        dw,
        z: sampler.z,
        dz,
    };
    Ok(ScatteringSolution::from_regions(
        lambda,
        Method::Ode,
        k_of_lambda(lambda, omega_left),
        None,
        vec![Region {
            lo: t0,
            hi: t_end,
            form: RegionForm::Sampled(region),
        }],
    ))
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::validation("tau grid needs at least two nodes"));
    }
    for pair in grid.windows(2) {
        if !(pair[1] > pair[0]) || !pair[0].is_finite() || !pair[1].is_finite() {
            return Err(Error::validation(
                "tau grid must be finite and strictly increasing",
            ));
        }
    }
    Ok(())
}

struct GridSampler<'a> {
    grid: &'a [f64],
    next: usize,
    w: Vec<C64>,
    z: Vec<C64>,
}

impl<'a> GridSampler<'a> {
    fn new(grid: &'a [f64]) -> Self {
        GridSampler {
            grid,
            next: 0,
            w: Vec::with_capacity(grid.len()),
            z: Vec::with_capacity(grid.len()),
        }
    }

    fn record(&mut self, index: usize, y: Y) {
        debug_assert_eq!(index, self.next);
        self.w.push(y[0]);
        self.z.push(y[1]);
        self.next += 1;
    }
}

/// One smooth segment: Ω is evaluated with the bias pointing into the
/// segment at its edges, so jumps at the boundaries never leak across.
fn integrate_segment(
    profile: &BackgroundProfile,
    lambda: C64,
    seg_lo: f64,
    seg_hi: f64,
    y_start: Y,
    sampler: &mut GridSampler,
) -> Result<Y> {
    let span = seg_hi - seg_lo;
    let om = |t: f64| -> Result<(C64, C64)> {
        let bias = if t - seg_lo < seg_hi - t {
            Bias::Right
        } else {
            Bias::Left
        };
        profile.eval_with_deriv(t, bias)
    };
    let rhs = |t: f64, y: &Y| -> Result<Y> {
        let (omega, _) = om(t)?;
        Ok([riccati_rhs(lambda, omega, y[0]), z_rhs(omega, y[0])])
    };

    let mut t = seg_lo;
    let mut y = y_start;
    let mut f = rhs(t, &y)?;
    let mut h = initial_step(&rhs, t, &y, &f, span)?;

    while t < seg_hi {
        if y[0].norm() > BLOWUP {
            return Err(Error::numeric(format!(
                "Riccati blow-up (scattering pole) near tau = {t}"
            )));
        }
        if h < 1e-14 * span.max(1.0) {
            return Err(Error::numeric(format!(
                "step size collapsed near tau = {t}; the flow appears singular there"
            )));
        }
        let mut h_try = h.min(seg_hi - t);
        let clipped = h_try < h;
        // Dormand–Prince stages.
        let (y1, f1, err) = loop {
            let k1 = f;
            let k2 = rhs(t + 0.2 * h_try, &axpy(&y, h_try, &[(0.2, &k1)]))?;
            let k3 = rhs(
                t + 0.3 * h_try,
                &axpy(&y, h_try, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]),
            )?;
            let k4 = rhs(
                t + 0.8 * h_try,
                &axpy(
                    &y,
                    h_try,
                    &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)],
                ),
            )?;
            let k5 = rhs(
                t + 8.0 / 9.0 * h_try,
                &axpy(
                    &y,
                    h_try,
                    &[
                        (19372.0 / 6561.0, &k1),
                        (-25360.0 / 2187.0, &k2),
                        (64448.0 / 6561.0, &k3),
                        (-212.0 / 729.0, &k4),
                    ],
                ),
            )?;
            let k6 = rhs(
                t + h_try,
                &axpy(
                    &y,
                    h_try,
                    &[
                        (9017.0 / 3168.0, &k1),
                        (-355.0 / 33.0, &k2),
                        (46732.0 / 5247.0, &k3),
                        (49.0 / 176.0, &k4),
                        (-5103.0 / 18656.0, &k5),
                    ],
                ),
            )?;
            let y_next = axpy(
                &y,
                h_try,
                &[
                    (35.0 / 384.0, &k1),
                    (500.0 / 1113.0, &k3),
                    (125.0 / 192.0, &k4),
                    (-2187.0 / 6784.0, &k5),
                    (11.0 / 84.0, &k6),
                ],
            );
            let k7 = rhs(t + h_try, &y_next)?;
            // Embedded 4th-order error estimate.
            let e = axpy(
                &[C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
                h_try,
                &[
                    (71.0 / 57600.0, &k1),
                    (-71.0 / 16695.0, &k3),
                    (71.0 / 1920.0, &k4),
                    (-17253.0 / 339200.0, &k5),
                    (22.0 / 525.0, &k6),
                    (-1.0 / 40.0, &k7),
                ],
            );
            let mut err_sq = 0.0;
            for c in 0..2 {
                let sc = ATOL + RTOL * y[c].norm().max(y_next[c].norm());
                err_sq += (e[c].norm() / sc).powi(2);
            }
            let err = (err_sq / 2.0).sqrt();
            if err <= 1.0 {
                break (y_next, k7, err);
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h_try *= fac;
            if h_try < 1e-14 * span.max(1.0) {
                return Err(Error::numeric(format!(
                    "step size collapsed near tau = {t}; the flow appears singular there"
                )));
            }
        };

        // Dense output over the accepted step, sampled at grid nodes.
        if sampler.next < sampler.grid.len() {
            let fp0 = rhs_prime(profile, lambda, t, &y, &f, seg_lo, seg_hi)?;
            let fp1 = rhs_prime(profile, lambda, t + h_try, &y1, &f1, seg_lo, seg_hi)?;
            let dense = DenseStep::new(h_try, &y, &f, &fp0, &y1, &f1, &fp1);
            while sampler.next < sampler.grid.len() {
                let tau = sampler.grid[sampler.next];
                if tau > t + h_try + 1e-14 * span.max(1.0) {
                    break;
                }
                let theta = ((tau - t) / h_try).clamp(0.0, 1.0);
                let value = if theta >= 1.0 { y1 } else { dense.eval(theta) };
                sampler.record(sampler.next, value);
            }
        }

        t += h_try;
        if seg_hi - t < 1e-14 * span.max(1.0) {
            t = seg_hi;
        }
        y = y1;
        f = f1;
        if !clipped {
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h = h_try * fac;
        }
    }
    Ok(y)
}

/// Analytic derivative of the flow RHS along trajectories, for the quintic
/// dense output.
fn rhs_prime(
    profile: &BackgroundProfile,
    lambda: C64,
    t: f64,
    y: &Y,
    f: &Y,
    seg_lo: f64,
    seg_hi: f64,
) -> Result<Y> {
    let bias = if t - seg_lo < seg_hi - t {
        Bias::Right
    } else {
        Bias::Left
    };
    let (omega, omega_p) = profile.eval_with_deriv(t, bias)?;
    let i = C64::new(0.0, 1.0);
    let w = y[0];
    let fw = f[0];
    let fw_p = -i * lambda * fw + i * omega_p * 0.5
        - i * 0.5 * (omega_p.conj() * w * w + 2.0 * omega.conj() * w * fw);
    let fz_p = i * 0.5 * (omega_p.conj() * w + omega.conj() * fw);
    Ok([fw_p, fz_p])
}

/// Quintic two-point Hermite interpolant of one accepted step, built from
/// values, slopes, and slope derivatives at both ends.
struct DenseStep {
    y0: Y,
    c1: Y,
    c2: Y,
    c3: Y,
    c4: Y,
    c5: Y,
}

impl DenseStep {
    fn new(h: f64, y0: &Y, f0: &Y, f0p: &Y, y1: &Y, f1: &Y, f1p: &Y) -> Self {
        let mut c1 = [C64::new(0.0, 0.0); 2];
        let mut c2 = c1;
        let mut c3 = c1;
        let mut c4 = c1;
        let mut c5 = c1;
        for i in 0..2 {
            let a = y1[i] - y0[i] - h * f0[i] - 0.5 * h * h * f0p[i];
            let b = h * f1[i] - h * f0[i] - h * h * f0p[i];
            let c = h * h * f1p[i] - h * h * f0p[i];
            c1[i] = h * f0[i];
            c2[i] = 0.5 * h * h * f0p[i];
            c3[i] = 10.0 * a - 4.0 * b + 0.5 * c;
            c4[i] = 7.0 * b - 15.0 * a - c;
            c5[i] = 0.5 * (c + 12.0 * a - 6.0 * b);
        }
        DenseStep {
            y0: *y0,
            c1,
            c2,
            c3,
            c4,
            c5,
        }
    }

    fn eval(&self, theta: f64) -> Y {
        let mut out = [C64::new(0.0, 0.0); 2];
        for i in 0..2 {
            out[i] = self.y0[i]
                + theta
                    * (self.c1[i]
                        + theta
                            * (self.c2[i]
                                + theta
                                    * (self.c3[i]
                                        + theta * (self.c4[i] + theta * self.c5[i]))));
        }
        out
    }
}

/// Startup step-size heuristic: balance the size of the state against its
/// slope, refine with one Euler probe.
fn initial_step(
    rhs: &dyn Fn(f64, &Y) -> Result<Y>,
    t0: f64,
    y0: &Y,
    f0: &Y,
    span: f64,
) -> Result<f64> {
    let sc = |y: &Y, c: usize| ATOL + RTOL * y[c].norm();
    let rms = |a: &Y, scale: &Y| -> f64 {
        let mut s = 0.0;
        for c in 0..2 {
            s += (a[c].norm() / sc(scale, c)).powi(2);
        }
        (s / 2.0).sqrt()
    };
    let d0 = rms(y0, y0);
    let d1 = rms(f0, y0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1)?;
    let d2 = rms(&[f1[0] - f0[0], f1[1] - f0[1]], y0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok(h1.min(100.0 * h0).min(span))
}
