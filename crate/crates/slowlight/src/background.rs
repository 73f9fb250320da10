//! Control-field profiles Ω(τ) on which the scattering problem is solved.
//!
//! A profile is real or complex valued, piecewise smooth, and approaches
//! constants as τ → ±∞. Step discontinuities use the midpoint convention
//! (the value at a jump is the average of the one-sided limits), which is
//! the convention under which the closed-form solutions below are stated.

use crate::error::{Error, Result};
use crate::matrix3::C64;

/// One-sided evaluation bias at a region boundary, used by integrators that
/// need the analytic branch of a specific region at its edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bias {
    Left,
    Right,
}

/// Temporal profile of the control field.
#[derive(Clone, Debug)]
pub enum BackgroundProfile {
    /// Constant background `Ω(τ) = Ω₀` (the spatial phase `e^{ikζ}` of the
    /// control field is carried by `PhysicalParams::k_phase`, not baked into
    /// the temporal profile).
    Constant { omega0: f64 },
    /// Switch-off/on scenario: constant `Ω₀` for τ < 0, exponential decay
    /// `Ω₀ e^{−ατ}` on (0, t1), zero on (t1, t_on), restored to `Ω₀` for
    /// τ > t_on. With `t_on = None` the field stays off after t1.
    ExponentialSwitch {
        omega0: f64,
        alpha: f64,
        t1: f64,
        t_on: Option<f64>,
    },
    /// Uncut exponential tail: constant `Ω₀` for τ < 0, then `Ω₀ e^{−ατ}`
    /// for all τ > 0 (never truncated, never restored).
    ExponentialDecay { omega0: f64, alpha: f64 },
    /// Instantaneous switch-off at τ = 0.
    StepOff { omega0: f64 },
    /// Smooth switch-off `Ω(τ) = Ω₀ (1 − tanh(rate·τ)) / 2`.
    SmoothSwitch { omega0: f64, rate: f64 },
    /// Sampled profile with monotone cubic interpolation.
    Tabulated(TabulatedProfile),
}

fn theta(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

impl BackgroundProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| -> Result<()> {
            if !(v > 0.0) || !v.is_finite() {
                Err(Error::validation(format!("{name} must be positive, got {v}")))
            } else {
                Ok(())
            }
        };
        match self {
            BackgroundProfile::Constant { omega0 } => {
                if !(*omega0 >= 0.0) || !omega0.is_finite() {
                    return Err(Error::validation(format!(
                        "constant background amplitude must be non-negative, got {omega0}"
                    )));
                }
                Ok(())
            }
            BackgroundProfile::ExponentialSwitch {
                omega0,
                alpha,
                t1,
                t_on,
            } => {
                positive(*omega0, "omega0")?;
                positive(*alpha, "alpha")?;
                positive(*t1, "t1")?;
                if let Some(t) = t_on {
                    if !(*t > *t1) {
                        return Err(Error::validation(format!(
                            "restart time t_on = {t} must exceed t1 = {t1}"
                        )));
                    }
                }
                Ok(())
            }
            BackgroundProfile::ExponentialDecay { omega0, alpha } => {
                positive(*omega0, "omega0")?;
                positive(*alpha, "alpha")
            }
            BackgroundProfile::StepOff { omega0 } => positive(*omega0, "omega0"),
            BackgroundProfile::SmoothSwitch { omega0, rate } => {
                positive(*omega0, "omega0")?;
                positive(*rate, "rate")
            }
            BackgroundProfile::Tabulated(t) => t.validate(),
        }
    }

    /// Profile value, with the midpoint convention at jumps.
    pub fn eval(&self, tau: f64) -> Result<C64> {
        let re = match self {
            BackgroundProfile::Constant { omega0 } => *omega0,
            BackgroundProfile::ExponentialSwitch {
                omega0,
                alpha,
                t1,
                t_on,
            } => {
                let restored = match t_on {
                    Some(t) => theta(tau - t),
                    None => 0.0,
                };
                omega0
                    * (theta(-tau)
                        + (-alpha * tau).exp() * (theta(tau) - theta(tau - t1))
                        + restored)
            }
            BackgroundProfile::ExponentialDecay { omega0, alpha } => {
                omega0 * (theta(-tau) + (-alpha * tau).exp() * theta(tau))
            }
            BackgroundProfile::StepOff { omega0 } => omega0 * theta(-tau),
            BackgroundProfile::SmoothSwitch { omega0, rate } => {
                omega0 * 0.5 * (1.0 - (rate * tau).tanh())
            }
            BackgroundProfile::Tabulated(t) => return t.eval(tau),
        };
        Ok(C64::new(re, 0.0))
    }

    /// One-sided value and derivative: ties at region boundaries resolve to
    /// the analytic branch on the requested side.
    pub fn eval_with_deriv(&self, tau: f64, bias: Bias) -> Result<(C64, C64)> {
        let side = |t: f64| match bias {
            // A boundary at `t` belongs to the left region when biased left.
            Bias::Left => tau <= t,
            Bias::Right => tau < t,
        };
        let (v, d) = match self {
            BackgroundProfile::Constant { omega0 } => (*omega0, 0.0),
            BackgroundProfile::ExponentialSwitch {
                omega0,
                alpha,
                t1,
                t_on,
            } => {
                if side(0.0) {
                    (*omega0, 0.0)
                } else if side(*t1) {
                    let v = omega0 * (-alpha * tau).exp();
                    (v, -alpha * v)
                } else if t_on.map(|t| side(t)).unwrap_or(true) {
                    (0.0, 0.0)
                } else {
                    (*omega0, 0.0)
                }
            }
            BackgroundProfile::ExponentialDecay { omega0, alpha } => {
                if side(0.0) {
                    (*omega0, 0.0)
                } else {
                    let v = omega0 * (-alpha * tau).exp();
                    (v, -alpha * v)
                }
            }
            BackgroundProfile::StepOff { omega0 } => {
                if side(0.0) {
                    (*omega0, 0.0)
                } else {
                    (0.0, 0.0)
                }
            }
            BackgroundProfile::SmoothSwitch { omega0, rate } => {
                let th = (rate * tau).tanh();
                (
                    omega0 * 0.5 * (1.0 - th),
                    -omega0 * 0.5 * rate * (1.0 - th * th),
                )
            }
            BackgroundProfile::Tabulated(t) => return t.eval_with_deriv(tau),
        };
        Ok((C64::new(v, 0.0), C64::new(d, 0.0)))
    }

    /// Asymptotic values `(Ω(−∞), Ω(+∞))`.
    pub fn asymptotics(&self) -> (C64, C64) {
        let r = |v: f64| C64::new(v, 0.0);
        match self {
            BackgroundProfile::Constant { omega0 } => (r(*omega0), r(*omega0)),
            BackgroundProfile::ExponentialSwitch {
                omega0, t_on: Some(_), ..
            } => (r(*omega0), r(*omega0)),
            BackgroundProfile::ExponentialSwitch { omega0, .. }
            | BackgroundProfile::ExponentialDecay { omega0, .. }
            | BackgroundProfile::StepOff { omega0 } => (r(*omega0), r(0.0)),
            BackgroundProfile::SmoothSwitch { omega0, .. } => (r(*omega0), r(0.0)),
            BackgroundProfile::Tabulated(t) => t.asymptotics(),
        }
    }

    /// Left asymptotic amplitude `|Ω(−∞)|`, the scattering background level.
    pub fn omega0_left(&self) -> f64 {
        self.asymptotics().0.norm()
    }

    /// All τ at which the profile or its derivative is discontinuous
    /// (integration and finite-difference stencils must not straddle them).
    pub fn switch_times(&self) -> Vec<f64> {
        match self {
            BackgroundProfile::Constant { .. } | BackgroundProfile::SmoothSwitch { .. } => {
                vec![]
            }
            BackgroundProfile::ExponentialSwitch { t1, t_on, .. } => {
                let mut v = vec![0.0, *t1];
                if let Some(t) = t_on {
                    v.push(*t);
                }
                v
            }
            BackgroundProfile::ExponentialDecay { .. } => vec![0.0],
            BackgroundProfile::StepOff { .. } => vec![0.0],
            BackgroundProfile::Tabulated(_) => vec![],
        }
    }

    /// τ at which the profile value itself jumps.
    pub fn jump_times(&self) -> Vec<f64> {
        match self {
            BackgroundProfile::ExponentialSwitch { t1, t_on, .. } => {
                let mut v = vec![*t1];
                if let Some(t) = t_on {
                    v.push(*t);
                }
                v
            }
            BackgroundProfile::StepOff { .. } => vec![0.0],
            _ => vec![],
        }
    }

    /// True when the profile is constant in τ.
    pub fn is_constant(&self) -> bool {
        matches!(self, BackgroundProfile::Constant { .. })
    }
}

/// Sampled complex profile interpolated by a monotonicity-preserving
/// piecewise cubic (applied separately to the real and imaginary parts).
#[derive(Clone, Debug)]
pub struct TabulatedProfile {
    taus: Vec<f64>,
    values: Vec<C64>,
    slopes: Vec<C64>,
    /// Values assumed outside the sampled window; `None` makes evaluation
    /// outside the window an error.
    asym: Option<(C64, C64)>,
}

impl TabulatedProfile {
    pub fn new(taus: Vec<f64>, values: Vec<C64>, asym: Option<(C64, C64)>) -> Result<Self> {
        if taus.len() < 2 || taus.len() != values.len() {
            return Err(Error::validation(format!(
                "tabulated profile needs >= 2 samples with matching lengths (got {} / {})",
                taus.len(),
                values.len()
            )));
        }
        if !taus.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation(
                "tabulated profile times must be strictly increasing",
            ));
        }
        if let Some((left, right)) = asym {
            let dl = (values[0] - left).norm();
            let dr = (values[values.len() - 1] - right).norm();
            if dl > 1e-9 || dr > 1e-9 {
                return Err(Error::validation(format!(
                    "declared asymptotes deviate from end samples by {dl:.2e} / {dr:.2e} (> 1e-9)"
                )));
            }
        }
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        let sre = pchip_slopes(&taus, &re);
        let sim = pchip_slopes(&taus, &im);
        let slopes = sre
            .into_iter()
            .zip(sim)
            .map(|(a, b)| C64::new(a, b))
            .collect();
        Ok(TabulatedProfile {
            taus,
            values,
            slopes,
            asym,
        })
    }

    /// First and last sampled τ.
    pub fn span(&self) -> (f64, f64) {
        (self.taus[0], self.taus[self.taus.len() - 1])
    }

    /// All sampled τ. The interpolant is C¹ with curvature kinks at these
    /// points, so quadratures should split here.
    pub fn nodes(&self) -> &[f64] {
        &self.taus
    }

    /// Parse the two/three-column text format: `tau re_omega [im_omega]`
    /// per line, `#` starting a comment. The end samples define the
    /// asymptotic values.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut taus = Vec::new();
        let mut values = Vec::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 && cols.len() != 3 {
                return Err(Error::validation(format!(
                    "line {}: expected `tau re_omega [im_omega]`, got {} columns",
                    line_no + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::validation(format!("line {}: bad number `{s}`", line_no + 1))
                })
            };
            taus.push(parse(cols[0])?);
            let re = parse(cols[1])?;
            let im = if cols.len() == 3 { parse(cols[2])? } else { 0.0 };
            values.push(C64::new(re, im));
        }
        if taus.is_empty() {
            return Err(Error::validation("tabulated profile file holds no samples"));
        }
        let asym = Some((values[0], values[values.len() - 1]));
        Self::new(taus, values, asym)
    }

    pub fn validate(&self) -> Result<()> {
        Ok(()) // invariants enforced at construction
    }

    pub fn sample_range(&self) -> (f64, f64) {
        (self.taus[0], self.taus[self.taus.len() - 1])
    }

    fn locate(&self, tau: f64) -> Option<usize> {
        if tau < self.taus[0] || tau > self.taus[self.taus.len() - 1] {
            return None;
        }
        // Last interval start with taus[i] <= tau.
        let idx = match self
            .taus
            .binary_search_by(|probe| probe.partial_cmp(&tau).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Some(idx.min(self.taus.len() - 2))
    }

    pub fn eval(&self, tau: f64) -> Result<C64> {
        Ok(self.eval_with_deriv(tau)?.0)
    }

    pub fn eval_with_deriv(&self, tau: f64) -> Result<(C64, C64)> {
        match self.locate(tau) {
            Some(i) => {
                let h = self.taus[i + 1] - self.taus[i];
                let s = (tau - self.taus[i]) / h;
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
                // Cubic Hermite basis.
                let s2 = s * s;
                let s3 = s2 * s;
                let v = y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                    + m0 * (s3 - 2.0 * s2 + s)
                    + y1 * (-2.0 * s3 + 3.0 * s2)
                    + m1 * (s3 - s2);
                let d = (y0 * (6.0 * s2 - 6.0 * s)
                    + m0 * (3.0 * s2 - 4.0 * s + 1.0)
                    + y1 * (6.0 * s - 6.0 * s2)
                    + m1 * (3.0 * s2 - 2.0 * s))
                    / h;
                Ok((v, d))
            }
            None => match &self.asym {
                Some((left, right)) => {
                    let v = if tau < self.taus[0] { *left } else { *right };
                    Ok((v, C64::new(0.0, 0.0)))
                }
                None => Err(Error::validation(format!(
                    "tau = {tau} outside the tabulated window {:?} and no asymptote is declared",
                    self.sample_range()
                ))),
            },
        }
    }

    pub fn asymptotics(&self) -> (C64, C64) {
        self.asym
            .unwrap_or((self.values[0], self.values[self.values.len() - 1]))
    }
}

/// Shape-preserving cubic interpolant slopes (Fritsch–Carlson weighting):
/// monotone data produce a monotone interpolant.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let d = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![d, d];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = y
        .windows(2)
        .zip(&h)
        .map(|(w, hh)| (w[1] - w[0]) / hh)
        .collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m[0] = edge_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    // Non-centered three-point estimate, limited to preserve shape.
    let mut m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        m = 0.0;
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        m = 3.0 * d0;
    }
    m
}
