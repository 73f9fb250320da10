//! Scenario configuration and the end-to-end run pipeline.
//!
//! A scenario is a single TOML file: physical parameters, spectral data,
//! control-field profile, solution family, sampling grid, verification
//! toggles, observable requests, and output paths. Every default mirrors the
//! gate-collision demonstration, so an empty file is already a complete,
//! runnable scenario and a handful of lines reproduces any of the bundled
//! figure data sets.
//!
//! [`run_scenario`] validates everything first (bad input never starts a
//! computation), builds the requested family, samples it onto the grid, runs
//! the requested cross-checks and observables, and writes two artifacts:
//!
//! * a CSV field map — pure data, byte-identical across runs of the same
//!   configuration;
//! * a JSON summary — observables, residual reports, a parameter echo, the
//!   library version, and the wall time (metadata lives here, never in the
//!   CSV).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::background::{BackgroundProfile, TabulatedProfile};
use crate::darboux::dress::DressedSolution;
use crate::darboux::families;
use crate::error::{Error, Result};
use crate::fieldmap::{FieldMap, GridSpec};
use crate::matrix3::C64;
use crate::model::{PhysicalParams, SpectralConfig};
use crate::observables;
use crate::oracle::{self, OracleGrid};
use crate::scattering::{self, ScatteringSolution};

// ---------------------------------------------------------------------------
// Configuration sections
// ---------------------------------------------------------------------------

/// Which one-soliton family the scenario evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Both branches populated on a constant background (collision/gate).
    General,
    /// Slow branch only (`c₃ = 0`).
    Slow,
    /// Fast branch only (`c₂ = 0`).
    Fast,
    /// Vacuum background (`Ω₀ = 0`): write/store/read of a matter excitation.
    ZeroBackground,
    /// Slow soliton on a time-dependent control profile.
    TimeDependent,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::General => "general",
            Family::Slow => "slow",
            Family::Fast => "fast",
            Family::ZeroBackground => "zero_background",
            Family::TimeDependent => "time_dependent",
        }
    }
}

/// `[params]` — medium and control-field constants.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSection {
    pub nu0: f64,
    pub delta: f64,
    pub omega0: f64,
    pub k_phase: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_excited: Option<f64>,
}

impl Default for ParamSection {
    fn default() -> Self {
        ParamSection {
            nu0: 4.5,
            delta: 0.0,
            omega0: 3.0,
            k_phase: 0.0,
            x_excited: None,
        }
    }
}

/// `[spectral]` — spectral point and branch coefficients. Complex numbers are
/// written as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    pub lambda0: [f64; 2],
    pub c1_phase: f64,
    pub c2: [f64; 2],
    pub c3: [f64; 2],
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection {
            lambda0: [0.0, 4.1],
            c1_phase: 0.0,
            c2: [1.0, 0.0],
            c3: [1.0, 0.0],
        }
    }
}

/// `[background]` — control-field profile. Omitted entirely for the constant
/// background families; `omega0` defaults to `params.omega0` wherever it is
/// not spelled out.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSection {
    /// Constant amplitude.
    Constant { omega0: Option<f64> },
    /// Constant, then exponential ramp-down `Ω₀ e^{−ατ}` cut to zero at `t1`
    /// (default `4/α`), optionally restored to `Ω₀` at `t_on`. `hold` is a
    /// shorthand: `t_on = t1 + hold`.
    ExponentialSwitch {
        omega0: Option<f64>,
        alpha: f64,
        t1: Option<f64>,
        t_on: Option<f64>,
        hold: Option<f64>,
    },
    /// Constant, then an uncut exponential tail `Ω₀ e^{−ατ}`.
    ExponentialDecay { omega0: Option<f64>, alpha: f64 },
    /// Instantaneous switch-off at τ = 0.
    StepOff { omega0: Option<f64> },
    /// Smooth switch-off `Ω₀ (1 − tanh(rate·τ))/2`.
    SmoothSwitch { omega0: Option<f64>, rate: f64 },
    /// Sampled profile, interpolated monotonically.
    Tabulated { taus: Vec<f64>, values: Vec<[f64; 2]> },
}

impl ProfileSection {
    pub fn kind(&self) -> &'static str {
        match self {
            ProfileSection::Constant { .. } => "constant",
            ProfileSection::ExponentialSwitch { .. } => "exponential_switch",
            ProfileSection::ExponentialDecay { .. } => "exponential_decay",
            ProfileSection::StepOff { .. } => "step_off",
            ProfileSection::SmoothSwitch { .. } => "smooth_switch",
            ProfileSection::Tabulated { .. } => "tabulated",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ProfileSection::Constant { .. })
    }

    /// Resolve into a concrete profile, filling amplitude defaults.
    pub fn resolve(&self, default_omega0: f64) -> Result<BackgroundProfile> {
        let amp = |o: &Option<f64>| o.unwrap_or(default_omega0);
        let profile = match self {
            ProfileSection::Constant { omega0 } => BackgroundProfile::Constant {
                omega0: amp(omega0),
            },
            ProfileSection::ExponentialSwitch {
                omega0,
                alpha,
                t1,
                t_on,
                hold,
            } => {
                if t_on.is_some() && hold.is_some() {
                    return Err(Error::validation(
                        "background: give either t_on or hold, not both \
                         (hold is the shorthand t_on = t1 + hold)",
                    ));
                }
                let t1 = t1.unwrap_or(4.0 / alpha);
                BackgroundProfile::ExponentialSwitch {
                    omega0: amp(omega0),
                    alpha: *alpha,
                    t1,
                    t_on: t_on.or(hold.map(|h| t1 + h)),
                }
            }
            ProfileSection::ExponentialDecay { omega0, alpha } => {
                BackgroundProfile::ExponentialDecay {
                    omega0: amp(omega0),
                    alpha: *alpha,
                }
            }
            ProfileSection::StepOff { omega0 } => BackgroundProfile::StepOff {
                omega0: amp(omega0),
            },
            ProfileSection::SmoothSwitch { omega0, rate } => BackgroundProfile::SmoothSwitch {
                omega0: amp(omega0),
                rate: *rate,
            },
            ProfileSection::Tabulated { taus, values } => {
                let vals: Vec<C64> = values.iter().map(|v| C64::new(v[0], v[1])).collect();
                BackgroundProfile::Tabulated(TabulatedProfile::new(taus.clone(), vals, None)?)
            }
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// `[grid]` — rectangular sampling window in retarded coordinates.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub tau: [f64; 2],
    pub n_tau: usize,
    pub zeta: [f64; 2],
    pub n_zeta: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            tau: [-6.0, 3.0],
            n_tau: 121,
            zeta: [-8.0, 10.0],
            n_zeta: 121,
        }
    }
}

/// `[verify]` — independent cross-checks to run on the evaluated solution.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Check the scattering data against its defining flow.
    pub riccati_residual: bool,
    /// Finite-difference residual of the coupled field–matter equations,
    /// with a grid-refinement study.
    pub pde_residual: bool,
    /// Compatibility residual of the auxiliary linear system at probe
    /// spectral points.
    pub zero_curvature: bool,
    /// March the field–matter equations from the left boundary and compare
    /// the arrival slice against the closed-form solution.
    pub oracle_propagation: bool,
    /// Refinement levels for the residual study (≥ 1).
    pub levels: u32,
    /// Step sizes for the verification grids; default to the display grid
    /// spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_zeta: Option<f64>,
    /// Probe spectral points (`[re, im]`) for the zero-curvature check.
    pub probes: Vec<[f64; 2]>,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            riccati_residual: false,
            pde_residual: false,
            zero_curvature: false,
            oracle_propagation: false,
            levels: 2,
            h_tau: None,
            h_zeta: None,
            probes: vec![[1.3, 0.8], [0.0, -2.2]],
        }
    }
}

/// `[observables]` — derived quantities to report in the JSON summary.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSection {
    /// Ridge group velocity, next to both low-intensity limit forms.
    pub velocity: bool,
    /// Spatial width of a stored excitation.
    pub width: bool,
    /// Stopping-distance report (time-dependent family only).
    pub stopping: bool,
    /// Conserved functionals of the control profile (switched profiles only).
    pub zs_functionals: bool,
}

impl Default for ObservableSection {
    fn default() -> Self {
        ObservableSection {
            velocity: true,
            width: true,
            stopping: false,
            zs_functionals: false,
        }
    }
}

/// `[output]` — where the artifacts go. `stem` names the files:
/// `<stem>_fields.csv` and `<stem>_summary.json` inside `dir`.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub stem: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            stem: "scenario".to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// A complete, validated run description. Deserializable from TOML; the
/// serialized form is echoed into the JSON summary.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub family: Family,
    pub params: ParamSection,
    pub spectral: SpectralSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background: Option<ProfileSection>,
    pub grid: GridSection,
    pub verify: VerifySection,
    pub observables: ObservableSection,
    pub output: OutputSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            family: Family::General,
            params: ParamSection::default(),
            spectral: SpectralSection::default(),
            background: None,
            grid: GridSection::default(),
            verify: VerifySection::default(),
            observables: ObservableSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn c(pair: [f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

impl Scenario {
    /// Parse and validate a TOML scenario. Parse errors carry the offending
    /// line and field.
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let scenario: Scenario = toml::from_str(text)
            .map_err(|e| Error::validation(format!("scenario config: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Load and validate a scenario file.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| io_at(path, e))?;
        Scenario::from_toml_str(&text).map_err(|e| match e {
            Error::Validation(msg) => {
                Error::Validation(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            nu0: self.params.nu0,
            delta: self.params.delta,
            omega0: self.params.omega0,
            k_phase: self.params.k_phase,
            x_excited: self.params.x_excited,
        }
    }

    pub fn spectral_config(&self) -> SpectralConfig {
        SpectralConfig::new(
            c(self.spectral.lambda0),
            self.spectral.c1_phase,
            c(self.spectral.c2),
            c(self.spectral.c3),
        )
    }

    /// The control profile the scenario runs on (constant at `params.omega0`
    /// when no `[background]` section is given).
    pub fn profile(&self) -> Result<BackgroundProfile> {
        match &self.background {
            None => Ok(BackgroundProfile::Constant {
                omega0: self.params.omega0,
            }),
            Some(section) => section.resolve(self.params.omega0),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(
            (self.grid.tau[0], self.grid.tau[1]),
            self.grid.n_tau,
            (self.grid.zeta[0], self.grid.zeta[1]),
            self.grid.n_zeta,
        )
    }

    /// Every compatibility rule, checked before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let params = self.physical();
        params.validate()?;
        let spectral = self.spectral_config();
        spectral.validate()?;
        self.grid_spec()?;
        let profile = self.profile()?;

        let constant_only = matches!(
            self.family,
            Family::General | Family::Slow | Family::Fast | Family::ZeroBackground
        );
        if constant_only {
            if let Some(section) = &self.background {
                if !section.is_constant() {
                    return Err(Error::validation(format!(
                        "family '{}' runs on a constant control background, but the \
                         [background] section has kind = \"{}\"; use family = \
                         \"time_dependent\" for switched profiles",
                        self.family.as_str(),
                        section.kind()
                    )));
                }
            }
            if (profile.omega0_left() - self.params.omega0).abs() != 0.0 {
                return Err(Error::validation(format!(
                    "background amplitude {} disagrees with params.omega0 = {}",
                    profile.omega0_left(),
                    self.params.omega0
                )));
            }
        }

        match self.family {
            Family::General => {}
            Family::Slow => {
                if c(self.spectral.c3).norm() != 0.0 {
                    return Err(Error::validation(
                        "slow-soliton family requires c3 = 0 (no fast branch); \
                         use the general family instead",
                    ));
                }
                if c(self.spectral.c2).norm() == 0.0 {
                    return Err(Error::validation(
                        "slow-soliton family requires c2 != 0 (the slow branch must \
                         be populated)",
                    ));
                }
            }
            Family::Fast => {
                if c(self.spectral.c2).norm() != 0.0 {
                    return Err(Error::validation(
                        "fast-soliton family requires c2 = 0 (no slow branch); \
                         use the general family instead",
                    ));
                }
                if c(self.spectral.c3).norm() == 0.0 {
                    return Err(Error::validation(
                        "fast-soliton family requires c3 != 0 (the fast branch must \
                         be populated)",
                    ));
                }
            }
            Family::ZeroBackground => {
                if self.params.omega0 != 0.0 {
                    return Err(Error::validation(format!(
                        "zero-background family requires params.omega0 = 0 (got {})",
                        self.params.omega0
                    )));
                }
            }
            Family::TimeDependent => {
                if self.background.is_none() {
                    return Err(Error::validation(
                        "time_dependent family needs a [background] section \
                         describing the control profile",
                    ));
                }
                if c(self.spectral.c3).norm() != 0.0 {
                    return Err(Error::validation(
                        "time-dependent seeds provide only the slow branch: set c3 = 0",
                    ));
                }
                if self.params.k_phase != 0.0 {
                    return Err(Error::validation(
                        "time-dependent backgrounds assume k_phase = 0 \
                         (no spatial control modulation)",
                    ));
                }
            }
        }

        spectral.require_solitonic(profile.omega0_left())?;

        if self.observables.stopping {
            if self.family != Family::TimeDependent {
                return Err(Error::validation(format!(
                    "the stopping-distance observable needs family = \"time_dependent\" \
                     (got \"{}\")",
                    self.family.as_str()
                )));
            }
            if !(c(self.spectral.lambda0).im < 0.0) {
                return Err(Error::validation(format!(
                    "the stopping-distance observable needs Im lambda0 < 0 \
                     (dark-region drift must damp), got {}",
                    c(self.spectral.lambda0)
                )));
            }
            if profile.is_constant() {
                return Err(Error::validation(
                    "the stopping-distance observable needs a switched control \
                     profile, not a constant one",
                ));
            }
        }
        if self.observables.zs_functionals {
            if profile.is_constant() {
                return Err(Error::validation(
                    "the conserved functionals diverge on a constant profile; \
                     request them on a switched background",
                ));
            }
            if let BackgroundProfile::ExponentialSwitch { t_on: Some(_), .. } = profile {
                return Err(Error::validation(
                    "the conserved functionals diverge when the control field is \
                     restored (t_on set); request them on a profile that stays dark",
                ));
            }
        }

        if self.verify.levels == 0 {
            return Err(Error::validation("verify.levels must be at least 1"));
        }
        if self.verify.zero_curvature && self.verify.probes.len() < 2 {
            return Err(Error::validation(
                "the zero-curvature check needs at least two probe spectral points",
            ));
        }
        for h in [self.verify.h_tau, self.verify.h_zeta].into_iter().flatten() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::validation(format!(
                    "verification step sizes must be positive and finite, got {h}"
                )));
            }
        }
        Ok(())
    }

    /// Scattering data for the time-dependent family: closed form when the
    /// profile has one, otherwise the adaptive flow integration on a grid
    /// padded well past the last switch so plateaus and quadrature windows
    /// are inside the domain.
    pub fn scattering(&self, profile: &BackgroundProfile) -> Result<ScatteringSolution> {
        let lambda = c(self.spectral.lambda0);
        match ScatteringSolution::closed_form(profile, lambda) {
            Ok(s) => Ok(s),
            Err(Error::Validation(_)) => {
                let switches = profile.switch_times();
                let first = switches.iter().cloned().fold(0.0_f64, f64::min);
                let last = switches.iter().cloned().fold(0.0_f64, f64::max);
                let tail = 30.0 / dark_tail_rate(profile);
                let lo = self.grid.tau[0].min(first - 2.0);
                let hi = self.grid.tau[1].max(last + tail);
                let step = 0.01_f64;
                let n = ((hi - lo) / step).ceil() as usize + 1;
                let grid: Vec<f64> = (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect();
                scattering::ode::solve_riccati_ode(profile, lambda, &grid, None)
            }
            Err(other) => Err(other),
        }
    }

    /// Build the solution the scenario asks for.
    pub fn solution(&self) -> Result<DressedSolution> {
        let params = self.physical();
        let spectral = self.spectral_config();
        match self.family {
            Family::General => families::dressed_general(&params, &spectral),
            Family::Slow => families::slow_soliton(&params, &spectral),
            Family::Fast => families::fast_soliton(&params, &spectral),
            Family::ZeroBackground => families::zero_background_memory(&params, &spectral),
            Family::TimeDependent => {
                let profile = self.profile()?;
                let scattering = self.scattering(&profile)?;
                families::one_soliton_timedep(&params, &profile, scattering, &spectral)
            }
        }
    }
}

/// Decay rate that drives the control field toward dark after its last
/// switch; used to size the integration domain.
fn dark_tail_rate(profile: &BackgroundProfile) -> f64 {
    match profile {
        BackgroundProfile::ExponentialSwitch { alpha, .. }
        | BackgroundProfile::ExponentialDecay { alpha, .. } => *alpha,
        BackgroundProfile::SmoothSwitch { rate, .. } => 2.0 * rate,
        _ => 1.0,
    }
}

pub(crate) fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Create the directory and prove it is writable before any computation.
pub(crate) fn ensure_writable_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_at(dir, e))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| io_at(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| io_at(&probe, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Verification helpers
// ---------------------------------------------------------------------------

/// Sup/RMS statistics of a sampled residual.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualStat {
    pub sup: f64,
    pub rms: f64,
    pub samples: usize,
}

fn residual_stat(values: &[f64]) -> ResidualStat {
    let sup = values.iter().cloned().fold(0.0_f64, f64::max);
    let rms = if values.is_empty() {
        0.0
    } else {
        (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
    };
    ResidualStat {
        sup,
        rms,
        samples: values.len(),
    }
}

/// Residual of the scattering data against its defining flow.
///
/// On a uniform background the data is a τ-independent fixed point, so the
/// flow right-hand side itself must vanish; it is sampled along ζ. On a
/// time-dependent background the τ-derivative is taken by central
/// differences (step `h`) and compared with the right-hand side, skipping
/// samples within `2h` of a kink of the control profile.
pub fn riccati_residual_stat(
    solution: &DressedSolution,
    grid: &GridSpec,
    h: f64,
) -> Result<ResidualStat> {
    let lambda = solution.lambda0();
    let seed = solution.seed();
    let n = 101usize;
    let mut residuals = Vec::with_capacity(n);
    match seed {
        crate::darboux::dress::Seed::Uniform(_) => {
            for i in 0..n {
                let zeta = grid.zeta_min
                    + (grid.zeta_max - grid.zeta_min) * i as f64 / (n - 1) as f64;
                let data = seed.data(0.0, zeta)?;
                let omega = seed.omega_b(0.0, zeta)?;
                let rhs = scattering::riccati_rhs(lambda, omega, data.w);
                residuals.push(rhs.norm());
            }
        }
        crate::darboux::dress::Seed::TimeDependent(t) => {
            let profile = &t.profile;
            let mut kinks = profile.switch_times();
            kinks.extend(profile.jump_times());
            // Stay a central-difference stencil inside the scattering domain.
            let (dlo, dhi) = t.scattering.domain();
            let lo = grid.tau_min.max(dlo + 2.0 * h);
            let hi = grid.tau_max.min(dhi - 2.0 * h);
            if !(hi > lo) {
                return Err(Error::validation(format!(
                    "the grid tau range [{}, {}] does not overlap the scattering \
                     domain [{dlo}, {dhi}]",
                    grid.tau_min, grid.tau_max
                )));
            }
            for i in 0..n {
                let tau = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                if kinks.iter().any(|k| (tau - k).abs() <= 2.0 * h) {
                    continue;
                }
                let wm = seed.data(tau - h, 0.0)?.w;
                let wp = seed.data(tau + h, 0.0)?.w;
                let w = seed.data(tau, 0.0)?.w;
                let omega = profile.eval(tau)?;
                let rhs = scattering::riccati_rhs(lambda, omega, w);
                let deriv = (wp - wm) / (2.0 * h);
                let scale = rhs.norm().max(lambda.norm() * w.norm()).max(1.0);
                residuals.push((deriv - rhs).norm() / scale);
            }
        }
    }
    Ok(residual_stat(&residuals))
}

/// Outcome of the boundary-march cross-check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PropagationCheck {
    /// Sup over the arrival slice of the field mismatch, relative to the
    /// boundary field scale.
    pub sup_error: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub h_tau: f64,
    pub h_zeta: f64,
}

/// March the field–matter equations across the grid from the solution's own
/// left boundary and compare the arrival fields with the closed form.
pub fn propagation_check(
    solution: &DressedSolution,
    ogrid: &OracleGrid,
) -> Result<PropagationCheck> {
    let sampler = oracle::solution_sampler(solution);
    let taus = ogrid.taus();
    let tau0 = taus[0];
    let zeta0 = ogrid.zeta.0;
    let boundary = oracle::StateSlice::from_sampler(&sampler, &taus, zeta0)?;
    let matter_left = |zeta: f64| -> Result<crate::matrix3::Mat3> {
        Ok(sampler(tau0, zeta)?.rho)
    };
    let trajectory = oracle::integrate_maxwell_bloch(
        &boundary,
        &matter_left,
        solution.seed().nu0(),
        solution.seed().delta(),
        ogrid,
    )?;
    let arrival = trajectory.final_slice();
    let zeta_end = *trajectory.zetas.last().expect("nonempty grid");
    let mut scale = 1.0_f64;
    for i in 0..boundary.len() {
        scale = scale.max(boundary.omega_a[i].norm());
        scale = scale.max(boundary.omega_b[i].norm());
    }
    let mut sup = 0.0_f64;
    for (i, &tau) in trajectory.taus.iter().enumerate() {
        let exact = sampler(tau, zeta_end)?;
        sup = sup.max((arrival.omega_a[i] - exact.omega_a).norm() / scale);
        sup = sup.max((arrival.omega_b[i] - exact.omega_b).norm() / scale);
    }
    Ok(PropagationCheck {
        sup_error: sup,
        max_trace_drift: trajectory.max_trace_drift,
        max_hermiticity_drift: trajectory.max_hermiticity_drift,
        h_tau: ogrid.h_tau,
        h_zeta: ogrid.h_zeta,
    })
}

// ---------------------------------------------------------------------------
// The run pipeline
// ---------------------------------------------------------------------------

/// Paths and summary produced by a completed run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub summary: serde_json::Value,
}

fn oracle_grid_for(scenario: &Scenario) -> Result<OracleGrid> {
    let g = &scenario.grid;
    let span_tau = g.tau[1] - g.tau[0];
    let span_zeta = g.zeta[1] - g.zeta[0];
    let h_tau = scenario
        .verify
        .h_tau
        .unwrap_or(span_tau / (g.n_tau.max(2) - 1) as f64);
    let h_zeta = scenario
        .verify
        .h_zeta
        .unwrap_or(span_zeta / (g.n_zeta.max(2) - 1) as f64);
    OracleGrid::new((g.tau[0], g.tau[1]), h_tau, (g.zeta[0], g.zeta[1]), h_zeta)?
        .with_levels(scenario.verify.levels)
}

fn json_c64(z: C64) -> serde_json::Value {
    json!([z.re, z.im])
}

/// Execute a validated scenario: build the solution, sample the field map,
/// run requested verifications and observables, and write the artifacts.
pub fn run_scenario(scenario: &Scenario) -> Result<RunArtifacts> {
    scenario.validate()?;
    ensure_writable_dir(&scenario.output.dir)?;
    let csv_path = scenario
        .output
        .dir
        .join(format!("{}_fields.csv", scenario.output.stem));
    let json_path = scenario
        .output
        .dir
        .join(format!("{}_summary.json", scenario.output.stem));

    let started = Instant::now();
    let params = scenario.physical();
    let spectral = scenario.spectral_config();
    let profile = scenario.profile()?;
    let solution = scenario.solution()?;
    let grid = scenario.grid_spec()?;
    let map = FieldMap::build(&solution, &grid)?;

    // Observables ----------------------------------------------------------
    let mut obs = serde_json::Map::new();
    if scenario.observables.velocity {
        if params.omega0 > 0.0 {
            let v = observables::compare_low_intensity_velocity(&params, spectral.lambda0)?;
            obs.insert(
                "velocity".into(),
                json!({
                    "ridge_speed": v.exact,
                    "low_intensity_half_form": v.half_form,
                    "low_intensity_full_form": v.full_form,
                    "half_form_ratio": v.half_ratio(),
                    "full_form_ratio": v.full_ratio(),
                }),
            );
        } else {
            obs.insert(
                "velocity".into(),
                json!({
                    "skipped": "no background field: the slow branch does not propagate",
                }),
            );
        }
    }
    if scenario.observables.width {
        let w = observables::memory_bit_width(params.nu0, params.delta, spectral.lambda0)?;
        obs.insert("memory_bit_width".into(), json!(w));
    }
    if scenario.observables.zs_functionals {
        let (i1, i2) = observables::zs_functionals(&profile)?;
        obs.insert("zs_functionals".into(), json!({ "i1": i1, "i2": i2 }));
    }
    if scenario.observables.stopping {
        let scattering = scenario.scattering(&profile)?;
        let report = observables::stopping_distance(&params, &spectral, &profile, &scattering)?;
        obs.insert(
            "stopping".into(),
            json!({
                "lambda": json_c64(report.lambda),
                "predicted_distance": report.predicted_distance,
                "instant_limit": report.instant_limit,
                "relative_functional": report.relative_functional,
                "first_order_estimate": report.first_order_estimate,
                "i1": report.i1,
                "i2": report.i2,
                "imprint_center": report.imprint_center,
                "start_center": report.start_center,
                "imprint_width": report.imprint_width,
            }),
        );
    }

    // Verifications ---------------------------------------------------------
    let mut verif = serde_json::Map::new();
    if scenario.verify.riccati_residual {
        let h = 1e-3;
        let stat = riccati_residual_stat(&solution, &grid, h)?;
        verif.insert("riccati_residual".into(), serde_json::to_value(stat).unwrap());
    }
    if scenario.verify.pde_residual {
        let ogrid = oracle_grid_for(scenario)?;
        let report = oracle::nonlinear_residual(&solution, &ogrid)?;
        verif.insert("pde_residual".into(), serde_json::to_value(&report).unwrap());
    }
    if scenario.verify.zero_curvature {
        let ogrid = oracle_grid_for(scenario)?;
        let probes: Vec<C64> = scenario.verify.probes.iter().map(|p| c(*p)).collect();
        let report = oracle::zero_curvature_of(&solution, &ogrid, &probes)?;
        verif.insert("zero_curvature".into(), serde_json::to_value(&report).unwrap());
    }
    if scenario.verify.oracle_propagation {
        let ogrid = oracle_grid_for(scenario)?.with_levels(1)?;
        let check = propagation_check(&solution, &ogrid)?;
        verif.insert(
            "oracle_propagation".into(),
            serde_json::to_value(check).unwrap(),
        );
    }

    // Open-question diagnostics ---------------------------------------------
    let mut open = serde_json::Map::new();
    if params.omega0 > 0.0 {
        let v = observables::compare_low_intensity_velocity(&params, spectral.lambda0)?;
        // The limit forms only apply at low intensity, so the verdict comes
        // from a probe at omega0 = |Im lambda0| / 10 with the same coupling.
        let mut weak = params;
        weak.omega0 = spectral.lambda0.im.abs() / 10.0;
        let probe = observables::compare_low_intensity_velocity(&weak, spectral.lambda0)?;
        open.insert(
            "low_intensity_velocity".into(),
            json!({
                "exact": v.exact,
                "half_form": v.half_form,
                "full_form": v.full_form,
                "half_form_ratio": v.half_ratio(),
                "full_form_ratio": v.full_ratio(),
                "probe_omega0": weak.omega0,
                "probe_half_form_ratio": probe.half_ratio(),
                "probe_full_form_ratio": probe.full_ratio(),
                "matches_half_form_within_2pct": probe.supports_half_form(0.02),
                "note": "in the low-intensity limit the exact ridge speed agrees \
                         with omega0^2/(2 nu0); the form omega0^2/nu0 is high by \
                         the same factor of two",
            }),
        );
    }
    {
        // Probe the two normalization conventions on a coarse point sample.
        let mut worst: Option<(f64, f64, f64)> = None;
        'outer: for i in 0..3 {
            for j in 0..3 {
                let tau = grid.tau_min + (grid.tau_max - grid.tau_min) * i as f64 / 2.0;
                let zeta = grid.zeta_min + (grid.zeta_max - grid.zeta_min) * j as f64 / 2.0;
                match solution.norm_comparison(tau, zeta)? {
                    Some(cmp) => {
                        let gap = cmp.relative_gap();
                        if worst.map_or(true, |(g, _, _)| gap > g) {
                            worst = Some((gap, cmp.state_norm_sq_shorthand, cmp.exact));
                        }
                    }
                    None => break 'outer,
                }
            }
        }
        match worst {
            Some((gap, norm_sq, _)) => {
                open.insert(
                    "normalization_shorthand".into(),
                    json!({
                        "max_relative_gap": gap,
                        "state_norm_sq_with_shorthand": norm_sq,
                        "shorthand_matches_exact": gap <= 1e-10,
                        "note": "gap between the exact squared norm of the dressing \
                                 vector and the shorthand that counts the cross term \
                                 once; a nonzero gap means the shorthand would leave \
                                 the dressed state unnormalized",
                    }),
                );
            }
            None => {
                open.insert(
                    "normalization_shorthand".into(),
                    json!({
                        "applies": false,
                        "note": "mixed-state seed: the dressed state is a density \
                                 matrix, the pure-state normalization question does \
                                 not arise",
                    }),
                );
            }
        }
    }

    map.write_csv(&csv_path)?;

    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "generated_by": "slowlight",
        "wall_time_ms": started.elapsed().as_secs_f64() * 1e3,
        "family": scenario.family.as_str(),
        "scenario": serde_json::to_value(scenario).unwrap(),
        "grid": {
            "tau": [grid.tau_min, grid.tau_max],
            "n_tau": grid.n_tau,
            "zeta": [grid.zeta_min, grid.zeta_max],
            "n_zeta": grid.n_zeta,
        },
        "artifacts": { "field_map_csv": csv_path.to_string_lossy() },
        "population_sum_defect": map.population_sum_defect(),
        "observables": serde_json::Value::Object(obs),
        "verification": serde_json::Value::Object(verif),
        "open_questions": serde_json::Value::Object(open),
    });
    let text = serde_json::to_string_pretty(&summary)
        .expect("summary serialization cannot fail");
    fs::write(&json_path, text + "\n").map_err(|e| io_at(&json_path, e))?;

    Ok(RunArtifacts {
        csv_path,
        json_path,
        summary,
    })
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

/// One completed run of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRun {
    pub value: String,
    pub artifacts: RunArtifacts,
}

/// Parse a sweep value: TOML syntax when it parses (`1.5`, `true`,
/// `[0.0, -4.1]`, `"slow"`), otherwise a bare string.
pub fn parse_override_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Set `path` (dotted, e.g. `spectral.lambda0`) to `value` inside a parsed
/// TOML document, creating intermediate tables as needed.
pub fn apply_override(root: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::validation(format!(
            "parameter path '{path}' has an empty segment"
        )));
    }
    let mut cursor = root;
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::validation(format!(
                    "parameter path '{path}': '{part}' is not a table"
                ))
            })?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn sanitize_for_path(raw: &str) -> String {
    raw.chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || matches!(ch, '.' | '-' | '_') {
                ch
            } else {
                '_'
            }
        })
        .collect()
}

/// Run the scenario once per value of the swept parameter. Artifacts land in
/// per-value subdirectories of the scenario's output directory.
pub fn sweep_scenario(
    config_text: &str,
    param: &str,
    values: &[String],
) -> Result<Vec<SweepRun>> {
    if values.is_empty() {
        return Err(Error::validation(
            "sweep needs at least one value for the swept parameter",
        ));
    }
    let mut runs = Vec::with_capacity(values.len());
    for value in values {
        let mut table: toml::Table = config_text
            .parse()
            .map_err(|e| Error::validation(format!("scenario config: {e}")))?;
        apply_override(&mut table, param, parse_override_value(value))?;
        let mut scenario: Scenario = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::validation(format!("scenario config: {e}")))?;
        scenario.output.dir = scenario
            .output
            .dir
            .join(sanitize_for_path(&format!("{param}-{value}")));
        scenario.validate()?;
        runs.push(SweepRun {
            value: value.clone(),
            artifacts: run_scenario(&scenario)?,
        });
    }
    Ok(runs)
}

// ---------------------------------------------------------------------------
