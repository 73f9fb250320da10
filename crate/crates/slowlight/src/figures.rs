//! Canned data bundles for the six demonstration figures.
//!
//! Each figure id produces one CSV file with everything needed to plot it.
//! The bundles are pure data — deterministic, no timestamps — and the
//! parameters match the defaults of the scenario configs, so any bundle can
//! also be reproduced through a short scenario file.
//!
//! | id | contents |
//! |----|----------|
//! | 1  | gate collision field/population maps on a constant background |
//! | 2  | write/store/read maps on the vacuum background |
//! | 3  | control-field intensity at three propagation depths through a switch-off/on cycle |
//! | 4  | probe intensity map of a soliton stopped by a control switch-off |
//! | 5  | ground-state population map with the stored polarization flip |
//! | 6  | exact vs adiabatic probe envelope on a fast-decaying control field |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::background::BackgroundProfile;
use crate::darboux::dress::DressedSolution;
use crate::darboux::families;
use crate::error::{Error, Result};
use crate::fieldmap::{FieldMap, GridSpec};
use crate::matrix3::C64;
use crate::model::{PhysicalParams, SpectralConfig};
use crate::scattering::{iterate, ScatteringSolution};
use crate::scenario::{ensure_writable_dir, io_at};

/// Number of bundled figures.
pub const FIGURE_COUNT: u32 = 6;

/// One-line description of a figure id, for usage text.
pub fn describe(id: u32) -> Option<&'static str> {
    match id {
        1 => Some("gate collision: slow soliton knocked to light speed (field and population maps)"),
        2 => Some("optical memory: write, store and read a matter excitation on the vacuum background"),
        3 => Some("control switch-off/on cycle seen at depths z = 0, 6, 12"),
        4 => Some("probe intensity map of a soliton stopped by a control switch-off"),
        5 => Some("ground-state population map with the stored polarization flip"),
        6 => Some("exact vs adiabatic probe envelope on a fast-decaying control field"),
        _ => None,
    }
}

fn unknown_id(id: u32) -> Error {
    Error::validation(format!(
        "unknown figure id {id}; valid ids are 1 through {FIGURE_COUNT}"
    ))
}

/// Write the CSV bundle for `id` into `out_dir`; returns the files written.
pub fn emit_figure_data(id: u32, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if !(1..=FIGURE_COUNT).contains(&id) {
        return Err(unknown_id(id));
    }
    ensure_writable_dir(out_dir)?;
    match id {
        1 => gate_collision_map(out_dir),
        2 => memory_read_map(out_dir),
        3 => switch_readout_curves(out_dir),
        4 => stopping_intensity_map(out_dir),
        5 => population_flip_map(out_dir),
        6 => adiabatic_comparison_curves(out_dir),
        _ => unreachable!("checked above"),
    }
}

// ---------------------------------------------------------------------------
// Shared scenario pieces
// ---------------------------------------------------------------------------

const IM: fn(f64) -> C64 = |x| C64::new(0.0, x);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

fn demo_params(omega0: f64) -> PhysicalParams {
    PhysicalParams {
        nu0: 4.5,
        delta: 0.0,
        omega0,
        k_phase: 0.0,
        x_excited: None,
    }
}

/// The switched control profile shared by figures 3–5: exponential ramp-down
/// at rate 4 cut at t1 = 1, restored three time units later.
fn switch_profile() -> BackgroundProfile {
    BackgroundProfile::ExponentialSwitch {
        omega0: 3.0,
        alpha: 4.0,
        t1: 1.0,
        t_on: Some(4.0),
    }
}

/// Slow soliton riding the switched profile of figures 3–5.
fn stopped_soliton() -> Result<DressedSolution> {
    let params = demo_params(3.0);
    let spectral = SpectralConfig::new(IM(-4.1), 0.0, ONE, ZERO);
    let profile = switch_profile();
    let scattering = ScatteringSolution::closed_form(&profile, spectral.lambda0)?;
    families::one_soliton_timedep(&params, &profile, scattering, &spectral)
}

fn emit_map(
    solution: &DressedSolution,
    grid: &GridSpec,
    out_dir: &Path,
    name: &str,
) -> Result<Vec<PathBuf>> {
    let map = FieldMap::build(solution, grid)?;
    let path = out_dir.join(name);
    map.write_csv(&path)?;
    Ok(vec![path])
}

fn write_rows(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_at(path, e))?;
    let mut out = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(out, "{header}")?;
        for row in rows {
            let mut first = true;
            for v in row {
                if !first {
                    write!(out, ",")?;
                }
                write!(out, "{v}")?;
                first = false;
            }
            writeln!(out)?;
        }
        out.flush()
    })()
    .map_err(|e| io_at(path, e))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Figure 1: gate collision on a constant background
// ---------------------------------------------------------------------------

fn gate_collision_map(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let params = demo_params(3.0);
    let spectral = SpectralConfig::new(IM(4.1), 0.0, ONE, ONE);
    let solution = families::dressed_general(&params, &spectral)?;
    let grid = GridSpec::new((-6.0, 3.0), 121, (-8.0, 10.0), 121)?;
    emit_map(&solution, &grid, out_dir, "fig1_gate_collision_map.csv")
}

// ---------------------------------------------------------------------------
// Figure 2: write/store/read on the vacuum background
// ---------------------------------------------------------------------------

fn memory_read_map(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let params = demo_params(0.0);
    let spectral = SpectralConfig::new(IM(-4.1), 0.0, ONE, ONE);
    let solution = families::zero_background_memory(&params, &spectral)?;
    let grid = GridSpec::new((-3.0, 8.0), 111, (-4.0, 4.0), 111)?;
    emit_map(&solution, &grid, out_dir, "fig2_memory_read_map.csv")
}

// ---------------------------------------------------------------------------
// Figure 3: the switch cycle at three depths
// ---------------------------------------------------------------------------

fn switch_readout_curves(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let solution = stopped_soliton()?;
    let profile = switch_profile();
    let depths = [0.0, 6.0, 12.0];
    let ts = linspace(-2.0, 20.0, 1101);
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let mut row = Vec::with_capacity(2 + depths.len());
        row.push(t);
        row.push(profile.eval(t)?.norm_sqr());
        for &z in &depths {
            let state = solution.evaluate(t - z, z)?;
            row.push(state.omega_b.norm_sqr());
        }
        rows.push(row);
    }
    let path = out_dir.join("fig3_switch_readout_curves.csv");
    write_rows(
        &path,
        "t,control_abs2,abs2_omega_b_z0,abs2_omega_b_z6,abs2_omega_b_z12",
        &rows,
    )?;
    Ok(vec![path])
}

// ---------------------------------------------------------------------------
// Figures 4 and 5: the stopping scenario as maps
// ---------------------------------------------------------------------------

fn stopping_intensity_map(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let solution = stopped_soliton()?;
    let grid = GridSpec::new((-6.0, 8.0), 141, (-8.0, 6.0), 141)?;
    emit_map(&solution, &grid, out_dir, "fig4_stopping_intensity_map.csv")
}

fn population_flip_map(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let solution = stopped_soliton()?;
    let grid = GridSpec::new((-2.0, 6.0), 121, (-3.0, 3.0), 121)?;
    emit_map(&solution, &grid, out_dir, "fig5_population_flip_map.csv")
}

// ---------------------------------------------------------------------------
// Figure 6: exact vs adiabatic envelope
// ---------------------------------------------------------------------------

fn adiabatic_comparison_curves(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let params = demo_params(0.5);
    let spectral = SpectralConfig::new(IM(-4.1), 0.0, ONE, ZERO);
    let profile = BackgroundProfile::ExponentialDecay {
        omega0: 0.5,
        alpha: 4.0,
    };
    let taus = linspace(-1.0, 1.0, 81);
    let exact = families::one_soliton_timedep(
        &params,
        &profile,
        ScatteringSolution::closed_form(&profile, spectral.lambda0)?,
        &spectral,
    )?;
    // The adiabatic route drops retardation: the scattering data follows the
    // instantaneous control amplitude. Same dressing, different data.
    let mut adiabatic_grid = taus.clone();
    pad_for_interpolation(&mut adiabatic_grid, 1e-3);
    let approx = families::one_soliton_timedep(
        &params,
        &profile,
        iterate::adiabatic_solution(&profile, spectral.lambda0, &adiabatic_grid)?,
        &spectral,
    )?;

    let zetas = [0.0, 0.3];
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let mut row = Vec::with_capacity(1 + 3 * zetas.len());
        row.push(tau);
        for &zeta in &zetas {
            let a_exact = exact.evaluate(tau, zeta)?.omega_a.norm();
            let a_approx = approx.evaluate(tau, zeta)?.omega_a.norm();
            row.push(a_exact);
            row.push(a_approx);
            row.push((a_approx - a_exact).abs() / a_exact.max(f64::MIN_POSITIVE));
        }
        rows.push(row);
    }
    let path = out_dir.join("fig6_adiabatic_comparison_curves.csv");
    write_rows(
        &path,
        "tau,exact_abs_a_zeta0,adiabatic_abs_a_zeta0,rel_dev_zeta0,\
         exact_abs_a_zeta0p3,adiabatic_abs_a_zeta0p3,rel_dev_zeta0p3",
        &rows,
    )?;
    Ok(vec![path])
}

/// Extend a sample grid slightly past both ends so interpolated evaluation
/// at the original endpoints stays interior.
fn pad_for_interpolation(grid: &mut Vec<f64>, pad: f64) {
    let lo = grid[0] - pad;
    let hi = grid[grid.len() - 1] + pad;
    grid.insert(0, lo);
    grid.push(hi);
}

// ---------------------------------------------------------------------------
