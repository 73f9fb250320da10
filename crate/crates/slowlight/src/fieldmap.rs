//! Rectangular (τ, ζ) sample grids of a dressed solution.
//!
//! A [`FieldMap`] is the exchange format between the solution evaluator, the
//! observable extractors, and the command-line tools: per grid point it holds
//! both complex field envelopes, their intensities, and the three level
//! populations, addressable either in retarded coordinates (τ, ζ) or in
//! laboratory coordinates (t, z) = (τ + ζ, ζ).
//!
//! CSV layout is one row per grid point in row-major τ-then-ζ order with a
//! fixed 13-column header. Floats are written in exact round-trip scientific
//! notation so a written file reloads bit-identically and a fixed scenario
//! always produces byte-identical output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::darboux::dress::DressedSolution;
use crate::error::{Error, Result};
use crate::matrix3::C64;
use crate::model::to_lab_frame;

/// Scalar channel selector for ridge tracking and figure extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// |Ω̃ₐ|² — probe-field intensity.
    IntensityA,
    /// |Ω̃_b|² — control-field intensity.
    IntensityB,
    /// Ground-level population P₁.
    P1,
    /// Second-level population P₂.
    P2,
    /// Excited-level population P₃.
    P3,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::IntensityA => "abs2_omega_a",
            Channel::IntensityB => "abs2_omega_b",
            Channel::P1 => "p1",
            Channel::P2 => "p2",
            Channel::P3 => "p3",
        }
    }

    /// Parse a channel name as used in CSV headers and configs.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "abs2_omega_a" | "intensity_a" => Ok(Channel::IntensityA),
            "abs2_omega_b" | "intensity_b" => Ok(Channel::IntensityB),
            "p1" => Ok(Channel::P1),
            "p2" => Ok(Channel::P2),
            "p3" => Ok(Channel::P3),
            other => Err(Error::Validation(format!(
                "unknown channel {other:?}; expected one of abs2_omega_a, abs2_omega_b, p1, p2, p3"
            ))),
        }
    }
}

/// Uniform rectangular sampling grid in retarded coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub n_zeta: usize,
}

impl GridSpec {
    pub fn new(
        tau_range: (f64, f64),
        n_tau: usize,
        zeta_range: (f64, f64),
        n_zeta: usize,
    ) -> Result<Self> {
        let grid = GridSpec {
            tau_min: tau_range.0,
            tau_max: tau_range.1,
            n_tau,
            zeta_min: zeta_range.0,
            zeta_max: zeta_range.1,
            n_zeta,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tau == 0 || self.n_zeta == 0 {
            return Err(Error::Validation(format!(
                "empty grid: {} x {} points requested",
                self.n_tau, self.n_zeta
            )));
        }
        for (name, lo, hi, n) in [
            ("tau", self.tau_min, self.tau_max, self.n_tau),
            ("zeta", self.zeta_min, self.zeta_max, self.n_zeta),
        ] {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Validation(format!(
                    "{name} range [{lo}, {hi}] must be finite"
                )));
            }
            if n > 1 && hi <= lo {
                return Err(Error::Validation(format!(
                    "{name} range [{lo}, {hi}] must be increasing for {n} samples"
                )));
            }
        }
        Ok(())
    }

    pub fn tau_values(&self) -> Vec<f64> {
        axis_values(self.tau_min, self.tau_max, self.n_tau)
    }

    pub fn zeta_values(&self) -> Vec<f64> {
        axis_values(self.zeta_min, self.zeta_max, self.n_zeta)
    }
}

/// Wrap an I/O error with the path it occurred on.
fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn axis_values(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// Column order of the CSV representation.
pub const CSV_HEADER: &str = "tau,zeta,t,z,re_omega_a,im_omega_a,re_omega_b,im_omega_b,\
abs2_omega_a,abs2_omega_b,p1,p2,p3";

/// Dense field samples on a rectangular (τ, ζ) grid, row-major in τ.
#[derive(Clone, Debug)]
pub struct FieldMap {
    pub taus: Vec<f64>,
    pub zetas: Vec<f64>,
    pub omega_a: Vec<C64>,
    pub omega_b: Vec<C64>,
    pub populations: Vec<[f64; 3]>,
}

impl FieldMap {
    /// Evaluate a dressed solution on every grid point. Rows of constant τ
    /// are processed in parallel; the assembled map is independent of the
    /// thread count.
    pub fn build(solution: &DressedSolution, grid: &GridSpec) -> Result<FieldMap> {
        grid.validate()?;
        let taus = grid.tau_values();
        let zetas = grid.zeta_values();
        let rows: Result<Vec<RowSamples>> = taus
            .par_iter()
            .map(|&tau| evaluate_row(solution, tau, &zetas))
            .collect();
        let rows = rows?;

        let total = taus.len() * zetas.len();
        let mut map = FieldMap {
            taus,
            zetas,
            omega_a: Vec::with_capacity(total),
            omega_b: Vec::with_capacity(total),
            populations: Vec::with_capacity(total),
        };
        for row in rows {
            map.omega_a.extend(row.omega_a);
            map.omega_b.extend(row.omega_b);
            map.populations.extend(row.populations);
        }
        Ok(map)
    }

    pub fn n_tau(&self) -> usize {
        self.taus.len()
    }

    pub fn n_zeta(&self) -> usize {
        self.zetas.len()
    }

    #[inline]
    pub fn index(&self, i_tau: usize, i_zeta: usize) -> usize {
        i_tau * self.zetas.len() + i_zeta
    }

    pub fn channel_value(&self, channel: Channel, i_tau: usize, i_zeta: usize) -> f64 {
        let idx = self.index(i_tau, i_zeta);
        match channel {
            Channel::IntensityA => self.omega_a[idx].norm_sqr(),
            Channel::IntensityB => self.omega_b[idx].norm_sqr(),
            Channel::P1 => self.populations[idx][0],
            Channel::P2 => self.populations[idx][1],
            Channel::P3 => self.populations[idx][2],
        }
    }

    /// Largest channel value over the whole map together with its grid index.
    pub fn channel_max(&self, channel: Channel) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for i_tau in 0..self.n_tau() {
            for i_zeta in 0..self.n_zeta() {
                let v = self.channel_value(channel, i_tau, i_zeta);
                if v > best.0 {
                    best = (v, i_tau, i_zeta);
                }
            }
        }
        best
    }

    /// Population-sum defect max |P₁+P₂+P₃ − 1| over the map.
    pub fn population_sum_defect(&self) -> f64 {
        self.populations
            .iter()
            .map(|p| (p[0] + p[1] + p[2] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Write the 13-column CSV. Output is deterministic: floats use exact
    /// round-trip formatting and no timestamps or environment data appear.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| io_at(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_csv_to(&mut out).map_err(|e| io_at(path, e))?;
        out.flush().map_err(|e| io_at(path, e))?;
        Ok(())
    }

    fn write_csv_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for (i_tau, &tau) in self.taus.iter().enumerate() {
            for (i_zeta, &zeta) in self.zetas.iter().enumerate() {
                let idx = self.index(i_tau, i_zeta);
                let (t, z) = to_lab_frame(tau, zeta);
                let a = self.omega_a[idx];
                let b = self.omega_b[idx];
                let p = self.populations[idx];
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    fmt_f64(tau),
                    fmt_f64(zeta),
                    fmt_f64(t),
                    fmt_f64(z),
                    fmt_f64(a.re),
                    fmt_f64(a.im),
                    fmt_f64(b.re),
                    fmt_f64(b.im),
                    fmt_f64(a.norm_sqr()),
                    fmt_f64(b.norm_sqr()),
                    fmt_f64(p[0]),
                    fmt_f64(p[1]),
                    fmt_f64(p[2]),
                )?;
            }
        }
        Ok(())
    }

    /// Read a CSV produced by [`FieldMap::write_csv`]. The grid must be
    /// rectangular and in row-major order; all thirteen columns are required.
    pub fn read_csv(path: &Path) -> Result<FieldMap> {
        let file = File::open(path).map_err(|e| io_at(path, e))?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines().enumerate();

        let header = match lines.next() {
            Some((_, Ok(line))) => line,
            Some((_, Err(e))) => return Err(io_at(path, e)),
            None => {
                return Err(Error::Validation(format!(
                    "{}: empty file, expected a field-map CSV",
                    path.display()
                )))
            }
        };
        if header.trim() != CSV_HEADER {
            return Err(Error::Validation(format!(
                "{}: unexpected header {:?}",
                path.display(),
                header
            )));
        }

        let mut taus: Vec<f64> = Vec::new();
        let mut zetas: Vec<f64> = Vec::new();
        let mut omega_a = Vec::new();
        let mut omega_b = Vec::new();
        let mut populations = Vec::new();
        let mut zeta_axis_complete = false;

        for (line_no, line) in lines {
            let line = line.map_err(|e| io_at(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 13 {
                return Err(Error::Validation(format!(
                    "{}:{}: expected 13 columns, found {}",
                    path.display(),
                    line_no + 1,
                    fields.len()
                )));
            }
            let mut vals = [0.0_f64; 13];
            for (slot, raw) in vals.iter_mut().zip(&fields) {
                *slot = raw.trim().parse::<f64>().map_err(|e| {
                    Error::Validation(format!(
                        "{}:{}: bad float {:?}: {e}",
                        path.display(),
                        line_no + 1,
                        raw
                    ))
                })?;
            }
            let (tau, zeta) = (vals[0], vals[1]);
            if taus.last() != Some(&tau) {
                taus.push(tau);
                if taus.len() == 2 {
                    zeta_axis_complete = true;
                }
            }
            if !zeta_axis_complete {
                zetas.push(zeta);
            }
            omega_a.push(C64::new(vals[4], vals[5]));
            omega_b.push(C64::new(vals[6], vals[7]));
            populations.push([vals[10], vals[11], vals[12]]);
        }

        if taus.is_empty() {
            return Err(Error::Validation(format!(
                "{}: no data rows",
                path.display()
            )));
        }
        if omega_a.len() != taus.len() * zetas.len() {
            return Err(Error::Validation(format!(
                "{}: ragged grid: {} rows for {} tau x {} zeta",
                path.display(),
                omega_a.len(),
                taus.len(),
                zetas.len()
            )));
        }
        Ok(FieldMap {
            taus,
            zetas,
            omega_a,
            omega_b,
            populations,
        })
    }
}

struct RowSamples {
    omega_a: Vec<C64>,
    omega_b: Vec<C64>,
    populations: Vec<[f64; 3]>,
}

fn evaluate_row(solution: &DressedSolution, tau: f64, zetas: &[f64]) -> Result<RowSamples> {
    let mut row = RowSamples {
        omega_a: Vec::with_capacity(zetas.len()),
        omega_b: Vec::with_capacity(zetas.len()),
        populations: Vec::with_capacity(zetas.len()),
    };
    for &zeta in zetas {
        let state = solution.evaluate(tau, zeta)?;
        row.omega_a.push(state.omega_a);
        row.omega_b.push(state.omega_b);
        row.populations.push(state.populations()?);
    }
    Ok(row)
}

/// Exact round-trip float formatting: the shortest decimal that parses back
/// to the same bits, as produced by Rust's float Display.
fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0" so identical values always print identically.
        return "0".to_string();
    }
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux::families;
    use crate::model::{PhysicalParams, SpectralConfig};

    fn demo_slow() -> DressedSolution {
        let params = PhysicalParams::demo();
        let spectral = SpectralConfig::new(
            C64::new(0.0, 4.1),
            0.0,
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        );
        families::slow_soliton(&params, &spectral).expect("valid family")
    }

    #[test]
    fn grid_axes_hit_both_endpoints() {
        let grid = GridSpec::new((-1.0, 2.0), 7, (0.5, 0.5), 1).expect("valid grid");
        let taus = grid.tau_values();
        assert_eq!(taus.len(), 7);
        assert_eq!(taus[0], -1.0);
        assert_eq!(taus[6], 2.0);
        assert_eq!(grid.zeta_values(), vec![0.5]);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(GridSpec::new((0.0, 1.0), 0, (0.0, 1.0), 5).is_err());
        assert!(GridSpec::new((0.0, 1.0), 5, (0.0, 1.0), 0).is_err());
        assert!(GridSpec::new((1.0, 0.0), 5, (0.0, 1.0), 5).is_err());
        assert!(GridSpec::new((0.0, f64::INFINITY), 5, (0.0, 1.0), 5).is_err());
    }

    #[test]
    fn build_fills_every_point_with_unit_population_sum() {
        let solution = demo_slow();
        let grid = GridSpec::new((-2.0, 2.0), 9, (-1.0, 3.0), 11).expect("valid grid");
        let map = FieldMap::build(&solution, &grid).expect("map builds");
        assert_eq!(map.omega_a.len(), 9 * 11);
        assert!(map.population_sum_defect() < 1e-10);
        let (peak, _, _) = map.channel_max(Channel::IntensityA);
        assert!(peak > 1.0, "slow soliton should be visible, peak {peak}");
    }

    #[test]
    fn build_matches_pointwise_evaluation() {
        let solution = demo_slow();
        let grid = GridSpec::new((-1.0, 1.0), 5, (0.0, 2.0), 4).expect("valid grid");
        let map = FieldMap::build(&solution, &grid).expect("map builds");
        for (i_tau, &tau) in map.taus.iter().enumerate() {
            for (i_zeta, &zeta) in map.zetas.iter().enumerate() {
                let state = solution.evaluate(tau, zeta).expect("evaluates");
                let idx = map.index(i_tau, i_zeta);
                assert_eq!(map.omega_a[idx], state.omega_a);
                assert_eq!(map.omega_b[idx], state.omega_b);
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact_and_deterministic() {
        let solution = demo_slow();
        let grid = GridSpec::new((-1.0, 1.0), 6, (-0.5, 1.5), 5).expect("valid grid");
        let map = FieldMap::build(&solution, &grid).expect("map builds");

        let dir = tempfile::tempdir().expect("tempdir");
        let path_a = dir.path().join("map_a.csv");
        let path_b = dir.path().join("map_b.csv");
        map.write_csv(&path_a).expect("write a");
        map.write_csv(&path_b).expect("write b");

        let bytes_a = std::fs::read(&path_a).expect("read back a");
        let bytes_b = std::fs::read(&path_b).expect("read back b");
        assert_eq!(bytes_a, bytes_b, "two writes must be byte-identical");

        let reloaded = FieldMap::read_csv(&path_a).expect("reload");
        assert_eq!(reloaded.taus, map.taus);
        assert_eq!(reloaded.zetas, map.zetas);
        assert_eq!(reloaded.omega_a, map.omega_a);
        assert_eq!(reloaded.omega_b, map.omega_b);
        assert_eq!(reloaded.populations, map.populations);
    }

    #[test]
    fn malformed_csv_inputs_are_rejected() {
        let dir = tempfile::tempdir().expect("tempdir");

        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "").expect("write");
        assert!(FieldMap::read_csv(&empty).is_err());

        let bad_header = dir.path().join("bad_header.csv");
        std::fs::write(&bad_header, "a,b,c\n1,2,3\n").expect("write");
        let err = FieldMap::read_csv(&bad_header).unwrap_err();
        assert!(err.to_string().contains("header"), "got {err}");

        let short_row = dir.path().join("short.csv");
        std::fs::write(&short_row, format!("{CSV_HEADER}\n1,2,3\n")).expect("write");
        let err = FieldMap::read_csv(&short_row).unwrap_err();
        assert!(err.to_string().contains("13 columns"), "got {err}");
    }

    #[test]
    fn channel_parsing_round_trips() {
        for channel in [
            Channel::IntensityA,
            Channel::IntensityB,
            Channel::P1,
            Channel::P2,
            Channel::P3,
        ] {
            assert_eq!(Channel::parse(channel.as_str()).expect("parses"), channel);
        }
        assert!(Channel::parse("nonsense").is_err());
    }
}
