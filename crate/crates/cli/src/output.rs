//! Artifact writers. Every file is a pure function of the validated config
//! and seeds: no timestamps, hostnames, or locale-dependent formatting, so
//! reruns produce byte-identical output.

use crate::config::ExperimentConfig;
use dfgp_core::game::GameConstants;
use dfgp_core::{ErrorCurve, GameSpec, StagedErrorCurve};
use serde::Serialize;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// Everything needed to regenerate a run: the config as parsed, the
/// resolved parameters, and the reference point the errors are measured
/// against.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    /// Crate version that produced the artifacts.
    pub version: &'static str,
    pub command: &'a str,
    pub game: GameSummary,
    pub config: &'a ExperimentConfig,
    pub resolved: ResolvedParams,
    /// Equilibrium of the raw game; error columns measure squared distance
    /// to this point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferencePoint>,
}

#[derive(Debug, Serialize)]
pub struct GameSummary {
    pub name: String,
    pub n_players: usize,
    pub dims: Vec<usize>,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub constants: GameConstants,
}

impl GameSummary {
    pub fn of(game: &GameSpec) -> Self {
        GameSummary {
            name: game.name().to_string(),
            n_players: game.n_players(),
            dims: game.dims().to_vec(),
            inner_radius: game.set().inner_radius(),
            outer_radius: game.set().outer_radius(),
            constants: game.constants(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ResolvedParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    pub seed: u64,
    pub replicates: u64,
    /// Standard errors need at least two replicates; when false the se
    /// columns are written as zero.
    pub se_defined: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ReferencePoint {
    pub point: Vec<f64>,
    pub residual: f64,
}

/// Machine-readable failure record, mirrored to stderr and `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub code: String,
    pub message: String,
}

impl ErrorRecord {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        ErrorRecord {
            code: code.into(),
            message: message.into(),
        }
    }

    /// Writes the record to stderr, and into `dir/error.json` when a
    /// directory is available.
    pub fn emit(&self, dir: Option<&Path>) {
        let json = serde_json::to_string_pretty(self).expect("error record serializes");
        eprintln!("{json}");
        if let Some(dir) = dir {
            if fs::create_dir_all(dir).is_ok() {
                let _ = fs::write(dir.join("error.json"), json + "\n");
            }
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

/// Error-curve CSV: one row per recorded step with replicate means and
/// standard errors of the squared distances to the reference, for both the
/// iterate and the profile actually played.
pub fn write_curve_csv(path: &Path, curve: &ErrorCurve) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(
        f,
        "t,mean_sq_err_iterate,se_iterate,mean_sq_err_played,se_played"
    )?;
    for ((&t, it), pl) in curve.ts.iter().zip(&curve.iterate).zip(&curve.played) {
        writeln!(
            f,
            "{t},{:e},{:e},{:e},{:e}",
            it.mean,
            it.se.unwrap_or(0.0),
            pl.mean,
            pl.se.unwrap_or(0.0)
        )?;
    }
    f.flush()
}

/// Two-column plot data (step, mean iterate error), ready for log-log
/// axes: the unplottable step 0 and any nonpositive means are skipped.
pub fn write_loglog_dat(path: &Path, curve: &ErrorCurve) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    for (&t, it) in curve.ts.iter().zip(&curve.iterate) {
        if t > 0 && it.mean > 0.0 {
            writeln!(f, "{t} {:e}", it.mean)?;
        }
    }
    f.flush()
}

/// Per-stage CSV for restarted runs.
pub fn write_stages_csv(path: &Path, staged: &StagedErrorCurve) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(
        f,
        "stage,delta,horizon,cumulative_steps,epsilon_target,step_bound,mean_sq_err,se"
    )?;
    for (k, s) in staged.stages.iter().enumerate() {
        writeln!(
            f,
            "{},{:e},{},{},{:e},{:e},{:e},{:e}",
            k + 1,
            s.delta,
            s.horizon,
            s.cumulative_steps,
            s.epsilon_target,
            s.step_bound,
            s.terminal.mean,
            s.terminal.se.unwrap_or(0.0)
        )?;
    }
    f.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use dfgp_core::MeanSe;

    fn tiny_curve() -> ErrorCurve {
        ErrorCurve {
            ts: vec![0, 1, 2],
            iterate: vec![
                MeanSe { mean: 1.0, se: Some(0.25) },
                MeanSe { mean: 0.5, se: Some(0.125) },
                MeanSe { mean: 0.25, se: None },
            ],
            played: vec![
                MeanSe { mean: 1.5, se: Some(0.5) },
                MeanSe { mean: 0.75, se: Some(0.25) },
                MeanSe { mean: 0.375, se: None },
            ],
            replicates: 2,
        }
    }

    #[test]
    fn curve_csv_has_the_documented_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve_csv(&path, &tiny_curve()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,mean_sq_err_iterate,se_iterate,mean_sq_err_played,se_played"
        );
        assert_eq!(lines.next().unwrap(), "0,1e0,2.5e-1,1.5e0,5e-1");
        // Missing standard errors are written as zero, keeping every
        // column numeric and finite.
        assert_eq!(lines.next_back().unwrap(), "2,2.5e-1,0e0,3.75e-1,0e0");
    }

    #[test]
    fn loglog_data_skips_step_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.dat");
        write_loglog_dat(&path, &tiny_curve()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec!["1 5e-1", "2 2.5e-1"]);
    }
}
