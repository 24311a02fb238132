//! Parameter sweeps behind the command-line front end: every command turns a
//! [`RunConfig`] into a [`Table`], which is written as CSV next to a JSON
//! manifest describing the run.

mod table;

use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular_momentum::SpinLabel;
use crate::classical::{classical_fidelity_series_with, default_l_max, fitted_step};
use crate::coherent::{convexity_study, default_nodes};
use crate::error::{Error, Module, Result};
use crate::quantum::{closed_form_fidelity, evolve, trajectory_batch};
use crate::tolerances;

pub use table::{check_compare_schema, Cell, Table, COMPARE_COLUMNS};

const MODULE: Module = Module::Harness;

/// Environment variable capping the worker threads used by sweeps.
pub const THREADS_ENV: &str = "DRFSIM_THREADS";

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    QuantumEvolve,
    ClassicalWalk,
    Compare,
    Trajectories,
    CoherentTest,
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::QuantumEvolve => "quantum-evolve",
            Command::ClassicalWalk => "classical-walk",
            Command::Compare => "compare",
            Command::Trajectories => "trajectories",
            Command::CoherentTest => "coherent-test",
            Command::Scaling => "scaling",
        }
    }
}

/// Everything that determines the output of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub twice_j: Vec<u32>,
    /// Last step recorded; defaults to `ceil(5 · half_life)` per spin.
    pub n_max: Option<u64>,
    /// Classical step in radians; defaults to the fitted step.
    pub alpha: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub l_max: Option<usize>,
    pub nodes: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, twice_j: Vec<u32>) -> Self {
        RunConfig {
            command,
            twice_j,
            n_max: None,
            alpha: None,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            l_max: None,
            nodes: None,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.twice_j.is_empty() {
            return Err(Error::domain(MODULE, "at least one --twice-j value is required"));
        }
        if let Some(&bad) = self.twice_j.iter().find(|&&tj| tj < 1) {
            return Err(Error::domain(MODULE, format!("--twice-j must be at least 1, got {bad}")));
        }
        if self.command == Command::Compare && self.twice_j.len() != 1 {
            return Err(Error::domain(MODULE, "compare takes a single --twice-j value"));
        }
        if self.command == Command::Trajectories && self.samples < 1 {
            return Err(Error::domain(MODULE, "--samples must be at least 1"));
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
                return Err(Error::domain(MODULE, format!("--alpha {alpha} must lie strictly between 0 and pi")));
            }
        }
        if self.l_max == Some(0) {
            return Err(Error::domain(MODULE, "--l-max must be at least 1"));
        }
        Ok(())
    }

    /// Output path, defaulting to `<command>.csv` in the working directory.
    pub fn csv_path(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.command.name())))
    }

    fn spins(&self) -> Vec<SpinLabel> {
        let mut twice: Vec<u32> = self.twice_j.clone();
        twice.sort_unstable();
        twice.dedup();
        twice.into_iter().map(SpinLabel::from_twice).collect()
    }

    fn n_max_for(&self, spin: SpinLabel) -> Result<u64> {
        match self.n_max {
            Some(n) => Ok(n),
            None => default_n_max(spin),
        }
    }
}

/// Steps after which the decaying part of the fidelity has halved:
/// `ln 2 / (−ln(1 − 2/(2j+1)²))`.
pub fn half_life(spin: SpinLabel) -> Result<f64> {
    spin.require_coupling(MODULE)?;
    let dim = spin.dim() as f64;
    Ok(LN_2 / -(-2.0 / (dim * dim)).ln_1p())
}

/// Large-`j` form of [`half_life`]: `ln 2 · (2j+1)² / 2`.
pub fn asymptotic_half_life(spin: SpinLabel) -> f64 {
    let dim = spin.dim() as f64;
    LN_2 * dim * dim / 2.0
}

/// `ceil(5 · half_life)`: enough steps for the decay curve to flatten out.
pub fn default_n_max(spin: SpinLabel) -> Result<u64> {
    Ok((5.0 * half_life(spin)?).ceil() as u64)
}

/// One line of the quantum-versus-classical comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n: u64,
    pub f_q_map: f64,
    pub f_q_closed: f64,
    pub f_c: f64,
    pub diff_qc: f64,
    pub diff_map_closed: f64,
}

/// Quantum fidelity (iterated map and closed form) against the classical walk
/// for `n = 0..=n_max`. With the fitted step the two models must agree to
/// [`tolerances::ORACLE`]; any larger gap is reported as a consistency error.
pub fn compare(spin: SpinLabel, n_max: u64, alpha: Option<f64>, l_max: Option<usize>) -> Result<Vec<ComparisonRow>> {
    let fitted = alpha.is_none();
    let alpha = alpha.unwrap_or_else(|| fitted_step(spin));
    let quantum = evolve(spin, n_max)?;
    let classical = classical_fidelity_series_with(spin, alpha, n_max, l_max.unwrap_or_else(|| default_l_max(spin)))?;
    let rows: Vec<ComparisonRow> = quantum
        .entries
        .iter()
        .zip(&classical.entries)
        .map(|(q, c)| ComparisonRow {
            n: q.n,
            f_q_map: q.map,
            f_q_closed: q.closed,
            f_c: c.pipeline,
            diff_qc: (c.pipeline - q.map).abs(),
            diff_map_closed: q.deviation(),
        })
        .collect();
    if fitted {
        if let Some(worst) = rows.iter().max_by(|a, b| a.diff_qc.total_cmp(&b.diff_qc)) {
            if worst.diff_qc > tolerances::ORACLE {
                return Err(Error::consistency(
                    MODULE,
                    format!("classical and quantum fidelities differ by {:.3e} at n = {}", worst.diff_qc, worst.n),
                ));
            }
        }
    }
    Ok(rows)
}

fn sweep<F>(spins: &[SpinLabel], f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(SpinLabel) -> Result<Vec<Vec<Cell>>> + Sync,
{
    let blocks: Vec<Vec<Vec<Cell>>> = spins.par_iter().map(|&s| f(s)).collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Computes the table for a configuration without touching the filesystem.
pub fn build_table(config: &RunConfig) -> Result<Table> {
    config.validate()?;
    let spins = config.spins();
    match config.command {
        Command::QuantumEvolve => {
            let rows = sweep(&spins, |s| {
                let series = evolve(s, config.n_max_for(s)?)?;
                Ok(series
                    .entries
                    .iter()
                    .map(|e| {
                        vec![
                            Cell::Int(s.twice_j().into()),
                            Cell::Int(e.n),
                            Cell::Real(e.map),
                            Cell::Real(e.closed),
                            Cell::Real(e.deviation()),
                        ]
                    })
                    .collect())
            })?;
            Table::new(&["twice_j", "n", "F_Q_map", "F_Q_closed", "diff_map_closed"], rows)
        }
        Command::ClassicalWalk => {
            let rows = sweep(&spins, |s| {
                let alpha = config.alpha.unwrap_or_else(|| fitted_step(s));
                let l_max = config.l_max.unwrap_or_else(|| default_l_max(s));
                let series = classical_fidelity_series_with(s, alpha, config.n_max_for(s)?, l_max)?;
                Ok(series
                    .entries
                    .iter()
                    .map(|e| {
                        vec![
                            Cell::Int(s.twice_j().into()),
                            Cell::Int(e.n),
                            Cell::Real(alpha),
                            Cell::Real(e.c1),
                            Cell::Real(e.pipeline),
                            Cell::Real(e.closed),
                            Cell::Real((e.pipeline - e.closed).abs()),
                        ]
                    })
                    .collect())
            })?;
            Table::new(&["twice_j", "n", "alpha", "c1", "F_C", "F_C_closed", "diff"], rows)
        }
        Command::Compare => {
            let s = spins[0];
            let rows = compare(s, config.n_max_for(s)?, config.alpha, config.l_max)?
                .into_iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.n),
                        Cell::Real(r.f_q_map),
                        Cell::Real(r.f_q_closed),
                        Cell::Real(r.f_c),
                        Cell::Real(r.diff_qc),
                        Cell::Real(r.diff_map_closed),
                    ]
                })
                .collect();
            Table::new(&COMPARE_COLUMNS, rows)
        }
        Command::Trajectories => {
            let rows = sweep(&spins, |s| {
                let stats = trajectory_batch(s, config.n_max_for(s)?, config.samples, config.seed)?;
                Ok(stats
                    .steps
                    .iter()
                    .map(|step| {
                        let closed = closed_form_fidelity(s, step.n);
                        let z = if step.std_error > 0.0 { (step.mean - closed) / step.std_error } else { 0.0 };
                        vec![
                            Cell::Int(s.twice_j().into()),
                            Cell::Int(step.n),
                            Cell::Int(stats.samples as u64),
                            Cell::Real(step.mean),
                            Cell::Real(step.std_error),
                            Cell::Real(closed),
                            Cell::Real(z),
                        ]
                    })
                    .collect())
            })?;
            Table::new(&["twice_j", "n", "samples", "mean_F", "std_error", "F_closed", "z_score"], rows)
        }
        Command::CoherentTest => {
            let rows = sweep(&spins, |s| {
                let nodes = config.nodes.unwrap_or_else(|| default_nodes(s));
                (0..=config.n_max_for(s)?)
                    .map(|n| {
                        let study = convexity_study(s, n, nodes)?;
                        Ok(vec![
                            Cell::Int(s.twice_j().into()),
                            Cell::Int(n),
                            Cell::Int(study.nodes as u64),
                            Cell::Real(study.coarse.residual),
                            Cell::Int(study.refined_nodes as u64),
                            Cell::Real(study.refined.residual),
                            Cell::Real(study.relative_change),
                            Cell::Real(study.coarse.weight_sum_gap),
                            Cell::Text(study.verdict.to_string()),
                        ])
                    })
                    .collect()
            })?;
            Table::new(
                &[
                    "twice_j",
                    "n",
                    "nodes",
                    "residual",
                    "refined_nodes",
                    "refined_residual",
                    "relative_change",
                    "weight_sum_gap",
                    "verdict",
                ],
                rows,
            )
        }
        Command::Scaling => {
            let rows = sweep(&spins, |s| {
                let doubled = SpinLabel::from_twice(2 * s.twice_j());
                let (h, h2) = (half_life(s)?, half_life(doubled)?);
                Ok(vec![vec![
                    Cell::Int(s.twice_j().into()),
                    Cell::Real(h),
                    Cell::Int(doubled.twice_j().into()),
                    Cell::Real(h2),
                    Cell::Real(h2 / h),
                    Cell::Real(asymptotic_half_life(s)),
                ]])
            })?;
            Table::new(
                &["twice_j", "half_life", "doubled_twice_j", "doubled_half_life", "ratio", "asymptotic_half_life"],
                rows,
            )
        }
    }
}

/// Provenance written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub seed: u64,
    pub csv: PathBuf,
    pub rows: usize,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub timestamp_unix: u64,
}

/// What a completed run left on disk.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::domain(MODULE, format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn io_error(path: &Path, err: impl std::fmt::Display) -> Error {
    Error::domain(MODULE, format!("cannot write {}: {err}", path.display()))
}

/// Executes a configuration: builds the table on a pool sized by
/// [`THREADS_ENV`], writes the CSV, re-checks the compare schema, and writes
/// the manifest to the same path with a `.json` extension.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::domain(MODULE, format!("cannot start worker pool: {e}")))?;
    let table = pool.install(|| build_table(config))?;

    let csv_path = config.csv_path();
    let text = table.to_csv()?;
    if config.command == Command::Compare {
        check_compare_schema(&text)?;
    }
    std::fs::write(&csv_path, &text).map_err(|e| io_error(&csv_path, e))?;

    let manifest = Manifest {
        version: crate::VERSION,
        command: config.command.name(),
        config: config.clone(),
        seed: config.seed,
        csv: csv_path.clone(),
        rows: table.len(),
        threads: pool.current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    let manifest_path = csv_path.with_extension("json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| io_error(&manifest_path, e))?;
    std::fs::write(&manifest_path, json + "\n").map_err(|e| io_error(&manifest_path, e))?;
    Ok(RunSummary { csv: csv_path, manifest: manifest_path, rows: table.len() })
}
