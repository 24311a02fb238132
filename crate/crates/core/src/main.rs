use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drfsim::harness::{self, Command, RunConfig, DEFAULT_SAMPLES, DEFAULT_SEED};
use drfsim::selftest::run_selftest;
use drfsim::Error;

/// Degradation of a spin-j reference frame under repeated probe measurements,
/// and the random walk on the sphere that reproduces it.
#[derive(Debug, Parser)]
#[command(name = "drfsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,

    /// Frame spin as 2j; a comma-separated list runs a sweep.
    #[arg(long = "twice-j", value_delimiter = ',', global = true, value_parser = clap::value_parser!(u32).range(1..))]
    twice_j: Vec<u32>,

    /// Last measurement step (default: ceil(5 × half-life) per spin).
    #[arg(long, global = true)]
    n_max: Option<u64>,

    /// Classical kick angle in radians (default: the fitted step).
    #[arg(long, global = true)]
    alpha: Option<f64>,

    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Trajectories per spin for the `trajectories` command.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,

    /// Legendre truncation order.
    #[arg(long, global = true)]
    l_max: Option<usize>,

    /// Coherent-state grid size for `coherent-test`.
    #[arg(long, global = true)]
    nodes: Option<usize>,

    /// CSV destination; the manifest goes alongside with a `.json` extension.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run the structural invariant suite before the command (or alone).
    #[arg(long, global = true)]
    selftest: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Fidelity of the iterated measurement map against the closed form.
    QuantumEvolve,
    /// Fidelity of the classical walk through its Legendre spectrum.
    ClassicalWalk,
    /// Quantum and classical fidelities side by side for one spin.
    Compare,
    /// Monte Carlo over measurement records.
    Trajectories,
    /// Non-negative fits of evolved frames by coherent states.
    CoherentTest,
    /// Half-lives under doubling of j.
    Scaling,
}

impl From<Sub> for Command {
    fn from(sub: Sub) -> Self {
        match sub {
            Sub::QuantumEvolve => Command::QuantumEvolve,
            Sub::ClassicalWalk => Command::ClassicalWalk,
            Sub::Compare => Command::Compare,
            Sub::Trajectories => Command::Trajectories,
            Sub::CoherentTest => Command::CoherentTest,
            Sub::Scaling => Command::Scaling,
        }
    }
}

const USAGE_STATUS: u8 = 2;

fn report(err: &Error) -> ExitCode {
    eprintln!("error[{}]: {err}", err.module());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.command.is_none() && !cli.selftest {
        eprintln!("error: nothing to do; give a command or --selftest (see --help)");
        return ExitCode::from(USAGE_STATUS);
    }

    if cli.selftest {
        let report = run_selftest(cli.seed);
        for check in &report.checks {
            eprintln!("{check}");
        }
        eprintln!("selftest: {} passed, {} failed", report.passed(), report.failed());
        if !report.all_passed() {
            return ExitCode::from(1);
        }
    }

    let Some(sub) = cli.command else {
        return ExitCode::SUCCESS;
    };
    let config = RunConfig {
        command: sub.into(),
        twice_j: cli.twice_j,
        n_max: cli.n_max,
        alpha: cli.alpha,
        seed: cli.seed,
        samples: cli.samples,
        l_max: cli.l_max,
        nodes: cli.nodes,
        out: cli.out,
    };
    if let Err(err) = config.validate() {
        eprintln!("error: {err}");
        return ExitCode::from(USAGE_STATUS);
    }
    match harness::run(&config) {
        Ok(summary) => {
            eprintln!("wrote {} rows to {} ({})", summary.rows, summary.csv.display(), summary.manifest.display());
            ExitCode::SUCCESS
        }
        Err(err) => report(&err),
    }
}
