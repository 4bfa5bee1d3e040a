//! `critpass` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use critpass::experiments::{self, Experiment, ExperimentConfig};
use critpass::par;

#[derive(Parser)]
#[command(name = "critpass", version, about = "Nonadiabatic passage through a critical point with weak symmetry breaking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single trajectory with post-transition diagnostics.
    Trajectory(Common),
    /// Ensemble invariant jumps over a grid of ε.
    SweepEps(Common),
    /// Ensemble invariant jumps over a grid of initial actions, with fits.
    SweepAction(Common),
    /// Physical route versus a detour through larger ε.
    PathCompare(Common),
    /// Numerical check of the commuting pair and zero-curvature condition.
    VerifyPair(Common),
    /// Painlevé-II connection formula versus direct integration.
    P2Connection(Common),
    /// Excitation numbers over a grid of quench rates.
    KzScaling(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config (`section.key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, env = "CRITPASS_THREADS")]
    threads: Option<usize>,
    /// Config override, e.g. `--set run.n_traj=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, common) = match cli.command {
        Command::Trajectory(c) => (Experiment::Trajectory, c),
        Command::SweepEps(c) => (Experiment::SweepEps, c),
        Command::SweepAction(c) => (Experiment::SweepAction, c),
        Command::PathCompare(c) => (Experiment::PathCompare, c),
        Command::VerifyPair(c) => (Experiment::VerifyPair, c),
        Command::P2Connection(c) => (Experiment::P2Connection, c),
        Command::KzScaling(c) => (Experiment::KzScaling, c),
    };
    if let Some(n) = common.threads {
        if n > 0 {
            par::init_threads(n);
        }
    }
    let report = ExperimentConfig::load(common.config.as_deref(), &common.overrides)
        .and_then(|cfg| experiments::run(exp, &cfg, &common.out, common.seed));
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if exp == Experiment::VerifyPair {
        if let Ok(text) = std::fs::read_to_string(common.out.join("verify_pair.txt")) {
            print!("{text}");
        }
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(w) = report.summary.get("warnings").and_then(|w| w.as_array()) {
        for w in w {
            eprintln!("warning: {}", w.as_str().unwrap_or_default());
        }
    }
    println!("wrote {} files to {}", report.files.len(), common.out.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
