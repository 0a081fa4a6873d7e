use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loblab_cli::run::resolve_out_dir;
use loblab_cli::{run_experiment, ConfigError, ExperimentConfig, Mode};

/// Limit order book experiments: discrete simulation, decompositions, the
/// scaling limit and convergence sweeps.
#[derive(Parser)]
#[command(name = "loblab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate discrete paths for every n and replication.
    Simulate(Common),
    /// Simulate paths and write their auxiliary decompositions.
    Decompose(Common),
    /// Solve the limiting system once per replication.
    Limit(Common),
    /// Compare discrete and limit samples across n; exits 1 if a trend verdict fails.
    Sweep(Common),
    /// Load and validate a configuration without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; defaults to `output.dir`, then $LOBLAB_OUT, then ./loblab-out.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("{e}");
        match e {
            ConfigError::Validation(_) | ConfigError::Parse { .. } => ExitCode::from(3),
            ConfigError::Io { .. } => ExitCode::from(2),
        }
    })
}

fn execute(mode: Mode, c: Common) -> ExitCode {
    let mut cfg = match load(&c.config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    if let Some(s) = c.seed {
        cfg.run.seed = s;
    }
    let out = resolve_out_dir(c.out.as_deref(), &cfg);
    match run_experiment(&cfg, mode, &out, c.jobs) {
        Ok(o) => {
            println!(
                "{}: {} tasks, {} files, manifest at {}",
                mode.name(),
                o.manifest.tasks.len(),
                o.manifest.inventory().len(),
                o.out_dir.join(loblab_cli::manifest::MANIFEST_FILE).display()
            );
            match o.report {
                Some(r) if !r.passed => {
                    for t in r.trends.iter().filter(|t| !t.test.pass) {
                        eprintln!("KS increased for {} from n={} to n={} (z = {:.2})", t.functional, t.from_n, t.to_n, t.test.z);
                    }
                    ExitCode::from(1)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate(c) => execute(Mode::Simulate, c),
        Command::Decompose(c) => execute(Mode::Decompose, c),
        Command::Limit(c) => execute(Mode::Limit, c),
        Command::Sweep(c) => execute(Mode::Sweep, c),
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!(
                    "ok: n_list {:?}, horizon {}, {} replications, seed {}",
                    cfg.run.n_list, cfg.run.horizon, cfg.run.replications, cfg.run.seed
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
