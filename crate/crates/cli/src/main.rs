//! `stochflow` command-line driver for weak, strong and deterministic
//! convergence experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stochflow::exec::Execution;
use stochflow::experiments::{
    run_convergence, run_strong, run_weak, ExperimentConfig, ExperimentReport,
};
use stochflow::random_data::EnsembleMode;

#[derive(Parser)]
#[command(
    name = "stochflow",
    version,
    about = "Ensemble experiments for stochastic barotropic flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// subcommand names are part of the interface
#[allow(clippy::enum_variant_names)]
#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo ensembles over the configured ladder.
    RunWeak(Common),
    /// Collocation ensembles over the configured ladder.
    RunStrong(Common),
    /// The `[convergence]` study of the config.
    RunConvergence(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, env = "STOCHFLOW_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading config {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        match self.threads {
            None | Some(0) => Execution::Parallel,
            Some(n) => Execution::threads(n),
        }
    }
}

fn ladder(common: &Common, mode: EnsembleMode) -> Result<()> {
    let cfg = common.load()?;
    let report = match mode {
        EnsembleMode::Weak => run_weak(&cfg, common.execution()),
        EnsembleMode::Strong => run_strong(&cfg, common.execution()),
    }?;
    emit(&cfg, &report)
}

fn emit(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    match &cfg.output_dir {
        Some(dir) => {
            for l in &report.levels {
                eprintln!(
                    "level {}: {} members, {} cells, unresolved weight {:.3}{}",
                    l.level,
                    l.members,
                    l.cells,
                    l.unresolved_weight,
                    if l.tainted { " (tainted)" } else { "" }
                );
            }
            eprintln!("wrote {}", dir.display());
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunWeak(c) => ladder(&c, EnsembleMode::Weak),
        Command::RunStrong(c) => ladder(&c, EnsembleMode::Strong),
        Command::RunConvergence(c) => {
            let cfg = c.load()?;
            let table = run_convergence(&cfg)?;
            match &cfg.output_dir {
                Some(dir) => eprintln!("wrote {}", dir.join("convergence.csv").display()),
                None => {
                    let mut out = Vec::new();
                    table.write_csv(&mut out)?;
                    print!("{}", String::from_utf8(out)?);
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
