mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use run::{Outcome, Run};

/// Delay observation maps of dynamical systems: simulate, embed, measure
/// injectivity margins, perturb observables and screen the hypotheses.
///
/// Exit status: 0 on success, 2 when a hypothesis or precondition fails,
/// 1 on error.
#[derive(Parser)]
#[command(name = "delaymap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Numeric CSV trajectory (header row) to import instead of simulating.
        #[arg(long)]
        import: Option<PathBuf>,
    },
    /// Write the delay vectors of a trajectory.
    Embed(Common),
    /// Measure the compatibility margin on a pair set.
    Margin(Common),
    /// Perturb the observable until the pair set is separated.
    Perturb(Common),
    /// Box-counting and covering dimension estimates.
    Dimension(Common),
    /// Check dim(P_n) < n/2 on the detected periodic points.
    Hypothesis(Common),
    /// Check a sampled flow against the sampling-time bound.
    Yorke(Common),
    /// Fraction of random perturbations that are compatible.
    Genericity(Common),
}

type Step = Box<dyn FnOnce(&Run) -> Result<Outcome>>;

fn execute(command: Command) -> Result<(Outcome, bool)> {
    let (common, step): (Common, Step) = match command {
        Command::Simulate { common, import } => (common, Box::new(move |r| run::simulate(r, import.as_deref()))),
        Command::Embed(c) => (c, Box::new(run::embed)),
        Command::Margin(c) => (c, Box::new(run::margin)),
        Command::Perturb(c) => (c, Box::new(run::perturb)),
        Command::Dimension(c) => (c, Box::new(run::dimension)),
        Command::Hypothesis(c) => (c, Box::new(run::hypothesis)),
        Command::Yorke(c) => (c, Box::new(run::yorke)),
        Command::Genericity(c) => (c, Box::new(run::genericity)),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    let seed = cfg.resolve_seed(common.seed)?;
    let outcome = step(&Run { cfg, seed, out: common.out })?;
    Ok((outcome, common.quiet))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok((Outcome::Done(line), quiet)) => {
            if !quiet {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Ok((Outcome::Violated(line), quiet)) => {
            if !quiet {
                println!("{line}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
