use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use paretolearn::error::{Error, Result};
use paretolearn::harness::{self, Outcome, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "paretolearn", version, about = "Payoff-based learning toward Pareto-efficient states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Game document (overrides the config's "game").
    #[arg(long)]
    game: Option<PathBuf>,
    /// Run configuration, or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: $PARETOLEARN_OUT/<subcommand>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Histogram rows at or below this fraction are dropped.
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated ε values for the resistance fits.
    #[arg(long, value_name = "EPS,EPS,...")]
    eps_grid: Option<String>,
    /// Use this ρ instead of the game's own; results are labelled unverified.
    #[arg(long, value_name = "RHO")]
    unverified_rho: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the learner and write the state histogram.
    Simulate(Common),
    /// Build the perturbed chain and report classes, potentials and checks.
    Analyze(Common),
    /// Pass/fail matrix of the structural checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Verify this many random interdependent games instead of --game.
        #[arg(long, value_name = "N")]
        random_games: Option<u64>,
    },
    /// Tabulate a ramp-metering game and learn a coordination pattern.
    Traffic {
        /// Freeway description (JSON).
        freeway: PathBuf,
        /// Demand days (JSON array).
        demands: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            game: self.game.clone(),
            seed: self.seed,
            threshold: self.threshold,
            eps_grid: self.eps_grid.as_deref().map(harness::parse_eps_grid).transpose()?,
            unverified_rho: self.unverified_rho,
        })
    }

    fn config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("--config is required".into()))?;
        Ok(RunConfig::load(path)?.with(&self.overrides()?))
    }

    fn out(&self, subcommand: &str) -> PathBuf {
        harness::resolve_out_dir(self.out.as_deref(), subcommand)
    }
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate(common) => harness::cmd_simulate(&common.config()?, &common.out("simulate")),
        Command::Analyze(common) => harness::cmd_analyze(&common.config()?, &common.out("analyze")),
        Command::Verify {
            common,
            random_games: Some(count),
        } => {
            let config = common.config.as_ref().map(|_| common.config()).transpose()?;
            let seed = common.seed.unwrap_or(1);
            harness::cmd_verify_random(config.as_ref(), count, seed, &common.out("verify"))
        }
        Command::Verify { common, .. } => harness::cmd_verify(&common.config()?, &common.out("verify")),
        Command::Traffic {
            freeway,
            demands,
            common,
        } => {
            let config = match &common.config {
                Some(_) => common.config()?,
                None => RunConfig::ramp_coordination(1).with(&common.overrides()?),
            };
            harness::cmd_traffic(&freeway, &demands, &config, &common.out("traffic"))
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.message);
            println!("wrote {}", outcome.out_dir.display());
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
