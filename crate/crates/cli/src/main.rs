mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use commands::{Outcome, SimArgs};
use config::{load_protocol, Experiment, Settings, SimChoice};
use popsim::protocols::LIVENESS_WINDOW;
use popsim::ModelName;

#[derive(Parser)]
#[command(name = "popsim", version, about = "Simulate two-way population protocols under one-way and omissive models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set seed=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn experiment(&self) -> Result<Experiment> {
        let mut s = Settings::load(self.config.as_deref())?;
        s.apply_overrides(|k| std::env::var(k).ok(), &self.set)?;
        Experiment::from_settings(&s)
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Simulator: direct, inert, sid, naming or kno:<o>.
    #[arg(long, default_value = "kno:1")]
    simulator: String,
    /// Interaction model; defaults to one the simulator supports.
    #[arg(long)]
    model: Option<String>,
    /// Built-in protocol name or path to a table file.
    #[arg(long, default_value = "pairing")]
    protocol: String,
    /// Depth cap for the searches.
    #[arg(long, default_value_t = 64)]
    cap: usize,
}

impl TargetArgs {
    /// `strict` rejects simulator/model pairs the simulator is not built
    /// for; the attack command deliberately runs on those.
    fn resolve(&self, strict: bool) -> Result<SimArgs> {
        let simulator = SimChoice::parse(&self.simulator)?;
        let model = match &self.model {
            Some(m) => m.parse::<ModelName>()?,
            None => simulator.default_model(),
        };
        if strict {
            simulator.check_model(model)?;
        }
        Ok(SimArgs { protocol: load_protocol(&self.protocol)?, simulator, model })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, writing trace.jsonl and report.jsonl to the output directory.
    Run(ExperimentArgs),
    /// Run one experiment per seed in `from..to`.
    Batch {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, default_value_t = 0)]
        from: u64,
        #[arg(long, default_value_t = 10)]
        to: u64,
        /// Also write trace-<seed>.jsonl per run.
        #[arg(long)]
        traces: bool,
    },
    /// Check a recorded trace.
    Verify {
        trace: PathBuf,
        /// Also check the pairing properties.
        #[arg(long)]
        pairing: bool,
        /// Liveness window as a fraction of the run.
        #[arg(long, default_value_t = LIVENESS_WINDOW)]
        window: f64,
    },
    /// Re-execute a recorded trace and report the first difference.
    Replay { trace: PathBuf },
    /// Fastest transition time of a two-agent system.
    Ftt {
        #[command(flatten)]
        target: TargetArgs,
        /// Initial states, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "p,c")]
        from: Vec<String>,
    },
    /// Build and replay the counterexample run for an omissive model.
    Attack {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value = "p")]
        q0: String,
        #[arg(long, default_value = "c")]
        q1: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the legal-omission rewrite (T1, I1, I2).
        #[arg(long)]
        rewrite: bool,
    },
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Run(a) => commands::cmd_run(&a.experiment()?),
        Command::Batch { exp, from, to, traces } => {
            if from >= to {
                bail!("config error: empty seed range {from}..{to}");
            }
            commands::cmd_batch(&exp.experiment()?, from..to, traces)
        }
        Command::Verify { trace, pairing, window } => commands::cmd_verify(&trace, pairing, window),
        Command::Replay { trace } => commands::cmd_replay(&trace),
        Command::Ftt { target, from } => commands::cmd_ftt(&target.resolve(true)?, &from, target.cap),
        Command::Attack { target, q0, q1, seed, rewrite } => {
            commands::cmd_attack(&target.resolve(false)?, &q0, &q1, target.cap, seed, rewrite)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(out) => {
            println!("{}", out.report);
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
