use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpbandit::{NoiseShape, PolicyKind, ScheduleMode};
use dpbandit_bench::config::{EnvConfig, ReplaySection};
use dpbandit_bench::experiments;
use dpbandit_bench::fixture::{self, FixtureSpec};
use dpbandit_bench::output::write_outcome;
use dpbandit_bench::sim::World;
use dpbandit_bench::{ExperimentConfig, ExperimentKind, Result};

#[derive(Parser)]
#[command(name = "dpbandit", version, about = "Private linear contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulative pseudo-regret on the synthetic world.
    Regret(Common),
    /// Cumulative reward, normalized by a uniform policy, on replay data.
    ReplayReward(Common),
    /// Distance between the (private) estimate and θ* over time.
    ParamError(Common),
    /// Final regret of the private policies across a grid of ε.
    EpsSweep(Common),
    /// Selections that change after one reward is modified.
    ArmChange(Common),
    /// Write a small replay dataset (features.csv, interactions.csv).
    GenFixture {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Print the empirical λ₀ for the configured environment.
    EstimateLambda0(Common),
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Repeat to select several policies.
    #[arg(long = "policy")]
    policies: Vec<PolicyKind>,
    #[arg(long)]
    noise_shape: Option<NoiseShape>,
    #[arg(long)]
    schedule: Option<ScheduleMode>,
}

impl Common {
    /// Config file (or defaults) with flags applied on top.
    /// `kind` overrides the experiment named in the file, if any.
    fn resolve(&self, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let mut cfg = ExperimentConfig::default();
                if kind == Some(ExperimentKind::ReplayReward) {
                    cfg.env = EnvConfig::Replay(ReplaySection::default());
                }
                cfg
            }
        };
        if let Some(kind) = kind {
            cfg.experiment = kind;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.epsilon {
            cfg.privacy.epsilon = v;
        }
        if let Some(v) = self.delta {
            cfg.privacy.delta = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if !self.policies.is_empty() {
            cfg.policies = self.policies.clone();
        }
        if let Some(v) = self.noise_shape {
            cfg.privacy.noise_shape = v;
        }
        if let Some(v) = self.schedule {
            cfg.privacy.schedule = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_experiment(common: &Common, kind: ExperimentKind) -> Result<()> {
    let cfg = common.resolve(Some(kind))?;
    let outcome = experiments::run(&cfg)?;
    let files = write_outcome(&cfg, &outcome)?;
    println!("{}", files.csv.display());
    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("json"));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Regret(c) => run_experiment(&c, ExperimentKind::Regret),
        Command::ReplayReward(c) => run_experiment(&c, ExperimentKind::ReplayReward),
        Command::ParamError(c) => run_experiment(&c, ExperimentKind::ParamError),
        Command::EpsSweep(c) => run_experiment(&c, ExperimentKind::EpsSweep),
        Command::ArmChange(c) => run_experiment(&c, ExperimentKind::ArmChange),
        Command::GenFixture { seed, out } => {
            let (f, i) = fixture::generate(&out, seed, &FixtureSpec::default())?;
            println!("{}\n{}", f.display(), i.display());
            Ok(())
        }
        Command::EstimateLambda0(c) => {
            let mut cfg = c.resolve(None)?;
            cfg.privacy.lambda0 = None;
            let world = World::build(&cfg)?;
            println!("{}", world.lambda0);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
