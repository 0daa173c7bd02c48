use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scic::harness::{
    evaluate, run_ablation_no_intervention, run_alpha_sweep, run_training, HarnessError, TrainConfig,
};

#[derive(Parser)]
#[command(version, about = "Causal-influence intrinsic rewards for multi-agent actor-critic training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run.
    Train(Overrides),
    /// Greedy rollouts of a saved checkpoint.
    Evaluate {
        #[command(flatten)]
        overrides: Overrides,
        /// Checkpoint file to load.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        eval_episodes: usize,
    },
    /// Intervention vs replay-sampled CI ablation.
    Ablate(Overrides),
    /// One run per temperature plus a baseline.
    Sweep(Overrides),
}

/// Each flag mirrors a config field; flags override the config file.
#[derive(Args)]
struct Overrides {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    agents: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    #[arg(long = "mc-samples")]
    mc_samples: Option<String>,
    #[arg(long)]
    ablation: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Any other field, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<TrainConfig, HarnessError> {
        let mut c = match &self.config {
            Some(p) => TrainConfig::from_file(p)?,
            None => TrainConfig::default(),
        };
        let flags = [
            ("task", &self.task),
            ("agents", &self.agents),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("episodes", &self.episodes),
            ("mc_samples", &self.mc_samples),
            ("ablation", &self.ablation),
            ("algorithm", &self.algorithm),
            ("out", &self.out),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("--set expects key=value, got '{kv}'")))?;
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train(o) => {
            let rec = run_training(&o.resolve()?)?;
            println!(
                "{} episodes, final-100 mean return {:.4}, output in {}",
                rec.rows.len(),
                rec.final_window_mean(),
                rec.out.display()
            );
        }
        Command::Evaluate {
            overrides,
            checkpoint,
            eval_episodes,
        } => {
            let c = overrides.resolve()?;
            let stats = evaluate(&checkpoint, &c, eval_episodes, c.seed)?;
            println!("mean return {:.4} +- {:.4} over {} episodes", stats.mean, stats.std, stats.episodes);
        }
        Command::Ablate(o) => {
            let rep = run_ablation_no_intervention(&o.resolve()?)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            println!(
                "mean CI difference (intervention - replay): {:.4}",
                mean(&rep.ci_difference)
            );
        }
        Command::Sweep(o) => {
            let s = run_alpha_sweep(&o.resolve()?)?;
            for (rank, &k) in s.ranking.iter().enumerate() {
                println!("{}. alpha {:<6} final-100 mean {:.4}", rank + 1, s.arms[k].alpha, s.arms[k].final_mean_return);
            }
            println!("baseline final-100 mean {:.4}", s.baseline.final_window_mean());
            println!("alpha 0 matches baseline: {}", s.zero_arm_matches_baseline());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
