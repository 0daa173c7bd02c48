use std::fs;
use std::path::{Path, PathBuf};

use super::checkpoint::{Checkpoint, FORMAT_VERSION};
use super::config::{Ablation, Algorithm, TrainConfig};
use super::metrics::{trailing_mean, EpisodeRow, MetricsWriter, METRICS_SCHEMA_VERSION};
use super::trainer::Trainer;
use super::HarnessError;

/// Temperatures compared by the sweep.
pub const ALPHA_SWEEP: [f64; 5] = [0.0, 0.001, 0.01, 0.1, 0.5];

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CONFIG_FILE: &str = "config.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const FAILURE_FILE: &str = "failure.txt";

/// Everything a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub pairs: Vec<(usize, usize)>,
    pub rows: Vec<EpisodeRow>,
    pub out: PathBuf,
}

impl RunRecord {
    pub fn returns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.return_mean).collect()
    }

    /// Mean return over the last 100 episodes.
    pub fn final_window_mean(&self) -> f64 {
        trailing_mean(&self.returns(), 100)
    }

    pub fn mean_ci(&self) -> Vec<f64> {
        self.rows.iter().map(|r| mean(&r.ci)).collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn write_manifest(dir: &Path) -> Result<(), HarnessError> {
    fs::write(
        dir.join(MANIFEST_FILE),
        format!(
            "crate = {} {}\nmetrics_schema = {METRICS_SCHEMA_VERSION}\ncheckpoint_format = {FORMAT_VERSION}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
        ),
    )?;
    Ok(())
}

/// Trains for `config.episodes` episodes into `config.out`: config echo,
/// version manifest, per-episode metrics and a final checkpoint. A failure
/// leaves a diagnostic file next to the partial metrics.
pub fn run_training(config: &TrainConfig) -> Result<RunRecord, HarnessError> {
    config.validate()?;
    let dir = config.out.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(CONFIG_FILE), config.to_text())?;
    write_manifest(&dir)?;
    let mut trainer = Trainer::new(config.clone())?;
    let pairs = trainer.pairs();
    let mut writer = MetricsWriter::create(&dir.join(METRICS_FILE), trainer.spec().n_agents(), &pairs)?;
    let rows = match trainer.train(config.episodes, Some(&mut writer)) {
        Ok(rows) => rows,
        Err(e) => {
            fs::write(
                dir.join(FAILURE_FILE),
                format!("episode = {}\nerror = {e}\n", trainer.episode()),
            )?;
            return Err(e);
        }
    };
    trainer.save(&dir.join(CHECKPOINT_FILE))?;
    Ok(RunRecord {
        config: config.clone(),
        pairs,
        rows,
        out: dir,
    })
}

/// Intervention arm, buffer-sampled arm, and their per-episode difference
/// in mean pair CI.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub intervention: RunRecord,
    pub no_intervention: RunRecord,
    pub ci_difference: Vec<f64>,
}

/// Runs the configuration twice, once estimating CI under the uniform
/// intervention and once with actions resampled from replayed behavior.
pub fn run_ablation_no_intervention(config: &TrainConfig) -> Result<AblationReport, HarnessError> {
    if config.alpha == 0.0 {
        log::warn!("alpha = 0: no intrinsic reward consumes CI, so both ablation arms train identically");
    }
    if config.algorithm == Algorithm::Maddpg {
        return Err(HarnessError::Config("the intervention ablation needs algorithm = scic".into()));
    }
    let arm = |ablation: Ablation, name: &str| {
        let mut c = config.clone();
        c.ablation = ablation;
        c.out = config.out.join(name);
        run_training(&c)
    };
    let intervention = arm(Ablation::None, "intervention")?;
    let no_intervention = arm(Ablation::NoIntervention, "no_intervention")?;
    let ci_difference: Vec<f64> = intervention
        .mean_ci()
        .iter()
        .zip(no_intervention.mean_ci())
        .map(|(a, b)| a - b)
        .collect();
    let mut w = csv::Writer::from_path(config.out.join("ci_difference.csv"))?;
    w.write_record(["episode", "ci_intervention_minus_replay"])?;
    for (e, d) in ci_difference.iter().enumerate() {
        w.write_record([e.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(AblationReport {
        intervention,
        no_intervention,
        ci_difference,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepArm {
    pub alpha: f64,
    pub final_mean_return: f64,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    /// In [`ALPHA_SWEEP`] order.
    pub arms: Vec<SweepArm>,
    /// Indices into `arms`, best final-window mean first.
    pub ranking: Vec<usize>,
    /// Plain centralized-critic run on the same seed.
    pub baseline: RunRecord,
}

impl SweepSummary {
    /// Whether the `alpha = 0` arm's returns equal the baseline's bitwise.
    pub fn zero_arm_matches_baseline(&self) -> bool {
        let zero = self.arms.iter().find(|a| a.alpha == 0.0);
        zero.is_some_and(|z| {
            let a = z.record.returns();
            let b = self.baseline.returns();
            a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits())
        })
    }
}

/// One run per temperature in [`ALPHA_SWEEP`] plus a baseline, all on the
/// same seed, in subdirectories of `config.out`; writes a ranked summary.
pub fn run_alpha_sweep(config: &TrainConfig) -> Result<SweepSummary, HarnessError> {
    let mut arms = Vec::with_capacity(ALPHA_SWEEP.len());
    for &alpha in &ALPHA_SWEEP {
        let mut c = config.clone();
        c.alpha = alpha;
        c.algorithm = Algorithm::Scic;
        c.ablation = Ablation::AlphaSweep;
        c.out = config.out.join(format!("alpha_{alpha}"));
        let record = run_training(&c)?;
        arms.push(SweepArm {
            alpha,
            final_mean_return: record.final_window_mean(),
            record,
        });
    }
    let mut base = config.clone();
    base.algorithm = Algorithm::Maddpg;
    base.ablation = Ablation::None;
    base.out = config.out.join("baseline");
    let baseline = run_training(&base)?;
    let mut ranking: Vec<usize> = (0..arms.len()).collect();
    ranking.sort_by(|&a, &b| arms[b].final_mean_return.total_cmp(&arms[a].final_mean_return));
    let mut w = csv::Writer::from_path(config.out.join("sweep_summary.csv"))?;
    w.write_record(["rank", "alpha", "final100_mean_return"])?;
    for (rank, &k) in ranking.iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            arms[k].alpha.to_string(),
            arms[k].final_mean_return.to_string(),
        ])?;
    }
    w.write_record([
        "baseline".to_string(),
        "-".to_string(),
        baseline.final_window_mean().to_string(),
    ])?;
    w.flush()?;
    Ok(SweepSummary {
        arms,
        ranking,
        baseline,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub mean: f64,
    pub std: f64,
    pub episodes: usize,
}

/// Noise-free rollouts of the policies stored in `checkpoint`.
/// `config` must describe the same task and architecture.
pub fn evaluate(
    checkpoint: &Path,
    config: &TrainConfig,
    episodes: usize,
    seed: u64,
) -> Result<EvalStats, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::Config("evaluation needs at least one episode".into()));
    }
    let trainer = Trainer::restore(config.clone(), &Checkpoint::load(checkpoint)?)?;
    let returns = trainer.rollout_returns(episodes, seed)?;
    let m = mean(&returns);
    let var = returns.iter().map(|r| (r - m).powi(2)).sum::<f64>() / returns.len() as f64;
    Ok(EvalStats {
        mean: m,
        std: var.sqrt(),
        episodes,
    })
}
