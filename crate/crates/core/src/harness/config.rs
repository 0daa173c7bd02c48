use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::HarnessError;
use crate::causal::{Aggregation, CausalConfig};
use crate::env::{TaskSpec, TaskVariant};
use crate::maddpg::{ActionMode, LearnerConfig};

/// Benchmark or synthetic task family; the agent count is a separate field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    PredatorPrey,
    Navigation,
    Line,
    SyntheticCoupled,
    SyntheticDecoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Centralized critics plus the causal intrinsic reward.
    Scic,
    /// Centralized critics only; no causal models are built.
    Maddpg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    None,
    NoIntervention,
    AlphaSweep,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($variant:path => $word:literal),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = HarnessError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($word => Ok($variant),)+
                    other => Err(HarnessError::Config(format!(
                        concat!("unknown ", $what, " '{}'"), other
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $word,)+ })
            }
        }
    };
}

keyword_enum!(TaskKind, "task",
    TaskKind::PredatorPrey => "predator_prey",
    TaskKind::Navigation => "navigation",
    TaskKind::Line => "line",
    TaskKind::SyntheticCoupled => "synthetic_coupled",
    TaskKind::SyntheticDecoupled => "synthetic_decoupled",
);
keyword_enum!(Algorithm, "algorithm",
    Algorithm::Scic => "scic",
    Algorithm::Maddpg => "maddpg",
);
keyword_enum!(Ablation, "ablation",
    Ablation::None => "none",
    Ablation::NoIntervention => "no_intervention",
    Ablation::AlphaSweep => "alpha_sweep",
);

fn parse_aggregation(s: &str) -> Result<Aggregation, HarnessError> {
    match s.trim() {
        "sum" => Ok(Aggregation::Sum),
        "mean" => Ok(Aggregation::Mean),
        other => Err(HarnessError::Config(format!("unknown aggregation '{other}'"))),
    }
}

fn aggregation_word(a: Aggregation) -> &'static str {
    match a {
        Aggregation::Sum => "sum",
        Aggregation::Mean => "mean",
    }
}

/// Every tunable of a run. The text form is one `key = value` per line with
/// keys equal to the field names.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub task: TaskKind,
    pub agents: usize,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub dynamics_lr: f64,
    pub statistic_lr: f64,
    pub mc_samples: usize,
    pub episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub ablation: Ablation,
    pub aggregation: Aggregation,
    pub batch_size: usize,
    pub warmup: usize,
    pub buffer_capacity: usize,
    /// Environment steps between learner updates.
    pub update_every: usize,
    pub tau: f64,
    pub hidden: Vec<usize>,
    pub causal_hidden: Vec<usize>,
    pub noise_start: f64,
    pub noise_end: f64,
    /// Gradient-norm cap for actor and critic steps; 0 disables clipping.
    pub grad_clip: f64,
    pub out: PathBuf,
    /// When false the `seconds` metrics column is written as 0 so that
    /// output files are byte-reproducible.
    pub wall_clock: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::Navigation,
            agents: 3,
            algorithm: Algorithm::Scic,
            alpha: 0.01,
            gamma: 0.95,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            dynamics_lr: 1e-3,
            statistic_lr: 1e-3,
            mc_samples: 64,
            episodes: 2000,
            max_steps: 25,
            seed: 0,
            ablation: Ablation::None,
            aggregation: Aggregation::Sum,
            batch_size: 256,
            warmup: 1024,
            buffer_capacity: 100_000,
            update_every: 25,
            tau: 0.01,
            hidden: vec![64, 64],
            causal_hidden: vec![64],
            noise_start: 0.3,
            noise_end: 0.05,
            grad_clip: 0.5,
            out: PathBuf::from("runs/default"),
            wall_clock: true,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value '{value}' for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, HarnessError> {
    value
        .split(',')
        .map(|v| parse_num(key, v))
        .collect()
}

fn join_list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl TrainConfig {
    pub const KEYS: [&'static str; 27] = [
        "task", "agents", "algorithm", "alpha", "gamma", "actor_lr", "critic_lr",
        "dynamics_lr", "statistic_lr", "mc_samples", "episodes", "max_steps", "seed",
        "ablation", "aggregation", "batch_size", "warmup", "buffer_capacity",
        "update_every", "tau", "hidden", "causal_hidden", "noise_start", "noise_end",
        "grad_clip", "out", "wall_clock",
    ];

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let v = value.trim();
        match key.trim() {
            "task" => self.task = v.parse()?,
            "agents" => self.agents = parse_num(key, v)?,
            "algorithm" => self.algorithm = v.parse()?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "actor_lr" => self.actor_lr = parse_num(key, v)?,
            "critic_lr" => self.critic_lr = parse_num(key, v)?,
            "dynamics_lr" => self.dynamics_lr = parse_num(key, v)?,
            "statistic_lr" => self.statistic_lr = parse_num(key, v)?,
            "mc_samples" => self.mc_samples = parse_num(key, v)?,
            "episodes" => self.episodes = parse_num(key, v)?,
            "max_steps" => self.max_steps = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "ablation" => self.ablation = v.parse()?,
            "aggregation" => self.aggregation = parse_aggregation(v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "warmup" => self.warmup = parse_num(key, v)?,
            "buffer_capacity" => self.buffer_capacity = parse_num(key, v)?,
            "update_every" => self.update_every = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "hidden" => self.hidden = parse_list(key, v)?,
            "causal_hidden" => self.causal_hidden = parse_list(key, v)?,
            "noise_start" => self.noise_start = parse_num(key, v)?,
            "noise_end" => self.noise_end = parse_num(key, v)?,
            "grad_clip" => self.grad_clip = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "wall_clock" => self.wall_clock = parse_num(key, v)?,
            other => return Err(HarnessError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "task" => self.task.to_string(),
            "agents" => self.agents.to_string(),
            "algorithm" => self.algorithm.to_string(),
            "alpha" => self.alpha.to_string(),
            "gamma" => self.gamma.to_string(),
            "actor_lr" => self.actor_lr.to_string(),
            "critic_lr" => self.critic_lr.to_string(),
            "dynamics_lr" => self.dynamics_lr.to_string(),
            "statistic_lr" => self.statistic_lr.to_string(),
            "mc_samples" => self.mc_samples.to_string(),
            "episodes" => self.episodes.to_string(),
            "max_steps" => self.max_steps.to_string(),
            "seed" => self.seed.to_string(),
            "ablation" => self.ablation.to_string(),
            "aggregation" => aggregation_word(self.aggregation).to_string(),
            "batch_size" => self.batch_size.to_string(),
            "warmup" => self.warmup.to_string(),
            "buffer_capacity" => self.buffer_capacity.to_string(),
            "update_every" => self.update_every.to_string(),
            "tau" => self.tau.to_string(),
            "hidden" => join_list(&self.hidden),
            "causal_hidden" => join_list(&self.causal_hidden),
            "noise_start" => self.noise_start.to_string(),
            "noise_end" => self.noise_end.to_string(),
            "grad_clip" => self.grad_clip.to_string(),
            "out" => self.out.display().to_string(),
            "wall_clock" => self.wall_clock.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, HarnessError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// All fields in canonical order; parses back to an equal config.
    pub fn to_text(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("every key has a value")))
            .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        let rates = [
            self.actor_lr,
            self.critic_lr,
            self.dynamics_lr,
            self.statistic_lr,
        ];
        if rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("learning rates must be positive");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.tau) {
            return bad("gamma and tau must lie in [0, 1]");
        }
        if self.mc_samples < 2 {
            return bad("mc_samples must be at least 2");
        }
        if self.episodes == 0 || self.max_steps == 0 {
            return bad("episodes and max_steps must be positive");
        }
        if self.batch_size == 0 || self.update_every == 0 || self.buffer_capacity == 0 {
            return bad("batch_size, update_every and buffer_capacity must be positive");
        }
        if self.batch_size > self.buffer_capacity {
            return bad("batch_size exceeds buffer_capacity");
        }
        if self.hidden.contains(&0) || self.causal_hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.noise_start >= 0.0 && self.noise_end >= 0.0 && self.grad_clip >= 0.0) {
            return bad("noise scales and grad_clip must be non-negative");
        }
        self.task_spec()?.validate()?;
        Ok(())
    }

    pub fn task_spec(&self) -> Result<TaskSpec, HarnessError> {
        let n = self.agents;
        let variant = match self.task {
            TaskKind::PredatorPrey => TaskVariant::PredatorPrey { predators: n },
            TaskKind::Navigation => TaskVariant::CooperativeNavigation { agents: n },
            TaskKind::Line => TaskVariant::CooperativeLine { agents: n },
            TaskKind::SyntheticCoupled | TaskKind::SyntheticDecoupled if n != 2 => {
                return Err(HarnessError::Config("synthetic tasks have exactly 2 agents".into()))
            }
            TaskKind::SyntheticCoupled => TaskVariant::SyntheticCoupled,
            TaskKind::SyntheticDecoupled => TaskVariant::SyntheticDecoupled,
        };
        Ok(TaskSpec::new(variant).with_max_episode_length(self.max_steps))
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            hidden: self.hidden.clone(),
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            gamma: self.gamma,
            tau: self.tau,
            alpha: self.alpha,
            mc_samples: self.mc_samples,
            aggregation: self.aggregation,
            action_mode: match self.ablation {
                Ablation::NoIntervention => ActionMode::Replay,
                _ => ActionMode::Intervention,
            },
            grad_clip: (self.grad_clip > 0.0).then_some(self.grad_clip),
            causal: match self.algorithm {
                Algorithm::Scic => Some(CausalConfig {
                    hidden: self.causal_hidden.clone(),
                    dynamics_lr: self.dynamics_lr,
                    statistic_lr: self.statistic_lr,
                }),
                Algorithm::Maddpg => None,
            },
        }
    }

    /// Exploration scale for `episode`, decaying linearly over the run.
    pub fn noise_at(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.noise_start;
        }
        let frac = (episode as f64 / (self.episodes - 1) as f64).min(1.0);
        self.noise_start + (self.noise_end - self.noise_start) * frac
    }
}
