use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{ArrayData, Checkpoint};
use super::config::TrainConfig;
use super::metrics::{trailing_mean, EpisodeRow, MetricsWriter};
use super::HarnessError;
use crate::env::{Environment, TaskSpec};
use crate::maddpg::{Maddpg, ReplayBuffer, Transition, UpdateReport};
use crate::{Net, Optimizer};

const STREAM_ENV: u64 = 0;
const STREAM_EXPLORE: u64 = 1;
const STREAM_SAMPLE: u64 = 2;
const STREAM_CAUSAL: u64 = 3;
const STREAM_NETWORK: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Independent generator streams derived from the run seed.
#[derive(Debug, Clone, PartialEq)]
struct Streams {
    /// Per-episode reset seeds.
    env: ChaCha8Rng,
    explore: ChaCha8Rng,
    sample: ChaCha8Rng,
    causal: ChaCha8Rng,
}

const STREAM_NAMES: [&str; 4] = ["env", "explore", "sample", "causal"];

impl Streams {
    fn all(&self) -> [&ChaCha8Rng; 4] {
        [&self.env, &self.explore, &self.sample, &self.causal]
    }

    fn all_mut(&mut self) -> [&mut ChaCha8Rng; 4] {
        [&mut self.env, &mut self.explore, &mut self.sample, &mut self.causal]
    }
}

/// Owns every piece of mutable training state.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    spec: TaskSpec,
    learner: Maddpg,
    buffer: ReplayBuffer,
    streams: Streams,
    episode: usize,
    total_steps: u64,
    returns: Vec<f64>,
}

/// Pair order used by both the learner and the metrics columns.
pub(crate) fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let spec = config.task_spec()?;
        let obs_dims = vec![spec.obs_dim(); spec.n_agents()];
        let mut net_rng = stream(config.seed, STREAM_NETWORK);
        let mut streams = Streams {
            env: stream(config.seed, STREAM_ENV),
            explore: stream(config.seed, STREAM_EXPLORE),
            sample: stream(config.seed, STREAM_SAMPLE),
            causal: stream(config.seed, STREAM_CAUSAL),
        };
        let learner = Maddpg::new(
            &obs_dims,
            spec.action_dim(),
            spec.state_dim(),
            config.learner_config(),
            &mut net_rng,
            &mut streams.causal,
        )?;
        let buffer = ReplayBuffer::new(config.buffer_capacity, &obs_dims, spec.action_dim())?;
        Ok(Self {
            config,
            spec,
            learner,
            buffer,
            streams,
            episode: 0,
            total_steps: 0,
            returns: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn learner(&self) -> &Maddpg {
        &self.learner
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Number of completed episodes.
    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        ordered_pairs(self.spec.n_agents())
    }

    /// One exploring episode with updates every `update_every` steps.
    pub fn run_episode(&mut self) -> Result<EpisodeRow, HarnessError> {
        let started = Instant::now();
        let noise = self.config.noise_at(self.episode);
        let n_agents = self.spec.n_agents();
        let n_pairs = n_agents * (n_agents - 1);
        let (mut env, mut obs) = Environment::reset(self.spec, self.streams.env.next_u64())?;
        let mut ep_return = 0.0;
        let mut intrinsic_sum = vec![0.0; n_agents];
        let mut ci_sum = vec![0.0; n_pairs];
        let mut reported = 0usize;
        for _ in 0..self.config.max_steps {
            let actions = self.learner.act(&obs, noise, &mut self.streams.explore)?;
            let result = env.step(&actions)?;
            ep_return += result.extrinsic_reward;
            self.buffer.push(&Transition {
                observations: obs,
                actions,
                reward: result.extrinsic_reward,
                next_observations: result.observations.clone(),
                done: result.done,
            })?;
            obs = result.observations;
            self.total_steps += 1;
            if self.total_steps.is_multiple_of(self.config.update_every as u64) {
                if let Some(report) = self.update()? {
                    if !report.intrinsic_means.is_empty() {
                        accumulate(&mut intrinsic_sum, &report.intrinsic_means);
                        accumulate(&mut ci_sum, &report.pair_ci_means);
                        reported += 1;
                    }
                }
            }
            if result.done {
                break;
            }
        }
        if reported > 0 {
            for v in intrinsic_sum.iter_mut().chain(ci_sum.iter_mut()) {
                *v /= reported as f64;
            }
        }
        self.returns.push(ep_return);
        let row = EpisodeRow {
            episode: self.episode,
            return_mean: ep_return,
            return_trailing100: trailing_mean(&self.returns, 100),
            intrinsic: intrinsic_sum,
            ci: ci_sum,
            seconds: if self.config.wall_clock {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        self.episode += 1;
        Ok(row)
    }

    fn update(&mut self) -> Result<Option<UpdateReport>, HarnessError> {
        Ok(self.learner.update(
            &self.buffer,
            self.config.batch_size,
            self.config.warmup.max(self.config.batch_size),
            &mut self.streams.sample,
            &mut self.streams.causal,
        )?)
    }

    /// Runs `episodes` more episodes, streaming rows to `writer` if given.
    pub fn train(
        &mut self,
        episodes: usize,
        mut writer: Option<&mut MetricsWriter>,
    ) -> Result<Vec<EpisodeRow>, HarnessError> {
        let mut rows = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let row = self.run_episode()?;
            if let Some(w) = writer.as_deref_mut() {
                w.write(&row)?;
            }
            log::debug!("episode {} return {:.3}", row.episode, row.return_mean);
            rows.push(row);
        }
        Ok(rows)
    }

    /// Greedy rollouts from reset seeds derived from `seed`; returns each
    /// episode's extrinsic return. Does not touch training state.
    pub fn rollout_returns(&self, episodes: usize, seed: u64) -> Result<Vec<f64>, HarnessError> {
        let mut seeds = stream(seed, STREAM_ENV);
        let mut unused = stream(seed, STREAM_EXPLORE);
        (0..episodes)
            .map(|_| {
                let (mut env, mut obs) = Environment::reset(self.spec, seeds.next_u64())?;
                let mut total = 0.0;
                for _ in 0..self.config.max_steps {
                    let actions = self.learner.act(&obs, 0.0, &mut unused)?;
                    let r = env.step(&actions)?;
                    total += r.extrinsic_reward;
                    obs = r.observations;
                    if r.done {
                        break;
                    }
                }
                Ok(total)
            })
            .collect()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(self.config.to_text());
        let mut meta = vec![
            self.spec.n_agents() as u64,
            self.learner.action_dim() as u64,
            self.learner.state_dim() as u64,
            self.episode as u64,
            self.total_steps,
        ];
        meta.extend(self.learner.obs_dims().iter().map(|&d| d as u64));
        ck.push_u64("meta", &meta);
        ck.push_f64("returns", &self.returns);
        for (i, a) in self.learner.agents.iter().enumerate() {
            put_net(&mut ck, &format!("agent{i}.actor"), &a.actor.net, Some(&a.actor.optimizer));
            put_net(&mut ck, &format!("agent{i}.critic"), &a.critic.net, Some(&a.critic.optimizer));
            put_net(&mut ck, &format!("agent{i}.target_actor"), &a.target.actor, None);
            put_net(&mut ck, &format!("agent{i}.target_critic"), &a.target.critic, None);
        }
        if let Some(causal) = &self.learner.causal {
            for p in causal.pairs() {
                let (i, j) = (p.dynamics.source, p.dynamics.target);
                put_net(&mut ck, &format!("pair{i}_{j}.dynamics"), p.dynamics.net(), Some(p.dynamics.optimizer()));
                put_net(&mut ck, &format!("pair{i}_{j}.statistic"), p.statistic.net(), Some(p.statistic.optimizer()));
            }
        }
        let (obs, actions, rewards, next_obs, dones) = self.buffer.raw_parts();
        ck.push_u64(
            "buffer.meta",
            &[self.buffer.capacity() as u64, self.buffer.cursor() as u64],
        );
        ck.push_f64("buffer.obs", obs);
        ck.push_f64("buffer.actions", actions);
        ck.push_f64("buffer.rewards", rewards);
        ck.push_f64("buffer.next_obs", next_obs);
        ck.push(
            "buffer.dones",
            &[dones.len()],
            ArrayData::U8(dones.iter().map(|&d| u8::from(d)).collect()),
        );
        for (name, rng) in STREAM_NAMES.iter().zip(self.streams.all()) {
            ck.push(format!("rng.{name}.seed"), &[32], ArrayData::U8(rng.get_seed().to_vec()));
            let pos = rng.get_word_pos();
            ck.push_u64(
                format!("rng.{name}.state"),
                &[rng.get_stream(), pos as u64, (pos >> 64) as u64],
            );
        }
        ck
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), HarnessError> {
        self.checkpoint().save(path)
    }

    /// Rebuilds a trainer for `config` and overwrites its state from `ck`.
    /// Architecture-defining fields must agree with the checkpoint's echo.
    pub fn restore(config: TrainConfig, ck: &Checkpoint) -> Result<Self, HarnessError> {
        let saved = TrainConfig::from_text(&ck.config_echo)
            .map_err(|e| HarnessError::CorruptCheckpoint(format!("config echo: {e}")))?;
        for key in ["task", "agents", "algorithm", "hidden", "causal_hidden"] {
            if saved.get(key) != config.get(key) {
                return Err(HarnessError::CheckpointMismatch(format!(
                    "{key}: checkpoint has {}, config has {}",
                    saved.get(key).unwrap_or_default(),
                    config.get(key).unwrap_or_default()
                )));
            }
        }
        let mut t = Self::new(config)?;
        let meta = ck.u64s("meta")?;
        let n = t.spec.n_agents();
        let mut expected = vec![n as u64, t.learner.action_dim() as u64, t.learner.state_dim() as u64];
        expected.extend(t.learner.obs_dims().iter().map(|&d| d as u64));
        if meta.len() != 5 + n || meta[..3] != expected[..3] || meta[5..] != expected[3..] {
            return Err(HarnessError::CheckpointMismatch("agent count or dimensions differ".into()));
        }
        t.episode = meta[3] as usize;
        t.total_steps = meta[4];
        t.returns = ck.f64s("returns")?.to_vec();
        if t.returns.len() != t.episode {
            return Err(HarnessError::CorruptCheckpoint("return history length".into()));
        }
        for (i, a) in t.learner.agents.iter_mut().enumerate() {
            restore_net(ck, &format!("agent{i}.actor"), &mut a.actor.net, Some(&mut a.actor.optimizer))?;
            restore_net(ck, &format!("agent{i}.critic"), &mut a.critic.net, Some(&mut a.critic.optimizer))?;
            restore_net(ck, &format!("agent{i}.target_actor"), &mut a.target.actor, None)?;
            restore_net(ck, &format!("agent{i}.target_critic"), &mut a.target.critic, None)?;
        }
        if let Some(causal) = &mut t.learner.causal {
            for p in causal.pairs_mut() {
                let (i, j) = (p.dynamics.source, p.dynamics.target);
                let mut opt = p.dynamics.optimizer().clone();
                restore_net(ck, &format!("pair{i}_{j}.dynamics"), p.dynamics.net_mut(), Some(&mut opt))?;
                p.dynamics.set_optimizer(opt).map_err(crate::maddpg::MaddpgError::from)?;
                let mut opt = p.statistic.optimizer().clone();
                restore_net(ck, &format!("pair{i}_{j}.statistic"), p.statistic.net_mut(), Some(&mut opt))?;
                p.statistic.set_optimizer(opt).map_err(crate::maddpg::MaddpgError::from)?;
            }
        }
        let bmeta = ck.u64s("buffer.meta")?;
        if bmeta.len() != 2 || bmeta[0] as usize != t.buffer.capacity() {
            return Err(HarnessError::CheckpointMismatch("buffer capacity differs".into()));
        }
        t.buffer = ReplayBuffer::from_raw_parts(
            t.buffer.capacity(),
            t.learner.obs_dims(),
            t.learner.action_dim(),
            ck.f64s("buffer.obs")?.to_vec(),
            ck.f64s("buffer.actions")?.to_vec(),
            ck.f64s("buffer.rewards")?.to_vec(),
            ck.f64s("buffer.next_obs")?.to_vec(),
            ck.u8s("buffer.dones")?.iter().map(|&d| d != 0).collect(),
            bmeta[1] as usize,
        )
        .map_err(|e| HarnessError::CorruptCheckpoint(e.to_string()))?;
        for (name, rng) in STREAM_NAMES.iter().zip(t.streams.all_mut()) {
            let seed: [u8; 32] = ck
                .u8s(&format!("rng.{name}.seed"))?
                .try_into()
                .map_err(|_| HarnessError::CorruptCheckpoint(format!("rng.{name}.seed")))?;
            let state = ck.u64s(&format!("rng.{name}.state"))?;
            if state.len() != 3 {
                return Err(HarnessError::CorruptCheckpoint(format!("rng.{name}.state")));
            }
            let mut r = ChaCha8Rng::from_seed(seed);
            r.set_stream(state[0]);
            r.set_word_pos(u128::from(state[1]) | (u128::from(state[2]) << 64));
            *rng = r;
        }
        Ok(t)
    }

    pub fn load(config: TrainConfig, path: &std::path::Path) -> Result<Self, HarnessError> {
        Self::restore(config, &Checkpoint::load(path)?)
    }
}

fn accumulate(sum: &mut [f64], values: &[f64]) {
    for (s, v) in sum.iter_mut().zip(values) {
        *s += v;
    }
}

fn put_net(ck: &mut Checkpoint, name: &str, net: &Net, opt: Option<&Optimizer>) {
    ck.push_u64(
        format!("{name}.layers"),
        &net.layer_sizes().iter().map(|&s| s as u64).collect::<Vec<_>>(),
    );
    ck.push_f64(format!("{name}.params"), net.params());
    if let Some(o) = opt {
        ck.push_f64(format!("{name}.adam_m"), o.first_moment());
        ck.push_f64(format!("{name}.adam_v"), o.second_moment());
        ck.push_u64(format!("{name}.adam_step"), &[o.step_count()]);
    }
}

fn restore_net(
    ck: &Checkpoint,
    name: &str,
    net: &mut Net,
    opt: Option<&mut Optimizer>,
) -> Result<(), HarnessError> {
    let layers: Vec<usize> = ck.u64s(&format!("{name}.layers"))?.iter().map(|&s| s as usize).collect();
    if layers != net.layer_sizes() {
        return Err(HarnessError::CheckpointMismatch(format!("{name}: layer sizes differ")));
    }
    net.set_params(ck.f64s(&format!("{name}.params"))?)
        .map_err(|e| HarnessError::CheckpointMismatch(format!("{name}: {e}")))?;
    if let Some(o) = opt {
        let step = ck.u64s(&format!("{name}.adam_step"))?;
        let restored = Optimizer::from_state(
            o.lr,
            ck.f64s(&format!("{name}.adam_m"))?.to_vec(),
            ck.f64s(&format!("{name}.adam_v"))?.to_vec(),
            step.first().copied().unwrap_or(0),
        )
        .map_err(|e| HarnessError::CheckpointMismatch(format!("{name}: {e}")))?;
        if restored.first_moment().len() != net.parameter_count() {
            return Err(HarnessError::CheckpointMismatch(format!("{name}: optimizer length")));
        }
        *o = restored;
    }
    Ok(())
}
