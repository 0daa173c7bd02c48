//! Centralized-critic, decentralized-actor learning with the causal
//! intrinsic term folded into each critic's bootstrap target.

mod buffer;
mod loss;
mod networks;

pub use buffer::{Batch, ReplayBuffer, Transition};
pub use loss::{actor_loss, clip_grad_norm, critic_loss, critic_targets, LossOutput};
pub use networks::{Actor, CentralCritic, TargetPair};

use ndarray::{s, Array2};
use rand::Rng;

use crate::causal::{ActionSource, Aggregation, CausalBatch, CausalConfig, CausalError, CausalLearner};
use crate::dynamics::{concat_columns, InterventionPolicy};
use crate::nn::NnError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MaddpgError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,
    #[error("batch size {requested} not in 1..={available}")]
    BatchSize { requested: usize, available: usize },
    #[error("transition shape does not match the buffer layout")]
    MalformedTransition,
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite critic target at batch row {0}")]
    NonFiniteTarget(usize),
}

/// Where CI estimation draws agent `i`'s actions from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionMode {
    /// Uniform over the action box.
    #[default]
    Intervention,
    /// The behavior actions of the sampled batch.
    Replay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    /// Temperature on the intrinsic term.
    pub alpha: f64,
    pub mc_samples: usize,
    pub aggregation: Aggregation,
    pub action_mode: ActionMode,
    pub grad_clip: Option<f64>,
    /// `None` runs plain centralized-critic learning with no causal models.
    pub causal: Option<CausalConfig>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            gamma: 0.95,
            tau: 0.01,
            alpha: 0.01,
            mc_samples: 64,
            aggregation: Aggregation::Sum,
            action_mode: ActionMode::Intervention,
            grad_clip: Some(0.5),
            causal: Some(CausalConfig::default()),
        }
    }
}

/// Per-update diagnostics. Empty vectors mean the stage did not run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateReport {
    pub critic_losses: Vec<f64>,
    pub actor_losses: Vec<f64>,
    pub dynamics_losses: Vec<f64>,
    pub statistic_bounds: Vec<f64>,
    /// Batch mean of each agent's aggregated CI, before the temperature.
    pub intrinsic_means: Vec<f64>,
    /// Batch mean of each ordered pair's CI, in learner pair order.
    pub pair_ci_means: Vec<f64>,
}

/// Everything one agent learns: policy, critic and their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLearner {
    pub actor: Actor,
    pub critic: CentralCritic,
    pub target: TargetPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maddpg {
    pub agents: Vec<AgentLearner>,
    pub causal: Option<CausalLearner<f64>>,
    config: LearnerConfig,
    obs_dims: Vec<usize>,
    action_dim: usize,
    state_dim: usize,
}

impl Maddpg {
    /// Policy networks draw from `net_rng`, causal networks from `causal_rng`,
    /// so enabling the causal models never perturbs the policy initialization.
    pub fn new<R: Rng + ?Sized, C: Rng + ?Sized>(
        obs_dims: &[usize],
        action_dim: usize,
        state_dim: usize,
        config: LearnerConfig,
        net_rng: &mut R,
        causal_rng: &mut C,
    ) -> Result<Self, MaddpgError> {
        if obs_dims.len() < 2 && config.causal.is_some() {
            return Err(MaddpgError::Config("causal influence needs at least two agents".into()));
        }
        if !(config.alpha >= 0.0) {
            return Err(CausalError::NegativeAlpha(config.alpha).into());
        }
        if obs_dims.iter().any(|&d| d < state_dim) {
            return Err(MaddpgError::Config("observation shorter than the agent state".into()));
        }
        let joint_obs: usize = obs_dims.iter().sum();
        let joint_act = action_dim * obs_dims.len();
        let mut agents = Vec::with_capacity(obs_dims.len());
        for &d in obs_dims {
            let actor = Actor::new(d, action_dim, &config.hidden, config.actor_lr, net_rng)?;
            let critic =
                CentralCritic::new(joint_obs, joint_act, &config.hidden, config.critic_lr, net_rng)?;
            let target = TargetPair::new(&actor, &critic, config.tau)?;
            agents.push(AgentLearner { actor, critic, target });
        }
        let causal = match &config.causal {
            Some(c) => Some(CausalLearner::new(obs_dims, action_dim, state_dim, c, causal_rng)?),
            None => None,
        };
        Ok(Self {
            agents,
            causal,
            config,
            obs_dims: obs_dims.to_vec(),
            action_dim,
            state_dim,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn obs_dims(&self) -> &[usize] {
        &self.obs_dims
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Joint action for one step; `noise_scale = 0` is the greedy policy.
    pub fn act<R: Rng + ?Sized>(
        &self,
        observations: &[Vec<f64>],
        noise_scale: f64,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>, MaddpgError> {
        if observations.len() != self.agents.len() {
            return Err(NnError::DimensionMismatch {
                expected: self.agents.len(),
                actual: observations.len(),
            }
            .into());
        }
        self.agents
            .iter()
            .zip(observations)
            .map(|(a, o)| a.actor.act(o, noise_scale, rng))
            .collect()
    }

    fn action_sources(&self, batch: &Batch) -> Vec<ActionSource<f64>> {
        (0..self.n_agents())
            .map(|i| match self.config.action_mode {
                ActionMode::Intervention => {
                    ActionSource::Intervention(InterventionPolicy::unit_box(self.action_dim))
                }
                ActionMode::Replay => ActionSource::Replay(batch.agent_actions(i).to_owned()),
            })
            .collect()
    }

    fn causal_batch(&self, batch: &Batch) -> CausalBatch<f64> {
        CausalBatch {
            observations: (0..self.n_agents())
                .map(|i| batch.agent_observations(i).to_owned())
                .collect(),
            actions: (0..self.n_agents()).map(|i| batch.agent_actions(i).to_owned()).collect(),
            next_states: (0..self.n_agents())
                .map(|i| {
                    batch
                        .agent_next_observations(i)
                        .slice(s![.., ..self.state_dim])
                        .to_owned()
                })
                .collect(),
        }
    }

    /// One learner update. Returns `None` while the buffer holds fewer than
    /// `warmup` transitions.
    ///
    /// Order: dynamics fit, statistic step, intrinsic rewards for the batch,
    /// critic steps, actor steps, soft target updates. `sample_rng` only
    /// draws the minibatch; all causal randomness comes from `causal_rng`.
    pub fn update<R: Rng + ?Sized, C: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        batch_size: usize,
        warmup: usize,
        sample_rng: &mut R,
        causal_rng: &mut C,
    ) -> Result<Option<UpdateReport>, MaddpgError> {
        if buffer.len() < warmup.max(1) {
            return Ok(None);
        }
        let batch = buffer.sample(batch_size, sample_rng)?;
        let mut report = UpdateReport::default();
        let n = self.n_agents();

        let mut intrinsic: Option<Vec<Vec<f64>>> = None;
        if self.causal.is_some() {
            let cb = self.causal_batch(&batch);
            let sources = self.action_sources(&batch);
            let learner = self.causal.as_mut().expect("checked above");
            report.dynamics_losses = learner.fit_dynamics(&cb)?;
            report.statistic_bounds = learner.train_statistics(&cb.observations, &sources, causal_rng)?;
            if self.config.alpha > 0.0 {
                let est = learner.estimate(&cb.observations, &sources, self.config.mc_samples, causal_rng)?;
                let per_agent = est.intrinsic(self.config.aggregation);
                report.pair_ci_means = est.pair_means();
                report.intrinsic_means = per_agent.iter().map(|v| mean(v)).collect();
                let alpha = self.config.alpha;
                intrinsic = Some(
                    per_agent
                        .into_iter()
                        .map(|v| v.into_iter().map(|c| alpha * c).collect())
                        .collect(),
                );
            }
        }

        let obs_actions = concat_columns(&[batch.observations.view(), batch.actions.view()]);
        let next_actions: Vec<Array2<f64>> = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.target.actor.forward_batch(batch.agent_next_observations(i)))
            .collect::<Result<_, NnError>>()?;
        let next_action_views: Vec<_> = next_actions.iter().map(|a| a.view()).collect();
        let mut next_blocks = vec![batch.next_observations.view()];
        next_blocks.extend(next_action_views);
        let next_inputs = concat_columns(&next_blocks);

        for i in 0..n {
            let agent = &mut self.agents[i];
            let y = critic_targets(
                &agent.target.critic,
                next_inputs.view(),
                &batch.rewards,
                intrinsic.as_ref().map(|v| v[i].as_slice()),
                self.config.gamma,
            )?;
            let mut out = critic_loss(&agent.critic.net, obs_actions.view(), &y)?;
            if let Some(c) = self.config.grad_clip {
                clip_grad_norm(&mut out.grads, c);
            }
            agent.critic.optimizer.step(agent.critic.net.params_mut(), &out.grads)?;
            report.critic_losses.push(out.loss);
        }

        let joint_obs_width = batch.observations.ncols();
        for i in 0..n {
            let agent = &mut self.agents[i];
            let mut out = actor_loss(
                &agent.actor.net,
                &agent.critic.net,
                obs_actions.view(),
                batch.agent_observations(i),
                joint_obs_width + i * self.action_dim,
            )?;
            if let Some(c) = self.config.grad_clip {
                clip_grad_norm(&mut out.grads, c);
            }
            agent.actor.optimizer.step(agent.actor.net.params_mut(), &out.grads)?;
            report.actor_losses.push(out.loss);
        }

        for agent in &mut self.agents {
            agent.target.track(&agent.actor, &agent.critic)?;
        }
        Ok(Some(report))
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
