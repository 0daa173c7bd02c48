use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use super::MaddpgError;

/// One environment step of experience, stored without any intrinsic term.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub reward: f64,
    pub next_observations: Vec<Vec<f64>>,
    pub done: bool,
}

/// Fixed-capacity FIFO ring of transitions in flat row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dims: Vec<usize>,
    action_dim: usize,
    obs: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_obs: Vec<f64>,
    dones: Vec<bool>,
    cursor: usize,
    len: usize,
}

/// A sampled minibatch. Joint matrices concatenate agents in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub observations: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_observations: Array2<f64>,
    pub dones: Vec<bool>,
    obs_offsets: Vec<usize>,
    action_dim: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.obs_offsets.len() - 1
    }

    pub fn agent_observations(&self, agent: usize) -> ArrayView2<'_, f64> {
        let (a, b) = (self.obs_offsets[agent], self.obs_offsets[agent + 1]);
        self.observations.slice(s![.., a..b])
    }

    pub fn agent_next_observations(&self, agent: usize) -> ArrayView2<'_, f64> {
        let (a, b) = (self.obs_offsets[agent], self.obs_offsets[agent + 1]);
        self.next_observations.slice(s![.., a..b])
    }

    pub fn agent_actions(&self, agent: usize) -> ArrayView2<'_, f64> {
        let a = agent * self.action_dim;
        self.actions.slice(s![.., a..a + self.action_dim])
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dims: &[usize], action_dim: usize) -> Result<Self, MaddpgError> {
        if capacity == 0 {
            return Err(MaddpgError::Config("buffer capacity must be positive".into()));
        }
        if obs_dims.is_empty() {
            return Err(MaddpgError::Config("buffer needs at least one agent".into()));
        }
        Ok(Self {
            capacity,
            obs_dims: obs_dims.to_vec(),
            action_dim,
            obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_obs: Vec::new(),
            dones: Vec::new(),
            cursor: 0,
            len: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Slot the next push writes to.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn obs_dims(&self) -> &[usize] {
        &self.obs_dims
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn obs_width(&self) -> usize {
        self.obs_dims.iter().sum()
    }

    fn action_width(&self) -> usize {
        self.action_dim * self.obs_dims.len()
    }

    fn check(&self, t: &Transition) -> Result<(), MaddpgError> {
        let n = self.obs_dims.len();
        let malformed = t.observations.len() != n
            || t.next_observations.len() != n
            || t.actions.len() != n
            || t.observations.iter().zip(&self.obs_dims).any(|(o, &d)| o.len() != d)
            || t.next_observations.iter().zip(&self.obs_dims).any(|(o, &d)| o.len() != d)
            || t.actions.iter().any(|a| a.len() != self.action_dim);
        if malformed {
            return Err(MaddpgError::MalformedTransition);
        }
        Ok(())
    }

    pub fn push(&mut self, t: &Transition) -> Result<(), MaddpgError> {
        self.check(t)?;
        let flat = |rows: &[Vec<f64>]| rows.iter().flatten().copied().collect::<Vec<f64>>();
        let (o, a, no) = (flat(&t.observations), flat(&t.actions), flat(&t.next_observations));
        if self.len < self.capacity {
            self.obs.extend_from_slice(&o);
            self.actions.extend_from_slice(&a);
            self.next_obs.extend_from_slice(&no);
            self.rewards.push(t.reward);
            self.dones.push(t.done);
            self.len += 1;
        } else {
            let (ow, aw, c) = (self.obs_width(), self.action_width(), self.cursor);
            self.obs[c * ow..(c + 1) * ow].copy_from_slice(&o);
            self.actions[c * aw..(c + 1) * aw].copy_from_slice(&a);
            self.next_obs[c * ow..(c + 1) * ow].copy_from_slice(&no);
            self.rewards[c] = t.reward;
            self.dones[c] = t.done;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// The transition stored in slot `index`.
    pub fn get(&self, index: usize) -> Option<Transition> {
        if index >= self.len {
            return None;
        }
        let (ow, aw) = (self.obs_width(), self.action_width());
        let split = |flat: &[f64]| {
            let mut out = Vec::with_capacity(self.obs_dims.len());
            let mut at = 0;
            for &d in &self.obs_dims {
                out.push(flat[at..at + d].to_vec());
                at += d;
            }
            out
        };
        Some(Transition {
            observations: split(&self.obs[index * ow..(index + 1) * ow]),
            actions: self.actions[index * aw..(index + 1) * aw]
                .chunks(self.action_dim.max(1))
                .map(<[f64]>::to_vec)
                .collect(),
            reward: self.rewards[index],
            next_observations: split(&self.next_obs[index * ow..(index + 1) * ow]),
            done: self.dones[index],
        })
    }

    /// `batch_size` slot indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>, MaddpgError> {
        if self.len == 0 {
            return Err(MaddpgError::EmptyBuffer);
        }
        if batch_size == 0 || batch_size > self.len {
            return Err(MaddpgError::BatchSize {
                requested: batch_size,
                available: self.len,
            });
        }
        Ok((0..batch_size).map(|_| rng.random_range(0..self.len)).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Batch, MaddpgError> {
        let idx = self.sample_indices(batch_size, rng)?;
        Ok(self.gather(&idx))
    }

    pub fn gather(&self, indices: &[usize]) -> Batch {
        let (ow, aw) = (self.obs_width(), self.action_width());
        let rows = |flat: &[f64], w: usize| {
            Array2::from_shape_fn((indices.len(), w), |(r, c)| flat[indices[r] * w + c])
        };
        let mut obs_offsets = vec![0];
        for &d in &self.obs_dims {
            obs_offsets.push(obs_offsets.last().copied().unwrap_or(0) + d);
        }
        Batch {
            observations: rows(&self.obs, ow),
            actions: rows(&self.actions, aw),
            rewards: indices.iter().map(|&i| self.rewards[i]).collect(),
            next_observations: rows(&self.next_obs, ow),
            dones: indices.iter().map(|&i| self.dones[i]).collect(),
            obs_offsets,
            action_dim: self.action_dim,
        }
    }

    /// Raw storage for checkpointing: `(obs, actions, rewards, next_obs, dones)`.
    pub fn raw_parts(&self) -> (&[f64], &[f64], &[f64], &[f64], &[bool]) {
        (&self.obs, &self.actions, &self.rewards, &self.next_obs, &self.dones)
    }

    /// Rebuilds a buffer from [`ReplayBuffer::raw_parts`] output.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw_parts(
        capacity: usize,
        obs_dims: &[usize],
        action_dim: usize,
        obs: Vec<f64>,
        actions: Vec<f64>,
        rewards: Vec<f64>,
        next_obs: Vec<f64>,
        dones: Vec<bool>,
        cursor: usize,
    ) -> Result<Self, MaddpgError> {
        let mut buf = Self::new(capacity, obs_dims, action_dim)?;
        let len = rewards.len();
        let consistent = len <= capacity
            && dones.len() == len
            && obs.len() == len * buf.obs_width()
            && next_obs.len() == len * buf.obs_width()
            && actions.len() == len * buf.action_width()
            && cursor < capacity
            && (len == capacity || cursor == len);
        if !consistent {
            return Err(MaddpgError::Config("inconsistent replay buffer contents".into()));
        }
        buf.obs = obs;
        buf.actions = actions;
        buf.rewards = rewards;
        buf.next_obs = next_obs;
        buf.dones = dones;
        buf.cursor = cursor;
        buf.len = len;
        Ok(buf)
    }
}
