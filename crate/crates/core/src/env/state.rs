use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use super::spec::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn clamp_components(self, bound: f64) -> Self {
        Self::new(self.x.clamp(-bound, bound), self.y.clamp(-bound, bound))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Full simulator state.
///
/// The synthetic tasks store each agent's scalar state in the `x`
/// component of its position; `y` and the velocities stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub agent_positions: Vec<Vec2>,
    pub agent_velocities: Vec<Vec2>,
    pub landmark_positions: Vec<Vec2>,
    pub prey_positions: Option<Vec<Vec2>>,
    pub prey_velocities: Option<Vec<Vec2>>,
    pub step_index: usize,
}

/// Local observation. The first `TaskSpec::state_dim()` entries are the
/// agent's own state.
pub type AgentObservation = Vec<f64>;

/// One force (or scalar drive, for synthetic tasks) per learning agent.
pub type JointAction = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: WorldState,
    pub observations: Vec<AgentObservation>,
    /// Shared team reward.
    pub extrinsic_reward: f64,
    pub done: bool,
}

impl WorldState {
    pub fn is_consistent_with(&self, spec: &TaskSpec) -> bool {
        let n = spec.n_agents();
        let prey_ok = match (&self.prey_positions, &self.prey_velocities) {
            (Some(p), Some(v)) => p.len() == spec.n_prey() && v.len() == spec.n_prey(),
            (None, None) => spec.n_prey() == 0,
            _ => false,
        };
        self.agent_positions.len() == n
            && self.agent_velocities.len() == n
            && self.landmark_positions.len() == spec.n_landmarks()
            && prey_ok
            && self.step_index <= spec.max_episode_length
    }

    fn prey(&self) -> (&[Vec2], &[Vec2]) {
        (
            self.prey_positions.as_deref().unwrap_or(&[]),
            self.prey_velocities.as_deref().unwrap_or(&[]),
        )
    }
}

/// Builds every agent's local observation.
pub fn observe(state: &WorldState, spec: &TaskSpec) -> Vec<AgentObservation> {
    let n = spec.n_agents();
    if spec.is_synthetic() {
        let s0 = state.agent_positions[0].x;
        let s1 = state.agent_positions[1].x;
        return vec![vec![s0, s1], vec![s1, s0]];
    }
    let (prey_pos, prey_vel) = state.prey();
    (0..n)
        .map(|i| {
            let own = state.agent_positions[i];
            let vel = state.agent_velocities[i];
            let mut obs = Vec::with_capacity(spec.obs_dim());
            obs.extend([vel.x, vel.y, own.x, own.y]);
            for &l in &state.landmark_positions {
                let d = l - own;
                obs.extend([d.x, d.y]);
            }
            for (j, &p) in state.agent_positions.iter().enumerate() {
                if j != i {
                    let d = p - own;
                    obs.extend([d.x, d.y]);
                }
            }
            for (&p, &v) in prey_pos.iter().zip(prey_vel) {
                let d = p - own;
                obs.extend([d.x, d.y, v.x, v.y]);
            }
            obs
        })
        .collect()
}
