use super::EnvError;

/// Benchmark task and its agent count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskVariant {
    /// Learning predators chase one scripted prey.
    PredatorPrey { predators: usize },
    /// Agents cover as many landmarks as there are agents.
    CooperativeNavigation { agents: usize },
    /// Agents spread evenly on the segment between two targets.
    CooperativeLine { agents: usize },
    /// Two agents with scalar state; agent 0's action moves agent 1.
    SyntheticCoupled,
    /// Two agents with scalar state and no cross-agent edge.
    SyntheticDecoupled,
}

/// Double-integrator constants shared by the particle tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub dt: f64,
    pub damping: f64,
    pub max_speed: f64,
    /// Catch distance (predator-prey), collision distance (navigation) and
    /// the overlap distance at which agents push each other apart.
    pub contact_radius: f64,
    /// Spawn box and prey box is `[-arena_half_width, arena_half_width]^2`.
    pub arena_half_width: f64,
    /// Spring constant of the agent-agent repulsion force.
    pub contact_stiffness: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            dt: 0.1,
            damping: 0.25,
            max_speed: 1.0,
            contact_radius: 0.15,
            arena_half_width: 1.0,
            contact_stiffness: 10.0,
        }
    }
}

/// Linear-Gaussian law of the synthetic environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    /// Response of a state to the driving action.
    pub gain: f64,
    /// Standard deviation of the additive transition noise.
    pub noise_std: f64,
    /// Reset state of agents 0 and 1.
    pub origins: [f64; 2],
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            gain: 0.5,
            noise_std: 0.1,
            origins: [-0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    pub variant: TaskVariant,
    pub physics: Physics,
    pub max_episode_length: usize,
    pub synthetic: SyntheticParams,
}

pub const MAX_LINE_AGENTS: usize = 8;

impl TaskSpec {
    pub fn new(variant: TaskVariant) -> Self {
        Self {
            variant,
            physics: Physics::default(),
            max_episode_length: 25,
            synthetic: SyntheticParams::default(),
        }
    }

    pub fn with_max_episode_length(mut self, len: usize) -> Self {
        self.max_episode_length = len;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let cfg = |msg: &str| Err(EnvError::Config(msg.to_string()));
        match self.variant {
            TaskVariant::PredatorPrey { predators: 0 }
            | TaskVariant::CooperativeNavigation { agents: 0 }
            | TaskVariant::CooperativeLine { agents: 0 } => return cfg("task needs at least one agent"),
            TaskVariant::CooperativeLine { agents } if agents < 2 => {
                return cfg("cooperative line needs at least two agents")
            }
            TaskVariant::CooperativeLine { agents } if agents > MAX_LINE_AGENTS => {
                return cfg("cooperative line supports at most 8 agents")
            }
            _ => {}
        }
        let p = &self.physics;
        if self.max_episode_length == 0 {
            return cfg("max_episode_length must be positive");
        }
        if !(p.dt > 0.0) {
            return cfg("dt must be positive");
        }
        if !(0.0..1.0).contains(&p.damping) {
            return cfg("damping must lie in [0, 1)");
        }
        if !(p.max_speed > 0.0) || !(p.arena_half_width > 0.0) {
            return cfg("max_speed and arena size must be positive");
        }
        if !(p.contact_radius >= 0.0) || !(p.contact_stiffness >= 0.0) {
            return cfg("contact parameters must be non-negative");
        }
        if self.is_synthetic() && !(self.synthetic.noise_std >= 0.0) {
            return cfg("synthetic noise must be non-negative");
        }
        Ok(())
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(
            self.variant,
            TaskVariant::SyntheticCoupled | TaskVariant::SyntheticDecoupled
        )
    }

    /// Number of learning agents.
    pub fn n_agents(&self) -> usize {
        match self.variant {
            TaskVariant::PredatorPrey { predators } => predators,
            TaskVariant::CooperativeNavigation { agents } => agents,
            TaskVariant::CooperativeLine { agents } => agents,
            TaskVariant::SyntheticCoupled | TaskVariant::SyntheticDecoupled => 2,
        }
    }

    pub fn n_landmarks(&self) -> usize {
        match self.variant {
            TaskVariant::CooperativeNavigation { agents } => agents,
            TaskVariant::CooperativeLine { .. } => 2,
            _ => 0,
        }
    }

    pub fn n_prey(&self) -> usize {
        match self.variant {
            TaskVariant::PredatorPrey { .. } => 1,
            _ => 0,
        }
    }

    pub fn action_dim(&self) -> usize {
        if self.is_synthetic() {
            1
        } else {
            2
        }
    }

    /// Length of the agent's own state, which prefixes its observation.
    pub fn state_dim(&self) -> usize {
        if self.is_synthetic() {
            1
        } else {
            4
        }
    }

    pub fn obs_dim(&self) -> usize {
        if self.is_synthetic() {
            return 2;
        }
        4 + 2 * self.n_landmarks() + 2 * (self.n_agents() - 1) + 4 * self.n_prey()
    }
}
