//! Deterministic 2D particle world: predator-prey, cooperative navigation,
//! cooperative line, and two synthetic tasks with known causal structure.

mod physics;
mod prey;
mod reward;
mod spec;
mod state;
mod synthetic;

pub use physics::{reset, step};
pub use prey::prey_policy;
pub use reward::{line_points, min_assignment_cost, task_reward};
pub use spec::{Physics, SyntheticParams, TaskSpec, TaskVariant};
pub use state::{observe, AgentObservation, JointAction, StepResult, Vec2, WorldState};
pub use synthetic::synthetic_step;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid task configuration: {0}")]
    Config(String),
    #[error("action shape mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite action component {component} for agent {agent}")]
    NonFiniteAction { agent: usize, component: usize },
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("world state does not match the task")]
    InconsistentState,
    #[error("{0}")]
    WrongTask(&'static str),
}

/// A task instance: spec, current state and the transition-noise stream.
///
/// Not meant to be stepped from several threads at once; separate
/// instances are independent.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: TaskSpec,
    state: WorldState,
    noise: ChaCha8Rng,
}

impl Environment {
    pub fn reset(spec: TaskSpec, seed: u64) -> Result<(Self, Vec<AgentObservation>), EnvError> {
        let (state, obs) = reset(&spec, seed)?;
        let mut noise = ChaCha8Rng::seed_from_u64(seed);
        noise.set_stream(1);
        Ok((Self { spec, state, noise }, obs))
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn step(&mut self, action: &JointAction) -> Result<StepResult, EnvError> {
        let result = if self.spec.is_synthetic() {
            synthetic_step(&self.state, action, &self.spec, &mut self.noise)?
        } else {
            step(&self.state, action, &self.spec)?
        };
        self.state = result.next_state.clone();
        Ok(result)
    }
}
