use rand::Rng;
use rand_distr::StandardNormal;

use super::physics::sanitize_action;
use super::reward::task_reward;
use super::spec::{TaskSpec, TaskVariant};
use super::state::{observe, JointAction, StepResult, WorldState};
use super::EnvError;

/// Linear-Gaussian two-agent step with known causal structure.
///
/// `s0' = s0 + g a0 + e0` in both variants. Agent 1 follows
/// `s1' = s1 + g a0 + e1` when coupled and `s1' = s1 + e1` when decoupled.
/// Agent 1's action has no effect. Noise is `Normal(0, noise_std^2)`.
pub fn synthetic_step<R: Rng + ?Sized>(
    state: &WorldState,
    action: &JointAction,
    spec: &TaskSpec,
    rng: &mut R,
) -> Result<StepResult, EnvError> {
    let coupled = match spec.variant {
        TaskVariant::SyntheticCoupled => true,
        TaskVariant::SyntheticDecoupled => false,
        _ => return Err(EnvError::WrongTask("synthetic_step needs a synthetic task")),
    };
    if !state.is_consistent_with(spec) {
        return Err(EnvError::InconsistentState);
    }
    if state.step_index >= spec.max_episode_length {
        return Err(EnvError::EpisodeFinished);
    }
    let action = sanitize_action(action, spec)?;
    let (gain, noise) = (spec.synthetic.gain, spec.synthetic.noise_std);
    let drive = gain * action[0][0];
    let e0: f64 = rng.sample(StandardNormal);
    let e1: f64 = rng.sample(StandardNormal);
    let mut next = state.clone();
    next.agent_positions[0].x += drive + noise * e0;
    next.agent_positions[1].x += if coupled { drive } else { 0.0 } + noise * e1;
    next.step_index += 1;
    let extrinsic_reward = task_reward(state, &next, spec);
    Ok(StepResult {
        observations: observe(&next, spec),
        done: next.step_index >= spec.max_episode_length,
        next_state: next,
        extrinsic_reward,
    })
}
