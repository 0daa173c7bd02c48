use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::prey::prey_policy;
use super::reward::task_reward;
use super::spec::TaskSpec;
use super::state::{observe, AgentObservation, JointAction, StepResult, Vec2, WorldState};
use super::EnvError;

/// Initial state: particle positions uniform in the arena, velocities zero.
/// Synthetic tasks start at their configured origins.
pub fn reset(spec: &TaskSpec, seed: u64) -> Result<(WorldState, Vec<AgentObservation>), EnvError> {
    spec.validate()?;
    let state = if spec.is_synthetic() {
        WorldState {
            agent_positions: spec
                .synthetic
                .origins
                .iter()
                .map(|&s| Vec2::new(s, 0.0))
                .collect(),
            agent_velocities: vec![Vec2::ZERO; 2],
            landmark_positions: Vec::new(),
            prey_positions: None,
            prey_velocities: None,
            step_index: 0,
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = spec.physics.arena_half_width;
        let mut draw = |count: usize| -> Vec<Vec2> {
            (0..count)
                .map(|_| {
                    Vec2::new(
                        rng.random_range(-half..=half),
                        rng.random_range(-half..=half),
                    )
                })
                .collect()
        };
        let agent_positions = draw(spec.n_agents());
        let landmark_positions = draw(spec.n_landmarks());
        let prey = (spec.n_prey() > 0).then(|| draw(spec.n_prey()));
        WorldState {
            agent_velocities: vec![Vec2::ZERO; spec.n_agents()],
            agent_positions,
            landmark_positions,
            prey_velocities: prey.as_ref().map(|p| vec![Vec2::ZERO; p.len()]),
            prey_positions: prey,
            step_index: 0,
        }
    };
    let obs = observe(&state, spec);
    Ok((state, obs))
}

/// Checks shape and finiteness, then clips every component to `[-1, 1]`.
pub(crate) fn sanitize_action(action: &JointAction, spec: &TaskSpec) -> Result<JointAction, EnvError> {
    if action.len() != spec.n_agents() {
        return Err(EnvError::DimensionMismatch {
            expected: spec.n_agents(),
            actual: action.len(),
        });
    }
    action
        .iter()
        .enumerate()
        .map(|(agent, a)| {
            if a.len() != spec.action_dim() {
                return Err(EnvError::DimensionMismatch {
                    expected: spec.action_dim(),
                    actual: a.len(),
                });
            }
            if let Some(component) = a.iter().position(|v| !v.is_finite()) {
                return Err(EnvError::NonFiniteAction { agent, component });
            }
            Ok(a.iter().map(|v| v.clamp(-1.0, 1.0)).collect())
        })
        .collect()
}

fn integrate(velocity: Vec2, position: Vec2, force: Vec2, spec: &TaskSpec) -> (Vec2, Vec2) {
    let p = &spec.physics;
    let v = (velocity * (1.0 - p.damping) + force * p.dt).clamp_components(p.max_speed);
    (v, position + v * p.dt)
}

/// Agent-agent repulsion for overlapping pairs.
fn contact_forces(positions: &[Vec2], spec: &TaskSpec) -> Vec<Vec2> {
    let p = &spec.physics;
    let mut forces = vec![Vec2::ZERO; positions.len()];
    if p.contact_stiffness == 0.0 {
        return forces;
    }
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let delta = positions[i] - positions[j];
            let d = delta.norm();
            if d < p.contact_radius && d > 0.0 {
                let push = delta * (p.contact_stiffness * (p.contact_radius - d) / d);
                forces[i] += push;
                forces[j] += -push;
            }
        }
    }
    forces
}

/// One double-integrator step of a particle task.
///
/// Per agent: `v <- clip(v (1 - damping) + f dt, max_speed)`, `p <- p + v dt`,
/// where `f` is the clipped action plus contact repulsion.
pub fn step(state: &WorldState, action: &JointAction, spec: &TaskSpec) -> Result<StepResult, EnvError> {
    if spec.is_synthetic() {
        return Err(EnvError::WrongTask("synthetic tasks step through synthetic_step"));
    }
    if !state.is_consistent_with(spec) {
        return Err(EnvError::InconsistentState);
    }
    if state.step_index >= spec.max_episode_length {
        return Err(EnvError::EpisodeFinished);
    }
    let action = sanitize_action(action, spec)?;
    let contacts = contact_forces(&state.agent_positions, spec);
    let mut next = state.clone();
    for i in 0..spec.n_agents() {
        let force = Vec2::new(action[i][0], action[i][1]) + contacts[i];
        let (v, p) = integrate(state.agent_velocities[i], state.agent_positions[i], force, spec);
        next.agent_velocities[i] = v;
        next.agent_positions[i] = p;
    }
    if spec.n_prey() > 0 {
        let forces = prey_policy(state, spec)?;
        let half = spec.physics.arena_half_width;
        let positions = next.prey_positions.as_mut().expect("consistent state has prey");
        let velocities = next.prey_velocities.as_mut().expect("consistent state has prey");
        for ((p, v), f) in positions.iter_mut().zip(velocities.iter_mut()).zip(forces) {
            let (mut nv, mut np) = integrate(*v, *p, f, spec);
            if np.x.abs() > half {
                np.x = np.x.clamp(-half, half);
                nv.x = 0.0;
            }
            if np.y.abs() > half {
                np.y = np.y.clamp(-half, half);
                nv.y = 0.0;
            }
            *p = np;
            *v = nv;
        }
    }
    next.step_index += 1;
    let extrinsic_reward = task_reward(state, &next, spec);
    let observations = observe(&next, spec);
    let done = next.step_index >= spec.max_episode_length;
    Ok(StepResult {
        next_state: next,
        observations,
        extrinsic_reward,
        done,
    })
}
