//! Shared team rewards.
//!
//! * Predator-prey: `+10` per predator within the contact radius of a prey,
//!   minus the mean predator-prey distance.
//! * Navigation: minus the sum over landmarks of the closest agent distance,
//!   minus one per colliding agent pair.
//! * Line: minus the minimum-cost matching of agents to evenly spaced points
//!   on the segment between the two targets.
//! * Synthetic: minus the sum of absolute agent states.

use super::spec::{TaskSpec, TaskVariant};
use super::state::{Vec2, WorldState};

pub const CATCH_BONUS: f64 = 10.0;
pub const COLLISION_PENALTY: f64 = 1.0;

/// Reward for the transition `state -> next_state`; only `next_state` is read.
pub fn task_reward(_state: &WorldState, next_state: &WorldState, spec: &TaskSpec) -> f64 {
    let radius = spec.physics.contact_radius;
    let agents = &next_state.agent_positions;
    match spec.variant {
        TaskVariant::PredatorPrey { .. } => {
            let prey = next_state.prey_positions.as_deref().unwrap_or(&[]);
            let mut reward = 0.0;
            let mut distance_sum = 0.0;
            let mut pairs = 0usize;
            for &p in agents {
                for &q in prey {
                    let d = p.distance(q);
                    if d < radius {
                        reward += CATCH_BONUS;
                    }
                    distance_sum += d;
                    pairs += 1;
                }
            }
            if pairs > 0 {
                reward -= distance_sum / pairs as f64;
            }
            reward
        }
        TaskVariant::CooperativeNavigation { .. } => {
            let coverage: f64 = next_state
                .landmark_positions
                .iter()
                .map(|&l| {
                    agents
                        .iter()
                        .map(|&a| a.distance(l))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            -coverage - COLLISION_PENALTY * colliding_pairs(agents, radius) as f64
        }
        TaskVariant::CooperativeLine { .. } => {
            let targets = &next_state.landmark_positions;
            let points = line_points(targets[0], targets[1], agents.len());
            -min_assignment_cost(agents, &points)
        }
        TaskVariant::SyntheticCoupled | TaskVariant::SyntheticDecoupled => {
            -agents.iter().map(|p| p.x.abs()).sum::<f64>()
        }
    }
}

pub fn colliding_pairs(agents: &[Vec2], radius: f64) -> usize {
    let mut count = 0;
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            if agents[i].distance(agents[j]) < radius {
                count += 1;
            }
        }
    }
    count
}

/// `n` evenly spaced points from `a` to `b`, endpoints included.
pub fn line_points(a: Vec2, b: Vec2, n: usize) -> Vec<Vec2> {
    if n == 1 {
        return vec![(a + b) * 0.5];
    }
    (0..n)
        .map(|k| a + (b - a) * (k as f64 / (n - 1) as f64))
        .collect()
}

/// Minimum over permutations of `sum_k |agents[perm[k]] - points[k]|`.
pub fn min_assignment_cost(agents: &[Vec2], points: &[Vec2]) -> f64 {
    let n = agents.len();
    debug_assert_eq!(n, points.len());
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let cost: f64 = p
            .iter()
            .zip(points)
            .map(|(&a, &q)| agents[a].distance(q))
            .sum();
        if cost < best {
            best = cost;
        }
    });
    best
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(agents: Vec<Vec2>, landmarks: Vec<Vec2>, prey: Option<Vec<Vec2>>) -> WorldState {
        let n = agents.len();
        WorldState {
            agent_velocities: vec![Vec2::ZERO; n],
            agent_positions: agents,
            landmark_positions: landmarks,
            prey_velocities: prey.as_ref().map(|p| vec![Vec2::ZERO; p.len()]),
            prey_positions: prey,
            step_index: 1,
        }
    }

    #[test]
    fn navigation_agents_on_landmarks() {
        let spec = TaskSpec::new(TaskVariant::CooperativeNavigation { agents: 3 });
        let pts = vec![Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0), Vec2::new(0.0, 0.7)];
        let s = state(pts.clone(), pts, None);
        assert_eq!(task_reward(&s, &s, &spec), 0.0);
    }

    #[test]
    fn navigation_collision_penalty() {
        let spec = TaskSpec::new(TaskVariant::CooperativeNavigation { agents: 2 });
        let agents = vec![Vec2::new(0.0, 0.0), Vec2::new(0.1, 0.0)];
        let landmarks = agents.clone();
        let s = state(agents, landmarks, None);
        assert_eq!(task_reward(&s, &s, &spec), -1.0);
    }

    #[test]
    fn line_perfect_configuration() {
        let spec = TaskSpec::new(TaskVariant::CooperativeLine { agents: 3 });
        let a = Vec2::new(-0.6, 0.2);
        let b = Vec2::new(0.4, -0.8);
        // Agents listed out of order; the matching must find the zero-cost assignment.
        let mut agents = line_points(a, b, 3);
        agents.swap(0, 2);
        let s = state(agents, vec![a, b], None);
        assert!(task_reward(&s, &s, &spec).abs() < 1e-12);
    }

    #[test]
    fn line_assignment_is_minimal() {
        let agents = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.0)];
        let points = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        assert_eq!(min_assignment_cost(&agents, &points), 0.0);
    }

    #[test]
    fn predator_contact_bonus() {
        let spec = TaskSpec::new(TaskVariant::PredatorPrey { predators: 3 });
        let prey = Vec2::new(0.2, 0.2);
        let agents = vec![Vec2::new(0.25, 0.2), Vec2::new(-0.8, 0.2), Vec2::new(0.2, 0.9)];
        let s = state(agents, vec![], Some(vec![prey]));
        // One catch; distances 0.05, 1.0, 0.7.
        let expected = 10.0 - (0.05 + 1.0 + 0.7) / 3.0;
        assert!((task_reward(&s, &s, &spec) - expected).abs() < 1e-12);
    }
}
