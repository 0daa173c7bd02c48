use super::spec::{TaskSpec, TaskVariant};
use super::state::{Vec2, WorldState};
use super::EnvError;

/// Scripted flee force for every prey: unit magnitude, pointing away from
/// the nearest predator (lowest index on ties). A component pushing a prey
/// that sits on the arena boundary further out is zeroed.
pub fn prey_policy(state: &WorldState, spec: &TaskSpec) -> Result<Vec<Vec2>, EnvError> {
    if !matches!(spec.variant, TaskVariant::PredatorPrey { .. }) {
        return Err(EnvError::WrongTask("prey policy requires a predator-prey task"));
    }
    let prey = state
        .prey_positions
        .as_deref()
        .ok_or(EnvError::WrongTask("predator-prey state without prey"))?;
    let half = spec.physics.arena_half_width;
    Ok(prey
        .iter()
        .map(|&q| {
            let mut nearest = None::<(f64, Vec2)>;
            for &p in &state.agent_positions {
                let d = q.distance(p);
                if nearest.is_none_or(|(best, _)| d < best) {
                    nearest = Some((d, p));
                }
            }
            let mut force = match nearest {
                Some((d, p)) if d > 0.0 => (q - p) * (1.0 / d),
                _ => Vec2::new(1.0, 0.0),
            };
            if (q.x >= half && force.x > 0.0) || (q.x <= -half && force.x < 0.0) {
                force.x = 0.0;
            }
            if (q.y >= half && force.y > 0.0) || (q.y <= -half && force.y < 0.0) {
                force.y = 0.0;
            }
            force
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp_state(predators: Vec<Vec2>, prey: Vec2) -> (WorldState, TaskSpec) {
        let n = predators.len();
        (
            WorldState {
                agent_velocities: vec![Vec2::ZERO; n],
                agent_positions: predators,
                landmark_positions: vec![],
                prey_positions: Some(vec![prey]),
                prey_velocities: Some(vec![Vec2::ZERO]),
                step_index: 0,
            },
            TaskSpec::new(TaskVariant::PredatorPrey { predators: n }),
        )
    }

    #[test]
    fn flees_west_from_an_eastern_predator() {
        let (s, spec) = pp_state(
            vec![Vec2::new(0.5, 0.0), Vec2::new(0.0, 0.9), Vec2::new(-0.9, -0.9)],
            Vec2::ZERO,
        );
        assert_eq!(prey_policy(&s, &spec).unwrap(), vec![Vec2::new(-1.0, 0.0)]);
    }

    #[test]
    fn equidistant_tie_goes_to_lowest_index() {
        // Predators north and east at distance 0.5; predator 0 (north) wins.
        let (s, spec) = pp_state(
            vec![Vec2::new(0.0, 0.5), Vec2::new(0.5, 0.0), Vec2::new(-0.9, 0.9)],
            Vec2::ZERO,
        );
        assert_eq!(prey_policy(&s, &spec).unwrap(), vec![Vec2::new(0.0, -1.0)]);
    }

    #[test]
    fn boundary_blocks_outward_component() {
        // Prey on the east wall with a predator to the south-west.
        let (s, spec) = pp_state(
            vec![Vec2::new(0.7, -0.3), Vec2::new(-0.9, -0.9), Vec2::new(-0.9, 0.9)],
            Vec2::new(1.0, 0.0),
        );
        let f = prey_policy(&s, &spec).unwrap()[0];
        assert_eq!(f.x, 0.0);
        assert!(f.y > 0.0);
    }

    #[test]
    fn misuse_on_other_tasks() {
        let (s, _) = pp_state(vec![Vec2::ZERO], Vec2::ZERO);
        let spec = TaskSpec::new(TaskVariant::CooperativeNavigation { agents: 1 });
        assert!(matches!(prey_policy(&s, &spec), Err(EnvError::WrongTask(_))));
    }
}
