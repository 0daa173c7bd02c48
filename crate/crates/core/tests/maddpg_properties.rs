//! Property checks on the centralized actor-critic pieces through the
//! public API.

use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scic::maddpg::{actor_loss, critic_loss, critic_targets, Actor, CentralCritic};

const OBS: usize = 3;
const ACT: usize = 2;
const AGENTS: usize = 2;

fn random_rows(n: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, cols), |_| rng.random_range(-1.0..=1.0))
}

/// The loss the actor gradient should differentiate: `-mean Q` with agent
/// `i`'s action columns replaced by the actor's output.
fn actor_objective(
    actor: &scic::Net,
    critic: &scic::Net,
    inputs: &Array2<f64>,
    obs: &Array2<f64>,
    offset: usize,
) -> f64 {
    let mut x = inputs.clone();
    x.slice_mut(s![.., offset..offset + ACT])
        .assign(&actor.forward_batch(obs.view()).unwrap());
    -critic.forward_batch(x.view()).unwrap().mean().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn actor_gradient_matches_finite_differences(seed in 0u64..10_000, agent in 0usize..AGENTS) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Actor::new(OBS, ACT, &[16, 16], 1e-3, &mut rng).unwrap();
        let critic = CentralCritic::new(OBS * AGENTS, ACT * AGENTS, &[16, 16], 1e-3, &mut rng).unwrap();
        let inputs = random_rows(8, (OBS + ACT) * AGENTS, &mut rng);
        let obs = inputs.slice(s![.., agent * OBS..(agent + 1) * OBS]).to_owned();
        let offset = OBS * AGENTS + agent * ACT;
        let critic_before = critic.net.params().to_vec();
        let out = actor_loss(&actor.net, &critic.net, inputs.view(), obs.view(), offset).unwrap();

        prop_assert_eq!(out.grads.len(), actor.net.parameter_count());
        prop_assert_eq!(critic.net.params(), &critic_before[..]);
        let direct = actor_objective(&actor.net, &critic.net, &inputs, &obs, offset);
        prop_assert!((out.loss - direct).abs() < 1e-12);

        let h = 1e-6;
        let mut probe = actor.net.clone();
        for k in 0..probe.parameter_count() {
            let p = probe.params()[k];
            probe.params_mut()[k] = p + h;
            let plus = actor_objective(&probe, &critic.net, &inputs, &obs, offset);
            probe.params_mut()[k] = p - h;
            let minus = actor_objective(&probe, &critic.net, &inputs, &obs, offset);
            probe.params_mut()[k] = p;
            let numeric = (plus - minus) / (2.0 * h);
            let err = (numeric - out.grads[k]).abs() / numeric.abs().max(out.grads[k].abs()).max(1e-6);
            prop_assert!(err < 1e-4, "param {}: {} vs {}", k, out.grads[k], numeric);
        }
    }

    #[test]
    fn critic_loss_is_zero_on_its_own_targets(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let critic = CentralCritic::new(OBS * AGENTS, ACT * AGENTS, &[16], 1e-3, &mut rng).unwrap();
        let inputs = random_rows(5, (OBS + ACT) * AGENTS, &mut rng);
        let q = critic.net.forward_batch(inputs.view()).unwrap().column(0).to_vec();
        let out = critic_loss(&critic.net, inputs.view(), &q).unwrap();
        prop_assert_eq!(out.loss, 0.0);
        prop_assert!(out.grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn intrinsic_term_shifts_targets_additively(seed in 0u64..10_000, bonus in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let critic = CentralCritic::new(OBS * AGENTS, ACT * AGENTS, &[16], 1e-3, &mut rng).unwrap();
        let next = random_rows(4, (OBS + ACT) * AGENTS, &mut rng);
        let r = [0.5, -1.0, 0.0, 2.0];
        let plain = critic_targets(&critic.net, next.view(), &r, None, 0.95).unwrap();
        let extra = [bonus; 4];
        let shifted = critic_targets(&critic.net, next.view(), &r, Some(&extra), 0.95).unwrap();
        for (a, b) in plain.iter().zip(&shifted) {
            prop_assert!((b - a - bonus).abs() < 1e-12);
        }
    }
}
