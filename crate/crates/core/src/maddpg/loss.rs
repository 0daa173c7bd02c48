use ndarray::{s, Array2, ArrayView2};

use super::MaddpgError;
use crate::Net;

/// Mean loss and its gradient with respect to one network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Vec<f64>,
}

/// `y = r + intrinsic + gamma * Q'(s', a')` where `next_inputs` is already
/// `o' ⧺ pi'(o')`. `intrinsic` carries the temperature-weighted term; `None`
/// leaves the target exactly `r + gamma Q'`.
pub fn critic_targets(
    target_critic: &Net,
    next_inputs: ArrayView2<'_, f64>,
    rewards: &[f64],
    intrinsic: Option<&[f64]>,
    gamma: f64,
) -> Result<Vec<f64>, MaddpgError> {
    let q_next = target_critic.forward_batch(next_inputs)?;
    if let Some(extra) = intrinsic {
        check_rows(rewards.len(), extra.len())?;
    }
    check_rows(rewards.len(), q_next.nrows())?;
    let y: Vec<f64> = rewards
        .iter()
        .zip(q_next.column(0))
        .enumerate()
        .map(|(b, (&r, &q))| match intrinsic {
            Some(extra) => r + extra[b] + gamma * q,
            None => r + gamma * q,
        })
        .collect();
    if let Some(idx) = y.iter().position(|v| !v.is_finite()) {
        return Err(MaddpgError::NonFiniteTarget(idx));
    }
    Ok(y)
}

fn check_rows(expected: usize, actual: usize) -> Result<(), MaddpgError> {
    crate::nn::check_len(expected, actual).map_err(MaddpgError::from)
}

/// `mean_b (Q(x_b) - y_b)^2` and its parameter gradient.
pub fn critic_loss(
    critic: &Net,
    inputs: ArrayView2<'_, f64>,
    targets: &[f64],
) -> Result<LossOutput, MaddpgError> {
    let n = targets.len();
    if n == 0 || inputs.nrows() != n {
        return Err(MaddpgError::EmptyBatch);
    }
    let trace = critic.forward_trace(inputs)?;
    let q = trace.output().column(0);
    let mut loss = 0.0;
    let mut upstream = Array2::zeros((n, 1));
    for (b, (&qb, &yb)) in q.iter().zip(targets).enumerate() {
        let err = qb - yb;
        loss += err * err;
        upstream[[b, 0]] = 2.0 * err / n as f64;
    }
    let grads = critic.backward_batch(&trace, upstream.view(), false)?;
    Ok(LossOutput {
        loss: loss / n as f64,
        grads: grads.params,
    })
}

/// `-mean_b Q(o_b, a_b with agent i's block replaced by pi_i(o^i_b))`.
///
/// `inputs` holds `o ⧺ a` rows from the batch; agent `i`'s action occupies
/// columns `action_offset..action_offset + action_dim`. Only the actor's
/// gradient is returned; the critic is read, never differentiated for update.
pub fn actor_loss(
    actor: &Net,
    critic: &Net,
    inputs: ArrayView2<'_, f64>,
    agent_obs: ArrayView2<'_, f64>,
    action_offset: usize,
) -> Result<LossOutput, MaddpgError> {
    let n = inputs.nrows();
    if n == 0 || agent_obs.nrows() != n {
        return Err(MaddpgError::EmptyBatch);
    }
    let actor_trace = actor.forward_trace(agent_obs)?;
    let action_dim = actor.output_dim();
    let mut x = inputs.to_owned();
    x.slice_mut(s![.., action_offset..action_offset + action_dim])
        .assign(actor_trace.output());
    let critic_trace = critic.forward_trace(x.view())?;
    let loss = -critic_trace.output().column(0).sum() / n as f64;
    let upstream = Array2::from_elem((n, 1), -1.0 / n as f64);
    let through_critic = critic.backward_batch(&critic_trace, upstream.view(), true)?;
    let d_input = through_critic
        .inputs
        .expect("input gradient requested");
    let d_action = d_input.slice(s![.., action_offset..action_offset + action_dim]);
    let grads = actor.backward_batch(&actor_trace, d_action, false)?;
    Ok(LossOutput {
        loss,
        grads: grads.params,
    })
}

/// Rescales `grads` in place so its Euclidean norm is at most `max_norm`.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseNet};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(params: Vec<f64>, inputs: usize) -> Net {
        DenseNet::from_params(&[inputs, 1], Activation::Relu, Activation::Identity, params).unwrap()
    }

    #[test]
    fn exact_fit_has_zero_loss() {
        let q = linear(vec![1.0, -1.0, 0.5], 2);
        let x = array![[1.0, 2.0], [0.0, 3.0]];
        let y = q.forward_batch(x.view()).unwrap().column(0).to_vec();
        let out = critic_loss(&q, x.view(), &y).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn myopic_target_is_reward() {
        let q = linear(vec![3.0, 1.0], 1);
        let y = critic_targets(&q, array![[1.0], [2.0]].view(), &[0.5, -1.0], None, 0.0).unwrap();
        assert_eq!(y, vec![0.5, -1.0]);
        let y = critic_targets(&q, array![[1.0], [2.0]].view(), &[0.5, -1.0], Some(&[0.0, 0.0]), 0.0)
            .unwrap();
        assert_eq!(y, vec![0.5, -1.0]);
    }

    #[test]
    fn hand_computed_two_sample_loss() {
        // Q(x) = 2 x0 - x1 + 0.5; target Q'(x) = x0 + 1.
        let q = linear(vec![2.0, -1.0, 0.5], 2);
        let q_target = linear(vec![1.0, 0.0, 1.0], 2);
        let x = array![[1.0, 1.0], [0.0, 2.0]];
        let next = array![[0.0, 0.0], [1.0, 5.0]];
        // y = r + e + 0.9 Q'(next) = [1 + 0.2 + 0.9, -1 + 0 + 1.8].
        let y = critic_targets(&q_target, next.view(), &[1.0, -1.0], Some(&[0.2, 0.0]), 0.9).unwrap();
        assert!((y[0] - 2.1).abs() < 1e-12 && (y[1] - 0.8).abs() < 1e-12);
        // Q(x) = [1.5, -1.5]; errors [-0.6, -2.3].
        let out = critic_loss(&q, x.view(), &y).unwrap();
        let expected = (0.6_f64.powi(2) + 2.3_f64.powi(2)) / 2.0;
        assert!((out.loss - expected).abs() < 1e-12);
        // d/dw0 = mean 2 err x0 = (2 * -0.6 * 1 + 0) / 2.
        assert!((out.grads[0] - (-0.6)).abs() < 1e-12);
        assert!((out.grads[2] - (-0.6 - 2.3)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_target_rejected() {
        let q = linear(vec![1.0, 0.0], 1);
        let err = critic_targets(&q, array![[f64::INFINITY]].view(), &[0.0], None, 0.9).unwrap_err();
        assert_eq!(err, MaddpgError::NonFiniteTarget(0));
    }

    #[test]
    fn constant_critic_gives_zero_actor_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let actor = DenseNet::new_uniform(&[2, 4, 1], Activation::Relu, Activation::Tanh, &mut rng).unwrap();
        let critic = linear(vec![0.0, 0.0, 0.0, 7.0], 3);
        let inputs = array![[0.1, 0.2, 0.5], [0.3, -0.4, -0.5]];
        let obs = array![[0.1, 0.2], [0.3, -0.4]];
        let out = actor_loss(&actor, &critic, inputs.view(), obs.view(), 2).unwrap();
        assert_eq!(out.loss, -7.0);
        assert!(out.grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn increasing_critic_pushes_action_up() {
        let actor = DenseNet::from_params(&[1, 1], Activation::Relu, Activation::Tanh, vec![0.3, 0.1]).unwrap();
        // Q = a, coefficient +1 on the action column.
        let critic = linear(vec![0.0, 1.0, 0.0], 2);
        let inputs = array![[0.5, 0.0]];
        let obs = array![[0.5]];
        let out = actor_loss(&actor, &critic, inputs.view(), obs.view(), 1).unwrap();
        // Descending the loss moves the bias (and weight, input > 0) upward.
        assert!(out.grads.iter().all(|&g| g < 0.0));
        let a = (0.3_f64 * 0.5 + 0.1).tanh();
        assert!((out.grads[1] - (-(1.0 - a * a))).abs() < 1e-12);
    }

    #[test]
    fn single_sample_actor_loss_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let actor = DenseNet::new_uniform(&[3, 8, 2], Activation::Relu, Activation::Tanh, &mut rng).unwrap();
        let critic = DenseNet::new_uniform(&[5, 8, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = array![[0.1, 0.2, 0.3, 0.0, 0.0]];
        let o = array![[0.1, 0.2, 0.3]];
        let out = actor_loss(&actor, &critic, x.view(), o.view(), 3).unwrap();
        assert!(out.loss.is_finite() && out.grads.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn clip_scales_to_max_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.1, 0.0];
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.1, 0.0]);
    }
}
