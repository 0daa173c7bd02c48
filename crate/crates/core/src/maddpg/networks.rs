use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::MaddpgError;
use crate::nn::{soft_update, Activation, DenseNet};
use crate::{Net, Optimizer};

/// Deterministic policy `o^i -> a^i` squashed into `[-1, 1]` by `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub net: Net,
    pub optimizer: Optimizer,
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        lr: f64,
        rng: &mut R,
    ) -> Result<Self, MaddpgError> {
        let sizes = layer_sizes(obs_dim, hidden, action_dim);
        let net = DenseNet::new_uniform(&sizes, Activation::Relu, Activation::Tanh, rng)?;
        Ok(Self::from_net(net, lr))
    }

    pub fn from_net(net: Net, lr: f64) -> Self {
        let optimizer = Optimizer::new(net.parameter_count(), lr);
        Self { net, optimizer }
    }

    /// Policy output plus `N(0, noise_scale^2)` noise, clipped to the box.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        noise_scale: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>, MaddpgError> {
        let mut a = self.net.forward(obs)?;
        if noise_scale > 0.0 {
            for v in &mut a {
                let z: f64 = rng.sample(StandardNormal);
                *v += noise_scale * z;
            }
        }
        for v in &mut a {
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(a)
    }

    pub fn act_batch(&self, obs: ArrayView2<'_, f64>) -> Result<Array2<f64>, MaddpgError> {
        Ok(self.net.forward_batch(obs)?)
    }
}

/// Joint action-value network `Q(o^1..o^n, a^1..a^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralCritic {
    pub net: Net,
    pub optimizer: Optimizer,
}

impl CentralCritic {
    pub fn new<R: Rng + ?Sized>(
        joint_obs_dim: usize,
        joint_action_dim: usize,
        hidden: &[usize],
        lr: f64,
        rng: &mut R,
    ) -> Result<Self, MaddpgError> {
        let sizes = layer_sizes(joint_obs_dim + joint_action_dim, hidden, 1);
        let net = DenseNet::new_uniform(&sizes, Activation::Relu, Activation::Identity, rng)?;
        Ok(Self::from_net(net, lr))
    }

    pub fn from_net(net: Net, lr: f64) -> Self {
        let optimizer = Optimizer::new(net.parameter_count(), lr);
        Self { net, optimizer }
    }

    /// Q-values for rows of `obs ⧺ actions`.
    pub fn values(&self, inputs: ArrayView2<'_, f64>) -> Result<Vec<f64>, MaddpgError> {
        Ok(self.net.forward_batch(inputs)?.column(0).to_vec())
    }
}

/// Slowly tracking copies of one agent's actor and critic.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPair {
    pub actor: Net,
    pub critic: Net,
    pub tau: f64,
}

impl TargetPair {
    pub fn new(actor: &Actor, critic: &CentralCritic, tau: f64) -> Result<Self, MaddpgError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(crate::nn::NnError::InvalidTau(tau).into());
        }
        Ok(Self {
            actor: actor.net.clone(),
            critic: critic.net.clone(),
            tau,
        })
    }

    /// `target <- (1 - tau) target + tau source` for both networks.
    pub fn track(&mut self, actor: &Actor, critic: &CentralCritic) -> Result<(), MaddpgError> {
        soft_update(self.actor.params_mut(), actor.net.params(), self.tau)?;
        soft_update(self.critic.params_mut(), critic.net.params(), self.tau)?;
        Ok(())
    }
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_actor_outputs_zero() {
        let net = DenseNet::zeros(&[3, 4, 2], Activation::Relu, Activation::Tanh).unwrap();
        let actor = Actor::from_net(net, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(actor.act(&[0.3, -2.0, 1.0], 0.0, &mut rng).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn noiseless_action_is_repeatable_and_noisy_action_is_boxed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let actor = Actor::new(3, 2, &[8], 1e-3, &mut rng).unwrap();
        let obs = [0.5, -0.1, 0.9];
        let a = actor.act(&obs, 0.0, &mut rng).unwrap();
        assert_eq!(a, actor.act(&obs, 0.0, &mut rng).unwrap());
        for _ in 0..500 {
            let a = actor.act(&obs, 5.0, &mut rng).unwrap();
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn target_tracks_by_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = Actor::new(2, 1, &[4], 1e-3, &mut rng).unwrap();
        let critic = CentralCritic::new(4, 2, &[4], 1e-3, &mut rng).unwrap();
        let mut target = TargetPair::new(&actor, &critic, 0.01).unwrap();
        let before = target.clone();
        let mut moved = actor.clone();
        for p in moved.net.params_mut() {
            *p += 1.0;
        }
        target.track(&moved, &critic).unwrap();
        for ((t, b), s) in target.actor.params().iter().zip(before.actor.params()).zip(moved.net.params()) {
            assert_eq!(*t, 0.99 * b + 0.01 * s);
        }
        assert!(TargetPair::new(&actor, &critic, 1.5).is_err());
    }
}
