use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::Rng;

use super::dv::dv_from_scores;
use super::CausalError;
use crate::nn::{Activation, Adam, DenseNet, NnError};
use crate::scalar::{log_sum_exp, Scalar};

/// Scalar statistic `T(s_i, a_i, s'_j)` inside the Donsker-Varadhan bound.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticNetwork<T> {
    pub source: usize,
    pub target: usize,
    net: DenseNet<T>,
    optimizer: Adam<T>,
}

impl<T: Scalar> StatisticNetwork<T> {
    pub fn new<R: Rng + ?Sized>(
        source: usize,
        target: usize,
        input_dim: usize,
        hidden: &[usize],
        lr: T,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let net = DenseNet::new_uniform(&sizes, Activation::Relu, Activation::Identity, rng)?;
        Self::from_net(source, target, net, lr)
    }

    pub fn from_net(source: usize, target: usize, net: DenseNet<T>, lr: T) -> Result<Self, NnError> {
        crate::nn::check_len(1, net.output_dim())?;
        let optimizer = Adam::new(net.parameter_count(), lr);
        Ok(Self {
            source,
            target,
            net,
            optimizer,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn net(&self) -> &DenseNet<T> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet<T> {
        &mut self.net
    }

    pub fn optimizer(&self) -> &Adam<T> {
        &self.optimizer
    }

    pub fn set_optimizer(&mut self, optimizer: Adam<T>) -> Result<(), NnError> {
        crate::nn::check_len(self.net.parameter_count(), optimizer.first_moment().len())?;
        self.optimizer = optimizer;
        Ok(())
    }

    pub fn scores(&self, inputs: ArrayView2<'_, T>) -> Result<Vec<T>, NnError> {
        Ok(self.net.forward_batch(inputs)?.into_raw_vec_and_offset().0)
    }

    /// The bound and its gradient with respect to the parameters:
    /// `mean(dT_joint) - sum_m softmax(T_marg)_m dT_m`.
    pub fn bound_and_gradient(
        &self,
        joint: ArrayView2<'_, T>,
        marginal: ArrayView2<'_, T>,
    ) -> Result<(T, Vec<T>), CausalError> {
        let (nj, nm) = (joint.nrows(), marginal.nrows());
        if nj == 0 || nm == 0 {
            return Err(CausalError::EmptyBatch);
        }
        let stacked = concatenate(Axis(0), &[joint, marginal]).map_err(|_| {
            NnError::DimensionMismatch {
                expected: joint.ncols(),
                actual: marginal.ncols(),
            }
        })?;
        let trace = self.net.forward_trace(stacked.view())?;
        let scores = trace.output().column(0).to_vec();
        let (js, ms) = scores.split_at(nj);
        let bound = dv_from_scores(js, ms)?;
        if !bound.is_finite() {
            return Err(CausalError::NonFiniteBound);
        }
        let lse = log_sum_exp(ms);
        let inv_j = T::one() / T::of(nj as f64);
        let mut upstream = Array2::<T>::zeros((nj + nm, 1));
        for r in 0..nj {
            upstream[[r, 0]] = inv_j;
        }
        for (r, &m) in ms.iter().enumerate() {
            upstream[[nj + r, 0]] = -(m - lse).exp();
        }
        let grads = self.net.backward_batch(&trace, upstream.view(), false)?;
        Ok((bound, grads.params))
    }

    /// One gradient-ascent step on the bound; returns the pre-step value.
    pub fn ascent_step(
        &mut self,
        joint: ArrayView2<'_, T>,
        marginal: ArrayView2<'_, T>,
    ) -> Result<T, CausalError> {
        let (bound, mut grads) = self.bound_and_gradient(joint, marginal)?;
        for g in &mut grads {
            *g = -*g;
        }
        self.optimizer.step(self.net.params_mut(), &grads)?;
        Ok(bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bound_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = StatisticNetwork::<f64>::new(0, 1, 3, &[8, 8], 1e-3, &mut rng).unwrap();
        let joint = Array2::from_shape_fn((5, 3), |(r, c)| ((r * 3 + c) as f64 * 0.37).sin());
        let marginal = Array2::from_shape_fn((4, 3), |(r, c)| ((r * 5 + c) as f64 * 0.21).cos());
        let (_, grads) = t.bound_and_gradient(joint.view(), marginal.view()).unwrap();
        let bound_of = |net: &DenseNet<f64>| {
            let j = net.forward_batch(joint.view()).unwrap().column(0).to_vec();
            let m = net.forward_batch(marginal.view()).unwrap().column(0).to_vec();
            dv_from_scores(&j, &m).unwrap()
        };
        let h = 1e-5;
        let mut probe = t.net().clone();
        for (k, &g) in grads.iter().enumerate() {
            let p0 = probe.params()[k];
            probe.params_mut()[k] = p0 + h;
            let up = bound_of(&probe);
            probe.params_mut()[k] = p0 - h;
            let down = bound_of(&probe);
            probe.params_mut()[k] = p0;
            let numeric = (up - down) / (2.0 * h);
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "param {k}: {g} vs {numeric}");
        }
    }

    #[test]
    fn ascent_increases_the_bound_on_dependent_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = StatisticNetwork::<f64>::new(0, 1, 2, &[16], 1e-2, &mut rng).unwrap();
        let joint = Array2::from_shape_fn((64, 2), |(r, _)| (r as f64 / 32.0) - 1.0);
        let marginal = Array2::from_shape_fn((64, 2), |(r, c)| {
            let x = (r as f64 / 32.0) - 1.0;
            if c == 0 { x } else { -x }
        });
        let first = t.ascent_step(joint.view(), marginal.view()).unwrap();
        let mut last = first;
        for _ in 0..200 {
            last = t.ascent_step(joint.view(), marginal.view()).unwrap();
        }
        assert!(last > first + 0.1, "{first} -> {last}");
    }

    #[test]
    fn single_pair_step_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = StatisticNetwork::<f64>::new(0, 1, 2, &[4], 1e-3, &mut rng).unwrap();
        let b = t
            .ascent_step(ndarray::array![[0.1, 0.2]].view(), ndarray::array![[0.3, -0.2]].view())
            .unwrap();
        assert!(b.is_finite());
    }
}
