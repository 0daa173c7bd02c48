//! Learned diagonal-Gaussian transition densities `p(s'_j | s_i, a_i)` for
//! ordered agent pairs, and Monte-Carlo marginalisation of the action under
//! a uniform intervention.

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::nn::{Activation, Adam, DenseNet, NnError};
use crate::scalar::{log_mean_exp, Scalar};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite negative log-likelihood")]
    NonFiniteLoss,
    #[error("invalid intervention box: {0}")]
    InvalidIntervention(String),
    #[error("need at least one Monte-Carlo sample")]
    NoSamples,
}

/// Uniform distribution over an axis-aligned action box.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionPolicy<T> {
    low: Vec<T>,
    high: Vec<T>,
}

impl<T: Scalar> InterventionPolicy<T> {
    pub fn new(low: Vec<T>, high: Vec<T>) -> Result<Self, DynamicsError> {
        if low.len() != high.len() {
            return Err(DynamicsError::InvalidIntervention(
                "bound lengths differ".into(),
            ));
        }
        if let Some(d) = (0..low.len()).find(|&d| !(low[d] < high[d])) {
            return Err(DynamicsError::InvalidIntervention(format!(
                "lower bound not below upper bound in dimension {d}"
            )));
        }
        Ok(Self { low, high })
    }

    /// The `[-1, 1]^dim` box.
    pub fn unit_box(dim: usize) -> Self {
        Self {
            low: vec![-T::one(); dim],
            high: vec![T::one(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, out: &mut [T], rng: &mut R) {
        for ((o, &lo), &hi) in out.iter_mut().zip(&self.low).zip(&self.high) {
            let u: f64 = rng.random();
            *o = lo + (hi - lo) * T::of(u);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let mut a = vec![T::zero(); self.dim()];
        self.sample_into(&mut a, rng);
        a
    }
}

/// Row-wise concatenation of equally tall blocks.
pub fn concat_columns<T: Scalar>(blocks: &[ArrayView2<'_, T>]) -> Array2<T> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Array2::zeros((rows, cols));
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.slice_mut(s![.., c..c + b.ncols()]).assign(b);
        c += b.ncols();
    }
    out
}

/// Gaussian density of agent `target`'s next own state given agent
/// `source`'s observation and action.
///
/// The network maps `(s_i, a_i)` to `2 * state_dim` outputs: the mean, then
/// the raw log standard deviation, clamped to `[-5, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDynamicsModel<T> {
    pub source: usize,
    pub target: usize,
    condition_dim: usize,
    action_dim: usize,
    state_dim: usize,
    net: DenseNet<T>,
    optimizer: Adam<T>,
}

/// Predicted Gaussian parameters, one row per input.
#[derive(Debug, Clone)]
pub struct GaussianBatch<T> {
    pub mean: Array2<T>,
    pub log_std: Array2<T>,
}

impl<T: Scalar> PairDynamicsModel<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        source: usize,
        target: usize,
        condition_dim: usize,
        action_dim: usize,
        state_dim: usize,
        hidden: &[usize],
        lr: T,
        rng: &mut R,
    ) -> Result<Self, DynamicsError> {
        let mut sizes = vec![condition_dim + action_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * state_dim);
        let net = DenseNet::new_uniform(&sizes, Activation::Relu, Activation::Identity, rng)?;
        Ok(Self::from_net(source, target, condition_dim, action_dim, state_dim, net, lr)?)
    }

    pub fn from_net(
        source: usize,
        target: usize,
        condition_dim: usize,
        action_dim: usize,
        state_dim: usize,
        net: DenseNet<T>,
        lr: T,
    ) -> Result<Self, NnError> {
        crate::nn::check_len(condition_dim + action_dim, net.input_dim())?;
        crate::nn::check_len(2 * state_dim, net.output_dim())?;
        let optimizer = Adam::new(net.parameter_count(), lr);
        Ok(Self {
            source,
            target,
            condition_dim,
            action_dim,
            state_dim,
            net,
            optimizer,
        })
    }

    pub fn condition_dim(&self) -> usize {
        self.condition_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
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

    fn split(&self, out: Array2<T>) -> GaussianBatch<T> {
        let d = self.state_dim;
        let (lo, hi) = (T::of(LOG_STD_MIN), T::of(LOG_STD_MAX));
        let mean = out.slice(s![.., ..d]).to_owned();
        let log_std = out.slice(s![.., d..]).mapv(|v| v.max(lo).min(hi));
        GaussianBatch { mean, log_std }
    }

    /// Rows of `(s_i ++ a_i)`.
    pub fn predict_batch(&self, inputs: ArrayView2<'_, T>) -> Result<GaussianBatch<T>, DynamicsError> {
        Ok(self.split(self.net.forward_batch(inputs)?))
    }

    fn input_row(&self, state: &[T], action: &[T]) -> Result<Array2<T>, NnError> {
        crate::nn::check_len(self.condition_dim, state.len())?;
        crate::nn::check_len(self.action_dim, action.len())?;
        let mut row = Array2::zeros((1, self.condition_dim + self.action_dim));
        for (dst, &v) in row.iter_mut().zip(state.iter().chain(action)) {
            *dst = v;
        }
        Ok(row)
    }

    /// Diagonal-Gaussian log density of each target row.
    pub fn log_prob_batch(
        &self,
        inputs: ArrayView2<'_, T>,
        targets: ArrayView2<'_, T>,
    ) -> Result<Vec<T>, DynamicsError> {
        crate::nn::check_len(self.state_dim, targets.ncols())?;
        crate::nn::check_len(inputs.nrows(), targets.nrows())?;
        let g = self.predict_batch(inputs)?;
        Ok(gaussian_log_density_rows(&g, targets))
    }

    pub fn log_prob(&self, state: &[T], action: &[T], next: &[T]) -> Result<T, DynamicsError> {
        let row = self.input_row(state, action)?;
        let target = ArrayView2::from_shape((1, next.len()), next).expect("row vector");
        Ok(self.log_prob_batch(row.view(), target)?[0])
    }

    /// `mean + std * z` with standard-normal `z`, one draw per input row.
    pub fn sample_next_batch<R: Rng + ?Sized>(
        &self,
        inputs: ArrayView2<'_, T>,
        rng: &mut R,
    ) -> Result<Array2<T>, DynamicsError> {
        let g = self.predict_batch(inputs)?;
        let mut out = g.mean;
        for (o, &ls) in out.iter_mut().zip(g.log_std.iter()) {
            let z: f64 = rng.sample(StandardNormal);
            *o = *o + ls.exp() * T::of(z);
        }
        Ok(out)
    }

    pub fn sample_next<R: Rng + ?Sized>(
        &self,
        state: &[T],
        action: &[T],
        rng: &mut R,
    ) -> Result<Vec<T>, DynamicsError> {
        let row = self.input_row(state, action)?;
        Ok(self.sample_next_batch(row.view(), rng)?.into_raw_vec_and_offset().0)
    }

    /// Mean Gaussian negative log-likelihood of the batch.
    pub fn nll(&self, inputs: ArrayView2<'_, T>, targets: ArrayView2<'_, T>) -> Result<T, DynamicsError> {
        let lp = self.log_prob_batch(inputs, targets)?;
        if lp.is_empty() {
            return Err(DynamicsError::EmptyBatch);
        }
        let n = T::of(lp.len() as f64);
        Ok(-lp.into_iter().sum::<T>() / n)
    }

    /// One Adam step on the mean negative log-likelihood; returns the
    /// pre-step loss.
    pub fn nll_fit_step(
        &mut self,
        inputs: ArrayView2<'_, T>,
        targets: ArrayView2<'_, T>,
    ) -> Result<T, DynamicsError> {
        let batch = inputs.nrows();
        if batch == 0 {
            return Err(DynamicsError::EmptyBatch);
        }
        crate::nn::check_len(batch, targets.nrows())?;
        crate::nn::check_len(self.state_dim, targets.ncols())?;
        let trace = self.net.forward_trace(inputs)?;
        let out = trace.output();
        let d = self.state_dim;
        let (lo, hi) = (T::of(LOG_STD_MIN), T::of(LOG_STD_MAX));
        let inv_b = T::one() / T::of(batch as f64);
        let half = T::of(0.5);
        let mut loss = T::zero();
        let mut upstream = Array2::<T>::zeros(out.raw_dim());
        for b in 0..batch {
            for k in 0..d {
                let mu = out[[b, k]];
                let raw = out[[b, d + k]];
                let ls = raw.max(lo).min(hi);
                let inv_var = (-(ls + ls)).exp();
                let diff = targets[[b, k]] - mu;
                let z2 = diff * diff * inv_var;
                loss = loss + half * z2 + ls + T::of(HALF_LN_2PI);
                upstream[[b, k]] = -diff * inv_var * inv_b;
                upstream[[b, d + k]] = if raw > lo && raw < hi {
                    (T::one() - z2) * inv_b
                } else {
                    T::zero()
                };
            }
        }
        loss = loss * inv_b;
        if !loss.is_finite() {
            return Err(DynamicsError::NonFiniteLoss);
        }
        let grads = self.net.backward_batch(&trace, upstream.view(), false)?;
        self.optimizer.step(self.net.params_mut(), &grads.params)?;
        Ok(loss)
    }
}

fn gaussian_log_density_rows<T: Scalar>(g: &GaussianBatch<T>, targets: ArrayView2<'_, T>) -> Vec<T> {
    let half = T::of(0.5);
    g.mean
        .axis_iter(Axis(0))
        .zip(g.log_std.axis_iter(Axis(0)))
        .zip(targets.axis_iter(Axis(0)))
        .map(|((mu, ls), y)| {
            let mut lp = T::zero();
            for k in 0..mu.len() {
                let z = (y[k] - mu[k]) * (-ls[k]).exp();
                lp = lp - half * z * z - ls[k] - T::of(HALF_LN_2PI);
            }
            lp
        })
        .collect()
}

/// Monte-Carlo estimate of `ln p(s'_j | s_i)` with the action marginalised
/// under the intervention: `ln (1/K) sum_k p(s'_j | s_i, a_k)`, `a_k ~ U(box)`.
pub fn marginal_log_prob<T: Scalar, R: Rng + ?Sized>(
    model: &PairDynamicsModel<T>,
    intervention: &InterventionPolicy<T>,
    state: &[T],
    next: &[T],
    samples: usize,
    rng: &mut R,
) -> Result<T, DynamicsError> {
    Ok(log_mean_exp(&component_log_probs(
        model,
        intervention,
        state,
        next,
        samples,
        rng,
    )?))
}

/// `ln p(s'_j | s_i, a_k)` for `K` intervention draws `a_k`.
pub fn component_log_probs<T: Scalar, R: Rng + ?Sized>(
    model: &PairDynamicsModel<T>,
    intervention: &InterventionPolicy<T>,
    state: &[T],
    next: &[T],
    samples: usize,
    rng: &mut R,
) -> Result<Vec<T>, DynamicsError> {
    if samples == 0 {
        return Err(DynamicsError::NoSamples);
    }
    crate::nn::check_len(model.condition_dim, state.len())?;
    crate::nn::check_len(model.action_dim, intervention.dim())?;
    crate::nn::check_len(model.state_dim, next.len())?;
    let width = model.condition_dim + model.action_dim;
    let mut inputs = Array2::zeros((samples, width));
    let mut targets = Array2::zeros((samples, next.len()));
    for k in 0..samples {
        let mut row = inputs.row_mut(k);
        let row = row.as_slice_mut().expect("contiguous row");
        row[..state.len()].copy_from_slice(state);
        intervention.sample_into(&mut row[state.len()..], rng);
        targets
            .row_mut(k)
            .as_slice_mut()
            .expect("contiguous row")
            .copy_from_slice(next);
    }
    model.log_prob_batch(inputs.view(), targets.view())
}
