//! Situation-dependent causal influence `CI^{ij} = I(s'_j; a_i | s_i)`.
//!
//! A statistic network per ordered pair is trained to maximise the
//! Donsker-Varadhan lower bound on this conditional mutual information,
//! using next states drawn from the learned dynamics under an action
//! intervention. Estimates are clamped at zero and summed over peers to
//! form each agent's intrinsic reward.

mod dv;
mod estimate;
mod learner;
mod reward;
mod statistic;

pub use dv::{dv_bound, dv_from_scores};
pub use estimate::{derangement, estimate_ci, estimate_ci_batch, train_statistic_step, CIEstimate};
pub use learner::{CausalBatch, CausalConfig, CausalLearner, PairEstimator, PairwiseEstimates};
pub use reward::{combine_reward, intrinsic_reward, Aggregation, IntrinsicReward, RewardBreakdown};
pub use statistic::StatisticNetwork;

use ndarray::Array2;
use rand::Rng;

use crate::dynamics::{DynamicsError, InterventionPolicy};
use crate::nn::NnError;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CausalError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite Donsker-Varadhan bound")]
    NonFiniteBound,
    #[error("need at least 2 Monte-Carlo samples for a derangement, got {0}")]
    TooFewSamples(usize),
    #[error("no estimator for pair ({0}, {1})")]
    MissingPair(usize, usize),
    #[error("temperature must be non-negative, got {0}")]
    NegativeAlpha(f64),
    #[error("empty replay action pool")]
    EmptyActionPool,
}

/// Where intervened actions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSource<T> {
    /// `do(a_i := U(box))`.
    Intervention(InterventionPolicy<T>),
    /// Actions resampled from replayed behaviour, one per row.
    Replay(Array2<T>),
}

impl<T: Scalar> ActionSource<T> {
    pub fn dim(&self) -> usize {
        match self {
            ActionSource::Intervention(p) => p.dim(),
            ActionSource::Replay(pool) => pool.ncols(),
        }
    }

    pub fn validate(&self) -> Result<(), CausalError> {
        match self {
            ActionSource::Replay(pool) if pool.nrows() == 0 => Err(CausalError::EmptyActionPool),
            _ => Ok(()),
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, out: &mut [T], rng: &mut R) {
        match self {
            ActionSource::Intervention(p) => p.sample_into(out, rng),
            ActionSource::Replay(pool) => {
                let row = pool.row(rng.random_range(0..pool.nrows()));
                for (o, &v) in out.iter_mut().zip(row.iter()) {
                    *o = v;
                }
            }
        }
    }
}
