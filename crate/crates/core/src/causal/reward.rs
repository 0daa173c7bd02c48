use rand::Rng;

use super::{estimate_ci, ActionSource, CIEstimate, CausalError, CausalLearner};
use crate::scalar::Scalar;

/// How per-peer influences combine into one agent's intrinsic reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// `sum_{j != i} CI^{ij}`.
    #[default]
    Sum,
    /// The sum divided by the number of peers.
    Mean,
}

impl Aggregation {
    pub fn apply<T: Scalar>(self, values: &[T]) -> T {
        let sum: T = values.iter().copied().sum();
        match self {
            Aggregation::Sum => sum,
            Aggregation::Mean if values.is_empty() => T::zero(),
            Aggregation::Mean => sum / T::of(values.len() as f64),
        }
    }
}

/// Agent `source`'s intrinsic reward and the per-peer estimates behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicReward<T> {
    pub source: usize,
    pub per_pair: Vec<CIEstimate<T>>,
    pub intrinsic: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardBreakdown<T> {
    pub extrinsic: T,
    /// `(peer, CI)` for every peer that contributed.
    pub ci: Vec<(usize, T)>,
    pub alpha: T,
    pub intrinsic: T,
    /// `extrinsic + alpha * intrinsic`.
    pub total: T,
}

/// `total = extrinsic + alpha * intrinsic`.
pub fn combine_reward<T: Scalar>(
    extrinsic: T,
    intrinsic: T,
    alpha: T,
) -> Result<RewardBreakdown<T>, CausalError> {
    if !(alpha >= T::zero()) {
        return Err(CausalError::NegativeAlpha(alpha.as_f64()));
    }
    Ok(RewardBreakdown {
        extrinsic,
        ci: Vec::new(),
        alpha,
        intrinsic,
        total: extrinsic + alpha * intrinsic,
    })
}

impl<T: Scalar> RewardBreakdown<T> {
    pub fn from_intrinsic(
        extrinsic: T,
        intrinsic: &IntrinsicReward<T>,
        alpha: T,
    ) -> Result<Self, CausalError> {
        let mut out = combine_reward(extrinsic, intrinsic.intrinsic, alpha)?;
        out.ci = intrinsic
            .per_pair
            .iter()
            .map(|e| (e.target, e.value))
            .collect();
        Ok(out)
    }
}

/// Aggregated influence of agent `agent` on every peer at `state`.
pub fn intrinsic_reward<T: Scalar, R: Rng + ?Sized>(
    agent: usize,
    state: &[T],
    learner: &CausalLearner<T>,
    source: &ActionSource<T>,
    samples: usize,
    aggregation: Aggregation,
    rng: &mut R,
) -> Result<IntrinsicReward<T>, CausalError> {
    let mut per_pair = Vec::with_capacity(learner.n_agents().saturating_sub(1));
    for peer in (0..learner.n_agents()).filter(|&j| j != agent) {
        let pair = learner
            .pair(agent, peer)
            .ok_or(CausalError::MissingPair(agent, peer))?;
        per_pair.push(estimate_ci(
            &pair.statistic,
            &pair.dynamics,
            source,
            state,
            samples,
            rng,
        )?);
    }
    let values: Vec<T> = per_pair.iter().map(|e| e.value).collect();
    Ok(IntrinsicReward {
        source: agent,
        intrinsic: aggregation.apply(&values),
        per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_formula() {
        let r = combine_reward(1.0, 2.0, 0.01).unwrap();
        assert!((r.total - 1.02_f64).abs() < 1e-15);
        let r = combine_reward(-3.0, 0.0, 0.5).unwrap();
        assert_eq!(r.total, -3.0);
        let r = combine_reward(-1.25, 7.5, 0.0).unwrap();
        assert_eq!(r.total, -1.25);
        assert_eq!(
            combine_reward(0.0, 1.0, -0.1),
            Err(CausalError::NegativeAlpha(-0.1))
        );
    }

    #[test]
    fn equal_influences_sum_to_peers_times_value() {
        let c = 0.37_f64;
        for n in 2..6 {
            let v = vec![c; n - 1];
            assert!((Aggregation::Sum.apply(&v) - (n - 1) as f64 * c).abs() < 1e-12);
            assert!((Aggregation::Mean.apply(&v) - c).abs() < 1e-12);
        }
        assert_eq!(Aggregation::Mean.apply::<f64>(&[]), 0.0);
    }
}
