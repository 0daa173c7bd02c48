use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::{estimate_ci_batch, train_statistic_step, ActionSource, Aggregation, CausalError, StatisticNetwork};
use crate::dynamics::{concat_columns, PairDynamicsModel};
use crate::nn::check_len;
use crate::scalar::Scalar;

/// Dynamics model and statistic network of one ordered pair `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEstimator<T> {
    pub dynamics: PairDynamicsModel<T>,
    pub statistic: StatisticNetwork<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalConfig {
    pub hidden: Vec<usize>,
    pub dynamics_lr: f64,
    pub statistic_lr: f64,
}

impl Default for CausalConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            dynamics_lr: 1e-3,
            statistic_lr: 1e-3,
        }
    }
}

/// A replay batch in the learner's layout, one matrix per agent.
#[derive(Debug, Clone)]
pub struct CausalBatch<T> {
    /// `B x obs_dim_i`.
    pub observations: Vec<Array2<T>>,
    /// `B x action_dim`.
    pub actions: Vec<Array2<T>>,
    /// `B x state_dim`: each agent's own next state.
    pub next_states: Vec<Array2<T>>,
}

impl<T: Scalar> CausalBatch<T> {
    pub fn len(&self) -> usize {
        self.observations.first().map_or(0, |o| o.nrows())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Clamped estimates for every ordered pair on every sample of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseEstimates<T> {
    pub n_agents: usize,
    pub pairs: Vec<(usize, usize)>,
    /// `values[p][b]` is the estimate of pair `pairs[p]` at sample `b`.
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> PairwiseEstimates<T> {
    /// `result[i][b]`: aggregated influence of agent `i` at sample `b`.
    pub fn intrinsic(&self, aggregation: Aggregation) -> Vec<Vec<T>> {
        let samples = self.values.first().map_or(0, Vec::len);
        (0..self.n_agents)
            .map(|i| {
                let rows: Vec<&Vec<T>> = self
                    .pairs
                    .iter()
                    .zip(&self.values)
                    .filter(|((src, _), _)| *src == i)
                    .map(|(_, v)| v)
                    .collect();
                (0..samples)
                    .map(|b| {
                        let peer: Vec<T> = rows.iter().map(|v| v[b]).collect();
                        aggregation.apply(&peer)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn pair_means(&self) -> Vec<T> {
        self.values
            .iter()
            .map(|v| {
                if v.is_empty() {
                    T::zero()
                } else {
                    v.iter().copied().sum::<T>() / T::of(v.len() as f64)
                }
            })
            .collect()
    }
}

/// Estimators for every ordered pair `(i, j)`, `i != j`, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalLearner<T> {
    n_agents: usize,
    condition_dims: Vec<usize>,
    action_dim: usize,
    state_dim: usize,
    pairs: Vec<PairEstimator<T>>,
}

impl<T: Scalar> CausalLearner<T> {
    pub fn new<R: Rng + ?Sized>(
        condition_dims: &[usize],
        action_dim: usize,
        state_dim: usize,
        config: &CausalConfig,
        rng: &mut R,
    ) -> Result<Self, CausalError> {
        let n_agents = condition_dims.len();
        let mut pairs = Vec::with_capacity(n_agents * n_agents.saturating_sub(1));
        for (i, &cond) in condition_dims.iter().enumerate() {
            for j in (0..n_agents).filter(|&j| j != i) {
                let dynamics = PairDynamicsModel::new(
                    i,
                    j,
                    cond,
                    action_dim,
                    state_dim,
                    &config.hidden,
                    T::of(config.dynamics_lr),
                    rng,
                )?;
                let statistic = StatisticNetwork::new(
                    i,
                    j,
                    cond + action_dim + state_dim,
                    &config.hidden,
                    T::of(config.statistic_lr),
                    rng,
                )?;
                pairs.push(PairEstimator { dynamics, statistic });
            }
        }
        Ok(Self {
            n_agents,
            condition_dims: condition_dims.to_vec(),
            action_dim,
            state_dim,
            pairs,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn pair_ids(&self) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .map(|p| (p.dynamics.source, p.dynamics.target))
            .collect()
    }

    pub fn pairs(&self) -> &[PairEstimator<T>] {
        &self.pairs
    }

    pub fn pairs_mut(&mut self) -> &mut [PairEstimator<T>] {
        &mut self.pairs
    }

    pub fn pair(&self, source: usize, target: usize) -> Option<&PairEstimator<T>> {
        self.pair_index(source, target).map(|k| &self.pairs[k])
    }

    pub fn pair_mut(&mut self, source: usize, target: usize) -> Option<&mut PairEstimator<T>> {
        self.pair_index(source, target).map(move |k| &mut self.pairs[k])
    }

    fn pair_index(&self, source: usize, target: usize) -> Option<usize> {
        if source >= self.n_agents || target >= self.n_agents || source == target {
            return None;
        }
        let peers = self.n_agents - 1;
        Some(source * peers + if target > source { target - 1 } else { target })
    }

    fn check_batch(&self, batch: &CausalBatch<T>) -> Result<(), CausalError> {
        check_len(self.n_agents, batch.observations.len())?;
        check_len(self.n_agents, batch.actions.len())?;
        check_len(self.n_agents, batch.next_states.len())?;
        if batch.is_empty() {
            return Err(CausalError::EmptyBatch);
        }
        for i in 0..self.n_agents {
            check_len(self.condition_dims[i], batch.observations[i].ncols())?;
            check_len(self.action_dim, batch.actions[i].ncols())?;
            check_len(self.state_dim, batch.next_states[i].ncols())?;
        }
        Ok(())
    }

    /// One negative log-likelihood step per pair; pre-step losses in pair order.
    pub fn fit_dynamics(&mut self, batch: &CausalBatch<T>) -> Result<Vec<T>, CausalError> {
        self.check_batch(batch)?;
        let inputs: Vec<Array2<T>> = (0..self.n_agents)
            .map(|i| concat_columns(&[batch.observations[i].view(), batch.actions[i].view()]))
            .collect();
        self.pairs
            .iter_mut()
            .map(|p| {
                let (i, j) = (p.dynamics.source, p.dynamics.target);
                Ok(p.dynamics
                    .nll_fit_step(inputs[i].view(), batch.next_states[j].view())?)
            })
            .collect()
    }

    /// One ascent step per statistic network, conditioning on the batch's
    /// observations. `sources[i]` supplies agent `i`'s actions.
    pub fn train_statistics<R: Rng + ?Sized>(
        &mut self,
        observations: &[Array2<T>],
        sources: &[ActionSource<T>],
        rng: &mut R,
    ) -> Result<Vec<T>, CausalError> {
        check_len(self.n_agents, observations.len())?;
        check_len(self.n_agents, sources.len())?;
        self.pairs
            .iter_mut()
            .map(|p| {
                let i = p.dynamics.source;
                train_statistic_step(
                    &mut p.statistic,
                    &p.dynamics,
                    &sources[i],
                    observations[i].view(),
                    rng,
                )
            })
            .collect()
    }

    /// Clamped estimates of every pair at every row of `observations[i]`.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        observations: &[Array2<T>],
        sources: &[ActionSource<T>],
        samples: usize,
        rng: &mut R,
    ) -> Result<PairwiseEstimates<T>, CausalError> {
        check_len(self.n_agents, observations.len())?;
        check_len(self.n_agents, sources.len())?;
        let values = self
            .pairs
            .iter()
            .map(|p| {
                let i = p.dynamics.source;
                Ok(estimate_ci_batch(
                    &p.statistic,
                    &p.dynamics,
                    &sources[i],
                    observations[i].view(),
                    samples,
                    rng,
                )?
                .into_iter()
                .map(|e| e.value)
                .collect())
            })
            .collect::<Result<_, CausalError>>()?;
        Ok(PairwiseEstimates {
            n_agents: self.n_agents,
            pairs: self.pair_ids(),
            values,
        })
    }

    /// Estimates for one pair at arbitrary conditioning states.
    pub fn estimate_pair<R: Rng + ?Sized>(
        &self,
        source: usize,
        target: usize,
        states: ArrayView2<'_, T>,
        actions: &ActionSource<T>,
        samples: usize,
        rng: &mut R,
    ) -> Result<Vec<T>, CausalError> {
        let p = self
            .pair(source, target)
            .ok_or(CausalError::MissingPair(source, target))?;
        Ok(
            estimate_ci_batch(&p.statistic, &p.dynamics, actions, states, samples, rng)?
                .into_iter()
                .map(|e| e.value)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::intrinsic_reward;
    use crate::dynamics::InterventionPolicy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_learner(n: usize) -> CausalLearner<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = CausalConfig {
            hidden: vec![8],
            ..CausalConfig::default()
        };
        CausalLearner::new(&vec![3; n], 2, 1, &cfg, &mut rng).unwrap()
    }

    fn batch(n: usize, b: usize) -> CausalBatch<f64> {
        let f = |cols: usize, phase: f64| {
            Array2::from_shape_fn((b, cols), |(r, c)| ((r * cols + c) as f64 * 0.3 + phase).sin())
        };
        CausalBatch {
            observations: (0..n).map(|i| f(3, i as f64)).collect(),
            actions: (0..n).map(|i| f(2, 2.0 * i as f64)).collect(),
            next_states: (0..n).map(|i| f(1, 3.0 * i as f64)).collect(),
        }
    }

    #[test]
    fn pair_layout_is_lexicographic() {
        let l = small_learner(3);
        assert_eq!(l.pair_ids(), vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        for (i, j) in l.pair_ids() {
            let p = l.pair(i, j).unwrap();
            assert_eq!((p.dynamics.source, p.dynamics.target), (i, j));
            assert_eq!((p.statistic.source, p.statistic.target), (i, j));
        }
        assert!(l.pair(1, 1).is_none());
        assert!(l.pair(0, 3).is_none());
    }

    #[test]
    fn fit_train_estimate_round() {
        let mut l = small_learner(3);
        let b = batch(3, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let losses = l.fit_dynamics(&b).unwrap();
        assert_eq!(losses.len(), 6);
        let sources = vec![ActionSource::Intervention(InterventionPolicy::unit_box(2)); 3];
        let bounds = l.train_statistics(&b.observations, &sources, &mut rng).unwrap();
        assert!(bounds.iter().all(|v| v.is_finite()));
        let est = l.estimate(&b.observations, &sources, 8, &mut rng).unwrap();
        assert_eq!(est.values.len(), 6);
        assert!(est.values.iter().all(|v| v.len() == 16 && v.iter().all(|&x| x >= 0.0)));
        let intrinsic = est.intrinsic(Aggregation::Sum);
        for i in 0..3 {
            for s in 0..16 {
                let expected: f64 = est
                    .pairs
                    .iter()
                    .zip(&est.values)
                    .filter(|((src, _), _)| *src == i)
                    .map(|(_, v)| v[s])
                    .sum();
                assert_eq!(intrinsic[i][s], expected);
            }
        }
    }

    #[test]
    fn intrinsic_reward_matches_batch_form() {
        let l = small_learner(3);
        let b = batch(3, 1);
        let src = ActionSource::Intervention(InterventionPolicy::unit_box(2));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = intrinsic_reward(
            1,
            b.observations[1].row(0).as_slice().unwrap(),
            &l,
            &src,
            6,
            Aggregation::Sum,
            &mut rng,
        )
        .unwrap();
        assert_eq!(r.per_pair.len(), 2);
        assert_eq!(r.per_pair[0].target, 0);
        assert_eq!(r.per_pair[1].target, 2);
        let sum: f64 = r.per_pair.iter().map(|e| e.value).sum();
        assert_eq!(r.intrinsic, sum);
    }

    #[test]
    fn missing_pair_is_a_configuration_error() {
        let l = small_learner(2);
        let src = ActionSource::Intervention(InterventionPolicy::unit_box(2));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            l.estimate_pair(0, 0, Array2::zeros((1, 3)).view(), &src, 4, &mut rng),
            Err(CausalError::MissingPair(0, 0))
        );
    }

    #[test]
    fn batch_shape_checked() {
        let mut l = small_learner(2);
        let mut b = batch(2, 4);
        b.next_states[1] = Array2::zeros((4, 2));
        assert!(l.fit_dynamics(&b).is_err());
    }
}
