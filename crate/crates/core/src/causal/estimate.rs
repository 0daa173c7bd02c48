use ndarray::{s, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;

use super::dv::dv_from_scores;
use super::{ActionSource, CausalError, StatisticNetwork};
use crate::dynamics::{concat_columns, PairDynamicsModel};
use crate::nn::check_len;
use crate::scalar::Scalar;

/// Causal influence of `source`'s action on `target`'s next state at one
/// conditioning state, in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct CIEstimate<T> {
    pub source: usize,
    pub target: usize,
    pub state: Vec<T>,
    /// `max(raw_value, 0)`.
    pub value: T,
    pub raw_value: T,
}

/// Uniformly random cyclic derangement of `0..n`: `perm[k] != k` for all `k`.
pub fn derangement<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<usize>, CausalError> {
    if n < 2 {
        return Err(CausalError::TooFewSamples(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut perm = vec![0; n];
    for k in 0..n {
        perm[order[k]] = order[(k + 1) % n];
    }
    Ok(perm)
}

fn check_pair_dims<T: Scalar>(
    statistic: &StatisticNetwork<T>,
    dynamics: &PairDynamicsModel<T>,
    source: &ActionSource<T>,
    states: ArrayView2<'_, T>,
) -> Result<(), CausalError> {
    check_len(dynamics.condition_dim(), states.ncols())?;
    check_len(dynamics.action_dim(), source.dim())?;
    check_len(
        dynamics.condition_dim() + dynamics.action_dim() + dynamics.state_dim(),
        statistic.input_dim(),
    )?;
    source.validate()
}

/// Rows `(s_b, a_b)` with `a_b` drawn from `source`, each state repeated
/// `repeats` times consecutively.
fn with_sampled_actions<T: Scalar, R: Rng + ?Sized>(
    states: ArrayView2<'_, T>,
    source: &ActionSource<T>,
    repeats: usize,
    rng: &mut R,
) -> Array2<T> {
    let (cond, act) = (states.ncols(), source.dim());
    let mut rows = Array2::zeros((states.nrows() * repeats, cond + act));
    for (b, state) in states.rows().into_iter().enumerate() {
        for k in 0..repeats {
            let mut row = rows.row_mut(b * repeats + k);
            row.slice_mut(s![..cond]).assign(&state);
            let row = row.into_slice().expect("contiguous row");
            source.sample_into(&mut row[cond..], rng);
        }
    }
    rows
}

/// One ascent step of `statistic` on model-generated samples.
///
/// For each conditioning state `s`: draw `a` from `source` and
/// `s' ~ p(.|s, a)` for the joint term; pair the same `(s, s')` with an
/// independent draw of `a` for the product-of-marginals term. Returns the
/// bound before the step.
pub fn train_statistic_step<T: Scalar, R: Rng + ?Sized>(
    statistic: &mut StatisticNetwork<T>,
    dynamics: &PairDynamicsModel<T>,
    source: &ActionSource<T>,
    states: ArrayView2<'_, T>,
    rng: &mut R,
) -> Result<T, CausalError> {
    if states.nrows() == 0 {
        return Err(CausalError::EmptyBatch);
    }
    check_pair_dims(statistic, dynamics, source, states)?;
    let inputs = with_sampled_actions(states, source, 1, rng);
    let next = dynamics.sample_next_batch(inputs.view(), rng)?;
    let independent = with_sampled_actions(states, source, 1, rng);
    let joint = concat_columns(&[inputs.view(), next.view()]);
    let marginal = concat_columns(&[independent.view(), next.view()]);
    let bound = statistic.ascent_step(joint.view(), marginal.view())?;
    if !bound.is_finite() {
        return Err(CausalError::NonFiniteBound);
    }
    Ok(bound)
}

/// Causal-influence estimates at each row of `states`.
///
/// Per state: `K` actions from `source`, `K` next states from the dynamics
/// model; the bound contrasts the joint pairing with a derangement of the
/// actions over the same next states.
pub fn estimate_ci_batch<T: Scalar, R: Rng + ?Sized>(
    statistic: &StatisticNetwork<T>,
    dynamics: &PairDynamicsModel<T>,
    source: &ActionSource<T>,
    states: ArrayView2<'_, T>,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<CIEstimate<T>>, CausalError> {
    if samples < 2 {
        return Err(CausalError::TooFewSamples(samples));
    }
    check_pair_dims(statistic, dynamics, source, states)?;
    let cond = states.ncols();
    let act = source.dim();
    let inputs = with_sampled_actions(states, source, samples, rng);
    let next = dynamics.sample_next_batch(inputs.view(), rng)?;
    let joint = concat_columns(&[inputs.view(), next.view()]);
    let mut shuffled = joint.clone();
    for b in 0..states.nrows() {
        let perm = derangement(samples, rng)?;
        let base = b * samples;
        for (k, &p) in perm.iter().enumerate() {
            let src = joint.slice(s![base + p, cond..cond + act]);
            shuffled.slice_mut(s![base + k, cond..cond + act]).assign(&src);
        }
    }
    let joint_scores = statistic.scores(joint.view())?;
    let shuffled_scores = statistic.scores(shuffled.view())?;
    states
        .rows()
        .into_iter()
        .enumerate()
        .map(|(b, state)| {
            let range = b * samples..(b + 1) * samples;
            let raw = dv_from_scores(&joint_scores[range.clone()], &shuffled_scores[range])?;
            if !raw.is_finite() {
                return Err(CausalError::NonFiniteBound);
            }
            Ok(CIEstimate {
                source: dynamics.source,
                target: dynamics.target,
                state: state.to_vec(),
                value: raw.max(T::zero()),
                raw_value: raw,
            })
        })
        .collect()
}

/// Single-state form of [`estimate_ci_batch`].
pub fn estimate_ci<T: Scalar, R: Rng + ?Sized>(
    statistic: &StatisticNetwork<T>,
    dynamics: &PairDynamicsModel<T>,
    source: &ActionSource<T>,
    state: &[T],
    samples: usize,
    rng: &mut R,
) -> Result<CIEstimate<T>, CausalError> {
    let view = ArrayView2::from_shape((1, state.len()), state).expect("row vector");
    Ok(estimate_ci_batch(statistic, dynamics, source, view, samples, rng)?
        .pop()
        .expect("one state in, one estimate out"))
}
