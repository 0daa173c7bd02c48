use ndarray::ArrayView2;

use super::{CausalError, StatisticNetwork};
use crate::scalar::{log_mean_exp, Scalar};

/// `mean(joint) - ln mean(exp(marginal))`, with the max subtracted inside
/// the exponential.
pub fn dv_from_scores<T: Scalar>(joint: &[T], marginal: &[T]) -> Result<T, CausalError> {
    if joint.is_empty() || marginal.is_empty() {
        return Err(CausalError::EmptyBatch);
    }
    let mean = joint.iter().copied().sum::<T>() / T::of(joint.len() as f64);
    Ok(mean - log_mean_exp(marginal))
}

/// Donsker-Varadhan lower bound of `statistic` on a joint and a
/// product-of-marginals batch.
pub fn dv_bound<T: Scalar>(
    statistic: &StatisticNetwork<T>,
    joint: ArrayView2<'_, T>,
    marginal: ArrayView2<'_, T>,
) -> Result<T, CausalError> {
    let j = statistic.scores(joint)?;
    let m = statistic.scores(marginal)?;
    dv_from_scores(&j, &m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_statistic_carries_no_information() {
        for c in [-3.0_f64, 0.0, 2.5, 700.0] {
            let b = dv_from_scores(&[c; 5], &[c; 7]).unwrap();
            assert!(b.abs() < 1e-12, "{c}: {b}");
        }
    }

    #[test]
    fn identical_batches_never_exceed_zero() {
        // Jensen: mean(x) <= ln mean(exp(x)).
        let x = [0.3, -1.2, 2.0, 0.7];
        assert!(dv_from_scores(&x, &x).unwrap() <= 0.0);
    }

    #[test]
    fn large_scores_do_not_overflow() {
        let b = dv_from_scores(&[1000.0_f64], &[1000.0, 999.0]).unwrap();
        let expected = 1000.0 - (1000.0 + ((1.0 + (-1.0f64).exp()) / 2.0).ln());
        assert!((b - expected).abs() < 1e-9);
    }

    #[test]
    fn empty_batches_rejected() {
        assert_eq!(dv_from_scores::<f64>(&[], &[1.0]), Err(CausalError::EmptyBatch));
        assert_eq!(dv_from_scores::<f64>(&[1.0], &[]), Err(CausalError::EmptyBatch));
    }
}
