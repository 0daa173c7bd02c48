//! Dense feedforward networks with analytic gradients, the Adam optimizer,
//! soft target updates and a finite-difference gradient checker.

mod adam;
mod gradcheck;
mod net;

pub use adam::Adam;
pub use gradcheck::{check_gradient, finite_diff_check, GradCheckReport};
pub use net::{Activation, BatchGradients, DenseNet, Gradients, Trace};

use crate::scalar::Scalar;

/// Flat gradient aligned with a [`DenseNet`] parameter vector.
pub type GradientVector<T> = Vec<T>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("network needs at least an input and an output layer")]
    TooFewLayers,
    #[error("non-finite gradient entry at index {0}")]
    NonFiniteGradient(usize),
    #[error("soft-update rate {0} outside [0, 1]")]
    InvalidTau(f64),
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<(), NnError> {
    if expected == actual {
        Ok(())
    } else {
        Err(NnError::DimensionMismatch { expected, actual })
    }
}

/// `target <- (1 - tau) * target + tau * source`, elementwise.
pub fn soft_update<T: Scalar>(target: &mut [T], source: &[T], tau: T) -> Result<(), NnError> {
    if !(tau >= T::zero() && tau <= T::one()) {
        return Err(NnError::InvalidTau(tau.as_f64()));
    }
    check_len(target.len(), source.len())?;
    if tau == T::one() {
        target.copy_from_slice(source);
        return Ok(());
    }
    let keep = T::one() - tau;
    for (t, &s) in target.iter_mut().zip(source) {
        *t = keep * *t + tau * s;
    }
    Ok(())
}
