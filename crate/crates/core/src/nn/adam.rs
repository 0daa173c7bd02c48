use super::{check_len, NnError};
use crate::scalar::Scalar;

/// Adaptive-moment optimizer with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    first: Vec<T>,
    second: Vec<T>,
    step: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(n_params: usize, lr: T) -> Self {
        Self {
            lr,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            first: vec![T::zero(); n_params],
            second: vec![T::zero(); n_params],
            step: 0,
        }
    }

    /// Rebuilds an optimizer from persisted moments.
    pub fn from_state(lr: T, first: Vec<T>, second: Vec<T>, step: u64) -> Result<Self, NnError> {
        check_len(first.len(), second.len())?;
        Ok(Self {
            first,
            second,
            step,
            ..Self::new(0, lr)
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[T] {
        &self.first
    }

    pub fn second_moment(&self) -> &[T] {
        &self.second
    }

    /// Applies one descent step. Non-finite gradients leave everything untouched.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<(), NnError> {
        check_len(self.first.len(), params.len())?;
        check_len(params.len(), grads.len())?;
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient(i));
        }
        self.step += 1;
        let t = self.step as i32;
        let one = T::one();
        let c1 = one - self.beta1.powi(t);
        let c2 = one - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = *p - self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
