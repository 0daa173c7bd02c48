use super::{DenseNet, NnError};
use crate::scalar::Scalar;

/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub passed: bool,
    pub max_rel_error: f64,
}

/// Denominator floor so that vanishing entries compare absolutely.
const REL_FLOOR: f64 = 1e-6;

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares `analytic` against central differences of `output . upstream`
/// with respect to every parameter of `net`.
pub fn check_gradient<T: Scalar>(
    net: &DenseNet<T>,
    input: &[T],
    upstream: &[T],
    analytic: &[T],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    super::check_len(net.parameter_count(), analytic.len())?;
    let objective = |n: &DenseNet<T>| -> Result<f64, NnError> {
        let out = n.forward(input)?;
        Ok(out
            .iter()
            .zip(upstream)
            .map(|(&o, &u)| (o * u).as_f64())
            .sum())
    };
    let mut probe = net.clone();
    let mut max_rel_error = 0.0_f64;
    for k in 0..net.parameter_count() {
        let original = probe.params()[k];
        probe.params_mut()[k] = original + T::of(step);
        let plus = objective(&probe)?;
        probe.params_mut()[k] = original - T::of(step);
        let minus = objective(&probe)?;
        probe.params_mut()[k] = original;
        let numeric = (plus - minus) / (2.0 * step);
        max_rel_error = max_rel_error.max(relative_error(analytic[k].as_f64(), numeric));
    }
    Ok(GradCheckReport {
        passed: max_rel_error < tolerance,
        max_rel_error,
    })
}

/// Checks [`DenseNet::backward`] at `input` against central differences
/// with step `1e-5`, using a fixed alternating upstream vector.
pub fn finite_diff_check<T: Scalar>(
    net: &DenseNet<T>,
    input: &[T],
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    let upstream: Vec<T> = (0..net.output_dim())
        .map(|k| T::of(if k % 2 == 0 { 1.0 } else { -0.5 }))
        .collect();
    let grads = net.backward(input, &upstream)?;
    check_gradient(net, input, &upstream, &grads.params, 1e-5, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_net_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net =
            DenseNet::<f64>::new_uniform(&[4, 8, 8, 2], Activation::Relu, Activation::Identity, &mut rng)
                .unwrap();
        let report = finite_diff_check(&net, &[0.3, -0.7, 1.1, 0.05], 1e-4).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn corrupted_gradient_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net =
            DenseNet::<f64>::new_uniform(&[3, 5, 1], Activation::Tanh, Activation::Identity, &mut rng)
                .unwrap();
        let input = [0.2, 0.4, -0.6];
        let mut g = net.backward(&input, &[1.0]).unwrap().params;
        g[0] += 1.0;
        let report = check_gradient(&net, &input, &[1.0], &g, 1e-5, 1e-4).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn zero_parameter_net_passes_vacuously() {
        let net = DenseNet::<f64>::zeros(&[0, 0], Activation::Relu, Activation::Identity).unwrap();
        assert_eq!(net.parameter_count(), 0);
        let report = finite_diff_check(&net, &[], 1e-4).unwrap();
        assert!(report.passed);
        assert_eq!(report.max_rel_error, 0.0);
    }
}
