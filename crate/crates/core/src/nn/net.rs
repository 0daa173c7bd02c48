use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;

use super::{check_len, NnError};
use crate::scalar::Scalar;

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => {
                if x > T::zero() {
                    x
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output `y = f(x)`.
    #[inline]
    fn derivative_at_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Fully connected network over a flat parameter vector.
///
/// Layer `l` maps `layer_sizes[l]` inputs to `layer_sizes[l + 1]` outputs.
/// Its parameters are stored contiguously as a row-major `out x in` weight
/// matrix followed by `out` biases. Hidden layers use `hidden`, the last
/// layer uses `output`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet<T> {
    layer_sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<T>,
}

/// Per-layer activations from a batched forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    activations: Vec<Array2<T>>,
}

impl<T: Scalar> Trace<T> {
    pub fn output(&self) -> &Array2<T> {
        self.activations.last().expect("trace holds the input at least")
    }

    pub fn into_output(mut self) -> Array2<T> {
        self.activations.pop().expect("trace holds the input at least")
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

/// Gradient of `output . upstream` for a single input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<T>,
    pub input: Vec<T>,
}

/// Gradient of `sum_b output_b . upstream_b` over a batch.
#[derive(Debug, Clone)]
pub struct BatchGradients<T> {
    /// Summed over the batch.
    pub params: Vec<T>,
    /// One row per sample, present when requested.
    pub inputs: Option<Array2<T>>,
}

pub(crate) fn parameter_count_for(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl<T: Scalar> DenseNet<T> {
    pub fn zeros(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
    ) -> Result<Self, NnError> {
        if layer_sizes.len() < 2 {
            return Err(NnError::TooFewLayers);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden,
            output,
            params: vec![T::zero(); parameter_count_for(layer_sizes)],
        })
    }

    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    pub fn new_uniform<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(layer_sizes, hidden, output)?;
        let mut offset = 0;
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if fan_in == 0 {
                0.0
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            let n = (fan_in + 1) * fan_out;
            for p in &mut net.params[offset..offset + n] {
                *p = T::of(rng.random_range(-1.0..=1.0) * bound);
            }
            offset += n;
        }
        Ok(net)
    }

    pub fn from_params(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
        params: Vec<T>,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(layer_sizes, hidden, output)?;
        check_len(net.params.len(), params.len())?;
        net.params = params;
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[T]) -> Result<(), NnError> {
        check_len(self.params.len(), params.len())?;
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.n_layers() {
            self.output
        } else {
            self.hidden
        }
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.n_layers());
        let mut offset = 0;
        for w in self.layer_sizes.windows(2) {
            offsets.push(offset);
            offset += (w[0] + 1) * w[1];
        }
        offsets
    }

    fn weights(&self, layer: usize, offset: usize) -> ArrayView2<'_, T> {
        let (fan_in, fan_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        ArrayView2::from_shape((fan_out, fan_in), &self.params[offset..offset + fan_in * fan_out])
            .expect("layer slice matches its shape")
    }

    fn biases(&self, layer: usize, offset: usize) -> &[T] {
        let (fan_in, fan_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        let start = offset + fan_in * fan_out;
        &self.params[start..start + fan_out]
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>, NnError> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, inputs: ArrayView2<'_, T>) -> Result<Array2<T>, NnError> {
        check_len(self.input_dim(), inputs.ncols())?;
        let mut current = inputs.to_owned();
        for (layer, offset) in self.layer_offsets().into_iter().enumerate() {
            current = self.layer_forward(layer, offset, current.view());
        }
        Ok(current)
    }

    /// `act(x W^T + b)` for one layer over a batch.
    fn layer_forward(&self, layer: usize, offset: usize, x: ArrayView2<'_, T>) -> Array2<T> {
        let w = self.weights(layer, offset);
        let b = self.biases(layer, offset);
        let mut data = Vec::with_capacity(x.nrows() * b.len());
        for _ in 0..x.nrows() {
            data.extend_from_slice(b);
        }
        let mut z = Array2::from_shape_vec((x.nrows(), b.len()), data).expect("rows of biases");
        general_mat_mul(T::one(), &x, &w.t(), T::one(), &mut z);
        match self.activation_of(layer) {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() }),
            Activation::Tanh => z.mapv_inplace(|v| v.tanh()),
        }
        z
    }

    /// Forward pass over `batch x input_dim` rows, retaining activations.
    pub fn forward_trace(&self, inputs: ArrayView2<'_, T>) -> Result<Trace<T>, NnError> {
        check_len(self.input_dim(), inputs.ncols())?;
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(inputs.to_owned());
        for (layer, offset) in self.layer_offsets().into_iter().enumerate() {
            let z = self.layer_forward(layer, offset, activations[layer].view());
            activations.push(z);
        }
        Ok(Trace { activations })
    }

    /// Reverse-mode gradient of `sum_b output_b . upstream_b`.
    pub fn backward_batch(
        &self,
        trace: &Trace<T>,
        upstream: ArrayView2<'_, T>,
        want_input: bool,
    ) -> Result<BatchGradients<T>, NnError> {
        check_len(self.output_dim(), upstream.ncols())?;
        check_len(trace.batch_size(), upstream.nrows())?;
        check_len(self.layer_sizes.len(), trace.activations.len())?;
        let offsets = self.layer_offsets();
        let mut grads = vec![T::zero(); self.params.len()];
        let mut delta = upstream.to_owned();
        let mut input_grad = None;
        for layer in (0..self.n_layers()).rev() {
            let act = self.activation_of(layer);
            let out = &trace.activations[layer + 1];
            if act != Activation::Identity {
                ndarray::Zip::from(&mut delta)
                    .and(out)
                    .for_each(|d, &y| *d = *d * act.derivative_at_output(y));
            }
            let (fan_in, fan_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
            let offset = offsets[layer];
            let a_in = &trace.activations[layer];
            {
                let (w_grad, rest) = grads[offset..].split_at_mut(fan_in * fan_out);
                let mut w_grad = ArrayViewMut2::from_shape((fan_out, fan_in), w_grad)
                    .expect("layer slice matches its shape");
                general_mat_mul(T::one(), &delta.t(), a_in, T::zero(), &mut w_grad);
                let sums = delta.sum_axis(Axis(0));
                rest[..fan_out].copy_from_slice(sums.as_slice().expect("contiguous"));
            }
            if layer > 0 || want_input {
                let w = self.weights(layer, offset);
                let mut prev = Array2::<T>::zeros((delta.nrows(), fan_in));
                general_mat_mul(T::one(), &delta, &w, T::zero(), &mut prev);
                if layer == 0 {
                    input_grad = Some(prev);
                    break;
                }
                delta = prev;
            }
        }
        Ok(BatchGradients {
            params: grads,
            inputs: input_grad,
        })
    }

    /// Gradient of `output . upstream` with respect to parameters and input.
    pub fn backward(&self, input: &[T], upstream: &[T]) -> Result<Gradients<T>, NnError> {
        check_len(self.output_dim(), upstream.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let trace = self.forward_trace(x)?;
        let up = ArrayView2::from_shape((1, upstream.len()), upstream).expect("row vector");
        let g = self.backward_batch(&trace, up, true)?;
        Ok(Gradients {
            params: g.params,
            input: g
                .inputs
                .expect("input gradient requested")
                .into_raw_vec_and_offset()
                .0,
        })
    }
}
