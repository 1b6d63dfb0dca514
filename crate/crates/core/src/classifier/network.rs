//! Fully connected layer stack over a flat parameter vector.
//!
//! Layer `l` maps width `dims[l]` to `dims[l + 1]`. Its parameters are stored
//! as a row-major `dims[l] × dims[l + 1]` weight block followed by the bias,
//! so `h_{l+1} = h_l · W_l + b_l`. Hidden layers use ReLU; the last layer emits
//! raw logits and callers apply their own output transform.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseStack {
    dims: Vec<usize>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `activations[0]` is the input; `activations[l]` the ReLU output of layer `l - 1`.
    activations: Vec<Array2<f64>>,
    pub logits: Array1<f64>,
}

impl DenseStack {
    /// `dims` lists every width from input to output; the output width must be 1.
    pub fn new(dims: Vec<usize>) -> Self {
        assert!(dims.len() >= 2, "need input and output widths");
        assert!(dims.iter().all(|&d| d > 0), "widths must be positive");
        assert_eq!(*dims.last().unwrap(), 1, "single output unit");
        Self { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// `(offset, fan_in, fan_out)` of each layer in the flat vector.
    fn layout(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.dims.windows(2).scan(0usize, |offset, w| {
            let start = *offset;
            *offset += w[0] * w[1] + w[1];
            Some((start, w[0], w[1]))
        })
    }

    pub fn layer<'a>(&self, params: &'a [f64], l: usize) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
        let (offset, fan_in, fan_out) = self.layout().nth(l).expect("layer index");
        let w = ArrayView2::from_shape((fan_in, fan_out), &params[offset..offset + fan_in * fan_out])
            .expect("weight block shape");
        let b = ArrayView1::from(&params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out]);
        (w, b)
    }

    /// `true` for weight entries, `false` for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.param_count());
        for (_, fan_in, fan_out) in self.layout() {
            mask.extend(std::iter::repeat_n(true, fan_in * fan_out));
            mask.extend(std::iter::repeat_n(false, fan_out));
        }
        mask
    }

    /// He-uniform weights (`±sqrt(6 / fan_in)`) and zero biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count());
        for (_, fan_in, fan_out) in self.layout() {
            let limit = (6.0 / fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: &Array2<f64>) -> ForwardPass {
        debug_assert_eq!(params.len(), self.param_count());
        debug_assert_eq!(input.ncols(), self.input_dim());
        let mut activations = vec![input.clone()];
        let last = self.layer_count() - 1;
        for l in 0..self.layer_count() {
            let (w, b) = self.layer(params, l);
            let mut z = activations[l].dot(&w);
            z += &b;
            if l == last {
                let logits = z.index_axis_move(Axis(1), 0);
                return ForwardPass { activations, logits };
            }
            z.mapv_inplace(|v| v.max(0.0));
            activations.push(z);
        }
        unreachable!("stack has at least one layer")
    }

    pub fn logits(&self, params: &[f64], input: &Array2<f64>) -> Array1<f64> {
        self.forward(params, input).logits
    }

    /// Gradient of a loss with respect to all parameters given `d_logits`,
    /// the loss gradient with respect to each row's logit.
    pub fn backward(&self, params: &[f64], pass: &ForwardPass, d_logits: &Array1<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.param_count()];
        let layout: Vec<_> = self.layout().collect();
        let mut delta = d_logits.clone().insert_axis(Axis(1));
        for l in (0..self.layer_count()).rev() {
            let (offset, fan_in, fan_out) = layout[l];
            let input = &pass.activations[l];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grad[offset..offset + fan_in * fan_out]
                .iter_mut()
                .zip(gw.iter())
                .for_each(|(g, v)| *g = *v);
            grad[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out]
                .iter_mut()
                .zip(gb.iter())
                .for_each(|(g, v)| *g = *v);
            if l > 0 {
                let (w, _) = self.layer(params, l);
                let mut upstream = delta.dot(&w.t());
                // ReLU derivative from the stored post-activation
                ndarray::Zip::from(&mut upstream)
                    .and(input)
                    .for_each(|d, &a| if a <= 0.0 { *d = 0.0 });
                delta = upstream;
            }
        }
        grad
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}
