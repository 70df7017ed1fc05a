//! Forward and reverse passes through a stack of dense layers.
//!
//! A stack is a plain `&[DenseLayer]`; the two-hemisphere graph and the
//! Phillips-curve network are both wired out of such stacks.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::layer::{DenseLayer, LayerGrad};
use crate::error::{HnnError, Result};

/// Everything the reverse pass needs from one stack.
#[derive(Debug, Clone)]
pub struct StackCache {
    /// Input seen by each layer (after the previous layer's dropout).
    pub inputs: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
    /// Inverted-dropout multipliers (0 or 1/keep) applied to each layer output.
    pub masks: Vec<Option<Array2<f64>>>,
}

pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut ChaCha8Rng,
}

fn draw_mask(rows: usize, cols: usize, rate: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.random::<f64>() < keep {
            scale
        } else {
            0.0
        }
    })
}

/// Runs `x` through `layers`. Dropout (when given and positive) is applied to
/// every layer output except the last one unless `dropout_last` is set.
/// `layer_offset` is added to layer indices reported in numeric errors.
pub fn forward_stack(
    layers: &[DenseLayer],
    x: ArrayView2<'_, f64>,
    mut dropout: Option<Dropout<'_>>,
    dropout_last: bool,
    layer_offset: usize,
    keep_cache: bool,
) -> Result<(Array2<f64>, Option<StackCache>)> {
    let mut cache = StackCache {
        inputs: Vec::with_capacity(layers.len()),
        pre: Vec::with_capacity(layers.len()),
        masks: Vec::with_capacity(layers.len()),
    };
    let mut current = x.to_owned();
    for (i, layer) in layers.iter().enumerate() {
        let z = layer.pre_activation(current.view())?;
        let act = layer.activation;
        let mut a = z.mapv(|v| act.apply(v));
        if a.iter().any(|v| !v.is_finite()) {
            return Err(HnnError::Numeric {
                layer: layer_offset + i,
                detail: "activation overflowed".into(),
            });
        }
        let is_last = i + 1 == layers.len();
        let mask = match dropout.as_mut() {
            Some(d) if d.rate > 0.0 && (!is_last || dropout_last) => {
                let m = draw_mask(a.nrows(), a.ncols(), d.rate, d.rng);
                a *= &m;
                Some(m)
            }
            _ => None,
        };
        if keep_cache {
            cache.inputs.push(current);
            cache.pre.push(z);
            cache.masks.push(mask);
        }
        current = a;
    }
    Ok((current, keep_cache.then_some(cache)))
}

/// Reverse pass. `d_out` is the loss gradient with respect to the stack
/// output (after any dropout on the last layer). Returns per-layer gradients
/// and, when requested, the gradient with respect to the stack input.
pub fn backward_stack(
    layers: &[DenseLayer],
    cache: &StackCache,
    d_out: Array2<f64>,
    need_input_grad: bool,
) -> Result<(Vec<LayerGrad>, Option<Array2<f64>>)> {
    if cache.pre.len() != layers.len() {
        return Err(HnnError::State(
            "forward cache does not match the layer stack".into(),
        ));
    }
    let mut grads: Vec<LayerGrad> = Vec::with_capacity(layers.len());
    let mut delta = d_out;
    for i in (0..layers.len()).rev() {
        let layer = &layers[i];
        if let Some(mask) = &cache.masks[i] {
            delta *= mask;
        }
        let act = layer.activation;
        Zip::from(&mut delta)
            .and(&cache.pre[i])
            .for_each(|d, &z| *d *= act.derivative(z));
        let weights = delta.t().dot(&cache.inputs[i]);
        let bias = delta.sum_axis(Axis(0));
        grads.push(LayerGrad { weights, bias });
        if i > 0 || need_input_grad {
            delta = delta.dot(&layer.weights);
        }
    }
    grads.reverse();
    Ok((grads, need_input_grad.then_some(delta)))
}
