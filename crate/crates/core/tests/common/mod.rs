//! Oracles shared by the integration tests. None of these call into the
//! library code they are used to check.

#![allow(dead_code)]

use hnn::nn::{HemisphereNet, LayerGrad, LossGrads, Mode};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

pub fn normal_vector(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| StandardNormal.sample(rng))
}

/// Overwrites every weight and bias with `N(0, sd²)` draws.
pub fn randomize<N: HemisphereNet>(net: &mut N, sd: f64, rng: &mut ChaCha8Rng) {
    let d = Normal::new(0.0, sd).unwrap();
    for layer in net.layers_mut() {
        layer.weights.mapv_inplace(|_| d.sample(rng));
        layer.bias.mapv_inplace(|_| d.sample(rng));
    }
    net.bump_version();
}

/// Mean Gaussian negative log likelihood with the variance path rescaled to
/// average `nu`, written out longhand.
pub fn constrained_loss<N: HemisphereNet>(net: &N, x: &Array2<f64>, y: &Array1<f64>, nu: f64) -> f64 {
    let out = net.forward(x.view(), Mode::Eval, 0).unwrap();
    let raw = out.raw_var.expect("variance output");
    let n = y.len() as f64;
    let m = raw.sum() / n;
    let mut total = 0.0;
    for t in 0..y.len() {
        let v = nu * raw[t] / m;
        let e = y[t] - out.mean[t];
        total += e * e / v + v.ln();
    }
    total / n
}

pub fn mse_loss<N: HemisphereNet>(net: &N, x: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let out = net.forward(x.view(), Mode::Eval, 0).unwrap();
    (y - &out.mean).mapv(|e| e * e).sum() / y.len() as f64
}

/// Analytic gradient through the library: a train-mode forward pass with
/// the caller's dropout rate (zero for gradient checks), the constraint's
/// chain rule and the network's reverse pass.
pub fn analytic_gradient<N: HemisphereNet>(net: &N, x: &Array2<f64>, y: &Array1<f64>, nu: Option<f64>) -> Vec<LayerGrad> {
    let batch = net.forward(x.view(), Mode::Train, 0).unwrap();
    let n = y.len() as f64;
    let grads = match nu {
        Some(nu) => {
            let raw = batch.raw_var.clone().unwrap();
            let v = hnn::model::constrain_variance(raw.view(), nu).unwrap();
            let out = hnn::nn::gaussian_nll(y.view(), batch.mean.view(), v.view()).unwrap();
            let d_raw = hnn::model::constrain_backward(raw.view(), nu, out.d_var.view()).unwrap();
            LossGrads {
                d_mean: out.d_mean / n,
                d_var: Some(d_raw / n),
            }
        }
        None => LossGrads {
            d_mean: (&batch.mean - y) * (2.0 / n),
            d_var: None,
        },
    };
    net.backward(&batch, &grads).unwrap()
}

/// Central finite differences of `loss` in every parameter, flattened in
/// layer order (weights row-major, then biases).
pub fn numeric_gradient<N: HemisphereNet>(net: &N, h: f64, loss: impl Fn(&N) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    let n_layers = net.layers().len();
    for li in 0..n_layers {
        let (rows, cols) = net.layers()[li].weights.dim();
        let nb = net.layers()[li].bias.len();
        let eval = |f: &dyn Fn(&mut hnn::nn::DenseLayer, f64)| {
            let mut plus = net.clone();
            f(&mut *plus.layers_mut()[li], h);
            plus.bump_version();
            let mut minus = net.clone();
            f(&mut *minus.layers_mut()[li], -h);
            minus.bump_version();
            (loss(&plus) - loss(&minus)) / (2.0 * h)
        };
        for r in 0..rows {
            for c in 0..cols {
                out.push(eval(&|l, d| l.weights[[r, c]] += d));
            }
        }
        for b in 0..nb {
            out.push(eval(&|l, d| l.bias[b] += d));
        }
    }
    out
}

pub fn flatten(grads: &[LayerGrad]) -> Vec<f64> {
    let mut v = Vec::new();
    for g in grads {
        v.extend(g.weights.iter().copied());
        v.extend(g.bias.iter().copied());
    }
    v
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-300)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Coefficient of variation of a positive path.
pub fn cv(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    var.sqrt() / m
}

pub fn uniform_index(n: usize, rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(0..n)
}

/// Smallest absolute pre-activation anywhere in the network on `x`.
/// Finite differences are only a valid oracle away from ReLU kinks.
pub fn kink_margin<N: HemisphereNet>(net: &N, x: &Array2<f64>) -> f64 {
    let batch = net.forward(x.view(), Mode::Train, 0).unwrap();
    batch
        .cache
        .unwrap()
        .stacks
        .iter()
        .flat_map(|s| s.pre.iter())
        .flat_map(|p| p.iter())
        .fold(f64::INFINITY, |m, v| m.min(v.abs()))
}
