use serde::{Deserialize, Serialize};

use super::layer::{DenseLayer, LayerGrad};
use super::HemisphereNet;
use crate::error::{HnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators laid out like the network's layers.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first: Vec<LayerGrad>,
    pub second: Vec<LayerGrad>,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new<'a>(layers: impl IntoIterator<Item = &'a DenseLayer>, config: AdamConfig) -> Self {
        let first: Vec<LayerGrad> = layers.into_iter().map(LayerGrad::zeros_like).collect();
        Self {
            second: first.clone(),
            first,
            step_count: 0,
            config,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [&mut DenseLayer], grads: &[LayerGrad]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first.len() {
            return Err(HnnError::Shape(format!(
                "adam: {} parameter blocks, {} gradients, {} moment blocks",
                params.len(),
                grads.len(),
                self.first.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.weights.raw_dim() != g.weights.raw_dim() || p.bias.len() != g.bias.len() {
                return Err(HnnError::Shape("adam: gradient block shape differs".into()));
            }
        }
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let update = |theta: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *theta -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        };
        for (i, p) in params.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.first[i], &mut self.second[i], &grads[i]);
            ndarray::Zip::from(&mut p.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(|theta, m, v, &g| update(theta, m, v, g));
            ndarray::Zip::from(&mut p.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|theta, m, v, &g| update(theta, m, v, g));
        }
        Ok(())
    }
}

/// Applies one Adam step to every layer of `net` and invalidates old caches.
pub fn adam_step<N: HemisphereNet>(net: &mut N, grads: &[LayerGrad], state: &mut AdamState) -> Result<()> {
    {
        let mut layers = net.layers_mut();
        state.step(&mut layers, grads)?;
    }
    net.bump_version();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use ndarray::array;

    fn scalar_layer(w: f64) -> DenseLayer {
        let mut l = DenseLayer::zeros(1, 1, Activation::Linear);
        l.weights[[0, 0]] = w;
        l
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut layer = scalar_layer(0.5);
        let mut state = AdamState::new([&layer], AdamConfig::default());
        let grad = LayerGrad {
            weights: array![[1.0]],
            bias: array![0.0],
        };
        state.step(&mut [&mut layer], &[grad]).unwrap();
        let delta = layer.weights[[0, 0]] - 0.5;
        // m̂ = 1, v̂ = 1 after bias correction
        assert!((delta + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut layer = scalar_layer(0.5);
        let mut state = AdamState::new([&layer], AdamConfig::default());
        state.first[0].weights[[0, 0]] = 0.2;
        state.second[0].weights[[0, 0]] = 0.3;
        let zero = LayerGrad::zeros_like(&layer);
        let before = layer.clone();
        state.step(&mut [&mut layer], &[zero]).unwrap();
        // a non-zero inherited moment moves the weight; bias stays put
        assert_eq!(layer.bias, before.bias);
        assert!(state.first[0].weights[[0, 0]] < 0.2);
        assert!(state.second[0].weights[[0, 0]] < 0.3);

        let mut fresh = scalar_layer(0.5);
        let mut state = AdamState::new([&fresh], AdamConfig::default());
        for _ in 0..10 {
            state.step(&mut [&mut fresh], &[LayerGrad::zeros_like(&before)]).unwrap();
        }
        assert_eq!(fresh, scalar_layer(0.5));
    }

    #[test]
    fn identical_params_stay_identical() {
        let mut layer = DenseLayer::zeros(2, 1, Activation::Linear);
        layer.weights = array![[0.3, 0.3]];
        let mut state = AdamState::new([&layer], AdamConfig::default());
        for k in 0..50 {
            let g = (k as f64 * 0.37).sin();
            let grad = LayerGrad {
                weights: array![[g, g]],
                bias: array![0.0],
            };
            state.step(&mut [&mut layer], &[grad]).unwrap();
            assert_eq!(layer.weights[[0, 0]], layer.weights[[0, 1]]);
        }
    }

    #[test]
    fn mismatched_blocks_are_rejected() {
        let mut layer = scalar_layer(0.0);
        let mut state = AdamState::new([&layer], AdamConfig::default());
        assert!(state.step(&mut [&mut layer], &[]).is_err());
    }
}
