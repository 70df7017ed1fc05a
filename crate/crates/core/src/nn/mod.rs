//! Minimal dense-network engine used by the hemisphere estimators.
//!
//! Networks are trained full-batch on CPU. Each network type exposes its
//! parameters as an ordered list of [`DenseLayer`]s so that initialisation,
//! Adam and serialisation can stay agnostic of the wiring.

mod adam;
mod graph;
mod layer;
mod loss;
pub mod mlp;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use graph::NetworkGraph;
pub use layer::{softplus, Activation, DenseLayer, LayerGrad};
pub use loss::{gaussian_nll, squared_error, LossOutput, VARIANCE_FLOOR};

use ndarray::{Array1, ArrayView2};
use rand_distr::{Distribution, Normal};

use crate::error::{HnnError, Result};
use crate::rng::rng_from_seed;
use mlp::StackCache;

/// Variance of the i.i.d. normal weight initialisation.
pub const INIT_WEIGHT_VARIANCE: f64 = 3.0 / 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Cached intermediate values of one training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Parameter version of the network that produced this cache.
    pub version: u64,
    pub stacks: Vec<StackCache>,
}

/// Result of a forward pass over a batch of rows.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub mean: Array1<f64>,
    /// Softplus output of the variance hemisphere; `None` for mean-only nets.
    pub raw_var: Option<Array1<f64>>,
    /// Additive pieces of `mean`, for networks whose mean is a sum of subnets.
    pub components: Vec<Array1<f64>>,
    pub cache: Option<ForwardCache>,
}

impl BatchOutput {
    pub fn raw_var(&self) -> Result<&Array1<f64>> {
        self.raw_var
            .as_ref()
            .ok_or_else(|| HnnError::State("network has no variance hemisphere".into()))
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Loss gradients with respect to the two emitted paths.
#[derive(Debug, Clone)]
pub struct LossGrads {
    pub d_mean: Array1<f64>,
    /// Gradient with respect to the raw (Softplus) variance path.
    pub d_var: Option<Array1<f64>>,
}

impl LossGrads {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            d_mean: &self.d_mean * factor,
            d_var: self.d_var.as_ref().map(|d| d * factor),
        }
    }
}

/// A network with a mean output and an optional positive variance output.
pub trait HemisphereNet: Clone + Send + Sync {
    fn input_dim(&self) -> usize;

    fn has_variance(&self) -> bool;

    fn dropout_rate(&self) -> f64;

    /// Forward pass. Train mode applies dropout drawn from `seed` and keeps
    /// the cache needed by [`HemisphereNet::backward`]; eval mode is
    /// deterministic and ignores `seed`.
    fn forward(&self, x: ArrayView2<'_, f64>, mode: Mode, seed: u64) -> Result<BatchOutput>;

    fn backward(&self, batch: &BatchOutput, grads: &LossGrads) -> Result<Vec<LayerGrad>>;

    /// Parameters in a fixed order shared with [`HemisphereNet::layers_mut`]
    /// and with the gradients returned by `backward`.
    fn layers(&self) -> Vec<&DenseLayer>;

    fn layers_mut(&mut self) -> Vec<&mut DenseLayer>;

    fn version(&self) -> u64;

    fn bump_version(&mut self);

    fn n_params(&self) -> usize {
        self.layers().iter().map(|l| l.n_params()).sum()
    }

    /// Weights i.i.d. `N(0, 3/100)`, biases zero; deterministic in `seed`.
    fn init_weights(&mut self, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let normal = Normal::new(0.0, INIT_WEIGHT_VARIANCE.sqrt()).expect("valid normal");
        for layer in self.layers_mut() {
            layer.weights.mapv_inplace(|_| normal.sample(&mut rng));
            layer.bias.fill(0.0);
        }
        self.bump_version();
    }

    fn check_cache<'b>(&self, batch: &'b BatchOutput) -> Result<&'b ForwardCache> {
        let cache = batch.cache.as_ref().ok_or_else(|| {
            HnnError::State("backward needs a train-mode forward cache".into())
        })?;
        if cache.version != self.version() {
            return Err(HnnError::State(format!(
                "stale forward cache (version {} vs network {})",
                cache.version,
                self.version()
            )));
        }
        Ok(cache)
    }
}

pub fn check_input(x: ArrayView2<'_, f64>, expected: usize) -> Result<()> {
    if x.ncols() != expected {
        return Err(HnnError::Shape(format!(
            "design has {} columns, network expects {}",
            x.ncols(),
            expected
        )));
    }
    Ok(())
}
