use serde::{Deserialize, Serialize};

use crate::error::{HnnError, Result};
use crate::nn::AdamConfig;

/// Estimator hyperparameters. Defaults are the full-scale settings; desk
/// experiments usually shrink `neurons` and `n_members`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HnnConfig {
    pub common_layers: usize,
    pub head_layers: usize,
    pub neurons: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Ensemble size `B`.
    pub n_members: usize,
    pub subsample_rate: f64,
    pub early_stop_fraction: f64,
    pub nu_override: Option<f64>,
    pub nu_cap: f64,
    pub nu_floor: f64,
    /// Members of the mean-only ensemble behind the volatility-emphasis guess.
    pub nu_members: usize,
    /// Bootstrap draws behind the recalibration scale `ς`.
    pub recal_draws: usize,
    pub seed: u64,
}

impl Default for HnnConfig {
    fn default() -> Self {
        Self {
            common_layers: 2,
            head_layers: 2,
            neurons: 400,
            dropout: 0.2,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 100,
            patience: 15,
            n_members: 1000,
            subsample_rate: 0.8,
            early_stop_fraction: 0.2,
            nu_override: None,
            nu_cap: 0.99,
            nu_floor: 0.01,
            nu_members: 100,
            recal_draws: 100_000,
            seed: 0,
        }
    }
}

fn unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(HnnError::Config(format!("{name} = {v} must lie in (0, 1)")))
    }
}

impl HnnConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn hidden_widths(&self, layers: usize) -> Vec<usize> {
        vec![self.neurons; layers]
    }

    pub fn validate(&self) -> Result<()> {
        if self.neurons == 0 || self.head_layers == 0 {
            return Err(HnnError::Config("heads need at least one hidden layer of width > 0".into()));
        }
        if self.max_epochs == 0 || self.n_members == 0 || self.nu_members == 0 || self.recal_draws == 0 {
            return Err(HnnError::Config(
                "epochs, ensemble sizes and recalibration draws must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(HnnError::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(HnnError::Config(format!("dropout = {} must lie in [0, 1)", self.dropout)));
        }
        unit_open("subsample_rate", self.subsample_rate)?;
        unit_open("early_stop_fraction", self.early_stop_fraction)?;
        unit_open("nu_cap", self.nu_cap)?;
        if !(self.nu_floor > 0.0 && self.nu_floor < self.nu_cap) {
            return Err(HnnError::Config("nu_floor must lie in (0, nu_cap)".into()));
        }
        if let Some(nu) = self.nu_override {
            if !(nu > 0.0) {
                return Err(HnnError::Config(format!("nu_override = {nu} must be positive")));
            }
        }
        Ok(())
    }
}
