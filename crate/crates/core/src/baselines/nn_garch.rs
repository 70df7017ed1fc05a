//! Two-step competitors: a conditional mean with GARCH(1,1) errors.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::ar::{fit_ar2_direct, ArModel};
use super::garch::{fit_garch11, GarchModel};
use crate::data::{DesignMatrix, Scaler};
use crate::error::Result;
use crate::model::{fit_mean_ensemble, HnnConfig, MeanEnsemble};
use crate::nn::{HemisphereNet, NetworkGraph};

/// Bagged mean-only network whose out-of-bag residuals feed a GARCH(1,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnGarch<N> {
    pub mean: MeanEnsemble<N>,
    pub garch: GarchModel,
    pub scaler: Scaler,
    pub horizon: usize,
}

impl<N: HemisphereNet> NnGarch<N> {
    /// Mean forecasts in original units for standardized rows.
    pub fn predict_mean(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self
            .mean
            .predict_mean(x)?
            .iter()
            .map(|m| self.scaler.unscale_mean(*m))
            .collect())
    }

    /// Variance in original units `horizon` periods after the end of
    /// `resid_history` (standardized residuals in target-date order).
    pub fn predict_variance(&self, resid_history: &[f64]) -> f64 {
        self.scaler.unscale_var(self.garch.forecast(resid_history, self.horizon))
    }

    /// In-sample out-of-bag residuals in standardized units.
    pub fn residuals(&self) -> &[f64] {
        self.mean
            .oob_residuals
            .as_slice()
            .expect("contiguous residual path")
    }
}

/// Mean network trained on squared error, then GARCH on its blocked
/// out-of-bag residuals.
pub fn fit_nn_garch(design: &DesignMatrix, config: &HnnConfig) -> Result<NnGarch<NetworkGraph>> {
    config.validate()?;
    let template = NetworkGraph::mean_only(
        design.n_cols(),
        &config.hidden_widths(config.common_layers),
        &config.hidden_widths(config.head_layers),
        config.dropout,
    );
    let mean = fit_mean_ensemble(&template, design.x.view(), design.y.view(), config.n_members, config)?;
    let resid = mean.oob_residuals.to_vec();
    let garch = fit_garch11(&resid)?;
    Ok(NnGarch {
        mean,
        garch,
        scaler: design.scaler.clone(),
        horizon: design.spec.horizon,
    })
}

/// AR(2) mean with GARCH(1,1) errors on its residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArGarch {
    pub ar: ArModel,
    pub garch: GarchModel,
}

impl ArGarch {
    pub fn predict_variance(&self, resid_history: &[f64]) -> f64 {
        self.garch.forecast(resid_history, self.ar.horizon)
    }
}

pub fn fit_ar_garch(y: &[f64], horizon: usize) -> Result<ArGarch> {
    let ar = fit_ar2_direct(y, horizon)?;
    let garch = fit_garch11(&ar.residuals(y))?;
    Ok(ArGarch { ar, garch })
}
