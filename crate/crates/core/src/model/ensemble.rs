//! Blocked-subsampling ensembles and their out-of-bag aggregation.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::HnnConfig;
use super::recal::{recalibrate, RecalParams};
use super::train::{train_network, Objective, TrainSettings, TrainingLog};
use crate::data::{draw_block_split, inverse_scale, validation_block, BlockSplit, DensityForecast, DesignMatrix, Scaler};
use crate::error::{HnnError, Result};
use crate::nn::{HemisphereNet, Mode, NetworkGraph};
use crate::rng::{derive_seed, Stream};

/// One bagged network, frozen after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember<N> {
    pub net: N,
    pub split: BlockSplit,
    pub validation: Vec<usize>,
    pub seed: u64,
    /// Maps raw variance output onto the constrained scale; `None` for
    /// mean-only members.
    pub var_scale: Option<f64>,
    pub log: TrainingLog,
}

impl<N: HemisphereNet> EnsembleMember<N> {
    /// Eval-mode mean and constrained variance on standardized rows.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Option<Array1<f64>>)> {
        let out = self.net.forward(x, Mode::Eval, 0)?;
        let var = match (out.raw_var, self.var_scale) {
            (Some(r), Some(s)) => Some(r * s),
            _ => None,
        };
        Ok((out.mean, var))
    }
}

/// Seeds and index sets for one member, fixed before any training happens.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberPlan {
    pub index: usize,
    pub split: BlockSplit,
    pub validation: Vec<usize>,
    pub init_seed: u64,
    pub dropout_seed: u64,
}

impl MemberPlan {
    pub fn train_rows(&self) -> Vec<usize> {
        let mut val = self.validation.clone();
        val.sort_unstable();
        self.split
            .bag
            .iter()
            .copied()
            .filter(|t| val.binary_search(t).is_err())
            .collect()
    }
}

/// Per-member splits and seeds derived from `config.seed`.
pub fn plan_members(n_rows: usize, count: usize, config: &HnnConfig) -> Result<Vec<MemberPlan>> {
    (0..count)
        .map(|b| {
            let i = b as u64;
            let split = draw_block_split(n_rows, config.subsample_rate, derive_seed(config.seed, Stream::DataSplit, i))?;
            let validation = validation_block(
                &split.bag,
                config.early_stop_fraction,
                derive_seed(config.seed, Stream::Validation, i),
            )?;
            Ok(MemberPlan {
                index: b,
                split,
                validation,
                init_seed: derive_seed(config.seed, Stream::MemberInit, i),
                dropout_seed: derive_seed(config.seed, Stream::Dropout, i),
            })
        })
        .collect()
}

fn settings(config: &HnnConfig) -> TrainSettings {
    TrainSettings {
        max_epochs: config.max_epochs,
        patience: config.patience,
        adam: config.adam(),
    }
}

/// Initialises a copy of `template` and trains it under `plan`. A numeric
/// failure triggers one retry from a fresh initialisation.
pub fn train_member<N: HemisphereNet>(
    template: &N,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    plan: &MemberPlan,
    objective: Objective,
    config: &HnnConfig,
) -> Result<EnsembleMember<N>> {
    let train_rows = plan.train_rows();
    let attempt = |seed: u64| {
        let mut net = template.clone();
        net.init_weights(seed);
        train_network(net, x, y, &train_rows, &plan.validation, objective, &settings(config), plan.dropout_seed)
    };
    let (trained, seed, retries) = match attempt(plan.init_seed) {
        Ok(t) => (t, plan.init_seed, 0),
        Err(HnnError::Numeric { .. }) => {
            let reseed = derive_seed(plan.init_seed, Stream::MemberInit, 1);
            log::warn!("member {} hit a numeric failure; retrying once", plan.index);
            let t = attempt(reseed).map_err(|e| {
                HnnError::Numeric {
                    layer: usize::MAX,
                    detail: format!("member {} failed twice: {e}", plan.index),
                }
            })?;
            (t, reseed, 1)
        }
        Err(e) => return Err(e),
    };
    let mut log = trained.log;
    log.retries = retries;
    Ok(EnsembleMember {
        net: trained.net,
        split: plan.split.clone(),
        validation: plan.validation.clone(),
        seed,
        var_scale: trained.var_scale,
        log,
    })
}

/// Trains `count` members in parallel; output order follows member index.
pub fn fit_members<N: HemisphereNet>(
    template: &N,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    objective: Objective,
    count: usize,
    config: &HnnConfig,
) -> Result<Vec<EnsembleMember<N>>> {
    if x.ncols() != template.input_dim() {
        return Err(HnnError::Shape(format!(
            "design has {} columns, network expects {}",
            x.ncols(),
            template.input_dim()
        )));
    }
    let plans = plan_members(x.nrows(), count, config)?;
    plans
        .par_iter()
        .map(|p| train_member(template, x, y, p, objective, config))
        .collect()
}

/// Out-of-bag averages: at each row, the mean over members whose window
/// contains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobPaths {
    pub mean: Array1<f64>,
    pub var: Option<Array1<f64>>,
    pub counts: Vec<usize>,
}

/// Aggregates member outputs over their own out-of-bag windows of `x`.
/// Members are evaluated on out-of-bag rows only.
pub fn aggregate_oob<N: HemisphereNet>(members: &[EnsembleMember<N>], x: ArrayView2<'_, f64>) -> Result<OobPaths> {
    let n = x.nrows();
    let with_var = members.first().map(|m| m.var_scale.is_some()).unwrap_or(false);
    let outputs: Vec<(Array1<f64>, Option<Array1<f64>>)> = members
        .par_iter()
        .map(|m| {
            if m.split.n != n {
                return Err(HnnError::Shape(format!(
                    "member split covers {} rows, design has {n}",
                    m.split.n
                )));
            }
            m.predict(x.select(Axis(0), &m.split.oob).view())
        })
        .collect::<Result<_>>()?;
    let mut mean = Array1::<f64>::zeros(n);
    let mut var = Array1::<f64>::zeros(n);
    let mut counts = vec![0usize; n];
    for (m, (mu, v)) in members.iter().zip(&outputs) {
        for (k, &t) in m.split.oob.iter().enumerate() {
            mean[t] += mu[k];
            if let Some(v) = v {
                var[t] += v[k];
            }
            counts[t] += 1;
        }
    }
    if let Some(t) = counts.iter().position(|c| *c == 0) {
        return Err(HnnError::Coverage(format!(
            "row {t} is out-of-bag for no member; increase the ensemble size"
        )));
    }
    for t in 0..n {
        mean[t] /= counts[t] as f64;
        var[t] /= counts[t] as f64;
    }
    Ok(OobPaths {
        mean,
        var: with_var.then_some(var),
        counts,
    })
}

/// Average of every member's eval-mode output on `x`.
pub fn average_members<N: HemisphereNet>(
    members: &[EnsembleMember<N>],
    x: ArrayView2<'_, f64>,
) -> Result<(Array1<f64>, Option<Array1<f64>>)> {
    if members.is_empty() {
        return Err(HnnError::State("empty ensemble".into()));
    }
    let outputs: Vec<_> = members.par_iter().map(|m| m.predict(x)).collect::<Result<_>>()?;
    let b = members.len() as f64;
    let mut mean = Array1::<f64>::zeros(x.nrows());
    let mut var: Option<Array1<f64>> = None;
    for (mu, v) in outputs {
        mean += &mu;
        if let Some(v) = v {
            match var.as_mut() {
                Some(acc) => *acc += &v,
                None => var = Some(v),
            }
        }
    }
    Ok((mean / b, var.map(|v| v / b)))
}

/// Bagged mean-only networks with their out-of-bag path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEnsemble<N> {
    pub members: Vec<EnsembleMember<N>>,
    pub oob: OobPaths,
    /// `y − oob.mean` in standardized units.
    pub oob_residuals: Array1<f64>,
}

impl<N: HemisphereNet> MeanEnsemble<N> {
    pub fn predict_mean(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        Ok(average_members(&self.members, x)?.0)
    }
}

pub fn fit_mean_ensemble<N: HemisphereNet>(
    template: &N,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    count: usize,
    config: &HnnConfig,
) -> Result<MeanEnsemble<N>> {
    if template.has_variance() {
        return Err(HnnError::Config("mean ensemble needs a mean-only template".into()));
    }
    let members = fit_members(template, x, y, Objective::SquaredError, count, config)?;
    let oob = aggregate_oob(&members, x)?;
    let oob_residuals = &y - &oob.mean;
    Ok(MeanEnsemble {
        members,
        oob,
        oob_residuals,
    })
}

fn sample_variance(v: ArrayView1<'_, f64>) -> f64 {
    let n = v.len() as f64;
    let m = v.sum() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// `ν = mean(ε̂²_oob) / var(y)` clipped to `[nu_floor, nu_cap]`, from a
/// mean-only ensemble built on `template`. `nu_override` short-circuits.
pub fn estimate_nu_with<N: HemisphereNet>(
    template: &N,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    config: &HnnConfig,
) -> Result<f64> {
    if let Some(nu) = config.nu_override {
        return Ok(nu);
    }
    let ens = fit_mean_ensemble(template, x, y, config.nu_members, config)?;
    Ok(nu_from_residuals(ens.oob_residuals.view(), y, config))
}

pub fn nu_from_residuals(resid: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>, config: &HnnConfig) -> f64 {
    let mse = resid.dot(&resid) / resid.len() as f64;
    let raw = mse / sample_variance(y);
    raw.clamp(config.nu_floor, config.nu_cap)
}

fn mean_template(design_cols: usize, config: &HnnConfig) -> NetworkGraph {
    NetworkGraph::mean_only(
        design_cols,
        &config.hidden_widths(config.common_layers),
        &config.hidden_widths(config.head_layers),
        config.dropout,
    )
}

/// Volatility-emphasis guess for the two-hemisphere network on `design`.
pub fn estimate_nu(design: &DesignMatrix, config: &HnnConfig) -> Result<f64> {
    config.validate()?;
    estimate_nu_with(&mean_template(design.n_cols(), config), design.x.view(), design.y.view(), config)
}

/// Fitted hemisphere ensemble with its recalibrated out-of-bag paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HnnEnsemble<N> {
    pub members: Vec<EnsembleMember<N>>,
    pub nu: f64,
    pub oob_mean: Array1<f64>,
    /// Aggregated constrained variance before recalibration.
    pub oob_var_raw: Array1<f64>,
    /// Recalibrated out-of-bag variance.
    pub oob_var: Array1<f64>,
    pub counts: Vec<usize>,
    pub oob_residuals: Array1<f64>,
    pub recal: RecalParams,
    pub scaler: Scaler,
    pub config: HnnConfig,
    pub column_names: Vec<String>,
}

impl<N: HemisphereNet> HnnEnsemble<N> {
    /// Mean and recalibrated variance in standardized units.
    pub fn predict_standardized(&self, x: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array1<f64>)> {
        let (mean, var) = average_members(&self.members, x)?;
        let var = var.ok_or_else(|| HnnError::State("ensemble has no variance hemisphere".into()))?;
        Ok((mean, self.recal.apply_path(var.view())))
    }

    /// Density forecast in original units for standardized rows `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<DensityForecast> {
        let (m, v) = self.predict_standardized(x)?;
        Ok(inverse_scale(m.view(), v.view(), &self.scaler))
    }

    /// In-sample out-of-bag forecast in original units.
    pub fn oob_forecast(&self) -> DensityForecast {
        inverse_scale(self.oob_mean.view(), self.oob_var.view(), &self.scaler)
    }

    /// Standard deviation of out-of-bag residuals in original units.
    pub fn oob_residual_sd(&self) -> f64 {
        sample_variance(self.oob_residuals.view()).sqrt() * self.scaler.y_sd
    }
}

/// Trains the likelihood ensemble for a given `nu` and recalibrates it.
pub fn fit_hemisphere_ensemble<N: HemisphereNet>(
    template: &N,
    design: &DesignMatrix,
    nu: f64,
    config: &HnnConfig,
) -> Result<HnnEnsemble<N>> {
    config.validate()?;
    let x = design.x.view();
    let y = design.y.view();
    let members = fit_members(template, x, y, Objective::Gaussian { nu }, config.n_members, config)?;
    let oob = aggregate_oob(&members, x)?;
    let oob_var_raw = oob
        .var
        .ok_or_else(|| HnnError::State("template has no variance hemisphere".into()))?;
    let oob_residuals = &y - &oob.mean;
    let resid_sq = oob_residuals.mapv(|e| e * e);
    let recal = recalibrate(
        resid_sq.view(),
        oob_var_raw.view(),
        config.recal_draws,
        derive_seed(config.seed, Stream::RecalDraw, 0),
    )?;
    let oob_var = recal.apply_path(oob_var_raw.view());
    Ok(HnnEnsemble {
        members,
        nu,
        oob_mean: oob.mean,
        oob_var_raw,
        oob_var,
        counts: oob.counts,
        oob_residuals,
        recal,
        scaler: design.scaler.clone(),
        config: config.clone(),
        column_names: design.column_names.clone(),
    })
}

/// Two-hemisphere template with ReLU core and heads sized from `config`.
pub fn hnn_template(n_inputs: usize, config: &HnnConfig) -> NetworkGraph {
    NetworkGraph::new(
        n_inputs,
        &config.hidden_widths(config.common_layers),
        &config.hidden_widths(config.head_layers),
        config.dropout,
    )
}

/// Estimates `ν`, trains the hemisphere ensemble and recalibrates it.
pub fn fit_ensemble(design: &DesignMatrix, config: &HnnConfig) -> Result<HnnEnsemble<NetworkGraph>> {
    let nu = estimate_nu(design, config)?;
    log::info!("volatility emphasis nu = {nu:.4}");
    fit_hemisphere_ensemble(&hnn_template(design.n_cols(), config), design, nu, config)
}
