//! Expanding-window pseudo-out-of-sample experiments.

use chrono::NaiveDate;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ModelKind};
use crate::baselines::{fit_ar2_direct, fit_ar_garch, fit_nn_garch, ArGarch, ArModel, NnGarch};
use crate::data::io::read_panel;
use crate::data::{
    apply_transforms, build_design, impute_missing, DesignMatrix, DesignSpec, FeatureLayout, ImputeConfig, Scaler,
    TimeSeriesPanel,
};
use crate::error::{HnnError, Result};
use crate::eval::{evaluate, write_records, EvalSettings, EvaluationReport, ForecastRecord};
use crate::model::{fit_ensemble, save_bundle, HnnConfig, HnnEnsemble};
use crate::nn::NetworkGraph;
use crate::npc::{fit_npc, parse_group_file, NpcFit, NpcSpec};
use crate::rng::{derive_seed, Stream};

pub const MODEL_BUNDLE_KIND: &str = "model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Hnn(Box<HnnEnsemble<NetworkGraph>>),
    Npc(Box<NpcFit>),
    Ar2(ArModel),
    ArGarch(ArGarch),
    NnGarch(Box<NnGarch<NetworkGraph>>),
}

/// A fitted model with everything needed to forecast from a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub kind: ModelKind,
    pub spec: DesignSpec,
    pub layout: FeatureLayout,
    pub scaler: Scaler,
    /// Last panel row of the estimation window and its date.
    pub fit_row: usize,
    pub fit_date: NaiveDate,
    /// In-sample residual standard deviation in original units.
    pub eta: f64,
    pub model: FittedModel,
}

/// Standardized regressors at panel rows `rows`.
pub fn features(layout: &FeatureLayout, scaler: &Scaler, panel: &TimeSeriesPanel, rows: &[usize]) -> Result<Array2<f64>> {
    let mut raw = Array2::zeros((rows.len(), layout.width()));
    for (i, &t) in rows.iter().enumerate() {
        for (j, v) in layout.raw_row(panel, t)?.into_iter().enumerate() {
            raw[[i, j]] = v;
        }
    }
    scaler.scale_x(raw.view())
}

fn target_series(panel: &TimeSeriesPanel, target: &str, upto: usize) -> Result<Vec<f64>> {
    let j = panel.column_index(target)?;
    let y: Vec<f64> = panel.values.column(j).iter().take(upto + 1).copied().collect();
    if let Some(i) = (0..=upto).find(|&i| panel.missing[[i, j]]) {
        return Err(HnnError::Domain(format!("target missing at {}", panel.dates[i])));
    }
    Ok(y)
}

fn sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Everything a fit needs besides the estimation window.
pub struct FitContext<'a> {
    pub spec: &'a DesignSpec,
    pub hnn: &'a HnnConfig,
    pub npc: &'a NpcSpec,
    pub groups: Option<&'a [(String, Vec<String>)]>,
}

/// Estimates `kind` on `window` (every row is usable information).
pub fn fit_model(kind: ModelKind, window: &TimeSeriesPanel, ctx: &FitContext<'_>) -> Result<(ModelBundle, DesignMatrix)> {
    let design = build_design(window, ctx.spec)?;
    let fit_row = window.n_rows() - 1;
    let s = ctx.spec.horizon;
    let (model, eta) = match kind {
        ModelKind::Hnn => {
            let ens = fit_ensemble(&design, ctx.hnn)?;
            let eta = ens.oob_residual_sd();
            (FittedModel::Hnn(Box::new(ens)), eta)
        }
        ModelKind::Npc => {
            let groups = ctx
                .groups
                .ok_or_else(|| HnnError::Config("restricted network needs column groups".into()))?;
            let fit = fit_npc(&design, groups, ctx.npc, ctx.hnn)?;
            let eta = fit.ensemble.oob_residual_sd();
            (FittedModel::Npc(Box::new(fit)), eta)
        }
        ModelKind::Ar2 => {
            let ar = fit_ar2_direct(&target_series(window, &ctx.spec.target, fit_row)?, s)?;
            (FittedModel::Ar2(ar), ar.residual_variance.sqrt())
        }
        ModelKind::ArGarch => {
            let m = fit_ar_garch(&target_series(window, &ctx.spec.target, fit_row)?, s)?;
            let eta = m.ar.residual_variance.sqrt();
            (FittedModel::ArGarch(m), eta)
        }
        ModelKind::NnGarch => {
            let m = fit_nn_garch(&design, ctx.hnn)?;
            let eta = sd(m.residuals()) * m.scaler.y_sd;
            (FittedModel::NnGarch(Box::new(m)), eta)
        }
    };
    Ok((
        ModelBundle {
            kind,
            spec: ctx.spec.clone(),
            layout: design.layout.clone(),
            scaler: design.scaler.clone(),
            fit_row,
            fit_date: window.dates[fit_row],
            eta,
            model,
        },
        design,
    ))
}

impl ModelBundle {
    /// Mean and variance in original units for origin `t`; reads rows `≤ t`
    /// of `panel` only.
    pub fn forecast(&self, panel: &TimeSeriesPanel, t: usize) -> Result<(f64, f64)> {
        if panel.dates.get(self.fit_row) != Some(&self.fit_date) {
            return Err(HnnError::Alignment(format!(
                "panel row {} is not the estimation end {}",
                self.fit_row, self.fit_date
            )));
        }
        if t < self.fit_row {
            return Err(HnnError::Domain(format!(
                "origin {} precedes the estimation end {}",
                panel.dates[t], self.fit_date
            )));
        }
        let s = self.spec.horizon;
        match &self.model {
            FittedModel::Hnn(ens) => {
                let f = ens.predict(features(&self.layout, &self.scaler, panel, &[t])?.view())?;
                Ok((f.mean[0], f.variance[0]))
            }
            FittedModel::Npc(fit) => {
                let f = fit
                    .ensemble
                    .predict(features(&self.layout, &self.scaler, panel, &[t])?.view())?;
                Ok((f.mean[0], f.variance[0]))
            }
            FittedModel::Ar2(ar) => {
                let y = target_series(panel, &self.spec.target, t)?;
                Ok((ar.predict(y[t], y[t - 1]), ar.residual_variance))
            }
            FittedModel::ArGarch(m) => {
                let y = target_series(panel, &self.spec.target, t)?;
                Ok((m.ar.predict(y[t], y[t - 1]), m.predict_variance(&m.ar.residuals(&y))))
            }
            FittedModel::NnGarch(m) => {
                let x = features(&self.layout, &self.scaler, panel, &[t])?;
                let mean = m.predict_mean(x.view())?[0];
                let mut history = m.residuals().to_vec();
                // realized out-of-sample errors for targets after the fit window, up to t
                let first = (self.fit_row + 1).saturating_sub(s);
                let origins: Vec<usize> = (first..=t.saturating_sub(s)).filter(|o| o + s > self.fit_row).collect();
                if !origins.is_empty() {
                    let y = target_series(panel, &self.spec.target, t)?;
                    let xo = features(&self.layout, &self.scaler, panel, &origins)?;
                    let mo = m.predict_mean(xo.view())?;
                    history.extend(origins.iter().zip(&mo).map(|(&o, mu)| (y[o + s] - mu) / m.scaler.y_sd));
                }
                Ok((mean, m.predict_variance(&history)))
            }
        }
    }
}

/// Transformed panel and optional column groups named by a config.
pub fn load_data(cfg: &ExperimentConfig) -> Result<(TimeSeriesPanel, Option<Vec<(String, Vec<String>)>>)> {
    let raw = read_panel(&cfg.data.panel, &cfg.data.codes)?;
    let panel = apply_transforms(&raw)?;
    let groups = match &cfg.data.groups {
        Some(p) => Some(parse_group_file(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    Ok((panel, groups))
}

/// Rows `0..=t`, imputed when they contain gaps.
pub fn window_upto(panel: &TimeSeriesPanel, t: usize, impute: &ImputeConfig) -> Result<TimeSeriesPanel> {
    let head = panel.head(t + 1);
    if head.has_missing() {
        Ok(impute_missing(&head, impute)?.0)
    } else {
        Ok(head)
    }
}

/// Forecast origins whose target date falls in the holdout.
pub fn holdout_origins(panel: &TimeSeriesPanel, horizon: usize, start: NaiveDate, end: Option<NaiveDate>) -> Vec<usize> {
    (0..panel.n_rows().saturating_sub(horizon))
        .filter(|&t| {
            let d = panel.dates[t + horizon];
            d >= start && end.is_none_or(|e| d <= e)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ForecastRecord>,
    pub benchmark: Option<Vec<ForecastRecord>>,
    pub report: EvaluationReport,
    pub refit_dates: Vec<NaiveDate>,
    pub bundles: Vec<PathBuf>,
}

fn forecast_block(
    bundle: &ModelBundle,
    panel: &TimeSeriesPanel,
    origins: &[usize],
    impute: &ImputeConfig,
) -> Result<Vec<ForecastRecord>> {
    let s = bundle.spec.horizon;
    let target = panel.column_index(&bundle.spec.target)?;
    let gaps = panel.has_missing();
    let mut out = Vec::with_capacity(origins.len());
    for &t in origins {
        if panel.missing[[t + s, target]] {
            log::warn!("no realization at {}; origin skipped", panel.dates[t + s]);
            continue;
        }
        let run = || -> Result<ForecastRecord> {
            let (mean, variance) = if gaps {
                bundle.forecast(&window_upto(panel, t, impute)?, t)?
            } else {
                bundle.forecast(panel, t)?
            };
            Ok(ForecastRecord {
                date: panel.dates[t + s],
                horizon: s,
                mean,
                variance,
                realization: panel.values[[t + s, target]],
            })
        };
        out.push(run().map_err(|e| e.in_period(panel.dates[t].to_string()))?);
    }
    Ok(out)
}

fn ar2_benchmark(panel: &TimeSeriesPanel, spec: &DesignSpec, origins: &[usize], impute: &ImputeConfig) -> Result<Vec<ForecastRecord>> {
    let ctx = FitContext {
        spec,
        hnn: &HnnConfig::default(),
        npc: &NpcSpec::default(),
        groups: None,
    };
    let mut out = Vec::with_capacity(origins.len());
    for &t in origins {
        let window = window_upto(panel, t, impute).map_err(|e| e.in_period(panel.dates[t].to_string()))?;
        let (bundle, _) = fit_model(ModelKind::Ar2, &window, &ctx).map_err(|e| e.in_period(panel.dates[t].to_string()))?;
        out.extend(forecast_block(&bundle, panel, &[t], impute)?);
    }
    Ok(out)
}

fn write_paths(path: &Path, design: &DesignMatrix, bundle: &ModelBundle) -> Result<()> {
    let (mean, var) = match &bundle.model {
        FittedModel::Hnn(e) => {
            let f = e.oob_forecast();
            (f.mean.to_vec(), f.variance.to_vec())
        }
        FittedModel::Npc(f) => (f.oob.mean.to_vec(), f.oob.variance.to_vec()),
        _ => return Ok(()),
    };
    let mut s = String::from("origin,target_date,realization,oob_mean,oob_variance\n");
    for i in 0..design.n_rows() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            design.dates[i], design.target_dates[i], design.y_raw[i], mean[i], var[i]
        );
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig, refits: &[(NaiveDate, u64)]) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "crate_version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "model = \"{}\"", cfg.experiment.model.name());
    let _ = writeln!(s, "master_seed = {}", cfg.experiment.master_seed);
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(s, "written_unix_seconds = {stamp}");
    s.push_str("refits = [\n");
    for (d, seed) in refits {
        let _ = writeln!(s, "  {{ origin = \"{d}\", seed = {seed} }},");
    }
    s.push_str("]\n\n");
    let mut wrapped = toml::Table::new();
    wrapped.insert(
        "config".into(),
        toml::Value::try_from(cfg).map_err(|e| HnnError::Config(e.to_string()))?,
    );
    s.push_str(&toml::to_string(&wrapped).map_err(|e| HnnError::Config(e.to_string()))?);
    std::fs::write(dir.join("manifest.toml"), s)?;
    Ok(())
}

/// Walks the holdout: re-estimates on the expanding window at cadence
/// boundaries, forecasts every origin and writes all artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (panel, groups) = load_data(cfg)?;
    run_experiment_on(cfg, &panel, groups.as_deref())
}

/// [`run_experiment`] on an already transformed panel.
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    panel: &TimeSeriesPanel,
    groups: Option<&[(String, Vec<String>)]>,
) -> Result<ExperimentOutput> {
    let spec = cfg.data.design_spec();
    let run = &cfg.experiment;
    let origins = holdout_origins(panel, spec.horizon, run.holdout_start, run.holdout_end);
    if origins.is_empty() {
        return Err(HnnError::Config("holdout contains no forecastable target dates".into()));
    }
    let dir = &run.output_dir;
    std::fs::create_dir_all(dir)?;
    if run.write_bundles {
        std::fs::create_dir_all(dir.join("bundles"))?;
    }
    let impute = &cfg.data.impute;
    let mut records = Vec::with_capacity(origins.len());
    let mut refits = Vec::new();
    let mut bundles = Vec::new();
    let mut eta = None;
    let mut current: Option<ModelBundle> = None;
    let mut block = Vec::new();
    let mut k = 0u64;

    let flush = |records: &[ForecastRecord]| write_records(dir.join("forecasts.csv"), records);

    for (i, &t) in origins.iter().enumerate() {
        if run.cadence.is_refit(i) {
            if let Some(b) = &current {
                match forecast_block(b, panel, &block, impute) {
                    Ok(r) => records.extend(r),
                    Err(e) => {
                        flush(&records)?;
                        return Err(e);
                    }
                }
                block.clear();
            }
            let hnn = HnnConfig {
                seed: derive_seed(run.master_seed, Stream::Refit, k),
                ..cfg.hnn.clone()
            };
            let ctx = FitContext {
                spec: &spec,
                hnn: &hnn,
                npc: &cfg.npc,
                groups,
            };
            let fitted = window_upto(panel, t, impute).and_then(|w| fit_model(run.model, &w, &ctx));
            let (bundle, design) = match fitted {
                Ok(v) => v,
                Err(e) => {
                    flush(&records)?;
                    return Err(e.in_period(panel.dates[t].to_string()));
                }
            };
            log::info!("fitted {} through {}", run.model.name(), bundle.fit_date);
            if eta.is_none() {
                eta = Some(bundle.eta);
                write_paths(&dir.join("in_sample_paths.csv"), &design, &bundle)?;
            }
            if run.write_bundles {
                let p = dir.join("bundles").join(format!("{}_{}.bundle", run.model.name(), bundle.fit_date));
                save_bundle(&p, MODEL_BUNDLE_KIND, &bundle)?;
                bundles.push(p);
            }
            refits.push((bundle.fit_date, hnn.seed));
            current = Some(bundle);
            k += 1;
        }
        block.push(t);
    }
    if let Some(b) = &current {
        match forecast_block(b, panel, &block, impute) {
            Ok(r) => records.extend(r),
            Err(e) => {
                flush(&records)?;
                return Err(e);
            }
        }
    }
    flush(&records)?;

    let benchmark = if run.model == ModelKind::Ar2 {
        Some(records.clone())
    } else if run.benchmark {
        Some(ar2_benchmark(panel, &spec, &origins, impute)?)
    } else {
        None
    };
    let settings = EvalSettings {
        coverage_level: cfg.eval.coverage_level,
        mc_draws: cfg.eval.mc_draws,
        seed: derive_seed(run.master_seed, Stream::Pit, 0),
    };
    let bench_aligned = benchmark.as_ref().map(|b| {
        let dates: std::collections::HashSet<_> = records.iter().map(|r| r.date).collect();
        b.iter().filter(|r| dates.contains(&r.date)).copied().collect::<Vec<_>>()
    });
    let report = evaluate(
        &records,
        eta.expect("at least one fit"),
        bench_aligned.as_deref(),
        &settings,
    )?;
    std::fs::write(dir.join("report.txt"), report.to_text())?;
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    if let Some(b) = &benchmark {
        write_records(dir.join("benchmark_forecasts.csv"), b)?;
    }
    write_manifest(dir, cfg, &refits)?;
    Ok(ExperimentOutput {
        records,
        benchmark,
        report,
        refit_dates: refits.into_iter().map(|(d, _)| d).collect(),
        bundles,
    })
}
