use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::panel::TimeSeriesPanel;
use crate::error::{HnnError, Result};

/// Column-wise affine standardization plus the target's own moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: f64,
    pub y_sd: f64,
}

fn mean_sd(v: ArrayView1<'_, f64>) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.sum() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    // constant columns are centred but left unscaled
    (m, if var > 0.0 { var.sqrt() } else { 1.0 })
}

impl Scaler {
    pub fn identity(n_cols: usize) -> Self {
        Self {
            x_mean: vec![0.0; n_cols],
            x_sd: vec![1.0; n_cols],
            y_mean: 0.0,
            y_sd: 1.0,
        }
    }

    /// Sample mean and (n−1) standard deviation of every column and the target.
    pub fn fit(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Self {
        let (x_mean, x_sd) = x.axis_iter(Axis(1)).map(mean_sd).unzip();
        let (y_mean, y_sd) = mean_sd(y);
        Self {
            x_mean,
            x_sd,
            y_mean,
            y_sd,
        }
    }

    pub fn scale_x(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.x_mean.len() {
            return Err(HnnError::Shape(format!(
                "scaler fitted on {} columns, got {}",
                self.x_mean.len(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.x_mean[j], self.x_sd[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn scale_y(&self, y: ArrayView1<'_, f64>) -> Array1<f64> {
        y.mapv(|v| (v - self.y_mean) / self.y_sd)
    }

    pub fn unscale_mean(&self, m: f64) -> f64 {
        m * self.y_sd + self.y_mean
    }

    pub fn unscale_var(&self, v: f64) -> f64 {
        v * self.y_sd * self.y_sd
    }
}

/// Per-period Gaussian forecast in original target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityForecast {
    pub mean: Array1<f64>,
    pub variance: Array1<f64>,
}

/// Maps a mean/variance pair from standardized back to original units.
pub fn inverse_scale(
    mean: ArrayView1<'_, f64>,
    variance: ArrayView1<'_, f64>,
    scaler: &Scaler,
) -> DensityForecast {
    DensityForecast {
        mean: mean.mapv(|m| scaler.unscale_mean(m)),
        variance: variance.mapv(|v| scaler.unscale_var(v)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub target: String,
    pub horizon: usize,
    /// Number of lags per series including the contemporaneous value.
    pub n_lags: usize,
    pub n_trends: usize,
    /// Panel series left out of the regressors.
    #[serde(default)]
    pub exclude: Vec<String>,
}

impl DesignSpec {
    pub fn new(target: impl Into<String>, horizon: usize) -> Self {
        Self {
            target: target.into(),
            horizon,
            n_lags: 2,
            n_trends: 100,
            exclude: Vec::new(),
        }
    }

    pub fn with_lags(mut self, n_lags: usize) -> Self {
        self.n_lags = n_lags;
        self
    }

    pub fn with_trends(mut self, n_trends: usize) -> Self {
        self.n_trends = n_trends;
        self
    }
}

/// Named set of design columns (one base series with its lags, or the trends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

pub const TREND_GROUP: &str = "trend";

/// How raw regressors are read off a panel row, independent of any window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub base_series: Vec<String>,
    pub n_lags: usize,
    pub trend_kinks: Vec<f64>,
    pub trend_span: f64,
    /// Panel row corresponding to design position 0.
    pub first_row: usize,
}

impl FeatureLayout {
    pub fn width(&self) -> usize {
        self.base_series.len() * self.n_lags + self.trend_kinks.len()
    }

    /// Raw regressors for panel row `t`: every series at lags `0..n_lags`,
    /// then the hockey-stick trends `max(0, i − τ_j) / span` at design
    /// position `i = t − first_row`.
    pub fn raw_row(&self, panel: &TimeSeriesPanel, t: usize) -> Result<Vec<f64>> {
        if t + 1 < self.n_lags || t < self.first_row {
            return Err(HnnError::Domain(format!("row {t} lacks {} lags", self.n_lags)));
        }
        if t >= panel.n_rows() {
            return Err(HnnError::Domain(format!("row {t} beyond panel end")));
        }
        let mut out = Vec::with_capacity(self.width());
        for name in &self.base_series {
            let j = panel.column_index(name)?;
            for lag in 0..self.n_lags {
                let v = panel.values[[t - lag, j]];
                if panel.missing[[t - lag, j]] {
                    return Err(HnnError::Domain(format!(
                        "missing `{name}` at {}; impute before building the design",
                        panel.dates[t - lag]
                    )));
                }
                out.push(v);
            }
        }
        let i = (t - self.first_row) as f64;
        out.extend(
            self.trend_kinks
                .iter()
                .map(|tau| (i - tau).max(0.0) / self.trend_span),
        );
        Ok(out)
    }
}

/// Standardized regressors aligned to the target `horizon` steps ahead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub x_raw: Array2<f64>,
    pub y_raw: Array1<f64>,
    pub column_names: Vec<String>,
    pub groups: Vec<ColumnGroup>,
    pub spec: DesignSpec,
    pub layout: FeatureLayout,
    /// Panel row of each design row (the forecast origin).
    pub rows: Vec<usize>,
    pub dates: Vec<NaiveDate>,
    pub target_dates: Vec<NaiveDate>,
    pub scaler: Scaler,
}

/// Builds `X_t` (lags plus trends) and `y_{t+s}` from a complete panel and
/// standardizes every column over the rows built.
pub fn build_design(panel: &TimeSeriesPanel, spec: &DesignSpec) -> Result<DesignMatrix> {
    if spec.n_lags == 0 {
        return Err(HnnError::Config("n_lags must be at least 1".into()));
    }
    let target_col = panel.column_index(&spec.target)?;
    for e in &spec.exclude {
        panel.column_index(e)?;
    }
    let t_len = panel.n_rows();
    if t_len <= spec.horizon + spec.n_lags {
        return Err(HnnError::Domain(format!(
            "{t_len} observations are too few for horizon {} with {} lags",
            spec.horizon, spec.n_lags
        )));
    }
    let first_row = spec.n_lags - 1;
    let last_row = t_len - 1 - spec.horizon;
    let n_rows = last_row - first_row + 1;

    let base_series: Vec<String> = panel
        .names
        .iter()
        .filter(|n| !spec.exclude.contains(n))
        .cloned()
        .collect();
    let span = n_rows as f64;
    let trend_kinks: Vec<f64> = (0..spec.n_trends)
        .map(|j| j as f64 * (span - 1.0) / spec.n_trends as f64)
        .collect();
    let layout = FeatureLayout {
        base_series,
        n_lags: spec.n_lags,
        trend_kinks,
        trend_span: span,
        first_row,
    };

    let mut column_names = Vec::with_capacity(layout.width());
    let mut groups = Vec::new();
    for name in &layout.base_series {
        let start = column_names.len();
        for lag in 0..spec.n_lags {
            column_names.push(if lag == 0 {
                name.clone()
            } else {
                format!("{name}_L{lag}")
            });
        }
        groups.push(ColumnGroup {
            name: name.clone(),
            columns: (start..column_names.len()).collect(),
        });
    }
    if spec.n_trends > 0 {
        let start = column_names.len();
        column_names.extend((0..spec.n_trends).map(|j| format!("trend_{j}")));
        groups.push(ColumnGroup {
            name: TREND_GROUP.into(),
            columns: (start..column_names.len()).collect(),
        });
    }

    let rows: Vec<usize> = (first_row..=last_row).collect();
    let mut x_raw = Array2::zeros((n_rows, layout.width()));
    let mut y_raw = Array1::zeros(n_rows);
    for (i, &t) in rows.iter().enumerate() {
        let feats = layout.raw_row(panel, t)?;
        x_raw.row_mut(i).assign(&Array1::from(feats));
        let target_row = t + spec.horizon;
        if panel.missing[[target_row, target_col]] {
            return Err(HnnError::Domain(format!(
                "target `{}` missing at {}",
                spec.target, panel.dates[target_row]
            )));
        }
        y_raw[i] = panel.values[[target_row, target_col]];
    }
    let scaler = Scaler::fit(x_raw.view(), y_raw.view());
    let x = scaler.scale_x(x_raw.view())?;
    let y = scaler.scale_y(y_raw.view());
    Ok(DesignMatrix {
        x,
        y,
        x_raw,
        y_raw,
        column_names,
        groups,
        spec: spec.clone(),
        layout,
        dates: rows.iter().map(|&t| panel.dates[t]).collect(),
        target_dates: rows.iter().map(|&t| panel.dates[t + spec.horizon]).collect(),
        rows,
        scaler,
    })
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn group(&self, name: &str) -> Option<&ColumnGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Standardized regressors for arbitrary panel rows, using this design's
    /// layout and scaler.
    pub fn features_for(&self, panel: &TimeSeriesPanel, panel_rows: &[usize]) -> Result<Array2<f64>> {
        let mut raw = Array2::zeros((panel_rows.len(), self.layout.width()));
        for (i, &t) in panel_rows.iter().enumerate() {
            raw.row_mut(i).assign(&Array1::from(self.layout.raw_row(panel, t)?));
        }
        self.scaler.scale_x(raw.view())
    }

    /// Same rows, scaler re-fitted on the design rows in `fit_rows` only.
    pub fn refit_scaler(&self, fit_rows: std::ops::Range<usize>) -> Result<Self> {
        if fit_rows.end > self.n_rows() || fit_rows.len() < 2 {
            return Err(HnnError::Domain(format!(
                "scaler window {fit_rows:?} invalid for {} rows",
                self.n_rows()
            )));
        }
        let scaler = Scaler::fit(
            self.x_raw.slice_axis(Axis(0), fit_rows.clone().into()),
            self.y_raw.slice_axis(Axis(0), fit_rows.into()),
        );
        let mut out = self.clone();
        out.x = scaler.scale_x(self.x_raw.view())?;
        out.y = scaler.scale_y(self.y_raw.view());
        out.scaler = scaler;
        Ok(out)
    }

    /// Writes `date,target_date,y,<columns…>` in standardized units.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["date".to_string(), "target_date".into(), "target".into()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![
                self.dates[i].to_string(),
                self.target_dates[i].to_string(),
                self.y[i].to_string(),
            ];
            rec.extend(self.x.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
