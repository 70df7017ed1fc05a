use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{HnnError, Result};

/// Stationarity transform applied to a raw series before modelling.
///
/// Numeric codes 1–6 follow the usual FRED-MD/QD convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformCode {
    Level,
    Diff,
    Diff2,
    Log,
    LogDiff,
    LogDiff2,
    PctChange,
}

impl TransformCode {
    /// Leading observations consumed by the transform.
    pub fn rows_lost(self) -> usize {
        match self {
            TransformCode::Level | TransformCode::Log => 0,
            TransformCode::Diff | TransformCode::LogDiff | TransformCode::PctChange => 1,
            TransformCode::Diff2 | TransformCode::LogDiff2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformCode::Level => "level",
            TransformCode::Diff => "diff",
            TransformCode::Diff2 => "diff2",
            TransformCode::Log => "log",
            TransformCode::LogDiff => "logDiff",
            TransformCode::LogDiff2 => "logDiff2",
            TransformCode::PctChange => "pctChange",
        }
    }
}

impl fmt::Display for TransformCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformCode {
    type Err = HnnError;

    fn from_str(s: &str) -> Result<Self> {
        let code = match s.trim().to_ascii_lowercase().as_str() {
            "level" | "1" => TransformCode::Level,
            "diff" | "2" => TransformCode::Diff,
            "diff2" | "3" => TransformCode::Diff2,
            "log" | "4" => TransformCode::Log,
            "logdiff" | "5" => TransformCode::LogDiff,
            "logdiff2" | "6" => TransformCode::LogDiff2,
            "pctchange" => TransformCode::PctChange,
            other => {
                return Err(HnnError::Parse(format!("unknown transform code `{other}`")))
            }
        };
        Ok(code)
    }
}

/// Dated multivariate panel. Missing cells hold `NaN` and are flagged in
/// `missing`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    pub codes: Vec<TransformCode>,
    pub values: Array2<f64>,
    pub missing: Array2<bool>,
}

impl TimeSeriesPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        names: Vec<String>,
        codes: Vec<TransformCode>,
        values: Array2<f64>,
    ) -> Result<Self> {
        if values.nrows() != dates.len() || values.ncols() != names.len() {
            return Err(HnnError::Shape(format!(
                "panel values are {}×{}, expected {}×{}",
                values.nrows(),
                values.ncols(),
                dates.len(),
                names.len()
            )));
        }
        if codes.len() != names.len() {
            return Err(HnnError::Config(format!(
                "{} transform codes for {} series",
                codes.len(),
                names.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(HnnError::Domain(format!(
                "dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let missing = values.mapv(|v| !v.is_finite());
        let mut values = values;
        values.mapv_inplace(|v| if v.is_finite() { v } else { f64::NAN });
        Ok(Self {
            dates,
            names,
            codes,
            values,
            missing,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| HnnError::Config(format!("series `{name}` not in panel")))
    }

    pub fn column(&self, idx: usize) -> ArrayView1<'_, f64> {
        self.values.column(idx)
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|m| *m)
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.n_rows());
        Self {
            dates: self.dates[..n].to_vec(),
            names: self.names.clone(),
            codes: self.codes.clone(),
            values: self.values.slice_axis(Axis(0), (0..n).into()).to_owned(),
            missing: self.missing.slice_axis(Axis(0), (0..n).into()).to_owned(),
        }
    }

    /// Rows `start..` of the panel.
    pub fn tail_from(&self, start: usize) -> Self {
        let start = start.min(self.n_rows());
        Self {
            dates: self.dates[start..].to_vec(),
            names: self.names.clone(),
            codes: self.codes.clone(),
            values: self.values.slice_axis(Axis(0), (start..).into()).to_owned(),
            missing: self.missing.slice_axis(Axis(0), (start..).into()).to_owned(),
        }
    }

    pub fn row_of_date(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }
}
