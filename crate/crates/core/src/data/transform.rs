use ndarray::{Array2, Axis};

use super::panel::{TimeSeriesPanel, TransformCode};
use crate::error::{HnnError, Result};

fn log_checked(v: f64, panel: &TimeSeriesPanel, col: usize, row: usize) -> Result<f64> {
    if v.is_nan() {
        return Ok(f64::NAN);
    }
    if v <= 0.0 {
        return Err(HnnError::Domain(format!(
            "log of nonpositive value {v} in `{}` at {}",
            panel.names[col], panel.dates[row]
        )));
    }
    Ok(v.ln())
}

fn transform_column(panel: &TimeSeriesPanel, col: usize) -> Result<Vec<f64>> {
    let x = panel.column(col);
    let n = x.len();
    let code = panel.codes[col];
    let logs = || -> Result<Vec<f64>> {
        (0..n).map(|t| log_checked(x[t], panel, col, t)).collect()
    };
    let diff = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![f64::NAN; v.len()];
        for t in 1..v.len() {
            out[t] = v[t] - v[t - 1];
        }
        out
    };
    let raw: Vec<f64> = x.to_vec();
    let out = match code {
        TransformCode::Level => raw,
        TransformCode::Diff => diff(&raw),
        TransformCode::Diff2 => diff(&diff(&raw)),
        TransformCode::Log => logs()?,
        TransformCode::LogDiff => diff(&logs()?),
        TransformCode::LogDiff2 => diff(&diff(&logs()?)),
        TransformCode::PctChange => {
            let mut out = vec![f64::NAN; n];
            for t in 1..n {
                out[t] = x[t] / x[t - 1] - 1.0;
            }
            out
        }
    };
    Ok(out)
}

/// Replaces every column by its transform and trims the leading rows lost
/// to differencing, uniformly across columns. Returned codes are all
/// [`TransformCode::Level`].
pub fn apply_transforms(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let lost = panel.codes.iter().map(|c| c.rows_lost()).max().unwrap_or(0);
    if panel.n_rows() <= lost {
        return Err(HnnError::Domain(format!(
            "{} rows cannot absorb {lost} leading rows lost to differencing",
            panel.n_rows()
        )));
    }
    let mut values = Array2::from_elem(panel.values.raw_dim(), f64::NAN);
    for j in 0..panel.n_cols() {
        let col = transform_column(panel, j)?;
        values.column_mut(j).assign(&ndarray::Array1::from(col));
    }
    let values = values.slice_axis(Axis(0), (lost..).into()).to_owned();
    TimeSeriesPanel::new(
        panel.dates[lost..].to_vec(),
        panel.names.clone(),
        vec![TransformCode::Level; panel.n_cols()],
        values,
    )
}
