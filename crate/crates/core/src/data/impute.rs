//! Factor-model EM imputation of missing panel cells.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::panel::TimeSeriesPanel;
use crate::error::{HnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputeConfig {
    pub n_factors: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        Self {
            n_factors: 8,
            max_iter: 50,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeReport {
    pub iterations: usize,
    pub converged: bool,
    /// Largest change of an imputed cell at the last iteration, in
    /// standardized units.
    pub last_change: f64,
    pub n_imputed: usize,
}

fn column_moments(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut sds = Vec::with_capacity(x.ncols());
    for c in x.column_iter() {
        let m = c.sum() / n;
        let v = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        means.push(m);
        sds.push(if v > 0.0 { v.sqrt() } else { 1.0 });
    }
    (means, sds)
}

/// Rank-`r` principal-components fit of a standardized matrix.
fn low_rank_fit(z: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let (t, n) = z.shape();
    if n <= t {
        let eig = SymmetricEigen::new(z.transpose() * z);
        let v = top_vectors(&eig, r);
        z * &v * v.transpose()
    } else {
        let eig = SymmetricEigen::new(z * z.transpose());
        let u = top_vectors(&eig, r);
        &u * (u.transpose() * z)
    }
}

fn top_vectors(eig: &SymmetricEigen<f64, nalgebra::Dyn>, r: usize) -> DMatrix<f64> {
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let cols: Vec<_> = order[..r].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    DMatrix::from_columns(&cols)
}

/// Fills missing cells by iterating standardize → PCA fit → replace.
///
/// Non-convergence is not an error: the last iterate is returned and the
/// report carries `converged = false`.
pub fn impute_missing(
    panel: &TimeSeriesPanel,
    config: &ImputeConfig,
) -> Result<(TimeSeriesPanel, ImputeReport)> {
    let (t, n) = (panel.n_rows(), panel.n_cols());
    let n_missing = panel.missing.iter().filter(|m| **m).count();
    if n_missing == 0 {
        return Ok((
            panel.clone(),
            ImputeReport {
                iterations: 0,
                converged: true,
                last_change: 0.0,
                n_imputed: 0,
            },
        ));
    }
    for j in 0..n {
        if panel.missing.column(j).iter().all(|m| *m) {
            return Err(HnnError::Domain(format!(
                "series `{}` has no observed values",
                panel.names[j]
            )));
        }
    }
    if !panel.missing.rows().into_iter().any(|r| r.iter().all(|m| !*m)) {
        return Err(HnnError::Domain(
            "imputation needs at least one fully observed row".into(),
        ));
    }
    if config.n_factors == 0 {
        return Err(HnnError::Config("imputation needs at least one factor".into()));
    }
    let r = config.n_factors.min(n).min(t);

    let mut x = DMatrix::from_fn(t, n, |i, j| panel.values[[i, j]]);
    for j in 0..n {
        let observed: Vec<f64> = (0..t)
            .filter(|&i| !panel.missing[[i, j]])
            .map(|i| x[(i, j)])
            .collect();
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        for i in 0..t {
            if panel.missing[[i, j]] {
                x[(i, j)] = mean;
            }
        }
    }

    let mut report = ImputeReport {
        iterations: 0,
        converged: false,
        last_change: f64::INFINITY,
        n_imputed: n_missing,
    };
    for iter in 1..=config.max_iter {
        let (means, sds) = column_moments(&x);
        let z = DMatrix::from_fn(t, n, |i, j| (x[(i, j)] - means[j]) / sds[j]);
        let fit = low_rank_fit(&z, r);
        let mut change = 0.0f64;
        for j in 0..n {
            for i in 0..t {
                if panel.missing[[i, j]] {
                    let new = fit[(i, j)] * sds[j] + means[j];
                    change = change.max(((new - x[(i, j)]) / sds[j]).abs());
                    x[(i, j)] = new;
                }
            }
        }
        report.iterations = iter;
        report.last_change = change;
        if change < config.tol {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        log::warn!(
            "EM imputation stopped after {} iterations (last change {:.3e})",
            report.iterations,
            report.last_change
        );
    }
    let values = ndarray::Array2::from_shape_fn((t, n), |(i, j)| x[(i, j)]);
    let out = TimeSeriesPanel::new(panel.dates.clone(), panel.names.clone(), panel.codes.clone(), values)?;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::panel::TransformCode;
    use chrono::NaiveDate;
    use ndarray::Array2;

    fn panel(values: Array2<f64>) -> TimeSeriesPanel {
        let dates = (0..values.nrows())
            .map(|i| NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Days::new(i as u64))
            .collect();
        let names = (0..values.ncols()).map(|j| format!("s{j}")).collect();
        let codes = vec![TransformCode::Level; values.ncols()];
        TimeSeriesPanel::new(dates, names, codes, values).unwrap()
    }

    #[test]
    fn complete_panel_is_returned_unchanged() {
        let p = panel(Array2::from_shape_fn((6, 3), |(i, j)| (i * 3 + j) as f64 * 0.7));
        let (out, report) = impute_missing(&p, &ImputeConfig::default()).unwrap();
        assert_eq!(out, p);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn rank_one_panel_recovers_hidden_entry() {
        let col1: Vec<f64> = (0..20).map(|i| ((i as f64) * 1.3).sin() + 0.1 * i as f64).collect();
        let mut values = Array2::from_shape_fn((20, 2), |(i, j)| col1[i] * (j as f64 + 1.0));
        let truth = values[[7, 1]];
        values[[7, 1]] = f64::NAN;
        let cfg = ImputeConfig {
            n_factors: 1,
            max_iter: 500,
            tol: 1e-12,
        };
        let (out, report) = impute_missing(&panel(values), &cfg).unwrap();
        assert!(report.converged);
        assert!((out.values[[7, 1]] - truth).abs() < 1e-6, "{} vs {truth}", out.values[[7, 1]]);
        assert!(!out.has_missing());
    }

    #[test]
    fn all_missing_column_is_rejected() {
        let mut values = Array2::from_elem((5, 2), 1.0);
        values.column_mut(1).fill(f64::NAN);
        values[[0, 0]] = 2.0;
        let err = impute_missing(&panel(values), &ImputeConfig::default()).unwrap_err();
        assert!(matches!(err, HnnError::Domain(_)));
    }

    #[test]
    fn no_fully_observed_row_is_rejected() {
        let mut values = Array2::from_shape_fn((2, 2), |(i, j)| (i + j) as f64);
        values[[0, 0]] = f64::NAN;
        values[[1, 1]] = f64::NAN;
        assert!(impute_missing(&panel(values), &ImputeConfig::default()).is_err());
    }

    #[test]
    fn idempotent_on_output() {
        let mut values = Array2::from_shape_fn((30, 4), |(i, j)| ((i * (j + 2)) as f64 * 0.31).cos());
        values[[3, 2]] = f64::NAN;
        values[[10, 0]] = f64::NAN;
        let (once, _) = impute_missing(&panel(values), &ImputeConfig::default()).unwrap();
        let (twice, _) = impute_missing(&once, &ImputeConfig::default()).unwrap();
        assert_eq!(once, twice);
    }
}
