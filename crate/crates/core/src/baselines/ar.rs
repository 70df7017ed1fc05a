//! Direct AR(2) regressions estimated by OLS.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HnnError, Result};

/// `y_{t+s} = c + φ1·y_t + φ2·y_{t−1} + e`, constant residual variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub intercept: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub residual_variance: f64,
    pub horizon: usize,
    /// Set when a root of the lag polynomial lies on or inside the unit circle.
    pub nonstationary: bool,
}

pub(crate) fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-10 {
        return Err(HnnError::Domain("singular regression design".into()));
    }
    svd.solve(y, 0.0).map_err(|e| HnnError::Domain(e.to_string()))
}

impl ArModel {
    pub fn predict(&self, y_t: f64, y_lag: f64) -> f64 {
        self.intercept + self.phi1 * y_t + self.phi2 * y_lag
    }

    /// In-sample fitted residuals aligned with targets `y[s + 1..]`.
    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        let s = self.horizon;
        (1..y.len().saturating_sub(s))
            .map(|t| y[t + s] - self.predict(y[t], y[t - 1]))
            .collect()
    }
}

fn explosive(phi1: f64, phi2: f64) -> bool {
    // roots of λ² − φ1 λ − φ2
    let disc = phi1 * phi1 + 4.0 * phi2;
    let modulus = if disc >= 0.0 {
        let r = disc.sqrt();
        ((phi1 + r) / 2.0).abs().max(((phi1 - r) / 2.0).abs())
    } else {
        (-phi2).sqrt()
    };
    modulus >= 1.0
}

/// Fits the one-step AR(2).
pub fn fit_ar2(y: &[f64]) -> Result<ArModel> {
    fit_ar2_direct(y, 1)
}

/// Fits `y_{t+s}` on `(1, y_t, y_{t−1})`.
pub fn fit_ar2_direct(y: &[f64], horizon: usize) -> Result<ArModel> {
    if y.len() < 10 {
        return Err(HnnError::Domain(format!("AR(2) needs at least 10 observations, got {}", y.len())));
    }
    if horizon == 0 {
        return Err(HnnError::Config("horizon must be at least 1".into()));
    }
    let rows: Vec<usize> = (1..y.len().saturating_sub(horizon)).collect();
    let n = rows.len();
    if n < 4 {
        return Err(HnnError::Domain("series too short for the horizon".into()));
    }
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => y[rows[i]],
        _ => y[rows[i] - 1],
    });
    let target = DVector::from_iterator(n, rows.iter().map(|&t| y[t + horizon]));
    let b = ols(&x, &target)?;
    let resid = &target - &x * &b;
    let model = ArModel {
        intercept: b[0],
        phi1: b[1],
        phi2: b[2],
        residual_variance: resid.norm_squared() / (n as f64 - 3.0),
        horizon,
        nonstationary: explosive(b[1], b[2]),
    };
    if model.nonstationary {
        log::warn!("AR(2) estimate has a root on or inside the unit circle");
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_recursion_is_recovered() {
        let mut z = vec![3.0, -1.0];
        for t in 2..30 {
            z.push(0.2 + 0.5 * z[t - 1] - 0.3 * z[t - 2]);
        }
        let m = fit_ar2(&z).unwrap();
        assert!((m.intercept - 0.2).abs() < 1e-8);
        assert!((m.phi1 - 0.5).abs() < 1e-8);
        assert!((m.phi2 + 0.3).abs() < 1e-8);
        assert!(!m.nonstationary);
    }

    #[test]
    fn constant_series_is_singular() {
        assert!(matches!(fit_ar2(&[2.0; 30]), Err(HnnError::Domain(_))));
    }

    #[test]
    fn explosive_roots_flagged() {
        assert!(explosive(1.2, 0.0));
        assert!(explosive(0.0, -1.1));
        assert!(!explosive(0.5, 0.2));
    }
}
