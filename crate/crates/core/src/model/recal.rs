//! Log-linear "reality check" of the variance path against out-of-bag
//! squared residuals.

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HnnError, Result};
use crate::rng::rng_from_seed;

/// Squared residuals are floored here before taking logs.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecalParams {
    pub zeta0: f64,
    pub zeta1: f64,
    pub varsigma: f64,
    /// Regression residuals `ξ̂_t`, kept for diagnostics.
    pub xi: Vec<f64>,
    /// Number of squared residuals raised to [`RESIDUAL_FLOOR`].
    pub n_floored: usize,
    /// Slope unidentified (constant path or fewer than three points).
    pub intercept_only: bool,
}

impl RecalParams {
    pub fn identity() -> Self {
        Self {
            zeta0: 0.0,
            zeta1: 1.0,
            varsigma: 1.0,
            xi: Vec::new(),
            n_floored: 0,
            intercept_only: false,
        }
    }

    /// `ς · exp(ζ0 + ζ1 log h)`.
    pub fn apply(&self, h: f64) -> f64 {
        self.varsigma * (self.zeta0 + self.zeta1 * h.ln()).exp()
    }

    pub fn apply_path(&self, h: ArrayView1<'_, f64>) -> Array1<f64> {
        h.mapv(|v| self.apply(v))
    }
}

/// OLS of `log ε̂²` on `[1, log h]`, then `ς = E[exp ξ]` estimated from
/// `draws` with-replacement samples of the regression residuals.
pub fn recalibrate(
    resid_sq: ArrayView1<'_, f64>,
    var_path: ArrayView1<'_, f64>,
    draws: usize,
    seed: u64,
) -> Result<RecalParams> {
    let n = resid_sq.len();
    if n == 0 || n != var_path.len() {
        return Err(HnnError::Shape(format!(
            "recalibration needs equal non-empty paths ({n} vs {})",
            var_path.len()
        )));
    }
    if var_path.iter().any(|v| !(*v > 0.0)) {
        return Err(HnnError::Domain("variance path must be positive".into()));
    }
    if resid_sq.iter().any(|e| !(*e >= 0.0)) {
        return Err(HnnError::Domain("squared residuals must be nonnegative".into()));
    }
    if draws == 0 {
        return Err(HnnError::Config("recalibration needs at least one draw".into()));
    }
    let mut n_floored = 0;
    let ly: Vec<f64> = resid_sq
        .iter()
        .map(|&e| {
            if e < RESIDUAL_FLOOR {
                n_floored += 1;
                RESIDUAL_FLOOR.ln()
            } else {
                e.ln()
            }
        })
        .collect();
    if n_floored > 0 {
        log::warn!("{n_floored} squared residuals floored at {RESIDUAL_FLOOR:e} before recalibration");
    }
    let lx: Vec<f64> = var_path.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();

    let intercept_only = n < 3 || sxx <= 1e-12 * nf;
    let (zeta0, zeta1) = if intercept_only {
        (my, 0.0)
    } else {
        let b = sxy / sxx;
        (my - b * mx, b)
    };
    let xi: Vec<f64> = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| y - (zeta0 + zeta1 * x))
        .collect();

    let mut rng = rng_from_seed(seed);
    let total: f64 = (0..draws).map(|_| xi[rng.random_range(0..n)].exp()).sum();
    let varsigma = total / draws as f64;

    Ok(RecalParams {
        zeta0,
        zeta1,
        varsigma,
        xi,
        n_floored,
        intercept_only,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Array1<f64> {
        Array1::from_shape_fn(n, |t| 0.2 + (t as f64 * 0.31).sin().powi(2) * 3.0)
    }

    #[test]
    fn identity_case() {
        let h = path(200);
        let p = recalibrate(h.view(), h.view(), 10_000, 1).unwrap();
        assert!(p.zeta0.abs() < 1e-10 && (p.zeta1 - 1.0).abs() < 1e-10);
        assert!(p.xi.iter().all(|x| x.abs() < 1e-10));
        assert!((p.varsigma - 1.0).abs() < 1e-10);
        let out = p.apply_path(h.view());
        assert!((&out - &h).iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn scaled_residuals_shift_the_intercept() {
        let h = path(300);
        let e2 = &h * 4.0;
        let p = recalibrate(e2.view(), h.view(), 10_000, 2).unwrap();
        assert!((p.zeta0 - 4f64.ln()).abs() < 1e-10);
        assert!((p.zeta1 - 1.0).abs() < 1e-10);
        let out = p.apply_path(h.view());
        assert!((&out - &e2).iter().all(|d| d.abs() < 1e-8));
    }

    #[test]
    fn constant_path_falls_back_to_intercept() {
        let h = Array1::from_elem(500, 0.7);
        let e2 = Array1::from_shape_fn(500, |t| 0.1 + ((t * 7919) % 101) as f64 / 50.0);
        let p = recalibrate(e2.view(), h.view(), 100_000, 3).unwrap();
        assert!(p.intercept_only);
        assert_eq!(p.zeta1, 0.0);
        let mean_e2 = e2.mean().unwrap();
        let out = p.apply_path(h.view());
        // Monte-Carlo standard error of ς is well below 1% here
        assert!(out.iter().all(|v| (v / mean_e2 - 1.0).abs() < 0.02));
    }

    #[test]
    fn zero_residuals_are_floored_and_counted() {
        let h = path(10);
        let mut e2 = h.clone();
        e2[3] = 0.0;
        let p = recalibrate(e2.view(), h.view(), 100, 0).unwrap();
        assert_eq!(p.n_floored, 1);
        assert!(p.zeta0.is_finite() && p.zeta1.is_finite());
    }
}
