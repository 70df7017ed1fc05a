//! Point, likelihood and distributional scores under a Gaussian forecast.

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::f64::consts::PI;

use crate::error::{HnnError, Result};
use crate::rng::rng_from_seed;

/// One density forecast paired with its realization, in original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub date: NaiveDate,
    pub horizon: usize,
    pub mean: f64,
    pub variance: f64,
    pub realization: f64,
}

impl ForecastRecord {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn error(&self) -> f64 {
        self.realization - self.mean
    }

    pub fn z(&self) -> f64 {
        self.error() / self.sd()
    }
}

pub(crate) fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn check_records(records: &[ForecastRecord]) -> Result<()> {
    for r in records {
        if !(r.variance > 0.0) || !r.variance.is_finite() {
            return Err(HnnError::Domain(format!(
                "forecast variance {} at {} is not positive",
                r.variance, r.date
            )));
        }
        if !r.mean.is_finite() || !r.realization.is_finite() {
            return Err(HnnError::Domain(format!("non-finite forecast or realization at {}", r.date)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScores {
    pub rmse: f64,
    /// Negative mean log predictive density; lower is better.
    pub log_score: f64,
    pub r2_abs_resid: f64,
}

/// Negative log Gaussian density of `y` under `N(mean, variance)`.
pub fn neg_log_density(mean: f64, variance: f64, y: f64) -> f64 {
    0.5 * (2.0 * PI).ln() + 0.5 * variance.ln() + 0.5 * (y - mean).powi(2) / variance
}

/// RMSE, log score and the share of absolute-residual variation explained
/// by the forecast standard deviation relative to the constant `eta`.
pub fn point_and_log_scores(records: &[ForecastRecord], eta: f64) -> Result<PointScores> {
    if records.len() < 2 {
        return Err(HnnError::Domain("at least two records are needed".into()));
    }
    if !(eta > 0.0) {
        return Err(HnnError::Domain(format!("in-sample residual sd must be positive, got {eta}")));
    }
    check_records(records)?;
    let n = records.len() as f64;
    let mse = records.iter().map(|r| r.error().powi(2)).sum::<f64>() / n;
    let log_score = records
        .iter()
        .map(|r| neg_log_density(r.mean, r.variance, r.realization))
        .sum::<f64>()
        / n;
    let num: f64 = records.iter().map(|r| (r.error().abs() - r.sd()).powi(2)).sum();
    let den: f64 = records.iter().map(|r| (r.error().abs() - eta).powi(2)).sum();
    let r2_abs_resid = if den > 0.0 { 1.0 - num / den } else if num == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    Ok(PointScores {
        rmse: mse.sqrt(),
        log_score,
        r2_abs_resid,
    })
}

/// Closed-form CRPS of `N(mean, sd²)` at `y`.
pub fn crps_gaussian(mean: f64, sd: f64, y: f64) -> f64 {
    if sd == 0.0 {
        return (y - mean).abs();
    }
    let n = std_normal();
    let z = (y - mean) / sd;
    sd * (z * (2.0 * n.cdf(z) - 1.0) + 2.0 * n.pdf(z) - 1.0 / PI.sqrt())
}

/// Monte-Carlo evaluation of `E|Ŷ − y| − ½E|Ŷ − Ŷ′|` with independent draws.
pub fn crps_monte_carlo(mean: f64, sd: f64, y: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut a = 0.0;
    let mut b = 0.0;
    for _ in 0..draws {
        let y1 = mean + sd * rng.sample::<f64, _>(StandardNormal);
        let y2 = mean + sd * rng.sample::<f64, _>(StandardNormal);
        a += (y1 - y).abs();
        b += (y1 - y2).abs();
    }
    (a - 0.5 * b) / draws as f64
}

pub fn mean_crps(records: &[ForecastRecord]) -> Result<f64> {
    check_records(records)?;
    if records.is_empty() {
        return Err(HnnError::Domain("no records".into()));
    }
    Ok(records.iter().map(|r| crps_gaussian(r.mean, r.sd(), r.realization)).sum::<f64>() / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileWeighting {
    Center,
    Left,
    Right,
    Uniform,
}

impl QuantileWeighting {
    pub fn weight(self, tau: f64) -> f64 {
        match self {
            QuantileWeighting::Center => tau * (1.0 - tau),
            QuantileWeighting::Left => (1.0 - tau).powi(2),
            QuantileWeighting::Right => tau * tau,
            QuantileWeighting::Uniform => 1.0,
        }
    }
}

/// `0.05, 0.10, …, 0.95`.
pub fn quantile_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// `(y − Q)(τ − 1{y ≤ Q})`.
pub fn quantile_score(y: f64, q: f64, tau: f64) -> f64 {
    let ind = if y <= q { 1.0 } else { 0.0 };
    (y - q) * (tau - ind)
}

/// Weighted quantile score of one Gaussian forecast, averaged over the grid.
pub fn weighted_qs(mean: f64, sd: f64, y: f64, weighting: QuantileWeighting) -> f64 {
    let n = std_normal();
    let grid = quantile_grid();
    grid.iter()
        .map(|&tau| weighting.weight(tau) * quantile_score(y, mean + sd * n.inverse_cdf(tau), tau))
        .sum::<f64>()
        / grid.len() as f64
}

pub fn quantile_weighted_crps(records: &[ForecastRecord], weighting: QuantileWeighting) -> Result<f64> {
    check_records(records)?;
    if records.is_empty() {
        return Err(HnnError::Domain("no records".into()));
    }
    Ok(records
        .iter()
        .map(|r| weighted_qs(r.mean, r.sd(), r.realization, weighting))
        .sum::<f64>()
        / records.len() as f64)
}

/// Half-width multiplier of the central Gaussian interval at `level`.
pub fn interval_z(level: f64) -> f64 {
    std_normal().inverse_cdf((1.0 + level) / 2.0)
}

pub fn coverage(records: &[ForecastRecord], level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(HnnError::Domain(format!("coverage level {level} outside (0, 1)")));
    }
    check_records(records)?;
    if records.is_empty() {
        return Err(HnnError::Domain("no records".into()));
    }
    let z = interval_z(level);
    let hits = records.iter().filter(|r| r.error().abs() <= z * r.sd()).count();
    Ok(hits as f64 / records.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(mean: f64, variance: f64, y: f64) -> ForecastRecord {
        ForecastRecord {
            date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            horizon: 1,
            mean,
            variance,
            realization: y,
        }
    }

    #[test]
    fn zero_errors_unit_variance() {
        let r = vec![rec(0.0, 1.0, 0.0); 4];
        let s = point_and_log_scores(&r, 1.0).unwrap();
        assert_eq!(s.rmse, 0.0);
        assert!((s.log_score - 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn r2_limits() {
        let errs = [0.3, -1.2, 2.0, 0.1];
        let eta = 0.9;
        let flat: Vec<_> = errs.iter().map(|e| rec(0.0, eta * eta, *e)).collect();
        assert!(point_and_log_scores(&flat, eta).unwrap().r2_abs_resid.abs() < 1e-12);
        let perfect: Vec<_> = errs.iter().map(|e| rec(0.0, e * e, *e)).collect();
        assert!((point_and_log_scores(&perfect, eta).unwrap().r2_abs_resid - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crps_at_center() {
        let expected = 2.0 / (2.0 * PI).sqrt() - 1.0 / PI.sqrt();
        assert!((crps_gaussian(0.0, 1.0, 0.0) - expected).abs() < 1e-14);
        assert!((expected - 0.23370).abs() < 1e-5);
        assert!(crps_gaussian(1.0, 1e-9, 1.0) < 1e-8);
    }

    #[test]
    fn left_below_every_quantile() {
        for tau in quantile_grid() {
            let q = std_normal().inverse_cdf(tau);
            assert!((quantile_score(-10.0, q, tau) - (q + 10.0) * (1.0 - tau)).abs() < 1e-12);
        }
        let l = weighted_qs(0.0, 1.0, 0.0, QuantileWeighting::Left);
        let r = weighted_qs(0.0, 1.0, 0.0, QuantileWeighting::Right);
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn coverage_extremes() {
        let r = vec![rec(0.0, 1e12, 3.0), rec(0.0, 1e12, -3.0)];
        assert_eq!(coverage(&r, 0.68).unwrap(), 1.0);
        let r = vec![rec(0.0, 1e-20, 3.0), rec(0.0, 1e-20, -3.0)];
        assert_eq!(coverage(&r, 0.68).unwrap(), 0.0);
        assert!((interval_z(0.68) - 0.994_457_883).abs() < 1e-6);
    }
}
