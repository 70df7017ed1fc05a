//! Energy-score PIT and a Kolmogorov–Smirnov uniformity test.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF};

use super::scores::{check_records, std_normal, ForecastRecord};
use crate::error::{HnnError, Result};
use crate::rng::{derive_seed, rng_from_seed, Stream};

pub const DEFAULT_MC_DRAWS: usize = 4096;

/// `E|Ŷ − x|` for `Ŷ ~ N(mean, sd²)`.
pub fn expected_distance(mean: f64, sd: f64, x: f64) -> f64 {
    let n = std_normal();
    let z = (x - mean) / sd;
    sd * (z * (2.0 * n.cdf(z) - 1.0) + 2.0 * n.pdf(z))
}

/// Share of forecast draws `Ŷ*` whose expected distance `d(Ŷ*)` does not
/// exceed `d(y)`. Draws come in antithetic pairs.
pub fn energy_pit(record: &ForecastRecord, draws: usize, seed: u64) -> f64 {
    let (m, s) = (record.mean, record.sd());
    let target = expected_distance(m, s, record.realization);
    let mut rng = rng_from_seed(seed);
    let pairs = draws.div_ceil(2).max(1);
    let mut hits = 0usize;
    for _ in 0..pairs {
        let e: f64 = rng.sample(StandardNormal);
        for y in [m + s * e, m - s * e] {
            if expected_distance(m, s, y) <= target {
                hits += 1;
            }
        }
    }
    hits as f64 / (2 * pairs) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitResult {
    pub values: Vec<f64>,
    pub ks_statistic: f64,
    pub p_value: f64,
}

pub fn pit_auto_calibration(records: &[ForecastRecord], draws: usize, seed: u64) -> Result<PitResult> {
    check_records(records)?;
    if records.is_empty() {
        return Err(HnnError::Domain("no records".into()));
    }
    let values: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| energy_pit(r, draws, derive_seed(seed, Stream::Pit, i as u64)))
        .collect();
    let (ks_statistic, p_value) = ks_uniform(&values);
    Ok(PitResult {
        values,
        ks_statistic,
        p_value,
    })
}

/// One-sample KS statistic against Uniform(0, 1) and its asymptotic p-value.
pub fn ks_uniform(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let u = u.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - u).max(u - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    (d, kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d))
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn rec(y: f64) -> ForecastRecord {
        ForecastRecord {
            date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            horizon: 1,
            mean: 0.0,
            variance: 1.0,
            realization: y,
        }
    }

    #[test]
    fn realization_at_center_gives_zero() {
        assert_eq!(energy_pit(&rec(0.0), 4096, 1), 0.0);
    }

    #[test]
    fn matches_two_sided_oracle() {
        let n = std_normal();
        for y in [0.3, 1.0, -1.7] {
            let oracle = 2.0 * n.cdf(f64::abs(y)) - 1.0;
            assert!((energy_pit(&rec(y), 200_000, 3) - oracle).abs() < 0.005);
        }
    }

    #[test]
    fn kolmogorov_reference_values() {
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn uniform_grid_is_not_rejected() {
        let v: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
        let (d, p) = ks_uniform(&v);
        assert!(d <= 0.0011);
        assert!(p > 0.99);
    }
}
