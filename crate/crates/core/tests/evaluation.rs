mod common;

use chrono::NaiveDate;
use common::*;
use hnn::eval::*;
use rand::Rng;

fn rec(i: usize, mean: f64, variance: f64, y: f64) -> ForecastRecord {
    ForecastRecord {
        date: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + chrono::Months::new(3 * i as u32),
        horizon: 1,
        mean,
        variance,
        realization: y,
    }
}

#[test]
fn r2_abs_resid_trivial_cases() {
    let errs = [0.3, -1.2, 2.0, -0.1, 0.8];
    let eta = 0.9;
    let flat: Vec<_> = errs.iter().enumerate().map(|(i, e)| rec(i, 0.0, eta * eta, *e)).collect();
    assert!(point_and_log_scores(&flat, eta).unwrap().r2_abs_resid.abs() < 1e-12);
    let perfect: Vec<_> = errs.iter().enumerate().map(|(i, e)| rec(i, 0.0, e * e, *e)).collect();
    assert!((point_and_log_scores(&perfect, eta).unwrap().r2_abs_resid - 1.0).abs() < 1e-12);
}

#[test]
fn rmse_matches_hand_computation() {
    let recs = vec![rec(0, 1.0, 1.0, 2.0), rec(1, 0.0, 1.0, -2.0), rec(2, 3.0, 1.0, 3.0)];
    let s = point_and_log_scores(&recs, 1.0).unwrap();
    assert!((s.rmse - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

#[test]
fn crps_closed_form_matches_numerical_integral() {
    // CRPS = ∫ F(x)² dx below y plus ∫ (1 − F(x))² dx above, Simpson's rule
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
        (f(a) + f(b) + inner) * h / 3.0
    }
    for &(m, sd, y) in &[(0.0, 1.0, 0.3), (1.5, 0.4, -0.2), (-2.0, 3.0, 4.0f64)] {
        let (lo, hi) = (m - 12.0 * sd - y.abs(), m + 12.0 * sd + y.abs());
        let cdf = |x: f64| std_normal_cdf((x - m) / sd);
        let integral = simpson(|x| cdf(x).powi(2), lo, y, 20_000) + simpson(|x| (1.0 - cdf(x)).powi(2), y, hi, 20_000);
        assert!((crps_gaussian(m, sd, y) - integral).abs() < 1e-6, "{m} {sd} {y}");
    }
}

#[test]
fn uniform_quantile_weighting_tracks_half_the_crps() {
    // under a correct N(0,1) forecast E[QS_τ] = φ(Φ⁻¹(τ)), and ∫ φ(Φ⁻¹(τ)) dτ = CRPS/2
    let unit = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    let expected: f64 = grid
        .iter()
        .map(|&t| {
            let z = statrs::distribution::ContinuousCDF::inverse_cdf(&unit, t);
            (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .sum::<f64>()
        / 19.0;
    let mut r = rng(3);
    let n = 20_000;
    let (mut qs, mut crps) = (0.0, 0.0);
    for _ in 0..n {
        let y: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut r);
        qs += weighted_qs(0.0, 1.0, y, QuantileWeighting::Uniform);
        crps += crps_gaussian(0.0, 1.0, y);
    }
    let (qs, crps) = (qs / n as f64, crps / n as f64);
    assert!((qs - expected).abs() < 0.005, "{qs} vs {expected}");
    assert!((2.0 * qs / crps - 1.0).abs() < 0.06);
}

#[test]
fn quantile_score_hand_values() {
    assert_eq!(quantile_score(1.0, 0.0, 0.9), 0.9);
    approx::assert_abs_diff_eq!(quantile_score(-1.0, 0.0, 0.9), 0.1, epsilon = 1e-15);
    assert_eq!(quantile_score(0.0, 0.0, 0.3), 0.0);
}

#[test]
fn coverage_counts_the_central_interval() {
    let z = interval_z(0.68);
    assert!((std_normal_cdf(z) - 0.84).abs() < 1e-9);
    let recs = vec![rec(0, 0.0, 1.0, 0.99 * z), rec(1, 0.0, 1.0, -1.01 * z), rec(2, 0.0, 4.0, 1.9 * z), rec(3, 0.0, 4.0, 2.1 * z)];
    assert_eq!(coverage(&recs, 0.68).unwrap(), 0.5);
}

#[test]
fn energy_pit_matches_its_gaussian_closed_form() {
    // for a Gaussian forecast the expected distance is monotone in |y − μ|
    for (i, z) in [-2.2, -0.7, 0.0, 0.4, 1.3, 3.0].into_iter().enumerate() {
        let r = rec(i, 1.0, 4.0, 1.0 + 2.0 * z);
        let want = 2.0 * std_normal_cdf(f64::abs(z)) - 1.0;
        let got = energy_pit(&r, 200_000, 9);
        assert!((got - want).abs() < 5e-3, "z {z}: {got} vs {want}");
    }
}

#[test]
fn ks_statistic_hand_value_and_tail() {
    let (d, _) = ks_uniform(&[0.1, 0.4, 0.7]);
    approx::assert_abs_diff_eq!(d, 0.3, epsilon = 1e-12);
    // Kolmogorov survival function at known points
    assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
    assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-3);
    let mut r = rng(1);
    let u: Vec<f64> = (0..2000).map(|_| r.random::<f64>()).collect();
    assert!(ks_uniform(&u).1 > 0.01);
    let skew: Vec<f64> = u.iter().map(|v| v * v).collect();
    assert!(ks_uniform(&skew).1 < 1e-6);
}

#[test]
fn evaluate_reports_ratios_and_rejects_misaligned_benchmarks() {
    let a: Vec<_> = (0..30).map(|i| rec(i, 0.0, 1.0, (i as f64 * 0.37).sin())).collect();
    let b: Vec<_> = a.iter().map(|r| ForecastRecord { mean: 0.2, ..*r }).collect();
    let s = EvalSettings::default();
    let rep = evaluate(&a, 1.0, Some(&b), &s).unwrap();
    let rb = evaluate(&b, 1.0, None, &s).unwrap();
    assert!((rep.rmse_ratio_vs_benchmark.unwrap() - rep.rmse / rb.rmse).abs() < 1e-12);
    let shifted: Vec<_> = (0..30).map(|i| rec(i + 1, 0.0, 1.0, 0.0)).collect();
    assert!(matches!(evaluate(&a, 1.0, Some(&shifted), &s), Err(hnn::HnnError::Alignment(_))));

    let json = rep.to_json().unwrap();
    assert_eq!(EvaluationReport::from_json(&json).unwrap(), rep);
    let c = compare_reports(&rep, &rep).unwrap();
    assert!(c.metrics.iter().all(|m| m.3 == 1.0));
    assert!(c.per_period.iter().all(|p| p.1 == 0.0 && p.2 == 0.0));
}

#[test]
fn records_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let recs: Vec<_> = (0..10).map(|i| rec(i, i as f64 * 0.1, 1.0 + i as f64, -0.5 * i as f64)).collect();
    write_records(&path, &recs).unwrap();
    assert_eq!(read_records(&path).unwrap(), recs);
}

#[test]
fn nonpositive_variance_is_a_domain_error() {
    let recs = vec![rec(0, 0.0, 0.0, 1.0), rec(1, 0.0, 1.0, 1.0)];
    assert!(matches!(point_and_log_scores(&recs, 1.0), Err(hnn::HnnError::Domain(_))));
}
