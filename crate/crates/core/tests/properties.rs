mod common;

use chrono::NaiveDate;
use hnn::data::{draw_block_split, validation_block, Scaler};
use hnn::eval::{crps_gaussian, evaluate, neg_log_density, point_and_log_scores, EvalSettings, ForecastRecord};
use hnn::model::{constrain_variance, recalibrate};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn records_from(rows: &[(f64, f64, f64)]) -> Vec<ForecastRecord> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    rows.iter()
        .enumerate()
        .map(|(i, &(m, v, y))| ForecastRecord {
            date: start + chrono::Months::new(3 * i as u32),
            horizon: 1,
            mean: m,
            variance: v,
            realization: y,
        })
        .collect()
}

fn record_rows() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-5.0..5.0f64, 0.05..9.0f64, -8.0..8.0f64), 5..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_split_partitions_rows(n in 10usize..400, rate in 0.5..0.95f64, seed in any::<u64>()) {
        let s = draw_block_split(n, rate, seed).unwrap();
        let mut all: Vec<usize> = s.bag.iter().chain(&s.oob).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!s.bag.is_empty() && !s.oob.is_empty());
        // the window is contiguous modulo n
        for w in s.oob.windows(2) {
            prop_assert_eq!(w[1], (w[0] + 1) % n);
        }
        for t in 0..n {
            prop_assert_eq!(s.is_oob(t), s.oob.contains(&t));
        }
    }

    #[test]
    fn validation_block_stays_in_bag(n in 20usize..300, seed in any::<u64>()) {
        let s = draw_block_split(n, 0.8, seed).unwrap();
        let v = validation_block(&s.bag, 0.2, seed ^ 1).unwrap();
        prop_assert!(!v.is_empty());
        prop_assert!(v.iter().all(|t| s.bag.contains(t)));
    }

    #[test]
    fn constrained_path_has_mean_nu(raw in prop::collection::vec(1e-4..50.0f64, 1..200), nu in 0.01..0.99f64) {
        let v = constrain_variance(Array1::from(raw.clone()).view(), nu).unwrap();
        let m = v.sum() / v.len() as f64;
        prop_assert!((m - nu).abs() < 1e-10);
        prop_assert!(v.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn scores_ignore_record_order(rows in record_rows(), shift in 1usize..50) {
        let a = records_from(&rows);
        let mut rotated = rows.clone();
        let k = shift % rows.len();
        rotated.rotate_left(k);
        let b = records_from(&rotated);
        let sa = point_and_log_scores(&a, 1.3).unwrap();
        let sb = point_and_log_scores(&b, 1.3).unwrap();
        prop_assert!((sa.rmse - sb.rmse).abs() < 1e-12);
        prop_assert!((sa.log_score - sb.log_score).abs() < 1e-12);
        prop_assert!((sa.r2_abs_resid - sb.r2_abs_resid).abs() < 1e-10);
    }

    #[test]
    fn log_score_is_mean_of_pointwise_terms(rows in record_rows()) {
        let recs = records_from(&rows);
        let s = point_and_log_scores(&recs, 1.0).unwrap();
        let want: f64 = rows
            .iter()
            .map(|&(m, v, y)| 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (y - m).powi(2) / v))
            .sum::<f64>()
            / rows.len() as f64;
        prop_assert!((s.log_score - want).abs() < 1e-10);
        for &(m, v, y) in &rows {
            let pointwise = 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (y - m).powi(2) / v);
            prop_assert!((neg_log_density(m, v, y) - pointwise).abs() < 1e-12);
        }
    }

    #[test]
    fn crps_is_translation_invariant_and_homogeneous(m in -5.0..5.0f64, sd in 0.05..4.0f64, y in -8.0..8.0f64, c in -10.0..10.0f64, a in 0.1..10.0f64) {
        let base = crps_gaussian(m, sd, y);
        prop_assert!(base >= 0.0);
        prop_assert!((crps_gaussian(m + c, sd, y + c) - base).abs() < 1e-10);
        prop_assert!((crps_gaussian(a * m, a * sd, a * y) - a * base).abs() < 1e-12 * a.max(1.0) * base.max(1.0));
    }

    #[test]
    fn affine_rescaling_moves_scores_predictably(rows in record_rows(), a in 0.2..5.0f64, c in -3.0..3.0f64) {
        let recs = records_from(&rows);
        let moved: Vec<(f64, f64, f64)> = rows.iter().map(|&(m, v, y)| (a * m + c, a * a * v, a * y + c)).collect();
        let moved = records_from(&moved);
        let s = EvalSettings { mc_draws: 64, ..EvalSettings::default() };
        let r0 = evaluate(&recs, 1.5, None, &s).unwrap();
        let r1 = evaluate(&moved, 1.5 * a, None, &s).unwrap();
        prop_assert!((r1.rmse - a * r0.rmse).abs() < 1e-9 * a.max(1.0) * r0.rmse.max(1.0));
        prop_assert!((r1.crps - a * r0.crps).abs() < 1e-9 * a.max(1.0) * r0.crps.max(1.0));
        prop_assert!((r1.log_score - (r0.log_score + a.ln())).abs() < 1e-9);
        prop_assert!((r1.r2_abs_resid - r0.r2_abs_resid).abs() < 1e-9);
        prop_assert!((r1.coverage68 - r0.coverage68).abs() < 1e-12);
    }

    #[test]
    fn recalibration_is_identity_on_its_fixed_point(h in prop::collection::vec(0.05..20.0f64, 5..100)) {
        let h = Array1::from(h);
        let p = recalibrate(h.view(), h.view(), 100, 3).unwrap();
        let back = p.apply_path(h.view());
        for (a, b) in back.iter().zip(h.iter()) {
            prop_assert!((a - b).abs() < 1e-8 * b.max(1.0));
        }
    }

    #[test]
    fn scaler_round_trips(vals in prop::collection::vec(-100.0..100.0f64, 12..60)) {
        let n = vals.len() / 2;
        let x = Array2::from_shape_vec((n, 2), vals[..2 * n].to_vec()).unwrap();
        let y = x.column(0).to_owned();
        let s = Scaler::fit(x.view(), y.view());
        let ys = s.scale_y(y.view());
        for (a, b) in ys.iter().zip(y.iter()) {
            prop_assert!((s.unscale_mean(*a) - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }
}
