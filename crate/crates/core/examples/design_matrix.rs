//! Raw panel to model inputs: stationarity transforms, factor imputation of
//! a ragged edge, then lags, trends and standardization.

use chrono::{Months, NaiveDate};
use hnn::data::{apply_transforms, build_design, impute_missing, DesignSpec, ImputeConfig, TimeSeriesPanel, TransformCode};
use ndarray::Array2;

fn main() -> hnn::Result<()> {
    let n = 120;
    let start = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap();
    let dates: Vec<NaiveDate> = (0..n).map(|i| start + Months::new(3 * i as u32)).collect();
    let mut values = Array2::<f64>::zeros((n, 3));
    for t in 0..n {
        let tf = t as f64;
        values[[t, 0]] = 100.0 * (0.005 * tf + 0.01 * (0.3 * tf).sin()).exp();
        values[[t, 1]] = 5.0 + (0.2 * tf).cos();
        values[[t, 2]] = 2.0 + 0.5 * (0.1 * tf).sin() + 0.01 * tf;
    }
    // last two quarters of the third series are not yet published
    values[[n - 1, 2]] = f64::NAN;
    values[[n - 2, 2]] = f64::NAN;
    let panel = TimeSeriesPanel::new(
        dates,
        vec!["GDP".into(), "UNRATE".into(), "CPI".into()],
        vec![TransformCode::LogDiff, TransformCode::Diff, TransformCode::Level],
        values,
    )?;

    let transformed = apply_transforms(&panel)?;
    println!("{} rows after transforms (first row lost to differencing)", transformed.n_rows());
    let (clean, report) = impute_missing(&transformed, &ImputeConfig { n_factors: 2, ..ImputeConfig::default() })?;
    println!(
        "imputed {} cells in {} iterations (converged: {})",
        report.n_imputed, report.iterations, report.converged
    );

    let spec = DesignSpec::new("GDP", 1).with_lags(2).with_trends(4);
    let design = build_design(&clean, &spec)?;
    println!("design: {} rows x {} columns", design.n_rows(), design.n_cols());
    println!("columns: {}", design.column_names.join(", "));
    println!(
        "first origin {} forecasts {}; standardized target mean {:.2e}",
        design.dates[0],
        design.target_dates[0],
        design.y.mean().unwrap()
    );
    Ok(())
}
