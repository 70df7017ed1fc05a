//! Probabilistic and point forecast evaluation under Gaussian densities.

mod pit;
mod report;
mod scores;

pub use pit::{energy_pit, expected_distance, kolmogorov_q, ks_uniform, pit_auto_calibration, PitResult, DEFAULT_MC_DRAWS};
pub use report::{
    compare_reports, evaluate, read_records, write_records, Comparison, EvalSettings, EvaluationReport, PeriodScore,
    QuantileScores,
};
pub use scores::{
    check_records, coverage, crps_gaussian, crps_monte_carlo, interval_z, mean_crps, neg_log_density,
    point_and_log_scores, quantile_grid, quantile_score, quantile_weighted_crps, weighted_qs, ForecastRecord,
    PointScores, QuantileWeighting,
};
