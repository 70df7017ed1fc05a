//! Aggregated evaluation reports and forecast-record files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::pit::{pit_auto_calibration, DEFAULT_MC_DRAWS};
use super::scores::{
    coverage, crps_gaussian, interval_z, mean_crps, neg_log_density, point_and_log_scores, quantile_weighted_crps,
    ForecastRecord, QuantileWeighting,
};
use crate::data::io::parse_date;
use crate::error::{HnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub coverage_level: f64,
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            coverage_level: 0.68,
            mc_draws: DEFAULT_MC_DRAWS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileScores {
    pub center: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodScore {
    pub date: NaiveDate,
    pub error: f64,
    pub sd: f64,
    pub log_score: f64,
    pub crps: f64,
    pub inside: bool,
    pub pit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_records: usize,
    pub horizon: usize,
    pub eta: f64,
    pub rmse: f64,
    pub rmse_ratio_vs_benchmark: Option<f64>,
    pub log_score: f64,
    pub r2_abs_resid: f64,
    pub crps: f64,
    pub crps_ratio: Option<f64>,
    pub quantile_weighted_crps: QuantileScores,
    pub coverage68: f64,
    pub pit_values: Vec<f64>,
    pub pit_uniformity_p_value: f64,
    pub per_period: Vec<PeriodScore>,
    pub metadata: BTreeMap<String, String>,
}

fn align(records: &[ForecastRecord], benchmark: &[ForecastRecord]) -> Result<()> {
    let same = records.len() == benchmark.len()
        && records.iter().zip(benchmark).all(|(a, b)| a.date == b.date && a.horizon == b.horizon);
    if same {
        Ok(())
    } else {
        Err(HnnError::Alignment(
            "benchmark records do not cover the same dates and horizon".into(),
        ))
    }
}

/// Scores `records`; `eta` is the in-sample residual standard deviation used
/// as the constant-volatility reference for the absolute-residual R².
pub fn evaluate(
    records: &[ForecastRecord],
    eta: f64,
    benchmark: Option<&[ForecastRecord]>,
    settings: &EvalSettings,
) -> Result<EvaluationReport> {
    let point = point_and_log_scores(records, eta)?;
    let crps = mean_crps(records)?;
    let (rmse_ratio, crps_ratio) = match benchmark {
        Some(b) => {
            align(records, b)?;
            let bp = point_and_log_scores(b, eta)?;
            (Some(point.rmse / bp.rmse), Some(crps / mean_crps(b)?))
        }
        None => (None, None),
    };
    let pit = pit_auto_calibration(records, settings.mc_draws, settings.seed)?;
    let z = interval_z(settings.coverage_level);
    let per_period = records
        .iter()
        .zip(&pit.values)
        .map(|(r, &u)| PeriodScore {
            date: r.date,
            error: r.error(),
            sd: r.sd(),
            log_score: neg_log_density(r.mean, r.variance, r.realization),
            crps: crps_gaussian(r.mean, r.sd(), r.realization),
            inside: r.error().abs() <= z * r.sd(),
            pit: u,
        })
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("log_score_direction".into(), "negative mean log density, lower is better".into());
    metadata.insert(
        "pit_method".into(),
        format!(
            "energy-distance rank U = P(d(Y*) <= d(y)), d(x) = E|Y - x|, {} antithetic draws",
            settings.mc_draws
        ),
    );
    metadata.insert("pit_test".into(), "Kolmogorov-Smirnov vs Uniform(0,1), asymptotic p-value".into());
    metadata.insert("coverage_level".into(), settings.coverage_level.to_string());
    metadata.insert("quantile_grid".into(), "0.05:0.05:0.95".into());
    Ok(EvaluationReport {
        n_records: records.len(),
        horizon: records[0].horizon,
        eta,
        rmse: point.rmse,
        rmse_ratio_vs_benchmark: rmse_ratio,
        log_score: point.log_score,
        r2_abs_resid: point.r2_abs_resid,
        crps,
        crps_ratio,
        quantile_weighted_crps: QuantileScores {
            center: quantile_weighted_crps(records, QuantileWeighting::Center)?,
            left: quantile_weighted_crps(records, QuantileWeighting::Left)?,
            right: quantile_weighted_crps(records, QuantileWeighting::Right)?,
        },
        coverage68: coverage(records, settings.coverage_level)?,
        pit_values: pit.values,
        pit_uniformity_p_value: pit.p_value,
        per_period,
        metadata,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

impl EvaluationReport {
    /// Key/value block followed by the per-period table.
    pub fn to_text(&self) -> String {
        let mut s = self.summary_text();
        s.push('\n');
        s.push_str(&self.per_period_csv());
        s
    }

    /// Headline scores and metadata only.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let kv = [
            ("records", self.n_records.to_string()),
            ("horizon", self.horizon.to_string()),
            ("eta", self.eta.to_string()),
            ("rmse", self.rmse.to_string()),
            ("rmse_ratio_vs_benchmark", opt(self.rmse_ratio_vs_benchmark)),
            ("log_score", self.log_score.to_string()),
            ("r2_abs_resid", self.r2_abs_resid.to_string()),
            ("crps", self.crps.to_string()),
            ("crps_ratio", opt(self.crps_ratio)),
            ("crps_center", self.quantile_weighted_crps.center.to_string()),
            ("crps_left", self.quantile_weighted_crps.left.to_string()),
            ("crps_right", self.quantile_weighted_crps.right.to_string()),
            ("coverage68", self.coverage68.to_string()),
            ("pit_uniformity_p_value", self.pit_uniformity_p_value.to_string()),
        ];
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }

    pub fn per_period_csv(&self) -> String {
        let mut s = String::from("date,error,sd,log_score,crps,inside,pit\n");
        for p in &self.per_period {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                p.date, p.error, p.sd, p.log_score, p.crps, p.inside as u8, p.pit
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn write_records(path: impl AsRef<Path>, records: &[ForecastRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "horizon", "mean", "variance", "realization"])?;
    for r in records {
        w.write_record([
            r.date.to_string(),
            r.horizon.to_string(),
            r.mean.to_string(),
            r.variance.to_string(),
            r.realization.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ForecastRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        if row.len() < 5 {
            return Err(HnnError::Parse(format!("forecast row {} has {} fields", i + 1, row.len())));
        }
        let num = |k: usize| -> Result<f64> {
            row[k]
                .trim()
                .parse()
                .map_err(|_| HnnError::Parse(format!("bad number `{}` in forecast row {}", &row[k], i + 1)))
        };
        out.push(ForecastRecord {
            date: parse_date(&row[0])?,
            horizon: row[1]
                .trim()
                .parse()
                .map_err(|_| HnnError::Parse(format!("bad horizon in forecast row {}", i + 1)))?,
            mean: num(2)?,
            variance: num(3)?,
            realization: num(4)?,
        });
    }
    Ok(out)
}

/// Metric-by-metric alignment of two reports over identical dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `(metric, a, b, a / b)`.
    pub metrics: Vec<(String, f64, f64, f64)>,
    /// `(date, log score a − b, crps a − b)`.
    pub per_period: Vec<(NaiveDate, f64, f64)>,
}

pub fn compare_reports(a: &EvaluationReport, b: &EvaluationReport) -> Result<Comparison> {
    let same = a.per_period.len() == b.per_period.len()
        && a.per_period.iter().zip(&b.per_period).all(|(x, y)| x.date == y.date);
    if !same {
        return Err(HnnError::Alignment("reports cover different dates".into()));
    }
    let pairs = [
        ("rmse", a.rmse, b.rmse),
        ("log_score", a.log_score, b.log_score),
        ("r2_abs_resid", a.r2_abs_resid, b.r2_abs_resid),
        ("crps", a.crps, b.crps),
        ("crps_center", a.quantile_weighted_crps.center, b.quantile_weighted_crps.center),
        ("crps_left", a.quantile_weighted_crps.left, b.quantile_weighted_crps.left),
        ("crps_right", a.quantile_weighted_crps.right, b.quantile_weighted_crps.right),
        ("coverage68", a.coverage68, b.coverage68),
        ("pit_uniformity_p_value", a.pit_uniformity_p_value, b.pit_uniformity_p_value),
    ];
    let metrics = pairs
        .iter()
        .map(|(k, x, y)| (k.to_string(), *x, *y, if x == y { 1.0 } else { x / y }))
        .collect();
    let per_period = a
        .per_period
        .iter()
        .zip(&b.per_period)
        .map(|(x, y)| (x.date, x.log_score - y.log_score, x.crps - y.crps))
        .collect();
    Ok(Comparison { metrics, per_period })
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut s = format!("{:<24}{:>16}{:>16}{:>12}\n", "metric", "a", "b", "a/b");
        for (k, a, b, r) in &self.metrics {
            let _ = writeln!(s, "{k:<24}{a:>16.6}{b:>16.6}{r:>12.4}");
        }
        s
    }

    pub fn per_period_csv(&self) -> String {
        let mut s = String::from("date,log_score_diff,crps_diff\n");
        for (d, l, c) in &self.per_period {
            let _ = writeln!(s, "{d},{l},{c}");
        }
        s
    }
}
