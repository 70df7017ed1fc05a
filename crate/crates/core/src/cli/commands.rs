//! Subcommand definitions and dispatch.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ModelKind};
use super::experiment::{fit_model, load_data, run_experiment, window_upto, FitContext, FittedModel, ModelBundle, MODEL_BUNDLE_KIND};
use crate::baselines::{DgpKind, SyntheticDgp};
use crate::data::io::{parse_date, read_panel, write_panel};
use crate::data::{apply_transforms, build_design, impute_missing, DesignSpec, ImputeConfig};
use crate::error::{HnnError, Result};
use crate::eval::{compare_reports, evaluate, read_records, EvalSettings, EvaluationReport, ForecastRecord};
use crate::interpret::{variable_importance, Hemisphere, DEFAULT_VI_REPS};
use crate::model::{load_bundle, save_bundle, HnnConfig};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Parser)]
#[command(name = "hnn", version, about = "Hemisphere neural network density forecasts")]
pub struct Cli {
    /// Worker threads for ensemble training (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic panel and write it with its transform codes.
    Simulate {
        #[arg(long, default_value = "switchingVol")]
        dgp: String,
        #[arg(long, default_value_t = 2000)]
        periods: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file overriding generator parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transform and impute a raw panel; optionally dump the design matrix.
    Ingest {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        codes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long, default_value_t = 2)]
        lags: usize,
        #[arg(long, default_value_t = 100)]
        trends: usize,
        #[arg(long)]
        dump_design: Option<PathBuf>,
    },
    /// Run the expanding-window experiment described by a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Forecast from a saved model bundle.
    Forecast {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        codes: PathBuf,
        /// First origin date (default: the estimation end).
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a forecasts CSV.
    Evaluate {
        #[arg(long)]
        forecasts: PathBuf,
        /// In-sample residual standard deviation for the absolute-residual R².
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Side-by-side comparison of two report.json files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Permutation variable importance of a hemisphere model fitted on the
    /// pre-holdout window.
    Vi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VI_REPS)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the restricted network on the pre-holdout window and write its
    /// contribution paths.
    NpcTrain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        groups: Option<PathBuf>,
    },
}

fn pre_holdout_window(cfg: &ExperimentConfig) -> Result<(crate::data::TimeSeriesPanel, Option<Vec<(String, Vec<String>)>>)> {
    let (panel, groups) = load_data(cfg)?;
    let s = cfg.data.horizon;
    // last origin whose target precedes the holdout
    let last = (0..panel.n_rows().saturating_sub(s))
        .rev()
        .find(|&t| panel.dates[t + s] < cfg.experiment.holdout_start)
        .ok_or_else(|| HnnError::Config("no data before the holdout".into()))?;
    Ok((window_upto(&panel, last + s, &cfg.data.impute)?, groups))
}

fn simulate(dgp: &str, periods: usize, seed: u64, params: Option<&Path>, out: &Path) -> Result<()> {
    let kind: DgpKind = dgp.parse()?;
    let mut gen = match params {
        Some(p) => toml::from_str(&std::fs::read_to_string(p)?).map_err(|e| HnnError::Config(e.to_string()))?,
        None => SyntheticDgp::new(kind),
    };
    gen.kind = kind;
    let sample = gen.simulate(periods, derive_seed(seed, Stream::Simulation, 0))?;
    sample.write(out)?;
    println!("wrote {} periods of {dgp} to {}", periods, out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ingest(panel: &Path, codes: &Path, out: &Path, target: Option<&str>, horizon: usize, lags: usize, trends: usize, dump: Option<&Path>) -> Result<()> {
    let raw = read_panel(panel, codes)?;
    let transformed = apply_transforms(&raw)?;
    let (clean, report) = impute_missing(&transformed, &ImputeConfig::default())?;
    if !report.converged {
        log::warn!("imputation stopped after {} iterations", report.iterations);
    }
    let codes_out = out.with_extension("codes.csv");
    write_panel(&clean, out, &codes_out)?;
    println!(
        "{} rows x {} series, {} cells imputed; wrote {} and {}",
        clean.n_rows(),
        clean.n_cols(),
        report.n_imputed,
        out.display(),
        codes_out.display()
    );
    if let Some(path) = dump {
        let target = target.ok_or_else(|| HnnError::Config("--dump-design needs --target".into()))?;
        let spec = DesignSpec::new(target, horizon).with_lags(lags).with_trends(trends);
        build_design(&clean, &spec)?.write_csv(path)?;
        println!("design written to {}", path.display());
    }
    Ok(())
}

fn forecast(bundle: &Path, panel: &Path, codes: &Path, from: Option<&str>, out: &Path) -> Result<()> {
    let bundle: ModelBundle = load_bundle(bundle, MODEL_BUNDLE_KIND)?;
    let panel = apply_transforms(&read_panel(panel, codes)?)?;
    let start = match from {
        Some(d) => {
            let d = parse_date(d)?;
            panel
                .row_of_date(d)
                .ok_or_else(|| HnnError::Alignment(format!("{d} not in panel")))?
        }
        None => bundle.fit_row,
    };
    let s = bundle.spec.horizon;
    let target = panel.column_index(&bundle.spec.target)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["origin", "date", "horizon", "mean", "variance", "realization"])?;
    for t in start..panel.n_rows() {
        let window = window_upto(&panel, t, &ImputeConfig::default())?;
        let (m, v) = bundle.forecast(&window, t).map_err(|e| e.in_period(panel.dates[t].to_string()))?;
        let (date, real) = if t + s < panel.n_rows() && !panel.missing[[t + s, target]] {
            (panel.dates[t + s].to_string(), panel.values[[t + s, target]].to_string())
        } else {
            (String::new(), String::new())
        };
        w.write_record([panel.dates[t].to_string(), date, s.to_string(), m.to_string(), v.to_string(), real])?;
    }
    w.flush()?;
    println!("forecasts written to {}", out.display());
    Ok(())
}

fn evaluate_cmd(forecasts: &Path, eta: Option<f64>, benchmark: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    let records: Vec<ForecastRecord> = read_records(forecasts)?;
    let eta = match eta {
        Some(e) => e,
        None => {
            let n = records.len() as f64;
            let m = records.iter().map(|r| r.error()).sum::<f64>() / n;
            let e = (records.iter().map(|r| (r.error() - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            log::warn!("no --eta given; using the forecast-error sd {e}");
            e
        }
    };
    let bench = benchmark.map(read_records).transpose()?;
    let settings = EvalSettings {
        seed: derive_seed(seed, Stream::Pit, 0),
        ..EvalSettings::default()
    };
    let report = evaluate(&records, eta, bench.as_deref(), &settings)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.txt"), report.to_text())?;
    std::fs::write(out.join("report.json"), report.to_json()?)?;
    print!("{}", report.summary_text());
    println!();
    Ok(())
}

fn compare(a: &Path, b: &Path, out: Option<&Path>) -> Result<()> {
    let c = compare_reports(&EvaluationReport::load(a)?, &EvaluationReport::load(b)?)?;
    print!("{}", c.to_text());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("comparison.txt"), c.to_text())?;
        std::fs::write(dir.join("per_period_differences.csv"), c.per_period_csv())?;
    }
    Ok(())
}

fn vi(config: &Path, reps: usize, out: Option<&Path>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let (window, groups) = pre_holdout_window(&cfg)?;
    let hnn = HnnConfig {
        seed: derive_seed(cfg.experiment.master_seed, Stream::Refit, 0),
        ..cfg.hnn.clone()
    };
    let kind = if cfg.experiment.model == ModelKind::Npc { ModelKind::Npc } else { ModelKind::Hnn };
    let spec = cfg.data.design_spec();
    let ctx = FitContext { spec: &spec, hnn: &hnn, npc: &cfg.npc, groups: groups.as_deref() };
    let (bundle, design) = fit_model(kind, &window, &ctx)?;
    let hemis = [Hemisphere::Mean, Hemisphere::Variance];
    let seed = derive_seed(cfg.experiment.master_seed, Stream::Vi, 0);
    let report = match &bundle.model {
        FittedModel::Hnn(e) => variable_importance(e, design.x.view(), &design.groups, &hemis, reps, seed)?,
        FittedModel::Npc(f) => variable_importance(&f.ensemble, design.x.view(), &design.groups, &hemis, reps, seed)?,
        _ => unreachable!("vi fits a hemisphere model"),
    };
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.experiment.output_dir.join("vi.csv"));
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&out, report.to_csv())?;
    for h in hemis {
        if let Some(top) = report.top(h) {
            println!("{h}: top variable {} (VI {:.2})", top.variable, top.importance);
        }
    }
    println!("importance written to {}", out.display());
    Ok(())
}

fn npc_train(config: &Path, groups_path: Option<&Path>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(g) = groups_path {
        cfg.data.groups = Some(g.to_path_buf());
    }
    if cfg.data.groups.is_none() {
        return Err(HnnError::Config("npc-train needs a group file".into()));
    }
    let (window, groups) = pre_holdout_window(&cfg)?;
    let hnn = HnnConfig {
        seed: derive_seed(cfg.experiment.master_seed, Stream::Refit, 0),
        ..cfg.hnn.clone()
    };
    let spec = cfg.data.design_spec();
    let ctx = FitContext { spec: &spec, hnn: &hnn, npc: &cfg.npc, groups: groups.as_deref() };
    let (bundle, design) = fit_model(ModelKind::Npc, &window, &ctx)?;
    let dir = &cfg.experiment.output_dir;
    std::fs::create_dir_all(dir)?;
    if let FittedModel::Npc(fit) = &bundle.model {
        std::fs::write(dir.join("contributions.csv"), fit.oob.to_csv(&design.target_dates))?;
        for (name, share) in fit.oob.names.iter().zip(fit.oob.variance_shares()) {
            println!("{name:<20} variance share {share:.3}");
        }
    }
    save_bundle(dir.join(format!("npc_{}.bundle", bundle.fit_date)), MODEL_BUNDLE_KIND, &bundle)?;
    println!("contributions written to {}", dir.join("contributions.csv").display());
    Ok(())
}

/// Runs the parsed subcommand.
pub fn run_cli(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HnnError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { dgp, periods, seed, params, out } => simulate(&dgp, periods, seed, params.as_deref(), &out),
        Command::Ingest { panel, codes, out, target, horizon, lags, trends, dump_design } => {
            ingest(&panel, &codes, &out, target.as_deref(), horizon, lags, trends, dump_design.as_deref())
        }
        Command::Train { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            print!("{}", out.report.summary_text());
            println!();
            println!("artifacts in {}", cfg.experiment.output_dir.display());
            Ok(())
        }
        Command::Forecast { bundle, panel, codes, from, out } => forecast(&bundle, &panel, &codes, from.as_deref(), &out),
        Command::Evaluate { forecasts, eta, benchmark, seed, out } => evaluate_cmd(&forecasts, eta, benchmark.as_deref(), seed, &out),
        Command::Compare { a, b, out } => compare(&a, &b, out.as_deref()),
        Command::Vi { config, reps, out } => vi(&config, reps, out.as_deref()),
        Command::NpcTrain { config, groups } => npc_train(&config, groups.as_deref()),
    }
}
