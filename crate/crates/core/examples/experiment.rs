//! A configuration-driven pseudo-out-of-sample run for two models, followed
//! by a side-by-side comparison of their reports.

use hnn::baselines::{DgpKind, SyntheticDgp};
use hnn::cli::{run_experiment, ExperimentConfig};
use hnn::eval::compare_reports;

const CONFIG: &str = r#"
[data]
panel = "data/panel.csv"
codes = "data/codes.csv"
target = "y"
n_lags = 2
n_trends = 0

[experiment]
model = "MODEL"
holdout_start = "1880-01-01"
cadence = 10
master_seed = 1
output_dir = "runs/MODEL"

[hnn]
n_members = 60
nu_members = 60
neurons = 16
common_layers = 1
head_layers = 1
learning_rate = 0.01
recal_draws = 5000
"#;

fn main() -> hnn::Result<()> {
    let root = std::env::args().nth(1).unwrap_or_else(|| "experiment_demo".into());
    let root = std::path::Path::new(&root);
    SyntheticDgp::new(DgpKind::SwitchingVol).simulate(400, 8)?.write(root.join("data"))?;
    let mut reports = Vec::new();
    for model in ["hnn", "arGarch"] {
        let path = root.join(format!("{model}.toml"));
        std::fs::write(&path, CONFIG.replace("MODEL", model))?;
        let cfg = ExperimentConfig::load(&path)?;
        let out = run_experiment(&cfg)?;
        println!("{model}: {} forecasts, refits at {:?}", out.records.len(), out.refit_dates);
        reports.push(out.report);
    }
    let cmp = compare_reports(&reports[0], &reports[1])?;
    println!("\na = hnn, b = arGarch\n{}", cmp.to_text());
    Ok(())
}
