//! Compares the hemisphere network against a network-plus-GARCH benchmark on
//! a process whose volatility regime is visible in the regressors.

use hnn::baselines::{fit_nn_garch, DgpKind, SyntheticDgp};
use hnn::data::{build_design, DesignSpec};
use hnn::eval::{evaluate, EvalSettings, ForecastRecord};
use hnn::model::{fit_ensemble, HnnConfig};

fn main() -> hnn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let members: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(50);
    let sample = SyntheticDgp::new(DgpKind::SwitchingVol).simulate(2001, seed)?;
    let n_train = 1500;
    let spec = DesignSpec::new("y", 1).with_lags(2).with_trends(0);
    let train_panel = sample.panel.head(n_train + 1);
    let design = build_design(&train_panel, &spec)?;
    let config = HnnConfig {
        common_layers: 1,
        head_layers: 1,
        neurons: 32,
        learning_rate: 0.01,
        n_members: members,
        nu_members: members.min(100),
        recal_draws: 20_000,
        seed,
        ..HnnConfig::default()
    };
    let t0 = std::time::Instant::now();
    let hnn = fit_ensemble(&design, &config)?;
    println!(
        "hnn fitted in {:.1?}: nu = {:.3}, zeta = ({:.3}, {:.3}), varsigma = {:.3}",
        t0.elapsed(),
        hnn.nu,
        hnn.recal.zeta0,
        hnn.recal.zeta1,
        hnn.recal.varsigma
    );
    let t1 = std::time::Instant::now();
    let nng = fit_nn_garch(&design, &config)?;
    let g = &nng.garch;
    println!("nn-garch fitted in {:.1?}: omega = {:.4}, alpha = {:.4}, beta = {:.4}", t1.elapsed(), g.omega, g.alpha, g.beta);

    let origins: Vec<usize> = (n_train..sample.panel.n_rows() - 1).collect();
    let x = design.features_for(&sample.panel, &origins)?;
    let f = hnn.predict(x.view())?;
    let nn_mean = nng.predict_mean(x.view())?;
    let mut history = nng.residuals().to_vec();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, &t) in origins.iter().enumerate() {
        let y = sample.panel.values[[t + 1, 0]];
        let date = sample.panel.dates[t + 1];
        a.push(ForecastRecord { date, horizon: 1, mean: f.mean[i], variance: f.variance[i], realization: y });
        let var = nng.predict_variance(&history);
        b.push(ForecastRecord { date, horizon: 1, mean: nn_mean[i], variance: var, realization: y });
        history.push((y - nn_mean[i]) / nng.scaler.y_sd);
    }
    let eta_h = hnn.oob_residual_sd();
    let eta_g = nng.scaler.y_sd * (nng.residuals().iter().map(|e| e * e).sum::<f64>() / nng.residuals().len() as f64).sqrt();
    let ra = evaluate(&a, eta_h, None, &EvalSettings::default())?;
    let rb = evaluate(&b, eta_g, None, &EvalSettings::default())?;
    println!("{:<10}{:>10}{:>10}{:>10}{:>10}", "model", "rmse", "logscore", "r2|e|", "cov68");
    for (name, r) in [("hnn", &ra), ("nn-garch", &rb)] {
        println!("{name:<10}{:>10.4}{:>10.4}{:>10.4}{:>10.3}", r.rmse, r.log_score, r.r2_abs_resid, r.coverage68);
    }
    Ok(())
}
