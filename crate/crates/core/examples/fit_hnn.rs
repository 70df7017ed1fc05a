//! Fits a hemisphere ensemble on a regime-switching process and prints the
//! pieces that shape its variance: the volatility emphasis, the out-of-bag
//! paths and the recalibration.

use hnn::baselines::{DgpKind, SyntheticDgp};
use hnn::data::{build_design, DesignSpec};
use hnn::model::{fit_ensemble, HnnConfig};

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn main() -> hnn::Result<()> {
    let sample = SyntheticDgp::new(DgpKind::SwitchingVol).simulate(800, 3)?;
    let design = build_design(&sample.panel, &DesignSpec::new("y", 1).with_lags(2).with_trends(0))?;
    let config = HnnConfig {
        common_layers: 1,
        head_layers: 1,
        neurons: 32,
        learning_rate: 0.01,
        n_members: 100,
        nu_members: 50,
        recal_draws: 20_000,
        seed: 3,
        ..HnnConfig::default()
    };
    let t0 = std::time::Instant::now();
    let ens = fit_ensemble(&design, &config)?;
    println!("fitted {} members in {:.1?}", ens.members.len(), t0.elapsed());
    println!("volatility emphasis nu = {:.3}", ens.nu);
    println!(
        "recalibration: zeta0 = {:.3}, zeta1 = {:.3}, varsigma = {:.3}",
        ens.recal.zeta0, ens.recal.zeta1, ens.recal.varsigma
    );

    let oob = ens.oob_forecast();
    // DGP row of each design target
    let truth: Vec<f64> = design.rows.iter().map(|&t| sample.true_variance[t + 1]).collect();
    println!(
        "correlation of out-of-bag variance with the true variance: {:.3}",
        corr(oob.variance.as_slice().unwrap(), &truth)
    );
    let x_last = design.x.slice(ndarray::s![design.n_rows() - 3.., ..]);
    let f = ens.predict(x_last)?;
    for i in 0..3 {
        println!("forecast: mean {:>7.3}  sd {:>6.3}", f.mean[i], f.variance[i].sqrt());
    }
    Ok(())
}
