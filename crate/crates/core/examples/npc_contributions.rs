//! Restricted network whose mean is a sum of group subnetworks, fitted on a
//! process where only one group moves the target.

use hnn::baselines::{DgpKind, SyntheticDgp};
use hnn::data::{build_design, DesignSpec};
use hnn::model::HnnConfig;
use hnn::npc::{fit_npc, NpcSpec};

fn main() -> hnn::Result<()> {
    let sample = SyntheticDgp::new(DgpKind::AdditiveGroups).simulate(600, 2)?;
    let design = build_design(&sample.panel, &DesignSpec::new("y", 1).with_lags(2).with_trends(0))?;
    let config = HnnConfig {
        learning_rate: 0.01,
        n_members: 60,
        nu_members: 60,
        recal_draws: 10_000,
        seed: 2,
        ..HnnConfig::default()
    };
    let spec = NpcSpec { layers: 1, neurons: 16, ..NpcSpec::default() };
    let fit = fit_npc(&design, &sample.groups, &spec, &config)?;
    let c = &fit.oob;
    for (name, share) in c.names.iter().zip(c.variance_shares()) {
        println!("{name:<16} variance share {share:.3}");
    }
    let t = c.mean.len() - 1;
    let parts: f64 = c.paths.iter().map(|p| p[t]).sum();
    println!(
        "last period: offset {:.3} + contributions {:.3} = {:.3} (mean {:.3})",
        c.offset,
        parts,
        c.offset + parts,
        c.mean[t]
    );
    if let Some(e) = c.expectations() {
        println!("expectations path, last value {:.3}", e[t]);
    }
    Ok(())
}
