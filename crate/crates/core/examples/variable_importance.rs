//! Permutation importance in both hemispheres. The regime indicator should
//! dominate the variance side, the informative regressors the mean side.

use hnn::baselines::{DgpKind, SyntheticDgp};
use hnn::data::{build_design, DesignSpec};
use hnn::interpret::{variable_importance, Hemisphere};
use hnn::model::{fit_ensemble, HnnConfig};

fn main() -> hnn::Result<()> {
    let sample = SyntheticDgp::new(DgpKind::SwitchingVol).simulate(600, 5)?;
    let design = build_design(&sample.panel, &DesignSpec::new("y", 1).with_lags(2).with_trends(0))?;
    let config = HnnConfig {
        common_layers: 1,
        head_layers: 1,
        neurons: 32,
        learning_rate: 0.01,
        n_members: 60,
        nu_members: 60,
        recal_draws: 10_000,
        seed: 5,
        ..HnnConfig::default()
    };
    let ens = fit_ensemble(&design, &config)?;
    let hemis = [Hemisphere::Mean, Hemisphere::Variance];
    let vi = variable_importance(&ens, design.x.view(), &design.groups, &hemis, 10, 5)?;
    for h in hemis {
        let mut rows: Vec<_> = vi.entries.iter().filter(|e| e.hemisphere == h).collect();
        rows.sort_by_key(|e| e.rank);
        println!("{h} hemisphere");
        for e in rows.iter().take(5) {
            println!("  {:>2}. {:<8} {:>8.2}", e.rank, e.variable, e.importance);
        }
    }
    Ok(())
}
