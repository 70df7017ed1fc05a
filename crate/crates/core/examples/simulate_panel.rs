//! Draws each synthetic process and writes one of them to disk in the panel
//! format the CLI reads.

use hnn::baselines::{DgpKind, SyntheticDgp};

fn main() -> hnn::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sim_panel".into());
    for kind in [
        DgpKind::LinearArch,
        DgpKind::GreatModeration,
        DgpKind::SwitchingVol,
        DgpKind::Homoskedastic,
        DgpKind::AdditiveGroups,
    ] {
        let s = SyntheticDgp::new(kind).simulate(400, 11)?;
        let v = &s.true_variance;
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        println!(
            "{kind:?}: {} series, true variance in [{lo:.3}, {hi:.3}], {} groups",
            s.panel.n_cols(),
            s.groups.len()
        );
    }
    let s = SyntheticDgp::new(DgpKind::SwitchingVol).simulate(400, 11)?;
    s.write(&out)?;
    println!("switching-volatility sample written to {out}/");
    Ok(())
}
