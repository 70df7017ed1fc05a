use hnn::baselines::{DgpKind, SyntheticDgp};
use hnn::data::{build_design, DesignMatrix, DesignSpec};
use hnn::model::{estimate_nu, fit_ensemble, load_bundle, save_bundle, HnnConfig, HnnEnsemble};
use hnn::nn::NetworkGraph;
use hnn::HnnError;

fn small_config(seed: u64) -> HnnConfig {
    HnnConfig {
        common_layers: 1,
        head_layers: 1,
        neurons: 8,
        learning_rate: 0.01,
        max_epochs: 40,
        n_members: 30,
        nu_members: 30,
        recal_draws: 2000,
        seed,
        ..HnnConfig::default()
    }
}

fn design(kind: DgpKind, n: usize, seed: u64) -> DesignMatrix {
    let sample = SyntheticDgp::new(kind).simulate(n, seed).unwrap();
    build_design(&sample.panel, &DesignSpec::new("y", 1).with_lags(1).with_trends(0)).unwrap()
}

#[test]
fn same_seed_same_ensemble() {
    let d = design(DgpKind::LinearArch, 200, 1);
    let a = fit_ensemble(&d, &small_config(5)).unwrap();
    let b = fit_ensemble(&d, &small_config(5)).unwrap();
    assert_eq!(a, b);
    let c = fit_ensemble(&d, &small_config(6)).unwrap();
    assert_ne!(a.oob_mean, c.oob_mean);
}

#[test]
fn bundle_round_trip_predicts_identically() {
    let d = design(DgpKind::SwitchingVol, 200, 2);
    let ens = fit_ensemble(&d, &small_config(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bundle");
    save_bundle(&path, "ensemble", &ens).unwrap();
    let back: HnnEnsemble<NetworkGraph> = load_bundle(&path, "ensemble").unwrap();
    let a = ens.predict(d.x.view()).unwrap();
    let b = back.predict(d.x.view()).unwrap();
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.variance, b.variance);
    assert!(load_bundle::<HnnEnsemble<NetworkGraph>>(&path, "other").is_err());
}

#[test]
fn oob_paths_are_positive_and_recalibrated() {
    let d = design(DgpKind::LinearArch, 250, 3);
    let ens = fit_ensemble(&d, &small_config(2)).unwrap();
    assert!(ens.oob_var.iter().all(|v| *v > 0.0));
    let re = ens.recal.apply_path(ens.oob_var_raw.view());
    assert_eq!(re, ens.oob_var);
    assert!(ens.counts.iter().all(|c| *c > 0));
    assert!(ens.nu > 0.0 && ens.nu < 1.0);
}

#[test]
fn pure_noise_hits_the_nu_cap() {
    let mut gen = SyntheticDgp::new(DgpKind::Homoskedastic);
    gen.n_informative = 0;
    gen.beta.clear();
    let sample = gen.simulate(300, 4).unwrap();
    let d = build_design(&sample.panel, &DesignSpec::new("y", 1).with_lags(1).with_trends(0)).unwrap();
    let nu = estimate_nu(&d, &small_config(3)).unwrap();
    assert_eq!(nu, 0.99);
}

#[test]
fn nu_override_short_circuits() {
    let d = design(DgpKind::LinearArch, 150, 5);
    let cfg = HnnConfig { nu_override: Some(0.42), ..small_config(1) };
    assert_eq!(estimate_nu(&d, &cfg).unwrap(), 0.42);
}

#[test]
fn too_few_members_is_a_coverage_error() {
    let d = design(DgpKind::LinearArch, 200, 6);
    let cfg = HnnConfig { n_members: 2, nu_members: 2, ..small_config(1) };
    assert!(matches!(fit_ensemble(&d, &cfg), Err(HnnError::Coverage(_))));
}
