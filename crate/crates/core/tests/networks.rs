mod common;

use common::*;
use hnn::data::BlockSplit;
use hnn::model::{aggregate_oob, EnsembleMember, TrainingLog};
use hnn::nn::{HemisphereNet, Mode, NetworkGraph};
use hnn::npc::{build_npc, GroupSpec, NpcSpec};

fn toy_net(seed: u64, p: usize, mean_only: bool) -> NetworkGraph {
    let mut r = rng(seed);
    let w = 2 + (seed as usize % 5);
    let mut net = if mean_only {
        NetworkGraph::mean_only(p, &[w], &[w, 3], 0.0)
    } else {
        NetworkGraph::new(p, &[w, 4], &[3], 0.0)
    };
    randomize(&mut net, 0.6, &mut r);
    net
}

#[test]
fn hemisphere_gradient_matches_finite_differences() {
    for seed in 0..6 {
        let net = toy_net(seed, 3, false);
        let mut r = rng(100 + seed);
        let x = normal_matrix(12, 3, &mut r);
        let y = normal_vector(12, &mut r);
        let a = flatten(&analytic_gradient(&net, &x, &y, Some(0.7)));
        let n = numeric_gradient(&net, 1e-6, |m| constrained_loss(m, &x, &y, 0.7));
        let err = relative_error(&a, &n);
        assert!(err < 1e-5, "seed {seed}: relative error {err}");
    }
}

#[test]
fn mean_only_gradient_matches_finite_differences() {
    for seed in 0..4 {
        let net = toy_net(seed, 4, true);
        let mut r = rng(200 + seed);
        let x = normal_matrix(10, 4, &mut r);
        let y = normal_vector(10, &mut r);
        let a = flatten(&analytic_gradient(&net, &x, &y, None));
        let n = numeric_gradient(&net, 1e-6, |m| mse_loss(m, &x, &y));
        assert!(relative_error(&a, &n) < 1e-5);
    }
}

fn toy_npc(seed: u64) -> hnn::npc::NpcNetwork {
    let groups = vec![
        GroupSpec { name: "a".into(), columns: vec![0, 1] },
        GroupSpec { name: "b".into(), columns: vec![2] },
        GroupSpec { name: "c".into(), columns: vec![3, 4] },
    ];
    let spec = NpcSpec { layers: 1, neurons: 4, vol_hidden: 3, free_multiplier: 5.0, free_subnet: true };
    let mut net = build_npc(5, &groups, &spec, 0.0, true).unwrap();
    randomize(&mut net, 0.5, &mut rng(seed));
    net
}

#[test]
fn restricted_network_gradient_matches_finite_differences() {
    for seed in 0..4 {
        let net = toy_npc(seed);
        let mut r = rng(300 + seed);
        let x = normal_matrix(9, 5, &mut r);
        let y = normal_vector(9, &mut r);
        let a = flatten(&analytic_gradient(&net, &x, &y, Some(0.4)));
        let n = numeric_gradient(&net, 1e-6, |m| constrained_loss(m, &x, &y, 0.4));
        let err = relative_error(&a, &n);
        assert!(err < 1e-5, "seed {seed}: relative error {err}");
    }
}

#[test]
fn restricted_mean_is_sum_of_components() {
    let net = toy_npc(9);
    let x = normal_matrix(20, 5, &mut rng(1));
    let out = net.forward(x.view(), Mode::Eval, 0).unwrap();
    assert_eq!(out.components.len(), 3);
    for t in 0..20 {
        let s: f64 = out.components.iter().map(|c| c[t]).sum();
        assert!((s - out.mean[t]).abs() < 1e-12);
    }
}

#[test]
fn zero_dropout_train_pass_equals_eval_pass() {
    let net = toy_net(3, 3, false);
    let x = normal_matrix(15, 3, &mut rng(2));
    let train = net.forward(x.view(), Mode::Train, 77).unwrap();
    let eval = net.forward(x.view(), Mode::Eval, 0).unwrap();
    assert_eq!(train.mean, eval.mean);
    assert_eq!(train.raw_var, eval.raw_var);
}

#[test]
fn dropout_masks_are_seeded() {
    let mut net = toy_net(4, 3, false);
    net.dropout = 0.2;
    let x = normal_matrix(30, 3, &mut rng(5));
    let a = net.forward(x.view(), Mode::Train, 11).unwrap();
    let b = net.forward(x.view(), Mode::Train, 11).unwrap();
    let c = net.forward(x.view(), Mode::Train, 12).unwrap();
    assert_eq!(a.mean, b.mean);
    assert_ne!(a.mean, c.mean);
    let e1 = net.forward(x.view(), Mode::Eval, 1).unwrap();
    let e2 = net.forward(x.view(), Mode::Eval, 2).unwrap();
    assert_eq!(e1.mean, e2.mean);
}

#[test]
fn variance_output_is_positive() {
    for seed in 0..5 {
        let mut net = toy_net(seed, 3, false);
        randomize(&mut net, 1.0, &mut rng(seed));
        let x = normal_matrix(50, 3, &mut rng(seed + 50));
        let out = net.forward(x.view(), Mode::Eval, 0).unwrap();
        assert!(out.raw_var.unwrap().iter().all(|v| *v > 0.0));
        let wild = x * 1e3;
        let out = net.forward(wild.view(), Mode::Eval, 0).unwrap();
        assert!(out.raw_var.unwrap().iter().all(|v| *v >= 0.0 && v.is_finite()));
    }
}

#[test]
fn stale_cache_is_rejected() {
    let mut net = toy_net(1, 3, false);
    let mut r = rng(3);
    let x = normal_matrix(6, 3, &mut r);
    let y = normal_vector(6, &mut r);
    let batch = net.forward(x.view(), Mode::Train, 0).unwrap();
    net.bump_version();
    let grads = hnn::nn::LossGrads { d_mean: y.clone(), d_var: Some(y) };
    assert!(matches!(net.backward(&batch, &grads), Err(hnn::HnnError::State(_))));
}

#[test]
fn oob_average_uses_only_out_of_bag_members() {
    let n = 12;
    let x = normal_matrix(n, 3, &mut rng(8));
    let windows = [(0, 5), (4, 5), (8, 5), (10, 4), (2, 3)];
    let members: Vec<EnsembleMember<NetworkGraph>> = windows
        .iter()
        .enumerate()
        .map(|(i, &(s, l))| EnsembleMember {
            net: toy_net(i as u64, 3, false),
            split: BlockSplit::with_window(n, s, l).unwrap(),
            validation: vec![],
            seed: i as u64,
            var_scale: Some(0.5 + i as f64),
            log: TrainingLog::default(),
        })
        .collect();
    let agg = aggregate_oob(&members, x.view()).unwrap();
    for t in 0..n {
        let who: Vec<usize> = (0..5).filter(|&b| members[b].split.is_oob(t)).collect();
        assert_eq!(agg.counts[t], who.len());
        let row = x.slice(ndarray::s![t..t + 1, ..]);
        let means: Vec<f64> = who.iter().map(|&b| members[b].predict(row).unwrap().0[0]).collect();
        let want = means.iter().sum::<f64>() / who.len() as f64;
        assert!((agg.mean[t] - want).abs() < 1e-12);
    }
}
