//! Phillips-curve restricted hemisphere network.
//!
//! The conditional mean is the exact sum of one subnetwork per named column
//! group. A free subnetwork sees every column and, together with the group
//! outputs, feeds a small Softplus head that produces the raw variance.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::data::{DesignMatrix, TREND_GROUP};
use crate::error::{HnnError, Result};
use crate::model::{
    estimate_nu_with, fit_hemisphere_ensemble, EnsembleMember, HnnConfig, HnnEnsemble,
};
use crate::nn::mlp::{backward_stack, forward_stack, Dropout};
use crate::nn::{check_input, Activation, BatchOutput, DenseLayer, ForwardCache, HemisphereNet, LayerGrad, LossGrads, Mode};
use crate::rng::rng_from_seed;

pub const DEFAULT_GROUPS: [&str; 4] = ["lrExpectations", "srExpectations", "realActivity", "commodities"];

/// Architecture settings for [`build_npc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NpcSpec {
    pub layers: usize,
    pub neurons: usize,
    pub vol_hidden: usize,
    /// Multiplier on the inputs of the free variance subnetwork.
    pub free_multiplier: f64,
    pub free_subnet: bool,
}

impl Default for NpcSpec {
    fn default() -> Self {
        NpcSpec {
            layers: 2,
            neurons: 200,
            vol_hidden: 16,
            free_multiplier: 5.0,
            free_subnet: true,
        }
    }
}

/// A named group resolved to design column indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub columns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcNetwork {
    pub names: Vec<String>,
    pub columns: Vec<Vec<usize>>,
    /// `sqrt(#group columns / #design columns)`; group inputs are divided by it.
    pub scales: Vec<f64>,
    pub subnets: Vec<Vec<DenseLayer>>,
    pub free_subnet: Vec<DenseLayer>,
    pub free_multiplier: f64,
    /// Empty for the mean-only variant.
    pub vol_head: Vec<DenseLayer>,
    pub input_dim: usize,
    pub dropout: f64,
    #[serde(skip)]
    version: u64,
}

fn mlp(input: usize, layers: usize, neurons: usize, out: Activation) -> Vec<DenseLayer> {
    let mut v = Vec::with_capacity(layers + 1);
    let mut w = input;
    for _ in 0..layers {
        v.push(DenseLayer::zeros(w, neurons, Activation::Relu));
        w = neurons;
    }
    v.push(DenseLayer::zeros(w, 1, out));
    v
}

/// Parses `groupName: column, column, ...` lines; `#` starts a comment.
pub fn parse_group_file(text: &str) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, cols) = line
            .split_once(':')
            .ok_or_else(|| HnnError::Parse(format!("group line {} lacks `name:`", i + 1)))?;
        let cols: Vec<String> = cols
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if name.trim().is_empty() || cols.is_empty() {
            return Err(HnnError::Parse(format!("group line {} is empty", i + 1)));
        }
        out.push((name.trim().to_string(), cols));
    }
    Ok(out)
}

/// Maps group member names to design columns. A name can be a base series
/// (all its lags), an exact design column, or the trend block.
pub fn resolve_groups(design: &DesignMatrix, groups: &[(String, Vec<String>)]) -> Result<Vec<GroupSpec>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(groups.len());
    for (name, members) in groups {
        let mut cols = Vec::new();
        for m in members {
            let found: Vec<usize> = if let Some(g) = design.group(m) {
                g.columns.clone()
            } else if let Some(j) = design.column_names.iter().position(|c| c == m) {
                vec![j]
            } else {
                return Err(HnnError::Config(format!("group `{name}` names unknown column `{m}`")));
            };
            for j in found {
                if !seen.insert(j) {
                    return Err(HnnError::Config(format!(
                        "column `{}` appears in more than one group",
                        design.column_names[j]
                    )));
                }
                cols.push(j);
            }
        }
        out.push(GroupSpec {
            name: name.clone(),
            columns: cols,
        });
    }
    Ok(out)
}

/// Builds the network over `design` with one mean subnetwork per group.
pub fn build_npc(
    n_inputs: usize,
    groups: &[GroupSpec],
    spec: &NpcSpec,
    dropout: f64,
    with_variance: bool,
) -> Result<NpcNetwork> {
    if groups.is_empty() {
        return Err(HnnError::Config("at least one group is required".into()));
    }
    let mut seen = BTreeSet::new();
    for g in groups {
        if g.columns.is_empty() {
            return Err(HnnError::Config(format!("group `{}` has no columns", g.name)));
        }
        for &c in &g.columns {
            if c >= n_inputs {
                return Err(HnnError::Config(format!("group `{}` column {c} out of range", g.name)));
            }
            if !seen.insert(c) {
                return Err(HnnError::Config(format!("groups overlap at column {c}")));
            }
        }
    }
    if !(0.0..1.0).contains(&dropout) {
        return Err(HnnError::Config(format!("dropout {dropout} not in [0,1)")));
    }
    let subnets = groups
        .iter()
        .map(|g| mlp(g.columns.len(), spec.layers, spec.neurons, Activation::Linear))
        .collect();
    let free = with_variance && spec.free_subnet;
    let n_head_inputs = groups.len() + usize::from(free);
    Ok(NpcNetwork {
        names: groups.iter().map(|g| g.name.clone()).collect(),
        columns: groups.iter().map(|g| g.columns.clone()).collect(),
        scales: groups
            .iter()
            .map(|g| (g.columns.len() as f64 / n_inputs as f64).sqrt())
            .collect(),
        subnets,
        free_subnet: if free {
            mlp(n_inputs, spec.layers, spec.neurons, Activation::Linear)
        } else {
            Vec::new()
        },
        free_multiplier: spec.free_multiplier,
        vol_head: if with_variance {
            vec![
                DenseLayer::zeros(n_head_inputs, spec.vol_hidden, Activation::Relu),
                DenseLayer::zeros(spec.vol_hidden, 1, Activation::Softplus),
            ]
        } else {
            Vec::new()
        },
        input_dim: n_inputs,
        dropout,
        version: 0,
    })
}

impl NpcNetwork {
    fn group_input(&self, x: ArrayView2<'_, f64>, g: usize) -> Array2<f64> {
        x.select(Axis(1), &self.columns[g]) / self.scales[g]
    }
}

impl HemisphereNet for NpcNetwork {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn has_variance(&self) -> bool {
        !self.vol_head.is_empty()
    }

    fn dropout_rate(&self) -> f64 {
        self.dropout
    }

    fn forward(&self, x: ArrayView2<'_, f64>, mode: Mode, seed: u64) -> Result<BatchOutput> {
        check_input(x, self.input_dim)?;
        let train = mode == Mode::Train;
        let rate = if train { self.dropout } else { 0.0 };
        let mut rng = rng_from_seed(seed);
        let mut stacks = Vec::new();
        let mut outputs = Vec::with_capacity(self.subnets.len() + 1);
        let mut offset = 0;
        for (g, net) in self.subnets.iter().enumerate() {
            let xg = self.group_input(x, g);
            let (o, c) = forward_stack(net, xg.view(), Some(Dropout { rate, rng: &mut rng }), false, offset, train)?;
            stacks.extend(c);
            offset += net.len();
            outputs.push(o);
        }
        if !self.free_subnet.is_empty() {
            let xf = &x * self.free_multiplier;
            let (o, c) = forward_stack(
                &self.free_subnet,
                xf.view(),
                Some(Dropout { rate, rng: &mut rng }),
                false,
                offset,
                train,
            )?;
            stacks.extend(c);
            offset += self.free_subnet.len();
            outputs.push(o);
        }
        let components: Vec<Array1<f64>> = outputs[..self.subnets.len()]
            .iter()
            .map(|o| o.column(0).to_owned())
            .collect();
        let mut mean = Array1::<f64>::zeros(x.nrows());
        for c in &components {
            mean += c;
        }
        let raw_var = if self.vol_head.is_empty() {
            None
        } else {
            let views: Vec<_> = outputs.iter().map(|o| o.view()).collect();
            let z = concatenate(Axis(1), &views).map_err(|e| HnnError::Shape(e.to_string()))?;
            let (v, c) = forward_stack(&self.vol_head, z.view(), None, false, offset, train)?;
            stacks.extend(c);
            Some(v.index_axis_move(Axis(1), 0))
        };
        Ok(BatchOutput {
            mean,
            raw_var,
            components,
            cache: train.then_some(ForwardCache {
                version: self.version,
                stacks,
            }),
        })
    }

    fn backward(&self, batch: &BatchOutput, grads: &LossGrads) -> Result<Vec<LayerGrad>> {
        let cache = self.check_cache(batch)?;
        let n = batch.len();
        if grads.d_mean.len() != n {
            return Err(HnnError::Shape("mean gradient length differs from batch".into()));
        }
        let n_sub = self.subnets.len();
        let has_free = !self.free_subnet.is_empty();
        let mut d_outputs: Vec<Array2<f64>> =
            (0..n_sub).map(|_| grads.d_mean.clone().insert_axis(Axis(1))).collect();
        let mut head_grads = Vec::new();
        if self.has_variance() {
            let d_var = grads
                .d_var
                .as_ref()
                .ok_or_else(|| HnnError::State("variance gradient missing".into()))?;
            if d_var.len() != n {
                return Err(HnnError::Shape("variance gradient length differs from batch".into()));
            }
            let head_cache = &cache.stacks[n_sub + usize::from(has_free)];
            let (g, dz) = backward_stack(&self.vol_head, head_cache, d_var.clone().insert_axis(Axis(1)), true)?;
            head_grads = g;
            let dz = dz.expect("input gradient requested");
            for (k, d) in d_outputs.iter_mut().enumerate() {
                d.column_mut(0).zip_mut_with(&dz.column(k), |a, b| *a += b);
            }
            if has_free {
                d_outputs.push(dz.column(n_sub).to_owned().insert_axis(Axis(1)));
            }
        }
        let mut out = Vec::with_capacity(self.layers().len());
        for (g, net) in self.subnets.iter().enumerate() {
            let (lg, _) = backward_stack(net, &cache.stacks[g], d_outputs[g].clone(), false)?;
            out.extend(lg);
        }
        if has_free {
            let (lg, _) = backward_stack(&self.free_subnet, &cache.stacks[n_sub], d_outputs[n_sub].clone(), false)?;
            out.extend(lg);
        }
        out.extend(head_grads);
        Ok(out)
    }

    fn layers(&self) -> Vec<&DenseLayer> {
        self.subnets
            .iter()
            .flatten()
            .chain(self.free_subnet.iter())
            .chain(self.vol_head.iter())
            .collect()
    }

    fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        self.subnets
            .iter_mut()
            .flatten()
            .chain(self.free_subnet.iter_mut())
            .chain(self.vol_head.iter_mut())
            .collect()
    }

    fn version(&self) -> u64 {
        self.version
    }

    fn bump_version(&mut self) {
        self.version = self.version.wrapping_add(1);
    }
}

/// Per-group contribution paths in original target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contributions {
    pub names: Vec<String>,
    pub paths: Vec<Array1<f64>>,
    /// Target mean added back when undoing standardization.
    pub offset: f64,
    pub mean: Array1<f64>,
    pub variance: Array1<f64>,
}

impl Contributions {
    pub fn path(&self, name: &str) -> Option<&Array1<f64>> {
        self.names.iter().position(|n| n == name).map(|i| &self.paths[i])
    }

    /// Sum of the long- and short-run expectation groups when both exist.
    pub fn expectations(&self) -> Option<Array1<f64>> {
        Some(self.path("lrExpectations")? + self.path("srExpectations")?)
    }

    /// `Var(path_g) / Var(mean)` for each group.
    pub fn variance_shares(&self) -> Vec<f64> {
        let var = |a: &Array1<f64>| {
            let m = a.mean().unwrap_or(0.0);
            a.iter().map(|v| (v - m).powi(2)).sum::<f64>() / a.len() as f64
        };
        let total = var(&self.mean);
        self.paths.iter().map(|p| var(p) / total).collect()
    }

    pub fn to_csv(&self, dates: &[chrono::NaiveDate]) -> String {
        let mut s = String::from("date");
        for n in &self.names {
            let _ = write!(s, ",{n}");
        }
        s.push_str(",offset,mean,variance\n");
        for t in 0..self.mean.len() {
            let d = dates.get(t).map(|d| d.to_string()).unwrap_or_else(|| t.to_string());
            s.push_str(&d);
            for p in &self.paths {
                let _ = write!(s, ",{}", p[t]);
            }
            let _ = writeln!(s, ",{},{},{}", self.offset, self.mean[t], self.variance[t]);
        }
        s
    }
}

fn member_components(m: &EnsembleMember<NpcNetwork>, x: ArrayView2<'_, f64>) -> Result<Vec<Array1<f64>>> {
    Ok(m.net.forward(x, Mode::Eval, 0)?.components)
}

/// Out-of-bag averaged components in standardized units, with counts.
pub fn oob_components(members: &[EnsembleMember<NpcNetwork>], x: ArrayView2<'_, f64>) -> Result<Vec<Array1<f64>>> {
    let n = x.nrows();
    let g = members
        .first()
        .map(|m| m.net.subnets.len())
        .ok_or_else(|| HnnError::State("empty ensemble".into()))?;
    let parts: Vec<Vec<Array1<f64>>> = members
        .par_iter()
        .map(|m| member_components(m, x.select(Axis(0), &m.split.oob).view()))
        .collect::<Result<_>>()?;
    let mut acc = vec![Array1::<f64>::zeros(n); g];
    let mut counts = vec![0usize; n];
    for (m, comps) in members.iter().zip(&parts) {
        for (k, &t) in m.split.oob.iter().enumerate() {
            for (a, c) in acc.iter_mut().zip(comps) {
                a[t] += c[k];
            }
            counts[t] += 1;
        }
    }
    if let Some(t) = counts.iter().position(|c| *c == 0) {
        return Err(HnnError::Coverage(format!("row {t} is out-of-bag for no member")));
    }
    for a in acc.iter_mut() {
        for t in 0..n {
            a[t] /= counts[t] as f64;
        }
    }
    Ok(acc)
}

/// Fitted restricted ensemble with its out-of-bag contribution paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcFit {
    pub ensemble: HnnEnsemble<NpcNetwork>,
    pub groups: Vec<GroupSpec>,
    pub spec: NpcSpec,
    pub oob: Contributions,
}

fn to_original(ens: &HnnEnsemble<NpcNetwork>, comps: Vec<Array1<f64>>, mean: &Array1<f64>, var: &Array1<f64>) -> Contributions {
    let s = &ens.scaler;
    Contributions {
        names: ens.members[0].net.names.clone(),
        paths: comps.into_iter().map(|c| c * s.y_sd).collect(),
        offset: s.y_mean,
        mean: mean.mapv(|m| s.unscale_mean(m)),
        variance: var.mapv(|v| s.unscale_var(v)),
    }
}

impl NpcFit {
    /// Contribution paths for new standardized rows, averaged over members.
    pub fn contributions(&self, x: ArrayView2<'_, f64>) -> Result<Contributions> {
        let members = &self.ensemble.members;
        let parts: Vec<Vec<Array1<f64>>> = members.par_iter().map(|m| member_components(m, x)).collect::<Result<_>>()?;
        let b = members.len() as f64;
        let mut acc = vec![Array1::<f64>::zeros(x.nrows()); self.groups.len()];
        for comps in &parts {
            for (a, c) in acc.iter_mut().zip(comps) {
                *a += c;
            }
        }
        let acc: Vec<Array1<f64>> = acc.into_iter().map(|a| a / b).collect();
        let (mean, var) = self.ensemble.predict_standardized(x)?;
        Ok(to_original(&self.ensemble, acc, &mean, &var))
    }
}

/// Estimates `ν` from the mean-only variant, then trains the restricted
/// hemisphere ensemble with the shared constraint and recalibration.
pub fn fit_npc(
    design: &DesignMatrix,
    groups: &[(String, Vec<String>)],
    spec: &NpcSpec,
    config: &HnnConfig,
) -> Result<NpcFit> {
    config.validate()?;
    let resolved = resolve_groups(design, groups)?;
    let p = design.n_cols();
    let mean_only = build_npc(p, &resolved, spec, config.dropout, false)?;
    let nu = estimate_nu_with(&mean_only, design.x.view(), design.y.view(), config)?;
    log::info!("restricted network volatility emphasis nu = {nu:.4}");
    let template = build_npc(p, &resolved, spec, config.dropout, true)?;
    let ensemble = fit_hemisphere_ensemble(&template, design, nu, config)?;
    let comps = oob_components(&ensemble.members, design.x.view())?;
    let oob = to_original(&ensemble, comps, &ensemble.oob_mean.clone(), &ensemble.oob_var.clone());
    Ok(NpcFit {
        ensemble,
        groups: resolved,
        spec: spec.clone(),
        oob,
    })
}

/// Default grouping with the trend block as long-run expectations.
pub fn trend_group() -> (String, Vec<String>) {
    ("lrExpectations".into(), vec![TREND_GROUP.into()])
}
