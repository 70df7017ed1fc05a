//! Permutation variable importance for each hemisphere.

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::data::ColumnGroup;
use crate::error::{HnnError, Result};
use crate::model::{aggregate_oob, EnsembleMember, HnnEnsemble};
use crate::nn::HemisphereNet;
use crate::rng::{derive_seed, rng_from_seed, Stream};

pub const DEFAULT_VI_REPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    Mean,
    Variance,
}

impl std::fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Hemisphere::Mean => "mean",
            Hemisphere::Variance => "variance",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViEntry {
    pub variable: String,
    pub hemisphere: Hemisphere,
    /// Percent increase in squared deviation relative to the path variance.
    pub importance: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViReport {
    pub entries: Vec<ViEntry>,
    pub repetitions: usize,
    pub window: String,
}

impl ViReport {
    pub fn importance(&self, variable: &str, hemisphere: Hemisphere) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.variable == variable && e.hemisphere == hemisphere)
            .map(|e| e.importance)
    }

    /// Highest-ranked variable for `hemisphere`.
    pub fn top(&self, hemisphere: Hemisphere) -> Option<&ViEntry> {
        self.entries.iter().find(|e| e.hemisphere == hemisphere && e.rank == 1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# repetitions = {}\n# window = {}\nvariable,hemisphere,vi,rank\n",
            self.repetitions, self.window
        );
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{},{}", e.variable, e.hemisphere, e.importance, e.rank);
        }
        s
    }
}

fn path_of(paths: &crate::model::OobPaths, h: Hemisphere) -> Result<Array1<f64>> {
    match h {
        Hemisphere::Mean => Ok(paths.mean.clone()),
        Hemisphere::Variance => paths
            .var
            .clone()
            .ok_or_else(|| HnnError::State("ensemble has no variance hemisphere".into())),
    }
}

fn permuted(x: ArrayView2<'_, f64>, columns: &[usize], perm: &[usize]) -> Array2<f64> {
    let mut out = x.to_owned();
    for &c in columns {
        for (t, &p) in perm.iter().enumerate() {
            out[[t, c]] = x[[p, c]];
        }
    }
    out
}

/// Row permutations, one per repetition, drawn from `seed`.
pub fn draw_permutations(n_rows: usize, n_reps: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..n_reps)
        .map(|r| {
            let mut p: Vec<usize> = (0..n_rows).collect();
            p.shuffle(&mut rng_from_seed(derive_seed(seed, Stream::Vi, r as u64)));
            p
        })
        .collect()
}

/// Importance of each column group under the given permutations. All columns
/// of a group (a series and its lags) move together.
pub fn variable_importance_with<N: HemisphereNet>(
    members: &[EnsembleMember<N>],
    x: ArrayView2<'_, f64>,
    groups: &[ColumnGroup],
    hemispheres: &[Hemisphere],
    perms: &[Vec<usize>],
) -> Result<ViReport> {
    if perms.is_empty() {
        return Err(HnnError::Config("at least one repetition is needed".into()));
    }
    if let Some(p) = perms.iter().find(|p| p.len() != x.nrows()) {
        return Err(HnnError::Shape(format!("permutation of length {} for {} rows", p.len(), x.nrows())));
    }
    let base = aggregate_oob(members, x)?;
    let mut refs = Vec::new();
    for &h in hemispheres {
        let path = path_of(&base, h)?;
        let n = path.len() as f64;
        let m = path.sum() / n;
        let var = path.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(HnnError::Domain(format!("{h} path has zero variance")));
        }
        refs.push((h, path, var));
    }
    let jobs: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..perms.len()).map(move |r| (g, r))).collect();
    let deviations: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let xp = permuted(x, &groups[g].columns, &perms[r]);
            let paths = aggregate_oob(members, xp.view())?;
            refs.iter()
                .map(|(h, path, var)| {
                    let p = path_of(&paths, *h)?;
                    let msd = (&p - path).mapv(|d| d * d).mean().unwrap_or(0.0);
                    Ok(100.0 * msd / var)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for (hi, &h) in hemispheres.iter().enumerate() {
        let mut block: Vec<ViEntry> = groups
            .iter()
            .enumerate()
            .map(|(g, grp)| {
                let total: f64 = (0..perms.len()).map(|r| deviations[g * perms.len() + r][hi]).sum();
                ViEntry {
                    variable: grp.name.clone(),
                    hemisphere: h,
                    importance: total / perms.len() as f64,
                    rank: 0,
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..block.len()).collect();
        order.sort_by(|&a, &b| {
            block[b]
                .importance
                .total_cmp(&block[a].importance)
                .then_with(|| block[a].variable.cmp(&block[b].variable))
        });
        for (rank, &i) in order.iter().enumerate() {
            block[i].rank = rank + 1;
        }
        entries.extend(block);
    }
    Ok(ViReport {
        entries,
        repetitions: perms.len(),
        window: "full out-of-bag evaluation window".into(),
    })
}

/// Permutation importance of every design group on the out-of-bag paths of
/// a fitted ensemble.
pub fn variable_importance<N: HemisphereNet>(
    ensemble: &HnnEnsemble<N>,
    x: ArrayView2<'_, f64>,
    groups: &[ColumnGroup],
    hemispheres: &[Hemisphere],
    n_reps: usize,
    seed: u64,
) -> Result<ViReport> {
    let perms = draw_permutations(x.nrows(), n_reps, seed);
    variable_importance_with(&ensemble.members, x, groups, hemispheres, &perms)
}
