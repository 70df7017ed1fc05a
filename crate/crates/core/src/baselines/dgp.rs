//! Synthetic panels with known conditional mean and variance paths.

use chrono::{Months, NaiveDate};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::data::io::write_panel;
use crate::data::{TimeSeriesPanel, TransformCode};
use crate::error::{HnnError, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DgpKind {
    LinearArch,
    GreatModeration,
    SwitchingVol,
    Homoskedastic,
    /// Nonlinear mean driven by one of four named column groups.
    AdditiveGroups,
}

impl std::str::FromStr for DgpKind {
    type Err = HnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lineararch" => Ok(DgpKind::LinearArch),
            "greatmoderation" => Ok(DgpKind::GreatModeration),
            "switchingvol" => Ok(DgpKind::SwitchingVol),
            "homoskedastic" => Ok(DgpKind::Homoskedastic),
            "additivegroups" | "additive" => Ok(DgpKind::AdditiveGroups),
            _ => Err(HnnError::Config(format!("unknown DGP `{s}`"))),
        }
    }
}

/// Generator settings. Regressors enter with a one-period lag so that a
/// horizon-one design sees exactly the information the DGP conditions on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticDgp {
    pub kind: DgpKind,
    pub n_regressors: usize,
    pub n_informative: usize,
    pub beta: Vec<f64>,
    /// Autocorrelation of each regressor.
    pub regressor_ar: f64,
    /// Constant and slope of the ARCH recursion.
    pub arch_c: f64,
    pub arch_a: Vec<f64>,
    pub base_variance: f64,
    /// Regime variances for the switching process.
    pub low_variance: f64,
    pub high_variance: f64,
    pub stay_probability: f64,
}

impl Default for SyntheticDgp {
    fn default() -> Self {
        SyntheticDgp {
            kind: DgpKind::LinearArch,
            n_regressors: 20,
            n_informative: 3,
            beta: vec![1.0, -0.7, 0.5],
            regressor_ar: 0.5,
            arch_c: 0.1,
            arch_a: vec![0.6],
            base_variance: 1.0,
            low_variance: 0.25,
            high_variance: 4.0,
            stay_probability: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSample {
    pub panel: TimeSeriesPanel,
    pub target: String,
    pub true_mean: Vec<f64>,
    pub true_variance: Vec<f64>,
    /// Column groups for the additive process, empty otherwise.
    pub groups: Vec<(String, Vec<String>)>,
}

pub const NPC_GROUP_NAMES: [&str; 4] = ["realActivity", "srExpectations", "lrExpectations", "commodities"];

fn quarterly_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(1800, 1, 1).expect("valid start date");
    (0..n)
        .map(|i| start.checked_add_months(Months::new(3 * i as u32)).expect("date in range"))
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

impl SyntheticDgp {
    pub fn new(kind: DgpKind) -> Self {
        SyntheticDgp {
            kind,
            ..Default::default()
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if n < 50 {
            return Err(HnnError::Domain(format!("simulation needs at least 50 periods, got {n}")));
        }
        if self.n_informative > self.n_regressors || self.beta.len() < self.n_informative {
            return Err(HnnError::Config("informative regressors exceed regressors or betas".into()));
        }
        if !(self.regressor_ar.abs() < 1.0) {
            return Err(HnnError::Config("regressor autocorrelation must lie in (-1, 1)".into()));
        }
        Ok(())
    }

    /// Draws `n` periods. Fixed seeds give bitwise-identical samples.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<DgpSample> {
        self.validate(n)?;
        let mut rng = rng_from_seed(seed);
        let k = if self.kind == DgpKind::AdditiveGroups { 4 * (self.n_regressors / 4).max(1) } else { self.n_regressors };
        let innov_sd = (1.0 - self.regressor_ar * self.regressor_ar).sqrt();
        let mut x = Array2::<f64>::zeros((n, k));
        for j in 0..k {
            x[[0, j]] = normal(&mut rng);
        }
        for t in 1..n {
            for j in 0..k {
                x[[t, j]] = self.regressor_ar * x[[t - 1, j]] + innov_sd * normal(&mut rng);
            }
        }
        let mut regime = vec![0.0f64; n];
        if self.kind == DgpKind::SwitchingVol {
            regime[0] = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
            for t in 1..n {
                let stay = rng.random_bool(self.stay_probability);
                regime[t] = if stay { regime[t - 1] } else { 1.0 - regime[t - 1] };
            }
        }
        let group_size = k / 4;
        let mut y = vec![0.0f64; n];
        let mut mean = vec![0.0f64; n];
        let mut var = vec![0.0f64; n];
        let mut eps = vec![0.0f64; n];
        for t in 0..n {
            let m = if t == 0 {
                0.0
            } else if self.kind == DgpKind::AdditiveGroups {
                (0..group_size).map(|j| (1.5 * x[[t - 1, j]]).tanh() + 0.3 * x[[t - 1, j]]).sum::<f64>()
            } else {
                (0..self.n_informative).map(|j| self.beta[j] * x[[t - 1, j]]).sum()
            };
            let v = match self.kind {
                DgpKind::LinearArch => {
                    self.arch_c
                        + self
                            .arch_a
                            .iter()
                            .enumerate()
                            .map(|(i, a)| if t > i { a * eps[t - 1 - i].powi(2) } else { 0.0 })
                            .sum::<f64>()
                }
                DgpKind::GreatModeration => {
                    if t < n / 2 {
                        self.base_variance
                    } else {
                        self.base_variance / 2.0
                    }
                }
                DgpKind::SwitchingVol => {
                    let r = if t == 0 { regime[0] } else { regime[t - 1] };
                    if r > 0.5 {
                        self.high_variance
                    } else {
                        self.low_variance
                    }
                }
                DgpKind::Homoskedastic | DgpKind::AdditiveGroups => self.base_variance,
            };
            eps[t] = v.sqrt() * normal(&mut rng);
            mean[t] = m;
            var[t] = v;
            y[t] = m + eps[t];
        }
        let mut names = vec!["y".to_string()];
        let mut groups = Vec::new();
        if self.kind == DgpKind::AdditiveGroups {
            for gname in NPC_GROUP_NAMES {
                let cols: Vec<String> = (0..group_size).map(|j| format!("{gname}_{j}")).collect();
                names.extend(cols.iter().cloned());
                groups.push((gname.to_string(), cols));
            }
        } else {
            names.extend((0..k).map(|j| format!("x{}", j + 1)));
        }
        let with_regime = self.kind == DgpKind::SwitchingVol;
        if with_regime {
            names.push("regime".into());
        }
        let width = names.len();
        let mut values = Array2::<f64>::zeros((n, width));
        for t in 0..n {
            values[[t, 0]] = y[t];
            for j in 0..k {
                values[[t, 1 + j]] = x[[t, j]];
            }
            if with_regime {
                values[[t, width - 1]] = regime[t];
            }
        }
        let codes = vec![TransformCode::Level; width];
        let panel = TimeSeriesPanel::new(quarterly_dates(n), names, codes, values)?;
        Ok(DgpSample {
            panel,
            target: "y".into(),
            true_mean: mean,
            true_variance: var,
            groups,
        })
    }
}

impl DgpSample {
    /// Writes the panel CSV, the transform-code file and the true paths.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_panel(&self.panel, &dir.join("panel.csv"), &dir.join("codes.csv"))?;
        let mut w = csv::Writer::from_path(dir.join("truth.csv"))?;
        w.write_record(["date", "mean", "variance"])?;
        for (t, d) in self.panel.dates.iter().enumerate() {
            w.write_record([d.to_string(), self.true_mean[t].to_string(), self.true_variance[t].to_string()])?;
        }
        w.flush()?;
        if !self.groups.is_empty() {
            let text: String = self
                .groups
                .iter()
                .map(|(g, cols)| format!("{g}: {}\n", cols.join(", ")))
                .collect();
            std::fs::write(dir.join("groups.txt"), text)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_arch_slope_is_constant() {
        let d = SyntheticDgp {
            arch_a: vec![0.0],
            ..SyntheticDgp::new(DgpKind::LinearArch)
        };
        let s = d.simulate(200, 1).unwrap();
        assert!(s.true_variance.iter().all(|v| *v == 0.1));
    }

    #[test]
    fn great_moderation_halves_variance() {
        let s = SyntheticDgp::new(DgpKind::GreatModeration).simulate(4000, 2).unwrap();
        let e: Vec<f64> = (0..4000).map(|t| s.panel.values[[t, 0]] - s.true_mean[t]).collect();
        let v = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>() / a.len() as f64;
        let ratio = v(&e[2000..]) / v(&e[..2000]);
        assert!((0.4..=0.6).contains(&ratio), "{ratio}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let d = SyntheticDgp::new(DgpKind::SwitchingVol);
        let a = d.simulate(300, 9).unwrap();
        let b = d.simulate(300, 9).unwrap();
        assert_eq!(a.panel.values, b.panel.values);
        assert!(a.panel.column_index("regime").is_ok());
    }

    #[test]
    fn too_short_rejected() {
        assert!(SyntheticDgp::default().simulate(20, 0).is_err());
    }
}
