//! Experiment configuration files (TOML).

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::{Path, PathBuf};

use crate::data::{DesignSpec, ImputeConfig};
use crate::error::{HnnError, Result};
use crate::model::HnnConfig;
use crate::npc::NpcSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ModelKind {
    Hnn,
    Npc,
    Ar2,
    ArGarch,
    NnGarch,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Hnn => "hnn",
            ModelKind::Npc => "npc",
            ModelKind::Ar2 => "ar2",
            ModelKind::ArGarch => "arGarch",
            ModelKind::NnGarch => "nnGarch",
        }
    }
}

/// How often the model is re-estimated along the holdout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    Every(usize),
    /// A single fit at the first forecast origin.
    Never,
}

impl Serialize for Cadence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cadence::Every(n) => s.serialize_u64(*n as u64),
            Cadence::Never => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Cadence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) if n >= 1 => Ok(Cadence::Every(n as usize)),
            Raw::Int(n) => Err(serde::de::Error::custom(format!("cadence must be at least 1, got {n}"))),
            Raw::Text(s) if matches!(s.as_str(), "inf" | "never" | "once") => Ok(Cadence::Never),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("unknown cadence `{s}`"))),
        }
    }
}

impl Cadence {
    pub fn is_refit(self, index: usize) -> bool {
        match self {
            Cadence::Every(n) => index % n == 0,
            Cadence::Never => index == 0,
        }
    }
}

fn default_horizon() -> usize {
    1
}
fn default_lags() -> usize {
    2
}
fn default_trends() -> usize {
    100
}
fn default_cadence() -> Cadence {
    Cadence::Every(8)
}
fn default_output() -> PathBuf {
    PathBuf::from("run")
}
fn default_true() -> bool {
    true
}
fn default_model() -> ModelKind {
    ModelKind::Hnn
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub panel: PathBuf,
    pub codes: PathBuf,
    pub target: String,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_lags")]
    pub n_lags: usize,
    #[serde(default = "default_trends")]
    pub n_trends: usize,
    #[serde(default)]
    pub exclude: Vec<String>,
    /// Group file for the restricted network.
    #[serde(default)]
    pub groups: Option<PathBuf>,
    #[serde(default)]
    pub impute: ImputeConfig,
}

impl DataConfig {
    pub fn design_spec(&self) -> DesignSpec {
        DesignSpec {
            target: self.target.clone(),
            horizon: self.horizon,
            n_lags: self.n_lags,
            n_trends: self.n_trends,
            exclude: self.exclude.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelKind,
    /// First target date scored out of sample.
    pub holdout_start: NaiveDate,
    #[serde(default)]
    pub holdout_end: Option<NaiveDate>,
    #[serde(default = "default_cadence")]
    pub cadence: Cadence,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Also run the AR(2) benchmark for RMSE and CRPS ratios.
    #[serde(default = "default_true")]
    pub benchmark: bool,
    #[serde(default = "default_true")]
    pub write_bundles: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub mc_draws: usize,
    pub coverage_level: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mc_draws: crate::eval::DEFAULT_MC_DRAWS,
            coverage_level: 0.68,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub experiment: RunConfig,
    #[serde(default)]
    pub hnn: HnnConfig,
    #[serde(default)]
    pub npc: NpcSpec,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HnnError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        rebase(base, &mut cfg.data.panel);
        rebase(base, &mut cfg.data.codes);
        if let Some(g) = cfg.data.groups.as_mut() {
            rebase(base, g);
        }
        rebase(base, &mut cfg.experiment.output_dir);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HnnError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.horizon == 0 {
            return Err(HnnError::Config("horizon must be at least 1".into()));
        }
        if let Some(end) = self.experiment.holdout_end {
            if end < self.experiment.holdout_start {
                return Err(HnnError::Config("holdout_end precedes holdout_start".into()));
            }
        }
        if self.experiment.model == ModelKind::Npc && self.data.groups.is_none() {
            return Err(HnnError::Config("model npc needs data.groups".into()));
        }
        self.hnn.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[data]
panel = "p.csv"
codes = "c.csv"
target = "GDPC1"

[experiment]
holdout_start = "2007-01-01"
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.model, ModelKind::Hnn);
        assert_eq!(cfg.experiment.cadence, Cadence::Every(8));
        assert_eq!(cfg.data.n_lags, 2);
        assert_eq!(cfg.data.n_trends, 100);
        assert!(cfg.experiment.benchmark);
    }

    #[test]
    fn cadence_accepts_integers_and_inf() {
        let parse = |c: &str| ExperimentConfig::from_toml(&format!("{MINIMAL}cadence = {c}\n")).map(|c| c.experiment.cadence);
        assert_eq!(parse("1").unwrap(), Cadence::Every(1));
        assert_eq!(parse("\"inf\"").unwrap(), Cadence::Never);
        assert!(parse("0").is_err());
        assert!(parse("\"weekly\"").is_err());
        assert!(Cadence::Never.is_refit(0) && !Cadence::Never.is_refit(5));
        assert!(Cadence::Every(4).is_refit(8) && !Cadence::Every(4).is_refit(6));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let npc = MINIMAL.replace("[experiment]", "[experiment]\nmodel = \"npc\"");
        assert!(matches!(ExperimentConfig::from_toml(&npc), Err(HnnError::Config(_))));
        let typo = MINIMAL.replace("target", "tagret");
        assert!(ExperimentConfig::from_toml(&typo).is_err());
        let backwards = format!("{MINIMAL}holdout_end = \"2000-01-01\"\n");
        assert!(ExperimentConfig::from_toml(&backwards).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::from_toml(&format!("{MINIMAL}cadence = \"inf\"\n")).unwrap();
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
