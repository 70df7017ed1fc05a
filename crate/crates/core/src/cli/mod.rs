//! Configuration-driven experiments and the command-line front end.

mod commands;
mod config;
mod experiment;

pub use commands::{run_cli, Cli, Command};
pub use config::{Cadence, DataConfig, EvalConfig, ExperimentConfig, ModelKind, RunConfig};
pub use experiment::{
    features, fit_model, holdout_origins, load_data, run_experiment, run_experiment_on, window_upto,
    ExperimentOutput, FitContext, FittedModel, ModelBundle, MODEL_BUNDLE_KIND,
};
