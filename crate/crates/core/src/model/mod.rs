//! The hemisphere estimator: volatility-emphasis constraint, blocked
//! out-of-bag ensembling and variance recalibration.

mod bundle;
mod config;
mod constraint;
mod ensemble;
mod recal;
mod train;

pub use bundle::{load_bundle, read_bundle, save_bundle, write_bundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use config::HnnConfig;
pub use constraint::{constrain_backward, constrain_variance};
pub use ensemble::{
    aggregate_oob, average_members, estimate_nu, estimate_nu_with, fit_ensemble, fit_hemisphere_ensemble,
    fit_mean_ensemble, fit_members, hnn_template, nu_from_residuals, plan_members, train_member, EnsembleMember,
    HnnEnsemble, MeanEnsemble, MemberPlan, OobPaths,
};
pub use recal::{recalibrate, RecalParams, RESIDUAL_FLOOR};
pub use train::{train_network, EpochRecord, Objective, TrainSettings, TrainedNet, TrainingLog};
