//! Benchmark forecasters and synthetic data generators.

mod ar;
mod dgp;
mod garch;
mod nn_garch;

pub use ar::{fit_ar2, fit_ar2_direct, ArModel};
pub use dgp::{DgpKind, DgpSample, SyntheticDgp, NPC_GROUP_NAMES};
pub use garch::{fit_garch11, simulate_garch11, GarchModel, GARCH_STARTS};
pub use nn_garch::{fit_ar_garch, fit_nn_garch, ArGarch, NnGarch};
