pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod model;
pub mod nn;
pub mod npc;
pub mod rng;

pub use error::{HnnError, Result};
