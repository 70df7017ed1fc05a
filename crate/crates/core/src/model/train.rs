//! Full-batch training of one network with early stopping.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::constraint::{constrain_backward, constrain_variance};
use crate::error::{HnnError, Result};
use crate::nn::{adam_step, gaussian_nll, squared_error, AdamConfig, AdamState, HemisphereNet, LossGrads, Mode};
use crate::rng::{derive_seed, Stream};

/// What a network is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Gaussian likelihood with the variance path renormalised to mean `nu`.
    Gaussian { nu: f64 },
    /// Plain squared error on the mean output.
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Per-observation training loss (train mode, before the update).
    pub train_loss: f64,
    /// Per-observation validation loss (eval mode, after the update).
    pub val_loss: f64,
    /// Mean of the constrained variance that entered the training loss.
    pub constrained_mean: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub retries: usize,
}

/// Network after early stopping, with the factor mapping its raw variance
/// output onto the constrained scale.
#[derive(Debug, Clone)]
pub struct TrainedNet<N> {
    pub net: N,
    pub var_scale: Option<f64>,
    pub log: TrainingLog,
}

struct LossEval {
    loss: f64,
    grads: LossGrads,
    constrained_mean: Option<f64>,
}

fn evaluate_loss(
    objective: Objective,
    y: ArrayView1<'_, f64>,
    mean: ArrayView1<'_, f64>,
    raw_var: Option<&Array1<f64>>,
) -> Result<LossEval> {
    let n = y.len() as f64;
    match objective {
        Objective::SquaredError => {
            let out = squared_error(y, mean)?;
            Ok(LossEval {
                loss: out.loss / n,
                grads: LossGrads {
                    d_mean: out.d_mean / n,
                    d_var: None,
                },
                constrained_mean: None,
            })
        }
        Objective::Gaussian { nu } => {
            let raw = raw_var.ok_or_else(|| {
                HnnError::State("likelihood training needs a variance hemisphere".into())
            })?;
            let constrained = constrain_variance(raw.view(), nu)?;
            let c_mean = constrained.sum() / n;
            debug_assert!(
                (c_mean - nu).abs() < 1e-10,
                "constrained variance mean {c_mean} drifted from nu {nu}"
            );
            let out = gaussian_nll(y, mean, constrained.view())?;
            let d_raw = constrain_backward(raw.view(), nu, out.d_var.view())?;
            Ok(LossEval {
                loss: out.loss / n,
                grads: LossGrads {
                    d_mean: out.d_mean / n,
                    d_var: Some(d_raw / n),
                },
                constrained_mean: Some(c_mean),
            })
        }
    }
}

fn non_finite(epoch: usize, what: &str) -> HnnError {
    HnnError::Numeric {
        layer: usize::MAX,
        detail: format!("non-finite {what} at epoch {epoch}"),
    }
}

/// Trains `net` (already initialised) on `train_rows`, early-stopping on
/// `val_rows`, and restores the best-validation parameters.
///
/// Validation variance is renormalised over the validation batch itself.
/// After training, `var_scale = ν / mean(raw variance over train rows)` in
/// eval mode so that single-row predictions can be put on the constrained
/// scale.
pub fn train_network<N: HemisphereNet>(
    mut net: N,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    train_rows: &[usize],
    val_rows: &[usize],
    objective: Objective,
    settings: &TrainSettings,
    dropout_seed: u64,
) -> Result<TrainedNet<N>> {
    if train_rows.is_empty() || val_rows.is_empty() {
        return Err(HnnError::Domain("training and validation rows must be non-empty".into()));
    }
    let x_train: Array2<f64> = x.select(Axis(0), train_rows);
    let y_train: Array1<f64> = y.select(Axis(0), train_rows);
    let x_val: Array2<f64> = x.select(Axis(0), val_rows);
    let y_val: Array1<f64> = y.select(Axis(0), val_rows);

    let mut adam = AdamState::new(net.layers(), settings.adam);
    let mut log = TrainingLog {
        best_val_loss: f64::INFINITY,
        ..Default::default()
    };
    let mut best = net.clone();
    let mut wait = 0usize;

    for epoch in 1..=settings.max_epochs {
        let seed = derive_seed(dropout_seed, Stream::Dropout, epoch as u64);
        let batch = net.forward(x_train.view(), Mode::Train, seed)?;
        let eval = evaluate_loss(objective, y_train.view(), batch.mean.view(), batch.raw_var.as_ref())?;
        if !eval.loss.is_finite() {
            return Err(non_finite(epoch, "training loss"));
        }
        let grads = net.backward(&batch, &eval.grads)?;
        drop(batch);
        adam_step(&mut net, &grads, &mut adam)?;

        let val_out = net.forward(x_val.view(), Mode::Eval, 0)?;
        let val = evaluate_loss(objective, y_val.view(), val_out.mean.view(), val_out.raw_var.as_ref())?;
        if !val.loss.is_finite() {
            return Err(non_finite(epoch, "validation loss"));
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: eval.loss,
            val_loss: val.loss,
            constrained_mean: eval.constrained_mean,
        });
        if val.loss < log.best_val_loss {
            log.best_val_loss = val.loss;
            log.best_epoch = epoch;
            best = net.clone();
            wait = 0;
        } else {
            wait += 1;
            if wait >= settings.patience {
                log.stopped_early = true;
                break;
            }
        }
    }

    let var_scale = match objective {
        Objective::Gaussian { nu } => {
            let out = best.forward(x_train.view(), Mode::Eval, 0)?;
            let raw = out.raw_var()?;
            let m = raw.sum() / raw.len() as f64;
            if !(m > 0.0 && m.is_finite()) {
                return Err(non_finite(log.best_epoch, "variance normaliser"));
            }
            Some(nu / m)
        }
        Objective::SquaredError => None,
    };
    Ok(TrainedNet {
        net: best,
        var_scale,
        log,
    })
}
