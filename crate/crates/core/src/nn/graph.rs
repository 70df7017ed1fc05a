use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer, LayerGrad};
use super::mlp::{backward_stack, forward_stack, Dropout};
use super::{check_input, BatchOutput, ForwardCache, HemisphereNet, LossGrads, Mode};
use crate::error::{HnnError, Result};
use crate::rng::rng_from_seed;

/// Two hemispheres on top of a shared core.
///
/// The mean head ends in a single linear unit, the variance head in a single
/// Softplus unit. An empty `var_head` gives the mean-only network used for
/// the volatility-emphasis guess and for the two-step benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub common: Vec<DenseLayer>,
    pub mean_head: Vec<DenseLayer>,
    pub var_head: Vec<DenseLayer>,
    pub dropout: f64,
    #[serde(skip)]
    version: u64,
}

fn stack(input: usize, hidden: &[usize], out: Option<Activation>) -> (Vec<DenseLayer>, usize) {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut width = input;
    for &h in hidden {
        layers.push(DenseLayer::zeros(width, h, Activation::Relu));
        width = h;
    }
    if let Some(act) = out {
        layers.push(DenseLayer::zeros(width, 1, act));
        width = 1;
    }
    (layers, width)
}

impl NetworkGraph {
    /// ReLU hidden layers of the given widths in the core and in each head.
    pub fn new(input_dim: usize, common: &[usize], head: &[usize], dropout: f64) -> Self {
        let (common_layers, width) = stack(input_dim, common, None);
        let (mean_head, _) = stack(width, head, Some(Activation::Linear));
        let (var_head, _) = stack(width, head, Some(Activation::Softplus));
        Self {
            common: common_layers,
            mean_head,
            var_head,
            dropout,
            version: 0,
        }
    }

    pub fn mean_only(input_dim: usize, common: &[usize], head: &[usize], dropout: f64) -> Self {
        let mut net = Self::new(input_dim, common, head, dropout);
        net.var_head.clear();
        net
    }

    pub fn from_layers(
        common: Vec<DenseLayer>,
        mean_head: Vec<DenseLayer>,
        var_head: Vec<DenseLayer>,
        dropout: f64,
    ) -> Result<Self> {
        let net = Self {
            common,
            mean_head,
            var_head,
            dropout,
            version: 0,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn input_width(&self) -> usize {
        self.common
            .first()
            .or(self.mean_head.first())
            .map(|l| l.input_dim())
            .unwrap_or(0)
    }

    fn shared_width(&self) -> usize {
        self.common
            .last()
            .map(|l| l.output_dim())
            .unwrap_or_else(|| self.input_width())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(HnnError::Config(format!("dropout {} not in [0,1)", self.dropout)));
        }
        for l in self.layers() {
            l.validate()?;
        }
        let chain = |layers: &[DenseLayer], mut width: usize, name: &str| -> Result<()> {
            for l in layers {
                if l.input_dim() != width {
                    return Err(HnnError::Shape(format!(
                        "{name}: layer input {} does not follow width {width}",
                        l.input_dim()
                    )));
                }
                width = l.output_dim();
            }
            Ok(())
        };
        chain(&self.common, self.input_width(), "common core")?;
        let shared = self.shared_width();
        chain(&self.mean_head, shared, "mean head")?;
        chain(&self.var_head, shared, "variance head")?;
        match self.mean_head.last() {
            Some(l) if l.activation == Activation::Linear && l.output_dim() == 1 => {}
            _ => {
                return Err(HnnError::Shape(
                    "mean head must end in one linear unit".into(),
                ))
            }
        }
        if let Some(l) = self.var_head.last() {
            if l.activation != Activation::Softplus || l.output_dim() != 1 {
                return Err(HnnError::Shape(
                    "variance head must end in one Softplus unit".into(),
                ));
            }
        }
        Ok(())
    }
}

impl HemisphereNet for NetworkGraph {
    fn input_dim(&self) -> usize {
        self.input_width()
    }

    fn has_variance(&self) -> bool {
        !self.var_head.is_empty()
    }

    fn dropout_rate(&self) -> f64 {
        self.dropout
    }

    fn forward(&self, x: ArrayView2<'_, f64>, mode: Mode, seed: u64) -> Result<BatchOutput> {
        check_input(x, self.input_width())?;
        let train = mode == Mode::Train;
        let mut rng = rng_from_seed(seed);
        let rate = if train { self.dropout } else { 0.0 };
        let mut stacks = Vec::with_capacity(3);

        let (shared, c) = forward_stack(
            &self.common,
            x,
            Some(Dropout { rate, rng: &mut rng }),
            true,
            0,
            train,
        )?;
        stacks.extend(c);
        let off = self.common.len();
        let (mean, c) = forward_stack(
            &self.mean_head,
            shared.view(),
            Some(Dropout { rate, rng: &mut rng }),
            false,
            off,
            train,
        )?;
        stacks.extend(c);
        let raw_var = if self.var_head.is_empty() {
            None
        } else {
            let (v, c) = forward_stack(
                &self.var_head,
                shared.view(),
                Some(Dropout { rate, rng: &mut rng }),
                false,
                off + self.mean_head.len(),
                train,
            )?;
            stacks.extend(c);
            Some(v.index_axis_move(Axis(1), 0))
        };
        Ok(BatchOutput {
            mean: mean.index_axis_move(Axis(1), 0),
            raw_var,
            components: Vec::new(),
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
        let have_common = !self.common.is_empty();
        let col = |v: &ndarray::Array1<f64>| v.clone().insert_axis(Axis(1));

        let mut idx = usize::from(have_common);
        let (mean_grads, d_shared_m) =
            backward_stack(&self.mean_head, &cache.stacks[idx], col(&grads.d_mean), have_common)?;
        idx += 1;

        let mut d_shared: Option<Array2<f64>> = d_shared_m;
        let mut var_grads = Vec::new();
        if self.has_variance() {
            let d_var = match &grads.d_var {
                Some(d) if d.len() == n => d,
                Some(_) => {
                    return Err(HnnError::Shape(
                        "variance gradient length differs from batch".into(),
                    ))
                }
                None => {
                    return Err(HnnError::State(
                        "variance gradient missing for a two-hemisphere network".into(),
                    ))
                }
            };
            let (g, d) = backward_stack(&self.var_head, &cache.stacks[idx], col(d_var), have_common)?;
            var_grads = g;
            if let (Some(acc), Some(d)) = (d_shared.as_mut(), d) {
                *acc += &d;
            }
        }

        let mut out = Vec::with_capacity(self.common.len() + mean_grads.len() + var_grads.len());
        if have_common {
            let (g, _) = backward_stack(
                &self.common,
                &cache.stacks[0],
                d_shared.expect("shared gradient computed"),
                false,
            )?;
            out.extend(g);
        }
        out.extend(mean_grads);
        out.extend(var_grads);
        Ok(out)
    }

    fn layers(&self) -> Vec<&DenseLayer> {
        self.common
            .iter()
            .chain(self.mean_head.iter())
            .chain(self.var_head.iter())
            .collect()
    }

    fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        self.common
            .iter_mut()
            .chain(self.mean_head.iter_mut())
            .chain(self.var_head.iter_mut())
            .collect()
    }

    fn version(&self) -> u64 {
        self.version
    }

    fn bump_version(&mut self) {
        self.version = self.version.wrapping_add(1);
    }
}
