//! End-to-end runs on the toy retrieval task: the reference network, training
//! settings, and one pruning "arm" (criterion + method) evaluated against the
//! unpruned model.

use serde::{Deserialize, Serialize};

use crate::baselines::Criterion;
use crate::data::ToyDataset;
use crate::error::{invalid, Result};
use crate::metrics::{embedding_drift, mean_average_precision, rank_at, reduction, ArchSpec};
use crate::scalar::Scalar;
use crate::scheduler::{
    default_gamma, fine_tune, oneshot_prune_finetune, progressive_prune, DecaySchedule, FineTune,
};
use crate::tensor::{Layer, LossKind, LossSpec, ToyModel};

/// Three 3x3 conv blocks, global max pooling and a linear embedding head.
pub fn reference_layers(in_channels: usize, embedding_dim: usize) -> Vec<Layer> {
    vec![
        Layer::Conv2d {
            c_out: 16,
            c_in: in_channels,
            k: 3,
        },
        Layer::Relu,
        Layer::MaxPool2,
        Layer::Conv2d {
            c_out: 32,
            c_in: 16,
            k: 3,
        },
        Layer::Relu,
        Layer::MaxPool2,
        Layer::Conv2d {
            c_out: 32,
            c_in: 32,
            k: 3,
        },
        Layer::Relu,
        Layer::GlobalMaxPool,
        Layer::Linear {
            c_in: 32,
            c_out: embedding_dim,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub margin: f64,
    pub loss: LossKind,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.02,
            momentum: 0.9,
            margin: 0.5,
            loss: LossKind::Triplet,
            batch_size: 16,
        }
    }
}

impl TrainConfig {
    pub fn fine_tune<T: Scalar>(&self) -> Result<FineTune<T>> {
        Ok(FineTune {
            lr: T::lit(self.lr),
            momentum: T::lit(self.momentum),
            loss: LossSpec::new(self.loss, T::lit(self.margin))?,
        })
    }
}

/// Seeded reference network trained for `epochs` epochs.
pub fn pretrain<T: Scalar>(
    ds: &ToyDataset<T>,
    train: &TrainConfig,
    epochs: usize,
    seed: u64,
) -> Result<ToyModel<T>> {
    let mut model = ToyModel::new(reference_layers(ds.config.channels, 16), seed)?;
    let sampler = ds.sampler(train.loss, train.batch_size, seed)?;
    fine_tune(&mut model, &sampler, &train.fine_tune()?, epochs)?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Decay / fine-tune loop; `None` picks the default decay for the rate.
    Progressive { gamma: Option<f64> },
    /// Hard prune once, then fine-tune for the same number of epochs.
    OneShot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub criterion: Criterion,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub arm: Arm,
    pub rate: f64,
    pub map: f64,
    pub rank1: f64,
    pub rank5: f64,
    pub rank10: f64,
    pub drift: f64,
    pub flops_reduction: f64,
    pub params_reduction: f64,
}

/// Prunes every prunable layer of `base` at `rate` with `arm`, using `epochs`
/// epochs of training, and scores the result against `base`.
pub fn run_arm<T: Scalar>(
    base: &ToyModel<T>,
    ds: &ToyDataset<T>,
    arm: &Arm,
    rate: f64,
    epochs: usize,
    train: &TrainConfig,
    seed: u64,
) -> Result<ArmResult> {
    if epochs == 0 {
        return Err(invalid("epoch budget must be >= 1"));
    }
    let arch = ArchSpec::from_model(base, ds.config.height, ds.config.width)?;
    let sampler = ds.sampler(train.loss, train.batch_size, seed)?;
    let opt = train.fine_tune()?;
    let slim = match arm.method {
        Method::Progressive { gamma } => {
            let gamma = gamma.unwrap_or_else(|| default_gamma(rate));
            let schedule = DecaySchedule::uniform(base, rate, epochs).with_gamma(T::lit(gamma));
            progressive_prune(base, &schedule, &arm.criterion, &sampler, &opt, &arch)
                .map_err(|e| e.source)?
                .0
        }
        Method::OneShot => {
            let rates: Vec<(usize, f64)> = base
                .prunable_layers()
                .into_iter()
                .map(|l| (l, rate))
                .collect();
            oneshot_prune_finetune(base, &rates, &arm.criterion, &sampler, &opt, epochs, &arch)?.0
        }
    };
    evaluate_against(base, &slim, ds, *arm, rate)
}

pub fn evaluate_against<T: Scalar>(
    base: &ToyModel<T>,
    slim: &ToyModel<T>,
    ds: &ToyDataset<T>,
    arm: Arm,
    rate: f64,
) -> Result<ArmResult> {
    let eval = ds.retrieval.evaluate(slim)?;
    let (h, w) = (ds.config.height, ds.config.width);
    let red = reduction(
        &ArchSpec::from_model(base, h, w)?,
        &ArchSpec::from_model(slim, h, w)?,
    );
    Ok(ArmResult {
        arm,
        rate,
        map: mean_average_precision(&eval)?,
        rank1: rank_at(&eval, 1)?,
        rank5: rank_at(&eval, 5)?,
        rank10: rank_at(&eval, 10)?,
        drift: embedding_drift(base, slim, &ds.probes())?,
        flops_reduction: red.flops_pct,
        params_reduction: red.params_pct,
    })
}
