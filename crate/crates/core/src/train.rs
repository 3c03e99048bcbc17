//! Deterministic mini-batch training loop.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{epoch_permutation, LabeledDataset};
use crate::eval::{accuracy, evaluate};
use crate::layers::Mode;
use crate::loss::loss_for;
use crate::optim::{cosine_lr, sgd_step, DEFAULT_MOMENTUM};
use crate::{Error, Network, Result, Scalar, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub lr0: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Defaults to 128 for 2D data and 4 for 3D data.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_lr() -> f64 {
    0.02
}

fn default_momentum() -> f64 {
    DEFAULT_MOMENTUM
}

fn default_epochs() -> usize {
    100
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: default_lr(),
            momentum: default_momentum(),
            epochs: default_epochs(),
            batch_size: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn batch_size_for(&self, dims: usize) -> usize {
        self.batch_size.unwrap_or(if dims == 3 { 4 } else { 128 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) || !self.lr0.is_finite() {
            return Err(Error::Config("lr0 must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == Some(0) {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
}

/// Trains `net` in place; `on_epoch` sees each record and the network after
/// that epoch. Validation uses the val split, or the test split when the
/// dataset has none. Input normalization is set from the training split.
pub fn train_run<T: Scalar>(
    net: &mut Network<T>,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord, &Network<T>) -> Result<()>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let train = &dataset.train;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.dims != net.config().dims || train.channels() != net.config().in_channels {
        return Err(Error::Config(alloc::format!(
            "dataset is {}D with {} channels, network expects {}D with {}",
            train.dims,
            train.channels(),
            net.config().dims,
            net.config().in_channels
        )));
    }
    if train.labels.num_outputs() != net.config().num_classes {
        return Err(Error::Config(alloc::format!(
            "dataset has {} outputs, network has {}",
            train.labels.num_outputs(),
            net.config().num_classes
        )));
    }
    let (mean, std) = train.pixel_stats();
    net.set_input_norm(mean, if std > 0.0 { std } else { 1.0 })?;
    let val = dataset.val.as_ref().unwrap_or(&dataset.test);
    let batch = cfg.batch_size_for(train.dims).min(train.len());
    let per_epoch = train.len().div_ceil(batch);
    let total = cfg.epochs * per_epoch;
    let kind = net.config().loss_kind;
    let mut velocity: Vec<Tensor<T>> = net
        .params()
        .iter()
        .map(|(_, p)| Tensor::zeros(p.dims()))
        .collect::<Result<_>>()?;
    let mut report = TrainReport::default();
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        let order = epoch_permutation(train.len(), cfg.seed, epoch);
        let (mut loss_sum, mut acc_sum) = (0.0, 0.0);
        for idx in order.chunks(batch) {
            let x: Tensor<T> = train.input(idx)?;
            let labels = train.labels.select(idx);
            let (logits, cache) = net.forward(&x, Mode::Train)?;
            let (loss, dlogits) = loss_for(kind, &logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            loss_sum += loss.to_f64() * idx.len() as f64;
            acc_sum += accuracy(&logits, &labels)? * idx.len() as f64;
            let grads = net.backward(&dlogits, cache)?;
            let lr = cosine_lr(step, total, cfg.lr0)?;
            for (((_, p), (_, g)), v) in net.params_mut().into_iter().zip(&grads.params).zip(&mut velocity) {
                sgd_step(p, g, v, lr, cfg.momentum)?;
            }
            step += 1;
        }
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / train.len() as f64,
            train_acc: acc_sum / train.len() as f64,
            val_acc: evaluate(net, val, None)?,
            lr: cosine_lr(step, total, cfg.lr0)?,
        };
        on_epoch(&record, net)?;
        report.records.push(record);
    }
    Ok(report)
}
