//! Classification losses returning the batch-mean loss and its logit gradient.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::error::shape_err;
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    CrossEntropy,
    Bce,
}

fn batch_dims<T: Scalar>(logits: &Tensor<T>) -> Result<(usize, usize)> {
    match logits.dims() {
        &[n, k] if n > 0 && k > 0 => Ok((n, k)),
        d => Err(shape_err!("logits must be [N, K], got {:?}", d)),
    }
}

/// Softmax cross-entropy against class indices.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let (n, k) = batch_dims(logits)?;
    if labels.len() != n {
        return Err(shape_err!("{} labels for a batch of {}", labels.len(), n));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, classes: k });
    }
    let nf = T::from_usize(n);
    let mut total = T::zero();
    let mut grad = Vec::with_capacity(n * k);
    for (row, &label) in logits.data().chunks_exact(k).zip(labels) {
        let m = row.iter().fold(T::neg_infinity(), |a, &v| a.max(v));
        let z: T = row.iter().fold(T::zero(), |a, &v| a + (v - m).libm_exp());
        let lse = m + z.libm_ln();
        total = total + (lse - row[label]);
        for (j, &v) in row.iter().enumerate() {
            let p = (v - lse).libm_exp();
            let t = if j == label { T::one() } else { T::zero() };
            grad.push((p - t) / nf);
        }
    }
    Ok((total / nf, Tensor::from_vec(&[n, k], grad)?))
}

/// Mean sigmoid binary cross-entropy against a `{0, 1}` target matrix.
pub fn bce<T: Scalar>(logits: &Tensor<T>, targets: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    let (n, k) = batch_dims(logits)?;
    targets.expect_dims(&[n, k])?;
    if let Some(&t) = targets.data().iter().find(|&&t| t != T::zero() && t != T::one()) {
        return Err(Error::NonBinaryTarget(t.to_f64()));
    }
    let count = T::from_usize(n * k);
    let mut total = T::zero();
    let mut grad = Vec::with_capacity(n * k);
    for (&z, &t) in logits.data().iter().zip(targets.data()) {
        // max(z, 0) − z·t + log(1 + e^{−|z|})
        total = total + (z.max(T::zero()) - z * t + (-z.abs()).libm_exp().libm_ln_1p());
        let sig = T::one() / (T::one() + (-z).libm_exp());
        grad.push((sig - t) / count);
    }
    Ok((total / count, Tensor::from_vec(&[n, k], grad)?))
}

/// Loss for a batch of labels; class indices are one-hot encoded for BCE.
pub fn loss_for<T: Scalar>(kind: LossKind, logits: &Tensor<T>, labels: &Labels) -> Result<(T, Tensor<T>)> {
    match (kind, labels) {
        (LossKind::CrossEntropy, Labels::Classes { values, .. }) => cross_entropy(logits, values),
        (LossKind::CrossEntropy, Labels::MultiLabel { .. }) => Err(Error::Config(
            "cross-entropy needs class-index labels, got a multi-label matrix".into(),
        )),
        (LossKind::Bce, Labels::MultiLabel { values, num_labels }) => {
            let data = values.iter().map(|&v| T::from_usize(v as usize)).collect();
            bce(logits, &Tensor::from_vec(&[values.len() / num_labels, *num_labels], data)?)
        }
        (LossKind::Bce, Labels::Classes { values, .. }) => {
            let (n, k) = batch_dims(logits)?;
            if values.len() != n {
                return Err(shape_err!("{} labels for a batch of {}", values.len(), n));
            }
            if let Some(&label) = values.iter().find(|&&v| v >= k) {
                return Err(Error::LabelOutOfRange { label, classes: k });
            }
            let mut t = Tensor::<T>::zeros(&[n, k])?;
            for (i, &c) in values.iter().enumerate() {
                t.data_mut()[i * k + c] = T::one();
            }
            bce(logits, &t)
        }
    }
}
