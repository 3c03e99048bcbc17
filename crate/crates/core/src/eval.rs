//! Accuracy, the rotated/reflected test protocols and equivariance measurements.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Labels, Split};
use crate::error::shape_err;
use crate::transform::{FlipAxis, ImageTransform};
use crate::{Error, Network, Result, Scalar, Tensor};

/// Samples per forward pass during evaluation.
pub const EVAL_BATCH: usize = 64;

/// Radius of the circular evaluation mask as a fraction of the smaller extent.
pub const MASK_RADIUS: f64 = 0.45;

/// Multi-class: argmax hits (ties go to the lowest index). Multi-label:
/// fraction of `σ(z) > 0.5` decisions that match the targets.
pub fn accuracy<T: Scalar>(logits: &Tensor<T>, labels: &Labels) -> Result<f64> {
    let (n, k) = match logits.dims() {
        &[n, k] => (n, k),
        d => return Err(shape_err!("logits must be [N, K], got {:?}", d)),
    };
    if labels.len() != n || labels.num_outputs() != k {
        return Err(shape_err!("labels do not match logits {:?}", logits.dims()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(match labels {
        Labels::Classes { values, .. } => {
            let hits = logits
                .data()
                .chunks_exact(k)
                .zip(values)
                .filter(|(row, &label)| argmax(row) == label)
                .count();
            hits as f64 / n as f64
        }
        Labels::MultiLabel { values, .. } => {
            let hits = logits
                .data()
                .iter()
                .zip(values)
                .filter(|(&z, &t)| (z > T::zero()) == (t == 1))
                .count();
            hits as f64 / (n * k) as f64
        }
    })
}

pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Evaluation-mode accuracy on a split, optionally after transforming every input.
pub fn evaluate<T: Scalar>(net: &Network<T>, split: &Split, transform: Option<&ImageTransform>) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let idx: Vec<usize> = (0..split.len()).collect();
    let mut hits = 0.0;
    for chunk in idx.chunks(EVAL_BATCH) {
        let mut x: Tensor<T> = split.input(chunk)?;
        if let Some(t) = transform {
            x = t.apply(&x)?;
        }
        let logits = net.predict(&x)?;
        hits += accuracy(&logits, &split.labels.select(chunk))? * chunk.len() as f64;
    }
    Ok(hits / split.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Orig,
    Rotated,
    Reflected,
}

impl core::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orig" | "original" => Ok(Protocol::Orig),
            "rotated" | "rot" => Ok(Protocol::Rotated),
            "reflected" | "ref" => Ok(Protocol::Reflected),
            other => Err(Error::UnsupportedProtocol(other.into())),
        }
    }
}

/// Test-set copies evaluated by a protocol.
pub fn protocol_transforms(protocol: Protocol, dims: usize) -> Result<Vec<ImageTransform>> {
    Ok(match (protocol, dims) {
        (Protocol::Orig, _) => alloc::vec![ImageTransform::Identity],
        (Protocol::Rotated, 2) => (0..36)
            .map(|i| ImageTransform::Rotate { angle: 10.0 * i as f64 })
            .collect(),
        (Protocol::Rotated, 3) => core::iter::once(ImageTransform::Identity)
            .chain((0..3).flat_map(|axis| {
                (1..12).map(move |i| ImageTransform::RotateAxis {
                    axis,
                    angle: 30.0 * i as f64,
                })
            }))
            .collect(),
        (Protocol::Reflected, 2) => alloc::vec![
            ImageTransform::Flip { axis: FlipAxis::Horizontal },
            ImageTransform::Flip { axis: FlipAxis::Vertical },
        ],
        (Protocol::Reflected, _) => {
            return Err(Error::UnsupportedProtocol("reflected protocol is defined for 2D only".into()))
        }
        _ => return Err(Error::Config(alloc::format!("unsupported dimensionality {dims}"))),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: Protocol,
    pub transforms: Vec<ImageTransform>,
    pub labels: Vec<String>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub original: f64,
}

impl ProtocolResult {
    pub fn new(protocol: Protocol, transforms: Vec<ImageTransform>, accuracies: Vec<f64>, original: f64) -> Self {
        let mean = accuracies.iter().sum::<f64>() / accuracies.len().max(1) as f64;
        ProtocolResult {
            protocol,
            labels: transforms.iter().map(|t| t.describe()).collect(),
            transforms,
            accuracies,
            mean,
            original,
        }
    }
}

/// Runs a protocol sequentially in transform order.
pub fn run_protocol<T: Scalar>(net: &Network<T>, split: &Split, protocol: Protocol) -> Result<ProtocolResult> {
    let transforms = protocol_transforms(protocol, split.dims)?;
    let original = evaluate(net, split, None)?;
    let accuracies = transforms
        .iter()
        .map(|t| evaluate(net, split, Some(t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolResult::new(protocol, transforms, accuracies, original))
}

pub fn rotated_protocol<T: Scalar>(net: &Network<T>, split: &Split) -> Result<ProtocolResult> {
    run_protocol(net, split, Protocol::Rotated)
}

pub fn reflected_protocol<T: Scalar>(net: &Network<T>, split: &Split) -> Result<ProtocolResult> {
    run_protocol(net, split, Protocol::Reflected)
}

/// Centered circular (spherical in 3D) mask over the trailing `extents`.
pub fn circular_mask(extents: &[usize]) -> Vec<bool> {
    let r = MASK_RADIUS * *extents.iter().min().unwrap_or(&0) as f64;
    let n: usize = extents.iter().product();
    (0..n)
        .map(|mut p| {
            let mut d2 = 0.0;
            for &e in extents.iter().rev() {
                let c = (e as f64 - 1.0) / 2.0;
                let u = (p % e) as f64 - c;
                d2 += u * u;
                p /= e;
            }
            d2 <= r * r
        })
        .collect()
}

fn masked_stats<T: Scalar>(f: &Tensor<T>, g: &Tensor<T>, spatial: usize) -> Result<(f64, f64)> {
    f.expect_same_shape(g)?;
    let ext = &f.dims()[f.rank() - spatial..];
    let mask = circular_mask(ext);
    let (mut diff, mut mag) = (0.0, 0.0);
    for (a, b) in f.data().chunks_exact(mask.len()).zip(g.data().chunks_exact(mask.len())) {
        for ((&u, &v), &m) in a.iter().zip(b).zip(&mask) {
            if m {
                diff += (u.to_f64() - v.to_f64()).abs();
                mag += u.to_f64().abs();
            }
        }
    }
    Ok((diff, mag))
}

/// `mean|f − T⁻¹·f(T·x)| / mean|f|` over the circular mask, where `f` is the
/// raw output of the `layer`-th spatial convolution.
pub fn equivariance_error<T: Scalar>(
    net: &Network<T>,
    x: &Tensor<T>,
    transform: &ImageTransform,
    layer: usize,
) -> Result<f64> {
    let f = net.conv_features(x, layer)?;
    let g = transform.inverse().apply(&net.conv_features(&transform.apply(x)?, layer)?)?;
    let (diff, mag) = masked_stats(&f, &g, net.config().dims)?;
    Ok(if mag > 0.0 { diff / mag } else { diff })
}

/// One panel: the channel-averaged first-layer response to a
/// rotated input, rotated back and masked.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePanel {
    pub angle: f64,
    pub values: Tensor<f64>,
}

/// Panels for a single 2D input `[1, C, H, W]` at each angle (degrees).
pub fn feature_panels<T: Scalar>(net: &Network<T>, x: &Tensor<T>, angles: &[f64]) -> Result<Vec<FeaturePanel>> {
    if net.config().dims != 2 || x.rank() != 4 || x.dims()[0] != 1 {
        return Err(shape_err!("feature panels need a single 2D input, got {:?}", x.dims()));
    }
    let mut out = Vec::with_capacity(angles.len());
    for &angle in angles {
        let t = ImageTransform::Rotate { angle };
        let f = net.conv_features(&t.apply(x)?, 0)?;
        let (c, h, w) = (f.dims()[1], f.dims()[2], f.dims()[3]);
        let mut mean = alloc::vec![0.0; h * w];
        for plane in f.data().chunks_exact(h * w) {
            for (m, &v) in mean.iter_mut().zip(plane) {
                *m += v.to_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= c as f64);
        let back = t.inverse().apply(&Tensor::from_vec(&[h, w], mean)?)?;
        let mask = circular_mask(&[h, w]);
        let values = Tensor::from_vec(
            &[h, w],
            back.data().iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect(),
        )?;
        out.push(FeaturePanel { angle, values });
    }
    Ok(out)
}

/// Mean over panel pairs of the masked mean absolute difference.
pub fn panel_consistency(panels: &[FeaturePanel]) -> Result<f64> {
    let Some(first) = panels.first() else {
        return Ok(0.0);
    };
    let mask = circular_mask(first.values.dims());
    let count = mask.iter().filter(|&&m| m).count().max(1) as f64;
    let (mut total, mut pairs) = (0.0, 0usize);
    for i in 0..panels.len() {
        for j in i + 1..panels.len() {
            panels[i].values.expect_same_shape(&panels[j].values)?;
            let d: f64 = panels[i]
                .values
                .data()
                .iter()
                .zip(panels[j].values.data())
                .zip(&mask)
                .filter(|(_, &m)| m)
                .map(|((a, b), _)| (a - b).abs())
                .sum();
            total += d / count;
            pairs += 1;
        }
    }
    Ok(if pairs == 0 { 0.0 } else { total / pairs as f64 })
}
