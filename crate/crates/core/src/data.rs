//! In-memory labeled datasets and the synthetic generators.
//!
//! Images are stored as raw `u8` in their container layout
//! (`[N, H, W]`, `[N, H, W, C]` or `[N, D, H, W]`) and converted to
//! channel-first network input in `[0, 1]` on demand.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::shape_err;
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Labels {
    Classes { values: Vec<usize>, num_classes: usize },
    /// Row-major `[N, K]` matrix of 0/1 targets.
    MultiLabel { values: Vec<u8>, num_labels: usize },
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { values, .. } => values.len(),
            Labels::MultiLabel { values, num_labels } => values.len() / num_labels,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Width of the logit vector these labels are scored against.
    pub fn num_outputs(&self) -> usize {
        match self {
            Labels::Classes { num_classes, .. } => *num_classes,
            Labels::MultiLabel { num_labels, .. } => *num_labels,
        }
    }

    pub fn select(&self, idx: &[usize]) -> Labels {
        match self {
            Labels::Classes { values, num_classes } => Labels::Classes {
                values: idx.iter().map(|&i| values[i]).collect(),
                num_classes: *num_classes,
            },
            Labels::MultiLabel { values, num_labels } => Labels::MultiLabel {
                values: idx
                    .iter()
                    .flat_map(|&i| values[i * num_labels..(i + 1) * num_labels].iter().copied())
                    .collect(),
                num_labels: *num_labels,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Labels::Classes { values, num_classes } => match values.iter().find(|&&v| v >= *num_classes) {
                Some(&label) => Err(Error::LabelOutOfRange {
                    label,
                    classes: *num_classes,
                }),
                None => Ok(()),
            },
            Labels::MultiLabel { values, num_labels } => {
                if *num_labels == 0 || values.len() % num_labels != 0 {
                    return Err(shape_err!("{} label values do not form rows of {}", values.len(), num_labels));
                }
                match values.iter().find(|&&v| v > 1) {
                    Some(&v) => Err(Error::NonBinaryTarget(v as f64)),
                    None => Ok(()),
                }
            }
        }
    }
}

/// One split: raw pixels plus labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    /// Full container shape including the leading sample axis.
    pub shape: Vec<usize>,
    pub pixels: Vec<u8>,
    pub labels: Labels,
    /// Spatial dimensionality (2 or 3).
    pub dims: usize,
}

impl Split {
    pub fn new(dims: usize, shape: Vec<usize>, pixels: Vec<u8>, labels: Labels) -> Result<Self> {
        let ok_rank = match dims {
            2 => shape.len() == 3 || shape.len() == 4,
            3 => shape.len() == 4 || shape.len() == 5,
            _ => false,
        };
        if !ok_rank || shape.iter().product::<usize>() != pixels.len() || shape.contains(&0) {
            return Err(shape_err!(
                "{} pixels do not form a {}D image stack {:?}",
                pixels.len(),
                dims,
                shape
            ));
        }
        if labels.len() != shape[0] {
            return Err(shape_err!("{} labels for {} images", labels.len(), shape[0]));
        }
        labels.validate()?;
        Ok(Split {
            shape,
            pixels,
            labels,
            dims,
        })
    }

    pub fn len(&self) -> usize {
        self.shape[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        if self.shape.len() == self.dims + 2 {
            self.shape[self.dims + 1]
        } else {
            1
        }
    }

    pub fn spatial(&self) -> &[usize] {
        &self.shape[1..=self.dims]
    }

    /// Channel-first input `[n, C, spatial..]` scaled to `[0, 1]`.
    pub fn input<T: Scalar>(&self, idx: &[usize]) -> Result<Tensor<T>> {
        let c = self.channels();
        let s: usize = self.spatial().iter().product();
        let per = s * c;
        let scale = 1.0 / 255.0;
        let mut out = Vec::with_capacity(idx.len() * per);
        for &i in idx {
            if i >= self.len() {
                return Err(shape_err!("sample {} out of {}", i, self.len()));
            }
            let img = &self.pixels[i * per..(i + 1) * per];
            for ch in 0..c {
                out.extend((0..s).map(|p| T::from_f64(img[p * c + ch] as f64 * scale)));
            }
        }
        let mut dims = vec![idx.len(), c];
        dims.extend_from_slice(self.spatial());
        Tensor::from_vec(&dims, out)
    }

    /// Pixel mean and standard deviation after scaling to `[0, 1]`.
    pub fn pixel_stats(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let mean = self.pixels.iter().map(|&p| p as f64).sum::<f64>() / n / 255.0;
        let var = self
            .pixels
            .iter()
            .map(|&p| {
                let d = p as f64 / 255.0 - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        (mean, libm::sqrt(var))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub train: Split,
    pub val: Option<Split>,
    pub test: Split,
}

impl LabeledDataset {
    pub fn dims(&self) -> usize {
        self.train.dims
    }

    pub fn num_outputs(&self) -> usize {
        self.train.labels.num_outputs()
    }

    pub fn split(&self, name: &str) -> Option<&Split> {
        match name {
            "train" => Some(&self.train),
            "val" => self.val.as_ref(),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Brightness level encodes the class; linearly separable.
    Blobs,
    /// Ellipse, elliptical ring and a pair of disks, all laid out horizontally.
    OrientedShapes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    /// Training images per class.
    pub n: usize,
    #[serde(default)]
    pub val_n: usize,
    /// Test images per class; defaults to a quarter of `n`.
    #[serde(default)]
    pub test_n: Option<usize>,
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default = "default_classes")]
    pub num_classes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_size() -> usize {
    32
}

fn default_classes() -> usize {
    3
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, size: usize, num_classes: usize, seed: u64) -> Self {
        SyntheticSpec {
            kind,
            n,
            val_n: 0,
            test_n: None,
            size,
            num_classes,
            seed,
        }
    }
}

const SUPERSAMPLE: usize = 4;
const NOISE_STD: f64 = 0.05;
const BLUR_SIGMA: f64 = 1.2;
const RING_WIDTH: f64 = 3.0;
/// Horizontal to vertical axis ratio of the ellipse and the elliptical ring.
const ELONGATION: f64 = 2.0;

/// Builds train/val/test splits with exactly `n` images per class each.
pub fn make_synthetic_dataset(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    if spec.size == 0 || spec.size % 4 != 0 {
        return Err(Error::Config(alloc::format!("synthetic size {} is not a positive multiple of 4", spec.size)));
    }
    if spec.n < 10 {
        return Err(Error::Config("synthetic datasets need at least 10 images per class".into()));
    }
    let max_classes = match spec.kind {
        SyntheticKind::Blobs => usize::MAX,
        SyntheticKind::OrientedShapes => 3,
    };
    if spec.num_classes < 2 || spec.num_classes > max_classes {
        return Err(Error::Config(alloc::format!(
            "{:?} supports 2..={} classes, got {}",
            spec.kind,
            max_classes.min(255),
            spec.num_classes
        )));
    }
    let test_n = spec.test_n.unwrap_or(spec.n.div_ceil(4));
    let make = |stream: u64, n: usize| -> Result<Split> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        let s = spec.size;
        let mut pixels = Vec::with_capacity(n * spec.num_classes * s * s);
        let mut labels = Vec::with_capacity(n * spec.num_classes);
        for _ in 0..n {
            for class in 0..spec.num_classes {
                let img = match spec.kind {
                    SyntheticKind::Blobs => render_blob(class, spec.num_classes, s, &mut rng),
                    SyntheticKind::OrientedShapes => render_shape(class, s, &mut rng),
                };
                pixels.extend(img);
                labels.push(class);
            }
        }
        Split::new(
            2,
            vec![labels.len(), s, s],
            pixels,
            Labels::Classes {
                values: labels,
                num_classes: spec.num_classes,
            },
        )
    };
    let name = match spec.kind {
        SyntheticKind::Blobs => "blobs",
        SyntheticKind::OrientedShapes => "oriented-shapes",
    };
    Ok(LabeledDataset {
        name: name.into(),
        train: make(0, spec.n)?,
        val: if spec.val_n > 0 { Some(make(1, spec.val_n)?) } else { None },
        test: make(2, test_n.max(1))?,
    })
}

/// Adds Gaussian noise, optionally blurs, and quantizes to `u8`.
fn finish(img: Vec<f64>, size: usize, blur: bool, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let noise = Normal::new(0.0, NOISE_STD).expect("valid noise scale");
    let img: Vec<f64> = img.into_iter().map(|v| v + noise.sample(rng)).collect();
    let img = if blur { gaussian_blur(&img, size, BLUR_SIGMA) } else { img };
    img.into_iter()
        .map(|v| {
            let v = v * 255.0;
            libm::round(v).clamp(0.0, 255.0) as u8
        })
        .collect()
}

fn random_center(size: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let scale = size as f64 / 32.0;
    let angle = rng.random_range(0.0..core::f64::consts::TAU);
    let radius = 3.0 * scale * libm::sqrt(rng.random::<f64>());
    let mid = (size as f64 - 1.0) / 2.0;
    (mid + radius * libm::sin(angle), mid + radius * libm::cos(angle))
}

fn render_shape(class: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let scale = size as f64 / 32.0;
    let (cy, cx) = random_center(size, rng);
    let intensity = rng.random_range(0.6..1.0);
    let s = rng.random_range(5.0..9.0) * scale;
    let ring_w = RING_WIDTH * scale;
    let e2 = ELONGATION * ELONGATION;
    let inside = |dy: f64, dx: f64| -> bool {
        match class {
            0 => libm::sqrt(dx * dx + e2 * dy * dy) <= 0.8 * s,
            1 => {
                let d = libm::sqrt(dx * dx + e2 * dy * dy);
                d <= s && d >= s - ring_w
            }
            _ => {
                let (r, off) = (0.4 * s, 0.6 * s);
                let (l, rt) = (dx + off, dx - off);
                libm::sqrt(l * l + dy * dy) <= r || libm::sqrt(rt * rt + dy * dy) <= r
            }
        }
    };
    let sub = SUPERSAMPLE as f64;
    let mut img = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut hits = 0usize;
            for oy in 0..SUPERSAMPLE {
                for ox in 0..SUPERSAMPLE {
                    let dy = y as f64 + (oy as f64 + 0.5) / sub - 0.5 - cy;
                    let dx = x as f64 + (ox as f64 + 0.5) / sub - 0.5 - cx;
                    hits += inside(dy, dx) as usize;
                }
            }
            img[y * size + x] = hits as f64 / (sub * sub) * intensity;
        }
    }
    finish(img, size, true, rng)
}

fn render_blob(class: usize, classes: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let level = (class + 1) as f64 / (classes + 1) as f64;
    let (cy, cx) = random_center(size, rng);
    let sigma = size as f64 / 6.0;
    let mut img = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let (dy, dx) = (y as f64 - cy, x as f64 - cx);
            let d2 = dy * dy + dx * dx;
            img[y * size + x] = level * libm::exp(-d2 / (2.0 * sigma * sigma));
        }
    }
    finish(img, size, false, rng)
}

/// Separable Gaussian blur, kernel radius `⌊4σ + 0.5⌋`, mirrored borders.
pub(crate) fn gaussian_blur(img: &[f64], size: usize, sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma + 0.5) as i64;
    let mut w: Vec<f64> = (-r..=r).map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma))).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    let n = size as i64;
    let mirror = |i: i64| -> usize {
        let period = 2 * n;
        let m = i.rem_euclid(period);
        (if m < n { m } else { period - 1 - m }) as usize
    };
    let mut tmp = vec![0.0; img.len()];
    for y in 0..size {
        for x in 0..size {
            tmp[y * size + x] = (-r..=r)
                .map(|d| w[(d + r) as usize] * img[y * size + mirror(x as i64 + d)])
                .sum();
        }
    }
    let mut out = vec![0.0; img.len()];
    for y in 0..size {
        for x in 0..size {
            out[y * size + x] = (-r..=r)
                .map(|d| w[(d + r) as usize] * tmp[mirror(y as i64 + d) * size + x])
                .sum();
        }
    }
    out
}

/// Deterministic permutation of `0..n` for one training epoch.
pub fn epoch_permutation(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5348_5546_464c_4500);
    rng.set_stream(epoch as u64);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GridSymmetry;

    #[test]
    fn deterministic_and_balanced() {
        let spec = SyntheticSpec::new(SyntheticKind::OrientedShapes, 10, 32, 3, 7);
        let a = make_synthetic_dataset(&spec).unwrap();
        let b = make_synthetic_dataset(&spec).unwrap();
        assert_eq!(a, b);
        let Labels::Classes { values, .. } = &a.train.labels else { panic!() };
        for c in 0..3 {
            assert_eq!(values.iter().filter(|&&v| v == c).count(), 10);
        }
        assert_eq!(a.test.len(), 9);
        assert_ne!(a.train.pixels[..1024], a.test.pixels[..1024]);
    }

    #[test]
    fn invalid_specs() {
        assert!(make_synthetic_dataset(&SyntheticSpec::new(SyntheticKind::Blobs, 10, 30, 2, 0)).is_err());
        assert!(make_synthetic_dataset(&SyntheticSpec::new(SyntheticKind::Blobs, 9, 32, 2, 0)).is_err());
        assert!(make_synthetic_dataset(&SyntheticSpec::new(SyntheticKind::OrientedShapes, 10, 32, 4, 0)).is_err());
    }

    #[test]
    fn input_is_channel_first_unit_range() {
        let split = Split::new(
            2,
            vec![1, 2, 2, 2],
            vec![0, 255, 51, 0, 102, 0, 255, 255],
            Labels::Classes {
                values: vec![0],
                num_classes: 1,
            },
        )
        .unwrap();
        let x: Tensor<f64> = split.input(&[0]).unwrap();
        assert_eq!(x.dims(), &[1, 2, 2, 2]);
        assert_eq!(x.data(), &[0.0, 0.2, 0.4, 1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn blur_preserves_mass_and_symmetry() {
        let mut img = vec![0.0; 64];
        img[3 * 8 + 4] = 1.0;
        img[4 * 8 + 3] = 1.0;
        let out = gaussian_blur(&img, 8, 0.8);
        assert!((out.iter().sum::<f64>() - 2.0).abs() < 1e-3);
        let t = Tensor::from_vec(&[8, 8], out).unwrap();
        let tt = GridSymmetry::new(2, &[1, 0], &[false, false]).unwrap().transform(&t).unwrap();
        assert!(t.max_abs_diff(&tt).unwrap() < 1e-15);
    }

    #[test]
    fn permutation_is_seeded() {
        let p = epoch_permutation(50, 1, 0);
        assert_eq!(p, epoch_permutation(50, 1, 0));
        assert_ne!(p, epoch_permutation(50, 1, 1));
        let mut s = p.clone();
        s.sort();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
    }
}
