//! Band-parameterized symmetric kernels.
//!
//! A `k^d` kernel is split into `b = ⌊k/2⌋ + 2` equal-width distance annuli
//! around its center. Cells in the same annulus share one trainable weight,
//! and cells farther than `⌊k/2⌋` from the center (outside the inscribed
//! circle or sphere) are held at zero. The fixed binary index matrix maps
//! band weights to kernel cells, so expansion is a `1×b · b×k^d` product.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::shape_err;
use crate::tensor::matmul;
use crate::{Error, Result, Scalar, Tensor};

/// Margin in the band-binning divisor keeping the farthest cell in band `b − 1`.
pub const BAND_EPSILON: f64 = 1e-9;

pub fn band_count(k: usize) -> Result<usize> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidKernelSize(k));
    }
    Ok(k / 2 + 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BandSpec {
    k: usize,
    dims: usize,
    bands: usize,
}

impl BandSpec {
    pub fn new(k: usize, dims: usize) -> Result<Self> {
        let bands = band_count(k)?;
        if dims != 2 && dims != 3 {
            return Err(Error::Config(alloc::format!(
                "spatial dimensionality must be 2 or 3, got {dims}"
            )));
        }
        Ok(BandSpec { k, dims, bands })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn radius(&self) -> usize {
        self.k / 2
    }

    /// Number of kernel cells, `k^d`.
    pub fn cells(&self) -> usize {
        self.k.pow(self.dims as u32)
    }

    pub fn extents(&self) -> Vec<usize> {
        vec![self.k; self.dims]
    }

    /// Integer offset of flat cell `p` from the kernel center.
    pub fn offset(&self, p: usize) -> [i64; 3] {
        let r = self.radius() as i64;
        let mut off = [0i64; 3];
        let mut rem = p;
        for i in (0..self.dims).rev() {
            off[i] = (rem % self.k) as i64 - r;
            rem /= self.k;
        }
        off
    }
}

/// Euclidean distance of every kernel cell from the center, in cell units.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    spec: BandSpec,
    values: Tensor<f64>,
}

impl DistanceMatrix {
    pub fn spec(&self) -> BandSpec {
        self.spec
    }

    pub fn values(&self) -> &Tensor<f64> {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.data().iter().copied().fold(0.0, f64::max)
    }
}

pub fn distance_matrix(spec: BandSpec) -> DistanceMatrix {
    let data = (0..spec.cells())
        .map(|p| {
            let o = spec.offset(p);
            libm::sqrt((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64)
        })
        .collect();
    DistanceMatrix {
        spec,
        values: Tensor::from_vec(&spec.extents(), data).expect("k^d cells"),
    }
}

/// The fixed binary map from band weights to kernel cells.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexMatrix {
    spec: BandSpec,
    band_of: Vec<Option<usize>>,
}

pub fn build_index_matrix(spec: BandSpec) -> IndexMatrix {
    let dist = distance_matrix(spec);
    let d_max = dist.max();
    let b = spec.bands();
    let cutoff = spec.radius() as f64;
    let band_of = dist
        .values()
        .data()
        .iter()
        .map(|&d| {
            if d > cutoff {
                None
            } else {
                let j = libm::floor(d * b as f64 / (d_max + BAND_EPSILON)) as usize;
                Some(j.min(b - 1))
            }
        })
        .collect();
    IndexMatrix { spec, band_of }
}

impl IndexMatrix {
    pub fn new(spec: BandSpec) -> Self {
        build_index_matrix(spec)
    }

    pub fn spec(&self) -> BandSpec {
        self.spec
    }

    /// Band of each flattened cell; `None` for zeroed corner cells.
    pub fn band_of(&self) -> &[Option<usize>] {
        &self.band_of
    }

    /// Flattened binary matrix `b × k^d`.
    pub fn matrix<T: Scalar>(&self) -> Tensor<T> {
        let cells = self.spec.cells();
        let mut m = vec![T::zero(); self.spec.bands() * cells];
        for (p, band) in self.band_of.iter().enumerate() {
            if let Some(j) = band {
                m[j * cells + p] = T::one();
            }
        }
        Tensor::from_vec(&[self.spec.bands(), cells], m).expect("b × k^d")
    }

    /// Number of nonzero columns (cells that carry a band weight).
    pub fn active_cells(&self) -> usize {
        self.band_of.iter().filter(|b| b.is_some()).count()
    }

    /// Cells per band; some bands may be empty for small `k`.
    pub fn band_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.spec.bands()];
        for j in self.band_of.iter().flatten() {
            sizes[*j] += 1;
        }
        sizes
    }

    /// Expands `theta` (`[.., b]`) into kernels (`[.., k, k(, k)]`).
    pub fn expand<T: Scalar>(&self, theta: &Tensor<T>) -> Result<Tensor<T>> {
        let dims = theta.dims();
        let b = self.spec.bands();
        if dims.last() != Some(&b) {
            return Err(shape_err!(
                "band dimension of {:?} does not match {} bands",
                dims,
                b
            ));
        }
        let rows = theta.len() / b;
        let flat = theta.clone().reshape(&[rows, b])?;
        let k_flat = matmul(&flat, &self.matrix())?;
        let mut out_dims = dims[..dims.len() - 1].to_vec();
        out_dims.extend(self.spec.extents());
        k_flat.reshape(&out_dims)
    }

    /// Gradient of band weights from the gradient of expanded kernels:
    /// `dθ = dK^f · (M^f)ᵀ`, i.e. the sum of `dK` over each band's cells.
    pub fn reduce_gradient<T: Scalar>(&self, d_kernel: &Tensor<T>) -> Result<Tensor<T>> {
        let cells = self.spec.cells();
        let dims = d_kernel.dims();
        let sd = self.spec.dims();
        if dims.len() < sd || dims[dims.len() - sd..].iter().any(|&e| e != self.spec.k()) {
            return Err(shape_err!("kernel gradient {:?} does not match k={}", dims, self.spec.k()));
        }
        let rows = d_kernel.len() / cells;
        let mut out = vec![T::zero(); rows * self.spec.bands()];
        for r in 0..rows {
            let src = &d_kernel.data()[r * cells..(r + 1) * cells];
            let dst = &mut out[r * self.spec.bands()..(r + 1) * self.spec.bands()];
            for (p, band) in self.band_of.iter().enumerate() {
                if let Some(j) = band {
                    dst[*j] = dst[*j] + src[p];
                }
            }
        }
        let mut out_dims = dims[..dims.len() - sd].to_vec();
        out_dims.push(self.spec.bands());
        Tensor::from_vec(&out_dims, out)
    }
}

/// Trainable band weights `θ ∈ R^[C_out, C_in, b]` and per-output-channel bias.
#[derive(Clone, Debug, PartialEq)]
pub struct BandWeights<T = f32> {
    pub theta: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> BandWeights<T> {
    pub fn cast<U: Scalar>(&self) -> BandWeights<U> {
        BandWeights {
            theta: self.theta.cast(),
            bias: self.bias.cast(),
        }
    }
}

/// Kernel expansion `K = M_I · θ` for every channel pair.
pub fn expand_kernel<T: Scalar>(idx: &IndexMatrix, w: &BandWeights<T>) -> Result<Tensor<T>> {
    idx.expand(&w.theta)
}

/// Trainable scalars of an SRE convolution: `C_out·C_in·b (+ C_out)`.
pub fn kernel_param_count(c_in: usize, c_out: usize, spec: BandSpec, with_bias: bool) -> usize {
    c_out * c_in * spec.bands() + if with_bias { c_out } else { 0 }
}

/// Trainable scalars of a dense convolution of the same geometry.
pub fn standard_param_count(c_in: usize, c_out: usize, spec: BandSpec, with_bias: bool) -> usize {
    c_out * c_in * spec.cells() + if with_bias { c_out } else { 0 }
}

/// Uniform in `[−s, s]` with `s = √(6 / (C_in · active cells))`; zero bias.
pub fn init_band_weights<T: Scalar>(
    idx: &IndexMatrix,
    c_in: usize,
    c_out: usize,
    seed: u64,
) -> Result<BandWeights<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_band_weights_with(idx, c_in, c_out, &mut rng)
}

pub(crate) fn init_band_weights_with<T: Scalar, R: Rng>(
    idx: &IndexMatrix,
    c_in: usize,
    c_out: usize,
    rng: &mut R,
) -> Result<BandWeights<T>> {
    if c_in == 0 || c_out == 0 {
        return Err(Error::Config("channel counts must be positive".into()));
    }
    let b = idx.spec().bands();
    let s = init_scale(c_in, idx.active_cells());
    let theta = (0..c_out * c_in * b)
        .map(|_| T::from_f64(rng.random_range(-s..=s)))
        .collect();
    Ok(BandWeights {
        theta: Tensor::from_vec(&[c_out, c_in, b], theta)?,
        bias: Tensor::zeros(&[c_out])?,
    })
}

pub(crate) fn init_scale(fan_in_channels: usize, cells: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in_channels * cells) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GridSymmetry;

    #[test]
    fn band_count_formula() {
        assert_eq!(band_count(3).unwrap(), 3);
        assert_eq!(band_count(9).unwrap(), 6);
        assert_eq!(band_count(1).unwrap(), 2);
        assert_eq!(band_count(4), Err(Error::InvalidKernelSize(4)));
        assert_eq!(band_count(0), Err(Error::InvalidKernelSize(0)));
    }

    #[test]
    fn distance_matrix_examples() {
        let s2 = libm::sqrt(2.0);
        let d = distance_matrix(BandSpec::new(3, 2).unwrap());
        assert_eq!(d.values().data(), &[s2, 1., s2, 1., 0., 1., s2, 1., s2]);
        let d1 = distance_matrix(BandSpec::new(1, 2).unwrap());
        assert_eq!(d1.values().data(), &[0.0]);
        let d3 = distance_matrix(BandSpec::new(3, 3).unwrap());
        assert_eq!(&d3.values().data()[9..18], d.values().data());
        assert_eq!(d3.values().data()[0], libm::sqrt(3.0));
        assert_eq!(d3.values().data()[26], libm::sqrt(3.0));
        assert_eq!(d3.max(), libm::sqrt(3.0));
    }

    #[test]
    fn index_matrix_k3() {
        let idx = IndexMatrix::new(BandSpec::new(3, 2).unwrap());
        // Band of the edge cells: ⌊1·3/√2⌋ = 2; corners removed; band 1 empty.
        assert_eq!(
            idx.band_of(),
            &[None, Some(2), None, Some(2), Some(0), Some(2), None, Some(2), None]
        );
        assert_eq!(idx.active_cells(), 5);
        assert_eq!(idx.band_sizes(), vec![1, 0, 4]);
        let m = idx.matrix::<f64>();
        let col = |p: usize| (0..3).map(|j| m.data()[j * 9 + p]).collect::<Vec<_>>();
        assert_eq!(col(4), vec![1., 0., 0.]);
        for corner in [0, 2, 6, 8] {
            assert_eq!(col(corner), vec![0., 0., 0.]);
        }
    }

    #[test]
    fn index_matrix_k1() {
        let idx = IndexMatrix::new(BandSpec::new(1, 2).unwrap());
        assert_eq!(idx.matrix::<f64>().data(), &[1.0, 0.0]);
    }

    #[test]
    fn columns_partition_non_corner_cells() {
        for dims in [2, 3] {
            for k in [1, 3, 5, 7, 9, 11] {
                let spec = BandSpec::new(k, dims).unwrap();
                let idx = IndexMatrix::new(spec);
                let dist = distance_matrix(spec);
                let m = idx.matrix::<f64>();
                for p in 0..spec.cells() {
                    let col: f64 = (0..spec.bands()).map(|j| m.data()[j * spec.cells() + p]).sum();
                    let corner = dist.values().data()[p] > spec.radius() as f64;
                    assert_eq!(col, if corner { 0.0 } else { 1.0 }, "k={k} d={dims} p={p}");
                }
            }
        }
    }

    #[test]
    fn expand_k3_example() {
        let idx = IndexMatrix::new(BandSpec::new(3, 2).unwrap());
        let w = BandWeights {
            theta: Tensor::from_f64(&[1, 1, 3], &[1., 2., 3.]).unwrap(),
            bias: Tensor::<f64>::zeros(&[1]).unwrap(),
        };
        let k = expand_kernel(&idx, &w).unwrap();
        assert_eq!(k.dims(), &[1, 1, 3, 3]);
        assert_eq!(k.data(), &[0., 3., 0., 3., 1., 3., 0., 3., 0.]);
        let zero = idx.expand(&Tensor::<f64>::zeros(&[1, 1, 3]).unwrap()).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn expand_rejects_band_mismatch() {
        let idx = IndexMatrix::new(BandSpec::new(3, 2).unwrap());
        let theta = Tensor::<f32>::zeros(&[1, 1, 4]).unwrap();
        assert!(matches!(idx.expand(&theta), Err(Error::Shape(_))));
    }

    #[test]
    fn expanded_kernels_are_symmetric() {
        for (k, dims) in [(5, 2), (9, 2), (3, 3), (5, 3)] {
            let idx = IndexMatrix::new(BandSpec::new(k, dims).unwrap());
            let w: BandWeights<f32> = init_band_weights(&idx, 2, 2, 11).unwrap();
            let kern = expand_kernel(&idx, &w).unwrap();
            for g in GridSymmetry::all(dims) {
                assert!(g.transform(&kern).unwrap().bit_eq(&kern));
            }
        }
    }

    #[test]
    fn parameter_counts() {
        let s9 = BandSpec::new(9, 2).unwrap();
        assert_eq!(kernel_param_count(64, 64, s9, true), 24_640);
        assert_eq!(standard_param_count(64, 64, s9, true), 331_840);
        assert_eq!(kernel_param_count(1, 1, BandSpec::new(3, 2).unwrap(), true), 4);
        let s5 = BandSpec::new(5, 3).unwrap();
        assert_eq!(kernel_param_count(1, 1, s5, false), 4);
        assert_eq!(standard_param_count(1, 1, s5, false), 125);
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let idx = IndexMatrix::new(BandSpec::new(5, 2).unwrap());
        let a: BandWeights<f32> = init_band_weights(&idx, 3, 4, 7).unwrap();
        let b: BandWeights<f32> = init_band_weights(&idx, 3, 4, 7).unwrap();
        assert!(a.theta.bit_eq(&b.theta));
        assert!(a.bias.data().iter().all(|&v| v == 0.0));
        let s = init_scale(3, idx.active_cells()) as f32;
        assert!(a.theta.data().iter().all(|v| v.abs() <= s));
    }

    #[test]
    fn expanded_entry_variance_matches_uniform() {
        let idx = IndexMatrix::new(BandSpec::new(9, 2).unwrap());
        let w: BandWeights<f64> = init_band_weights(&idx, 4, 400, 3).unwrap();
        let k = expand_kernel(&idx, &w).unwrap();
        let vals: Vec<f64> = k
            .data()
            .chunks(81)
            .flat_map(|c| c.iter().zip(idx.band_of()).filter(|(_, b)| b.is_some()).map(|(v, _)| *v))
            .take(10_000)
            .collect();
        assert_eq!(vals.len(), 10_000);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        let s = init_scale(4, idx.active_cells());
        let expected = s * s / 3.0;
        assert!((var / expected - 1.0).abs() < 0.2, "var {var} vs {expected}");
    }
}
