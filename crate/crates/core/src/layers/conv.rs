//! Stride-1, zero "same"-padded convolution (cross-correlation).
//!
//! [`DenseConv`] correlates zero-padded planes directly, row by row.
//!
//! [`SreConv`] exploits that a symmetric kernel is constant on every orbit of
//! the kernel grid under its symmetry group: the shifted input planes of one
//! orbit are summed first (canonically, see the orbit plan), and the orbit
//! sums are contracted with one kernel value each. Every output pixel is then
//! the same function of a symmetry-invariant multiset of inputs, so the layer
//! commutes with the grid symmetries bit for bit in both modes. The multiply
//! count is at most that of the equivalent dense layer.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{split_dims, Mode};
use crate::error::shape_err;
use crate::kernel::{init_band_weights_with, init_scale, BandSpec, BandWeights, IndexMatrix};
use crate::linalg::{gemm, Layout};
use crate::orbit::{sorted_sum, Combine, Orbit, OrbitPlan, Term, MAX_TERMS};
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Geometry {
    dims: usize,
    k: usize,
    c_in: usize,
    c_out: usize,
}

impl Geometry {
    fn kext(&self) -> [usize; 3] {
        if self.dims == 2 {
            [1, self.k, self.k]
        } else {
            [self.k; 3]
        }
    }

    fn kvol(&self) -> usize {
        self.k.pow(self.dims as u32)
    }

    fn check_input<T: Scalar>(&self, x: &Tensor<T>) -> Result<(usize, [usize; 3])> {
        let (n, c, ext) = split_dims(x.dims(), self.dims)?;
        if c != self.c_in {
            return Err(shape_err!("convolution expects {} input channels, got {}", self.c_in, c));
        }
        Ok((n, ext))
    }
}

/// Multiply-adds of one forward pass over `spatial` output cells.
pub fn conv_macs(c_in: usize, c_out: usize, kernel_cells: usize, spatial: &[usize]) -> u64 {
    (c_in * c_out * kernel_cells) as u64 * spatial.iter().product::<usize>() as u64
}

/// Kernel cells of one symmetry orbit of the kernel grid, all in one band.
#[derive(Clone, Debug)]
struct ActiveOrbit {
    orbit: Orbit,
    cells: Vec<usize>,
    band: usize,
}

fn active_orbits(index: &IndexMatrix) -> Vec<ActiveOrbit> {
    let plan = OrbitPlan::for_grid(&index.spec().extents());
    let band_of = index.band_of();
    plan.orbits
        .into_iter()
        .filter_map(|orbit| {
            let cells: Vec<usize> = orbit
                .terms
                .iter()
                .flat_map(|t| match *t {
                    Term::Single(a) => vec![a],
                    Term::Pair(a, b) => vec![a, b],
                })
                .collect();
            let band = band_of[cells[0]]?;
            Some(ActiveOrbit { orbit, cells, band })
        })
        .collect()
}

/// Zero-padded planes of one sample and the cell offsets into them.
struct Padding {
    ext: [usize; 3],
    pext: [usize; 3],
    pad: [usize; 3],
    offsets: Vec<usize>,
}

impl Padding {
    fn new(ext: [usize; 3], kext: [usize; 3]) -> Self {
        let pad = [kext[0] / 2, kext[1] / 2, kext[2] / 2];
        let pext = [ext[0] + 2 * pad[0], ext[1] + 2 * pad[1], ext[2] + 2 * pad[2]];
        let offsets = (0..kext.iter().product())
            .map(|p: usize| {
                let (a, b, c) = (p / (kext[1] * kext[2]), p / kext[2] % kext[1], p % kext[2]);
                (a * pext[1] + b) * pext[2] + c
            })
            .collect();
        Padding { ext, pext, pad, offsets }
    }

    fn plane(&self) -> usize {
        self.pext.iter().product()
    }

    fn start(&self, z: usize, y: usize) -> usize {
        (z * self.pext[1] + y) * self.pext[2]
    }

    fn scatter<T: Scalar>(&self, src: &[T], dst: &mut [T]) {
        let [d, h, w] = self.ext;
        for z in 0..d {
            for y in 0..h {
                let o = self.start(z + self.pad[0], y + self.pad[1]) + self.pad[2];
                dst[o..o + w].copy_from_slice(&src[(z * h + y) * w..][..w]);
            }
        }
    }

    fn gather<T: Scalar>(&self, src: &[T], dst: &mut [T]) {
        let [d, h, w] = self.ext;
        for z in 0..d {
            for y in 0..h {
                let o = self.start(z + self.pad[0], y + self.pad[1]) + self.pad[2];
                dst[(z * h + y) * w..][..w].copy_from_slice(&src[o..o + w]);
            }
        }
    }

    /// `dst = shift(cell)` or `dst += shift(cell)`.
    #[inline]
    fn shifted<T: Scalar>(&self, dst: &mut [T], xpad: &[T], cell: usize, add: bool) {
        let [d, h, w] = self.ext;
        let off = self.offsets[cell];
        for z in 0..d {
            for y in 0..h {
                let src = &xpad[self.start(z, y) + off..][..w];
                let out = &mut dst[(z * h + y) * w..][..w];
                if add {
                    for (o, &v) in out.iter_mut().zip(src) {
                        *o = *o + v;
                    }
                } else {
                    out.copy_from_slice(src);
                }
            }
        }
    }

    /// `dpad[shift(cell)] += g`.
    #[inline]
    fn shifted_adjoint<T: Scalar>(&self, dpad: &mut [T], g: &[T], cell: usize) {
        let [d, h, w] = self.ext;
        let off = self.offsets[cell];
        for z in 0..d {
            for y in 0..h {
                let dst = &mut dpad[self.start(z, y) + off..][..w];
                for (o, &v) in dst.iter_mut().zip(&g[(z * h + y) * w..][..w]) {
                    *o = *o + v;
                }
            }
        }
    }
}

fn term_plane<T: Scalar>(pad: &Padding, dst: &mut [T], xpad: &[T], term: Term) {
    match term {
        Term::Single(a) => pad.shifted(dst, xpad, a, false),
        Term::Pair(a, b) => {
            pad.shifted(dst, xpad, a, false);
            pad.shifted(dst, xpad, b, true);
        }
    }
}

/// Canonical orbit sums of the shifted input planes, `[C_in · orbits, S]` per sample.
fn orbit_planes<T: Scalar>(
    geo: Geometry,
    orbits: &[ActiveOrbit],
    pad: &Padding,
    sample: &[T],
    xpad: &mut [T],
    scratch: &mut [Vec<T>],
    out: &mut [T],
) {
    let s: usize = pad.ext.iter().product();
    let ps = pad.plane();
    for ci in 0..geo.c_in {
        pad.scatter(&sample[ci * s..(ci + 1) * s], &mut xpad[ci * ps..(ci + 1) * ps]);
    }
    for ci in 0..geo.c_in {
        let xp = &xpad[ci * ps..(ci + 1) * ps];
        for (j, ao) in orbits.iter().enumerate() {
            let dst = &mut out[(ci * orbits.len() + j) * s..][..s];
            let terms = &ao.orbit.terms;
            match ao.orbit.combine {
                Combine::Chain => {
                    term_plane(pad, dst, xp, terms[0]);
                    if let Some(&t) = terms.get(1) {
                        term_plane(pad, &mut scratch[0], xp, t);
                        for (o, &v) in dst.iter_mut().zip(&scratch[0]) {
                            *o = *o + v;
                        }
                    }
                }
                Combine::Tree4 => {
                    for (buf, &t) in scratch.iter_mut().zip(terms) {
                        term_plane(pad, buf, xp, t);
                    }
                    let (t0, t1, t2, t3) = (&scratch[0], &scratch[1], &scratch[2], &scratch[3]);
                    for p in 0..s {
                        dst[p] = (t0[p] + t1[p]) + (t2[p] + t3[p]);
                    }
                }
                Combine::Sorted => {
                    let nt = terms.len();
                    for (buf, &t) in scratch.iter_mut().zip(terms) {
                        term_plane(pad, buf, xp, t);
                    }
                    let mut buf = [T::zero(); MAX_TERMS];
                    for p in 0..s {
                        for (slot, plane) in buf.iter_mut().zip(&scratch[..nt]) {
                            *slot = plane[p];
                        }
                        dst[p] = sorted_sum(&mut buf[..nt]);
                    }
                }
            }
        }
    }
}

/// Orbit weights `[C_out, C_in · orbits]` read from a symmetric kernel.
fn orbit_weights<T: Scalar>(geo: Geometry, orbits: &[ActiveOrbit], kernel: &Tensor<T>) -> Vec<T> {
    let kv = geo.kvol();
    let mut w = Vec::with_capacity(geo.c_out * geo.c_in * orbits.len());
    for co in 0..geo.c_out {
        for ci in 0..geo.c_in {
            let kern = &kernel.data()[(co * geo.c_in + ci) * kv..][..kv];
            w.extend(orbits.iter().map(|ao| kern[ao.cells[0]]));
        }
    }
    w
}

fn forward_orbits<T: Scalar>(
    geo: Geometry,
    orbits: &[ActiveOrbit],
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &[T],
) -> Result<(Tensor<T>, Vec<T>)> {
    let (n, ext) = geo.check_input(x)?;
    let pad = Padding::new(ext, geo.kext());
    let s: usize = ext.iter().product();
    let cols = geo.c_in * orbits.len();
    let max_terms = orbits.iter().map(|o| o.orbit.terms.len()).max().unwrap_or(1);
    let mut xpad = vec![T::zero(); geo.c_in * pad.plane()];
    let mut scratch: Vec<Vec<T>> = (0..max_terms).map(|_| vec![T::zero(); s]).collect();
    let mut planes = vec![T::zero(); n * cols * s];
    let mut out = vec![T::zero(); n * geo.c_out * s];
    let w = orbit_weights(geo, orbits, kernel);
    for i in 0..n {
        let sample = &x.data()[i * geo.c_in * s..(i + 1) * geo.c_in * s];
        let op = &mut planes[i * cols * s..(i + 1) * cols * s];
        orbit_planes(geo, orbits, &pad, sample, &mut xpad, &mut scratch, op);
        let y = &mut out[i * geo.c_out * s..(i + 1) * geo.c_out * s];
        gemm(geo.c_out, cols, s, &w, Layout::Normal, op, Layout::Normal, T::zero(), y);
        for (co, plane) in y.chunks_exact_mut(s).enumerate() {
            for v in plane {
                *v = *v + bias[co];
            }
        }
    }
    let mut dims = x.dims().to_vec();
    dims[1] = geo.c_out;
    Ok((Tensor::from_vec(&dims, out)?, planes))
}

/// Returns `(dx, dθ, dbias)`.
fn backward_orbits<T: Scalar>(
    geo: Geometry,
    orbits: &[ActiveOrbit],
    bands: usize,
    x_dims: &[usize],
    planes: &[T],
    kernel: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, _, ext) = split_dims(x_dims, geo.dims)?;
    let mut y_dims = x_dims.to_vec();
    y_dims[1] = geo.c_out;
    dy.expect_dims(&y_dims)?;
    let pad = Padding::new(ext, geo.kext());
    let s: usize = ext.iter().product();
    let ps = pad.plane();
    let no = orbits.len();
    let cols = geo.c_in * no;
    let w = orbit_weights(geo, orbits, kernel);
    let mut dw = vec![T::zero(); geo.c_out * cols];
    let mut dplanes = vec![T::zero(); cols * s];
    let mut dpad = vec![T::zero(); ps];
    let mut dx = vec![T::zero(); n * geo.c_in * s];
    let mut db = vec![T::zero(); geo.c_out];
    for i in 0..n {
        let g = &dy.data()[i * geo.c_out * s..(i + 1) * geo.c_out * s];
        let op = &planes[i * cols * s..(i + 1) * cols * s];
        gemm(geo.c_out, s, cols, g, Layout::Normal, op, Layout::Transposed, T::one(), &mut dw);
        gemm(cols, geo.c_out, s, &w, Layout::Transposed, g, Layout::Normal, T::zero(), &mut dplanes);
        for ci in 0..geo.c_in {
            dpad.fill(T::zero());
            for (j, ao) in orbits.iter().enumerate() {
                let gp = &dplanes[(ci * no + j) * s..][..s];
                for &cell in &ao.cells {
                    pad.shifted_adjoint(&mut dpad, gp, cell);
                }
            }
            pad.gather(&dpad, &mut dx[(i * geo.c_in + ci) * s..][..s]);
        }
        for (co, plane) in g.chunks_exact(s).enumerate() {
            db[co] = db[co] + plane.iter().fold(T::zero(), |a, &v| a + v);
        }
    }
    let mut dtheta = vec![T::zero(); geo.c_out * geo.c_in * bands];
    for co in 0..geo.c_out {
        for ci in 0..geo.c_in {
            for (j, ao) in orbits.iter().enumerate() {
                let t = &mut dtheta[(co * geo.c_in + ci) * bands + ao.band];
                *t = *t + dw[co * cols + ci * no + j];
            }
        }
    }
    Ok((
        Tensor::from_vec(x_dims, dx)?,
        Tensor::from_vec(&[geo.c_out, geo.c_in, bands], dtheta)?,
        Tensor::from_vec(&[geo.c_out], db)?,
    ))
}

const LANES: usize = 16;

/// `acc[j] += w · src[j]` over a row, blocked so the accumulators stay in registers.
#[inline]
fn row_taps<T: Scalar>(dst: &mut [T], taps: &[(T, usize)], src: &[T]) {
    let w = dst.len();
    let mut j = 0;
    while j + LANES <= w {
        let mut acc = [T::zero(); LANES];
        acc.copy_from_slice(&dst[j..j + LANES]);
        for &(wv, off) in taps {
            let s: &[T; LANES] = src[off + j..off + j + LANES].try_into().unwrap();
            for l in 0..LANES {
                acc[l] = acc[l] + wv * s[l];
            }
        }
        dst[j..j + LANES].copy_from_slice(&acc);
        j += LANES;
    }
    for (jj, d) in dst.iter_mut().enumerate().skip(j) {
        let mut a = *d;
        for &(wv, off) in taps {
            a = a + wv * src[off + jj];
        }
        *d = a;
    }
}

/// Direct correlation of zero-padded planes; `kernel` is `[C_out, C_in, k^d]`.
fn correlate<T: Scalar>(geo: Geometry, x: &Tensor<T>, kernel: &[T], bias: &[T]) -> Result<Tensor<T>> {
    let (n, ext) = geo.check_input(x)?;
    let pad = Padding::new(ext, geo.kext());
    let s: usize = ext.iter().product();
    let ps = pad.plane();
    let kv = geo.kvol();
    let [d, h, w] = ext;
    let mut xpad = vec![T::zero(); geo.c_in * ps];
    let mut out = vec![T::zero(); n * geo.c_out * s];
    let mut taps = Vec::with_capacity(geo.c_in * kv);
    for i in 0..n {
        for ci in 0..geo.c_in {
            pad.scatter(&x.data()[(i * geo.c_in + ci) * s..][..s], &mut xpad[ci * ps..(ci + 1) * ps]);
        }
        for co in 0..geo.c_out {
            taps.clear();
            for ci in 0..geo.c_in {
                let kern = &kernel[(co * geo.c_in + ci) * kv..][..kv];
                taps.extend(kern.iter().zip(&pad.offsets).map(|(&wv, &off)| (wv, ci * ps + off)));
            }
            let y = &mut out[(i * geo.c_out + co) * s..][..s];
            y.fill(bias[co]);
            for z in 0..d {
                for r in 0..h {
                    row_taps(&mut y[(z * h + r) * w..][..w], &taps, &xpad[pad.start(z, r)..]);
                }
            }
        }
    }
    let mut dims = x.dims().to_vec();
    dims[1] = geo.c_out;
    Tensor::from_vec(&dims, out)
}

/// `acc[t] += g ⊙ src[offsets[t]..]` lane-wise over one row; the ragged tail
/// goes into lane 0.
#[inline]
fn row_products<T: Scalar>(acc: &mut [[T; LANES]], offsets: &[usize], g: &[T], src: &[T]) {
    let w = g.len();
    let mut j = 0;
    while j + LANES <= w {
        let gb: &[T; LANES] = g[j..j + LANES].try_into().unwrap();
        for (a, &off) in acc.iter_mut().zip(offsets) {
            let xb: &[T; LANES] = src[off + j..off + j + LANES].try_into().unwrap();
            for l in 0..LANES {
                a[l] = a[l] + gb[l] * xb[l];
            }
        }
        j += LANES;
    }
    for jj in j..w {
        for (a, &off) in acc.iter_mut().zip(offsets) {
            a[0] = a[0] + g[jj] * src[off + jj];
        }
    }
}

/// Returns `(dx, dK, dbias)`; `dx` is the correlation of `dy` with the flipped,
/// channel-transposed kernel.
fn backward_full<T: Scalar>(
    geo: Geometry,
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, ext) = geo.check_input(x)?;
    let mut y_dims = x.dims().to_vec();
    y_dims[1] = geo.c_out;
    dy.expect_dims(&y_dims)?;
    let pad = Padding::new(ext, geo.kext());
    let s: usize = ext.iter().product();
    let ps = pad.plane();
    let kv = geo.kvol();
    let [d, h, w] = ext;
    let mut xpad = vec![T::zero(); ps];
    let mut dk = vec![T::zero(); kernel.len()];
    let mut acc = vec![[T::zero(); LANES]; kv];
    let mut db = vec![T::zero(); geo.c_out];
    for i in 0..n {
        for ci in 0..geo.c_in {
            pad.scatter(&x.data()[(i * geo.c_in + ci) * s..][..s], &mut xpad);
            for co in 0..geo.c_out {
                let g = &dy.data()[(i * geo.c_out + co) * s..][..s];
                acc.iter_mut().for_each(|a| *a = [T::zero(); LANES]);
                for z in 0..d {
                    for r in 0..h {
                        let row = (z * h + r) * w;
                        row_products(&mut acc, &pad.offsets, &g[row..row + w], &xpad[pad.start(z, r)..]);
                    }
                }
                let dst = &mut dk[(co * geo.c_in + ci) * kv..][..kv];
                for (slot, a) in dst.iter_mut().zip(&acc) {
                    *slot = a.iter().fold(*slot, |t, &v| t + v);
                }
            }
        }
        for co in 0..geo.c_out {
            let g = &dy.data()[(i * geo.c_out + co) * s..][..s];
            db[co] = db[co] + g.iter().fold(T::zero(), |a, &v| a + v);
        }
    }
    let mut flipped = vec![T::zero(); kernel.len()];
    for co in 0..geo.c_out {
        for ci in 0..geo.c_in {
            let src = &kernel.data()[(co * geo.c_in + ci) * kv..][..kv];
            let dst = &mut flipped[(ci * geo.c_out + co) * kv..][..kv];
            for (q, d) in dst.iter_mut().enumerate() {
                *d = src[kv - 1 - q];
            }
        }
    }
    let adjoint = Geometry {
        c_in: geo.c_out,
        c_out: geo.c_in,
        ..geo
    };
    let dx = correlate(adjoint, dy, &flipped, &vec![T::zero(); geo.c_in])?;
    Ok((
        dx,
        Tensor::from_vec(kernel.dims(), dk)?,
        Tensor::from_vec(&[geo.c_out], db)?,
    ))
}

/// Saved state of a convolution forward pass.
#[derive(Clone, Debug)]
pub enum ConvCache<T> {
    Input(Tensor<T>),
    Orbits { dims: Vec<usize>, planes: Vec<T> },
}

/// Gradients of a convolution: `weight` is `dθ` for SRE layers and `dK` for dense ones.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub dx: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Convolution whose kernel is expanded from band weights.
#[derive(Clone, Debug)]
pub struct SreConv<T = f32> {
    index: IndexMatrix,
    weights: BandWeights<T>,
    expanded: Option<Tensor<T>>,
    orbits: Vec<ActiveOrbit>,
}

impl<T: Scalar> SreConv<T> {
    pub fn new(index: IndexMatrix, weights: BandWeights<T>) -> Result<Self> {
        let b = index.spec().bands();
        let td = weights.theta.dims();
        if td.len() != 3 || td[2] != b || weights.bias.dims() != [td[0]] {
            return Err(shape_err!(
                "band weights {:?} / bias {:?} do not fit {} bands",
                td,
                weights.bias.dims(),
                b
            ));
        }
        let orbits = active_orbits(&index);
        Ok(SreConv {
            index,
            weights,
            expanded: None,
            orbits,
        })
    }

    pub fn init<R: Rng>(spec: BandSpec, c_in: usize, c_out: usize, rng: &mut R) -> Result<Self> {
        let index = IndexMatrix::new(spec);
        let weights = init_band_weights_with(&index, c_in, c_out, rng)?;
        Self::new(index, weights)
    }

    fn geometry(&self) -> Geometry {
        let d = self.weights.theta.dims();
        Geometry {
            dims: self.index.spec().dims(),
            k: self.index.spec().k(),
            c_in: d[1],
            c_out: d[0],
        }
    }

    pub fn index(&self) -> &IndexMatrix {
        &self.index
    }

    pub fn weights(&self) -> &BandWeights<T> {
        &self.weights
    }

    /// Mutable access to the band weights; drops any precomputed kernel.
    pub fn weights_mut(&mut self) -> &mut BandWeights<T> {
        self.expanded = None;
        &mut self.weights
    }

    pub fn c_in(&self) -> usize {
        self.geometry().c_in
    }

    pub fn c_out(&self) -> usize {
        self.geometry().c_out
    }

    /// Expands and stores the full kernel for repeated inference.
    pub fn precompute(&mut self) -> Result<()> {
        self.expanded = Some(self.index.expand(&self.weights.theta)?);
        Ok(())
    }

    pub fn is_precomputed(&self) -> bool {
        self.expanded.is_some()
    }

    pub fn kernel(&self) -> Result<Tensor<T>> {
        match &self.expanded {
            Some(k) => Ok(k.clone()),
            None => self.index.expand(&self.weights.theta),
        }
    }

    fn with_kernel<R>(&self, f: impl FnOnce(&Tensor<T>) -> Result<R>) -> Result<R> {
        match &self.expanded {
            Some(k) => f(k),
            None => f(&self.index.expand(&self.weights.theta)?),
        }
    }

    /// Identical in both modes; the mode only mirrors the other layers.
    pub fn forward(&self, x: &Tensor<T>, _mode: Mode) -> Result<(Tensor<T>, ConvCache<T>)> {
        let geo = self.geometry();
        let (y, planes) = self.with_kernel(|k| forward_orbits(geo, &self.orbits, x, k, self.weights.bias.data()))?;
        Ok((
            y,
            ConvCache::Orbits {
                dims: x.dims().to_vec(),
                planes,
            },
        ))
    }

    pub fn backward(&self, dy: &Tensor<T>, cache: ConvCache<T>) -> Result<ConvGrads<T>> {
        let ConvCache::Orbits { dims, planes } = cache else {
            return Err(Error::StaleCache);
        };
        let geo = self.geometry();
        let bands = self.index.spec().bands();
        let (dx, weight, bias) =
            self.with_kernel(|k| backward_orbits(geo, &self.orbits, bands, &dims, &planes, k, dy))?;
        Ok(ConvGrads { dx, weight, bias })
    }

    /// Multiply-adds of one inference pass with the precomputed kernel.
    pub fn inference_macs(&self, spatial: &[usize]) -> Result<u64> {
        let k = self.kernel()?;
        let geo = self.geometry();
        Ok(conv_macs(geo.c_in, geo.c_out, k.len() / (geo.c_in * geo.c_out), spatial))
    }

    pub fn cast<U: Scalar>(&self) -> SreConv<U> {
        SreConv {
            index: self.index.clone(),
            weights: self.weights.cast(),
            expanded: self.expanded.as_ref().map(|k| k.cast()),
            orbits: self.orbits.clone(),
        }
    }
}

/// Convolution with an unconstrained kernel (the non-equivariant baseline).
#[derive(Clone, Debug)]
pub struct DenseConv<T = f32> {
    dims: usize,
    weight: Tensor<T>,
    bias: Tensor<T>,
}

impl<T: Scalar> DenseConv<T> {
    pub fn new(dims: usize, weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let wd = weight.dims();
        let ok = wd.len() == dims + 2
            && (2..=3).contains(&dims)
            && wd[2..].iter().all(|&e| e == wd[2] && e % 2 == 1)
            && bias.dims() == [wd[0]];
        if !ok {
            return Err(shape_err!("invalid dense kernel {:?} / bias {:?}", wd, bias.dims()));
        }
        Ok(DenseConv { dims, weight, bias })
    }

    /// Uniform in `[−s, s]` with `s = √(6 / (C_in · k^d))`; zero bias.
    pub fn init<R: Rng>(spec: BandSpec, c_in: usize, c_out: usize, rng: &mut R) -> Result<Self> {
        if c_in == 0 || c_out == 0 {
            return Err(Error::Config("channel counts must be positive".into()));
        }
        let s = init_scale(c_in, spec.cells());
        let mut dims = vec![c_out, c_in];
        dims.extend(spec.extents());
        let data = (0..c_out * c_in * spec.cells())
            .map(|_| T::from_f64(rng.random_range(-s..=s)))
            .collect();
        Self::new(spec.dims(), Tensor::from_vec(&dims, data)?, Tensor::zeros(&[c_out])?)
    }

    fn geometry(&self) -> Geometry {
        let d = self.weight.dims();
        Geometry {
            dims: self.dims,
            k: d[2],
            c_in: d[1],
            c_out: d[0],
        }
    }

    pub fn weight(&self) -> &Tensor<T> {
        &self.weight
    }

    pub fn weight_mut(&mut self) -> &mut Tensor<T> {
        &mut self.weight
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut Tensor<T> {
        &mut self.bias
    }

    pub fn parts_mut(&mut self) -> (&mut Tensor<T>, &mut Tensor<T>) {
        (&mut self.weight, &mut self.bias)
    }

    pub fn forward(&self, x: &Tensor<T>, _mode: Mode) -> Result<(Tensor<T>, ConvCache<T>)> {
        let y = correlate(self.geometry(), x, self.weight.data(), self.bias.data())?;
        Ok((y, ConvCache::Input(x.clone())))
    }

    pub fn backward(&self, dy: &Tensor<T>, cache: ConvCache<T>) -> Result<ConvGrads<T>> {
        let ConvCache::Input(input) = cache else {
            return Err(Error::StaleCache);
        };
        let (dx, dk, db) = backward_full(self.geometry(), &input, &self.weight, dy)?;
        Ok(ConvGrads {
            dx,
            weight: dk,
            bias: db,
        })
    }

    pub fn inference_macs(&self, spatial: &[usize]) -> u64 {
        let geo = self.geometry();
        conv_macs(geo.c_in, geo.c_out, self.weight.len() / (geo.c_in * geo.c_out), spatial)
    }

    pub fn cast<U: Scalar>(&self) -> DenseConv<U> {
        DenseConv {
            dims: self.dims,
            weight: self.weight.cast(),
            bias: self.bias.cast(),
        }
    }
}
