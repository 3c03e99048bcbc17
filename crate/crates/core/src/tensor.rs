//! Dense row-major tensors.
//!
//! Feature maps are channel-first: `[N, C, H, W]` in 2D and `[N, C, D, H, W]`
//! in 3D. Operations that act on "spatial" axes take the number of trailing
//! axes to treat as spatial.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::shape_err;
use crate::{Error, Result, Scalar};

/// Ordered list of extents, each at least 1. A rank-0 shape holds one element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(shape_err!("zero extent in shape {:?}", dims));
        }
        Ok(Shape(dims.to_vec()))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::full(dims, T::zero())
    }

    pub fn full(dims: &[usize], value: T) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![value; shape.numel()];
        Ok(Tensor { shape, data })
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.numel() != data.len() {
            return Err(shape_err!(
                "data length {} does not match shape {:?}",
                data.len(),
                dims
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_f64(dims: &[usize], data: &[f64]) -> Result<Self> {
        Self::from_vec(dims, data.iter().map(|&v| T::from_f64(v)).collect())
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut t = Self::zeros(&[n, n])?;
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        Ok(t)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.numel() != self.data.len() {
            return Err(shape_err!(
                "cannot reshape {:?} into {:?}",
                self.shape.dims(),
                dims
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.expect_same_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn expect_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(shape_err!(
                "shape mismatch {:?} vs {:?}",
                self.dims(),
                other.dims()
            ));
        }
        Ok(())
    }

    pub fn expect_dims(&self, dims: &[usize]) -> Result<()> {
        if self.dims() != dims {
            return Err(shape_err!("expected shape {:?}, found {:?}", dims, self.dims()));
        }
        Ok(())
    }

    /// Errors if any element is NaN or infinite.
    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.expect_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    /// Bitwise equality (distinguishes `-0.0` and `0.0`, equates identical NaNs).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.total_cmp(b).is_eq())
    }

    /// Sub-tensor at `index` along the leading axis.
    pub fn index_outer(&self, index: usize) -> Result<Self> {
        let dims = self.dims();
        if dims.is_empty() || index >= dims[0] {
            return Err(shape_err!("outer index {} out of range for {:?}", index, dims));
        }
        let inner: usize = dims[1..].iter().product();
        let data = self.data[index * inner..(index + 1) * inner].to_vec();
        let shape = if dims.len() == 1 { &[][..] } else { &dims[1..] };
        Tensor::from_vec(shape, data)
    }

    /// Concatenates tensors of identical shape along the leading axis.
    pub fn stack_outer(parts: &[Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| shape_err!("cannot concatenate zero tensors"))?;
        let mut data = Vec::with_capacity(first.len() * parts.len());
        let mut outer = 0;
        for p in parts {
            if p.dims().get(1..) != first.dims().get(1..) || p.rank() != first.rank() {
                return Err(shape_err!(
                    "cannot concatenate {:?} with {:?}",
                    first.dims(),
                    p.dims()
                ));
            }
            outer += p.dims().first().copied().unwrap_or(1);
            data.extend_from_slice(&p.data);
        }
        let mut dims = first.dims().to_vec();
        if dims.is_empty() {
            dims.push(outer);
        } else {
            dims[0] = outer;
        }
        Tensor::from_vec(&dims, data)
    }
}

/// Matrix product of a `m×n` and a `n×p` tensor. Every output element is
/// accumulated left to right starting from `+0`.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, n) = match a.dims() {
        &[m, n] => (m, n),
        d => return Err(shape_err!("matmul lhs must be a matrix, got {:?}", d)),
    };
    let (n2, p) = match b.dims() {
        &[n2, p] => (n2, p),
        d => return Err(shape_err!("matmul rhs must be a matrix, got {:?}", d)),
    };
    if n != n2 {
        return Err(shape_err!("matmul inner dimensions {} and {} differ", n, n2));
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![T::zero(); m * p];
    for i in 0..m {
        for j in 0..p {
            let mut acc = T::zero();
            for t in 0..n {
                acc = acc + ad[i * n + t] * bd[t * p + j];
            }
            out[i * p + j] = acc;
        }
    }
    Tensor::from_vec(&[m, p], out)
}

/// Pads the trailing `spatial` axes by `amount` cells on each side.
pub fn pad<T: Scalar>(x: &Tensor<T>, spatial: usize, amount: usize, value: T) -> Result<Tensor<T>> {
    let dims = x.dims();
    if spatial == 0 || spatial > dims.len() {
        return Err(shape_err!("cannot pad {} spatial axes of {:?}", spatial, dims));
    }
    if amount == 0 {
        return Ok(x.clone());
    }
    let lead = dims.len() - spatial;
    let mut out_dims = dims.to_vec();
    for d in &mut out_dims[lead..] {
        *d += 2 * amount;
    }
    let mut out = Tensor::full(&out_dims, value)?;
    let in_strides = x.shape().strides();
    let out_strides = out.shape().strides();
    let row = dims[dims.len() - 1];
    let rows = x.len() / row;
    for r in 0..rows {
        let mut rem = r * row;
        let mut offset = 0;
        for ax in 0..dims.len() - 1 {
            let i = rem / in_strides[ax];
            rem %= in_strides[ax];
            let shift = if ax >= lead { amount } else { 0 };
            offset += (i + shift) * out_strides[ax];
        }
        offset += amount;
        out.data[offset..offset + row].copy_from_slice(&x.data[r * row..(r + 1) * row]);
    }
    Ok(out)
}

/// Arithmetic mean over the listed axes; the remaining axes keep their order.
/// Reducing every axis yields a rank-0 tensor.
pub fn reduce_mean<T: Scalar>(x: &Tensor<T>, axes: &[usize]) -> Result<Tensor<T>> {
    let dims = x.dims();
    if axes.is_empty() {
        return Err(shape_err!("reduce_mean needs at least one axis"));
    }
    let mut reduce = vec![false; dims.len()];
    for &a in axes {
        if a >= dims.len() || reduce[a] {
            return Err(shape_err!("invalid or repeated axis {} for {:?}", a, dims));
        }
        reduce[a] = true;
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|&a| !reduce[a]).collect();
    let out_dims: Vec<usize> = kept.iter().map(|&a| dims[a]).collect();
    let out_shape = Shape::new(&out_dims)?;
    let out_strides = out_shape.strides();
    let count: usize = axes.iter().map(|&a| dims[a]).product();
    let in_strides = x.shape().strides();
    let mut sums = vec![T::zero(); out_shape.numel()];
    for (flat, &v) in x.data.iter().enumerate() {
        let mut o = 0;
        for (k, &a) in kept.iter().enumerate() {
            o += (flat / in_strides[a] % dims[a]) * out_strides[k];
        }
        sums[o] = sums[o] + v;
    }
    let denom = T::from_usize(count);
    Tensor::from_vec(&out_dims, sums.into_iter().map(|s| s / denom).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(dims: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(dims, v).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let a = t(&[2, 2], &[1., 2., 3., 4.]);
        assert_eq!(matmul(&Tensor::identity(2).unwrap(), &a).unwrap(), a);
        let proj = t(&[2, 2], &[1., 0., 0., 0.]);
        let b = t(&[2, 2], &[5., 6., 7., 8.]);
        assert_eq!(matmul(&proj, &b).unwrap(), t(&[2, 2], &[5., 6., 0., 0.]));
        let row = t(&[1, 3], &[1., 2., 3.]);
        let col = t(&[3, 1], &[4., 5., 6.]);
        assert_eq!(matmul(&row, &col).unwrap(), t(&[1, 1], &[32.]));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = t(&[2, 3], &[0.; 6]);
        assert!(matches!(matmul(&a, &a), Err(Error::Shape(_))));
    }

    #[test]
    fn pad_examples() {
        let one = t(&[1, 1], &[1.]);
        assert_eq!(
            pad(&one, 2, 1, 0.0).unwrap(),
            t(&[3, 3], &[0., 0., 0., 0., 1., 0., 0., 0., 0.])
        );
        assert_eq!(pad(&one, 2, 0, 0.0).unwrap(), one);
        let row = t(&[1, 2], &[1., 2.]);
        assert_eq!(
            pad(&row, 2, 1, 9.0).unwrap(),
            t(&[3, 4], &[9., 9., 9., 9., 9., 1., 2., 9., 9., 9., 9., 9.])
        );
    }

    #[test]
    fn pad_leaves_leading_axes() {
        let x = t(&[2, 1, 1], &[1., 2.]);
        let p = pad(&x, 2, 1, 0.0).unwrap();
        assert_eq!(p.dims(), &[2, 3, 3]);
        assert_eq!(p.data()[4], 1.0);
        assert_eq!(p.data()[13], 2.0);
    }

    #[test]
    fn reduce_mean_examples() {
        let x = t(&[2, 2], &[1., 2., 3., 4.]);
        let m = reduce_mean(&x, &[0, 1]).unwrap();
        assert_eq!(m.dims(), &[] as &[usize]);
        assert_eq!(m.data(), &[2.5]);
        let c = Tensor::<f64>::full(&[3, 4], 7.25).unwrap();
        assert_eq!(reduce_mean(&c, &[0, 1]).unwrap().data(), &[7.25]);
        let r = t(&[1, 2], &[1., 3.]);
        let m = reduce_mean(&r, &[1]).unwrap();
        assert_eq!(m.dims(), &[1]);
        assert_eq!(m.data(), &[2.0]);
        assert!(reduce_mean(&r, &[]).is_err());
        assert!(reduce_mean(&r, &[2]).is_err());
    }

    #[test]
    fn shape_rejects_zero_extent() {
        assert!(Shape::new(&[2, 0]).is_err());
        assert!(Tensor::<f32>::from_vec(&[2], alloc::vec![1.0]).is_err());
    }
}
