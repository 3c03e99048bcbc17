use alloc::vec;
use alloc::vec::Vec;

use super::split_dims;
use crate::error::shape_err;
use crate::orbit::OrbitPlan;
use crate::{Result, Scalar, Tensor};

/// Input shape of a pooling forward pass.
#[derive(Clone, Debug)]
pub struct PoolCache {
    dims: Vec<usize>,
}

fn spatial_rank(x_dims: &[usize]) -> Result<usize> {
    match x_dims.len() {
        4 => Ok(2),
        5 => Ok(3),
        _ => Err(shape_err!("expected [N, C, spatial..] with 2 or 3 spatial axes, got {:?}", x_dims)),
    }
}

/// 2× average pooling with stride 2; every window is summed canonically.
pub fn avg_pool<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, PoolCache)> {
    let sd = spatial_rank(x.dims())?;
    let (n, c, ext) = split_dims(x.dims(), sd)?;
    let spatial = &x.dims()[2..];
    if spatial.iter().any(|e| e % 2 == 1) {
        return Err(shape_err!("average pooling needs even extents, got {:?}", spatial));
    }
    let win = if sd == 2 { [1, 2, 2] } else { [2, 2, 2] };
    let oext = [ext[0] / win[0], ext[1] / 2, ext[2] / 2];
    let plan = OrbitPlan::for_grid(&vec![2; sd]);
    let inv = T::one() / T::from_usize(1 << sd);
    let s: usize = ext.iter().product();
    let os: usize = oext.iter().product();
    let mut out = vec![T::zero(); n * c * os];
    for (plane, oplane) in x.data().chunks_exact(s).zip(out.chunks_exact_mut(os)) {
        for z in 0..oext[0] {
            for y in 0..oext[1] {
                for xx in 0..oext[2] {
                    let base = [z * win[0], y * 2, xx * 2];
                    let leaf = |p: usize| {
                        let (a, b, cc) = if sd == 2 { (0, p / 2, p % 2) } else { (p / 4, p / 2 % 2, p % 2) };
                        plane[((base[0] + a) * ext[1] + base[1] + b) * ext[2] + base[2] + cc]
                    };
                    oplane[(z * oext[1] + y) * oext[2] + xx] = plan.sum(leaf) * inv;
                }
            }
        }
    }
    let mut dims = vec![n, c];
    dims.extend(if sd == 2 { &oext[1..] } else { &oext[..] });
    Ok((Tensor::from_vec(&dims, out)?, PoolCache { dims: x.dims().to_vec() }))
}

pub fn avg_pool_backward<T: Scalar>(dy: &Tensor<T>, cache: PoolCache) -> Result<Tensor<T>> {
    let sd = spatial_rank(&cache.dims)?;
    let (n, c, ext) = split_dims(&cache.dims, sd)?;
    let mut odims = vec![n, c];
    odims.extend(cache.dims[2..].iter().map(|e| e / 2));
    dy.expect_dims(&odims)?;
    let zdiv = if sd == 2 { 1 } else { 2 };
    let oext = [ext[0] / zdiv, ext[1] / 2, ext[2] / 2];
    let inv = T::one() / T::from_usize(1 << sd);
    let s: usize = ext.iter().product();
    let os: usize = oext.iter().product();
    let mut dx = vec![T::zero(); n * c * s];
    for (g, plane) in dy.data().chunks_exact(os).zip(dx.chunks_exact_mut(s)) {
        for z in 0..ext[0] {
            for y in 0..ext[1] {
                for xx in 0..ext[2] {
                    plane[(z * ext[1] + y) * ext[2] + xx] = g[((z / zdiv) * oext[1] + y / 2) * oext[2] + xx / 2] * inv;
                }
            }
        }
    }
    Tensor::from_vec(&cache.dims, dx)
}

/// Spatial mean per channel, `[N, C, spatial..] → [N, C]`, summed canonically.
pub fn global_avg_pool<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, PoolCache)> {
    if x.rank() < 3 {
        return Err(shape_err!("global pooling expects [N, C, spatial..], got {:?}", x.dims()));
    }
    let spatial = &x.dims()[2..];
    let s: usize = spatial.iter().product();
    let plan = OrbitPlan::for_grid(spatial);
    let inv = T::one() / T::from_usize(s);
    let out = x.data().chunks_exact(s).map(|p| plan.sum(|i| p[i]) * inv).collect();
    Ok((
        Tensor::from_vec(&x.dims()[..2], out)?,
        PoolCache { dims: x.dims().to_vec() },
    ))
}

pub fn global_avg_pool_backward<T: Scalar>(dy: &Tensor<T>, cache: PoolCache) -> Result<Tensor<T>> {
    dy.expect_dims(&cache.dims[..2])?;
    let s: usize = cache.dims[2..].iter().product();
    let inv = T::one() / T::from_usize(s);
    let mut dx = Vec::with_capacity(dy.len() * s);
    for &g in dy.data() {
        dx.extend(core::iter::repeat_n(g * inv, s));
    }
    Tensor::from_vec(&cache.dims, dx)
}
