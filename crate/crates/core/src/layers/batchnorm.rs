use alloc::vec;
use alloc::vec::Vec;

use super::Mode;
use crate::error::shape_err;
use crate::{Error, Result, Scalar, Tensor};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization over batch and spatial axes.
#[derive(Clone, Debug)]
pub struct BatchNorm<T = f32> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct BatchNormCache<T> {
    xhat: Tensor<T>,
    inv_std: Vec<T>,
    mode: Mode,
}

#[derive(Clone, Debug)]
pub struct BatchNormGrads<T> {
    pub dx: Tensor<T>,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize) -> Result<Self> {
        Ok(BatchNorm {
            gamma: Tensor::full(&[channels], T::one())?,
            beta: Tensor::zeros(&[channels])?,
            running_mean: Tensor::zeros(&[channels])?,
            running_var: Tensor::full(&[channels], T::one())?,
        })
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn layout(&self, x: &Tensor<T>) -> Result<(usize, usize)> {
        let d = x.dims();
        if d.len() < 2 || d[1] != self.channels() {
            return Err(shape_err!("batch norm expects [N, {}, ..], got {:?}", self.channels(), d));
        }
        Ok((d[0], d[2..].iter().product()))
    }

    fn normalize(&self, x: &Tensor<T>, mean: &[T], inv_std: &[T]) -> Result<(Tensor<T>, Tensor<T>)> {
        let (_, s) = self.layout(x)?;
        let c = self.channels();
        let mut xhat = Vec::with_capacity(x.len());
        let mut y = Vec::with_capacity(x.len());
        for (j, plane) in x.data().chunks_exact(s).enumerate() {
            let ch = j % c;
            let (g, b) = (self.gamma.data()[ch], self.beta.data()[ch]);
            for &v in plane {
                let h = (v - mean[ch]) * inv_std[ch];
                xhat.push(h);
                y.push(g * h + b);
            }
        }
        Ok((Tensor::from_vec(x.dims(), y)?, Tensor::from_vec(x.dims(), xhat)?))
    }

    /// Normalizes with batch statistics and updates the running estimates.
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, BatchNormCache<T>)> {
        let (n, s) = self.layout(x)?;
        let m = n * s;
        if m < 2 {
            return Err(Error::DegenerateBatch);
        }
        let c = self.channels();
        let mut mean = vec![T::zero(); c];
        for (j, plane) in x.data().chunks_exact(s).enumerate() {
            mean[j % c] = mean[j % c] + plane.iter().fold(T::zero(), |a, &v| a + v);
        }
        let mf = T::from_usize(m);
        for v in &mut mean {
            *v = *v / mf;
        }
        let mut var = vec![T::zero(); c];
        for (j, plane) in x.data().chunks_exact(s).enumerate() {
            let mu = mean[j % c];
            var[j % c] = var[j % c] + plane.iter().fold(T::zero(), |a, &v| a + (v - mu) * (v - mu));
        }
        for v in &mut var {
            *v = *v / mf;
        }
        let eps = T::from_f64(BN_EPSILON);
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (y, xhat) = self.normalize(x, &mean, &inv_std)?;
        let mom = T::from_f64(BN_MOMENTUM);
        let unbias = mf / T::from_usize(m - 1);
        for ch in 0..c {
            let rm = &mut self.running_mean.data_mut()[ch];
            *rm = (T::one() - mom) * *rm + mom * mean[ch];
            let rv = &mut self.running_var.data_mut()[ch];
            *rv = (T::one() - mom) * *rv + mom * var[ch] * unbias;
        }
        Ok((
            y,
            BatchNormCache {
                xhat,
                inv_std,
                mode: Mode::Train,
            },
        ))
    }

    /// Normalizes with the running statistics.
    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<(Tensor<T>, BatchNormCache<T>)> {
        let eps = T::from_f64(BN_EPSILON);
        let inv_std: Vec<T> = self.running_var.data().iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (y, xhat) = self.normalize(x, self.running_mean.data(), &inv_std)?;
        Ok((
            y,
            BatchNormCache {
                xhat,
                inv_std,
                mode: Mode::Eval,
            },
        ))
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, BatchNormCache<T>)> {
        match mode {
            Mode::Train => self.forward_train(x),
            Mode::Eval => self.forward_eval(x),
        }
    }

    pub fn backward(&self, dy: &Tensor<T>, cache: BatchNormCache<T>) -> Result<BatchNormGrads<T>> {
        dy.expect_same_shape(&cache.xhat)?;
        let (n, s) = self.layout(dy)?;
        let c = self.channels();
        let mut dgamma = vec![T::zero(); c];
        let mut dbeta = vec![T::zero(); c];
        for (j, (g, h)) in dy.data().chunks_exact(s).zip(cache.xhat.data().chunks_exact(s)).enumerate() {
            let ch = j % c;
            dbeta[ch] = dbeta[ch] + g.iter().fold(T::zero(), |a, &v| a + v);
            dgamma[ch] = dgamma[ch] + g.iter().zip(h).fold(T::zero(), |a, (&u, &v)| a + u * v);
        }
        let mut dx = Vec::with_capacity(dy.len());
        match cache.mode {
            Mode::Eval => {
                for (j, g) in dy.data().chunks_exact(s).enumerate() {
                    let f = self.gamma.data()[j % c] * cache.inv_std[j % c];
                    dx.extend(g.iter().map(|&v| v * f));
                }
            }
            Mode::Train => {
                let mf = T::from_usize(n * s);
                for (j, (g, h)) in dy.data().chunks_exact(s).zip(cache.xhat.data().chunks_exact(s)).enumerate() {
                    let ch = j % c;
                    let f = self.gamma.data()[ch] * cache.inv_std[ch] / mf;
                    dx.extend(
                        g.iter()
                            .zip(h)
                            .map(|(&gv, &hv)| f * (mf * gv - dbeta[ch] - hv * dgamma[ch])),
                    );
                }
            }
        }
        Ok(BatchNormGrads {
            dx: Tensor::from_vec(dy.dims(), dx)?,
            gamma: Tensor::from_vec(&[c], dgamma)?,
            beta: Tensor::from_vec(&[c], dbeta)?,
        })
    }

    pub fn cast<U: Scalar>(&self) -> BatchNorm<U> {
        BatchNorm {
            gamma: self.gamma.cast(),
            beta: self.beta.cast(),
            running_mean: self.running_mean.cast(),
            running_var: self.running_var.cast(),
        }
    }
}
