use alloc::vec;

use rand::Rng;

use crate::error::shape_err;
use crate::{Result, Scalar, Tensor};

/// Affine map `[N, F] → [N, C]`, weight stored as `[C, F]`.
#[derive(Clone, Debug)]
pub struct Linear<T = f32> {
    weight: Tensor<T>,
    bias: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct LinearCache<T> {
    input: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct LinearGrads<T> {
    pub dx: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weight.rank() != 2 || bias.dims() != [weight.dims()[0]] {
            return Err(shape_err!("invalid linear weight {:?} / bias {:?}", weight.dims(), bias.dims()));
        }
        Ok(Linear { weight, bias })
    }

    /// Uniform in `±1/√F`; zero bias.
    pub fn init<R: Rng>(features: usize, classes: usize, rng: &mut R) -> Result<Self> {
        let s = 1.0 / libm::sqrt(features as f64);
        let w = (0..features * classes).map(|_| T::from_f64(rng.random_range(-s..=s))).collect();
        Self::new(Tensor::from_vec(&[classes, features], w)?, Tensor::zeros(&[classes])?)
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

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LinearCache<T>)> {
        let [c, f] = [self.weight.dims()[0], self.weight.dims()[1]];
        if x.rank() != 2 || x.dims()[1] != f {
            return Err(shape_err!("linear expects [N, {}], got {:?}", f, x.dims()));
        }
        let n = x.dims()[0];
        let mut out = vec![T::zero(); n * c];
        for i in 0..n {
            let row = &x.data()[i * f..(i + 1) * f];
            for j in 0..c {
                let w = &self.weight.data()[j * f..(j + 1) * f];
                let dot = row.iter().zip(w).fold(T::zero(), |a, (&u, &v)| a + u * v);
                out[i * c + j] = dot + self.bias.data()[j];
            }
        }
        Ok((Tensor::from_vec(&[n, c], out)?, LinearCache { input: x.clone() }))
    }

    pub fn backward(&self, dy: &Tensor<T>, cache: LinearCache<T>) -> Result<LinearGrads<T>> {
        let x = cache.input;
        let [c, f] = [self.weight.dims()[0], self.weight.dims()[1]];
        let n = x.dims()[0];
        dy.expect_dims(&[n, c])?;
        let mut dx = vec![T::zero(); n * f];
        let mut dw = vec![T::zero(); c * f];
        let mut db = vec![T::zero(); c];
        for i in 0..n {
            let row = &x.data()[i * f..(i + 1) * f];
            for j in 0..c {
                let g = dy.data()[i * c + j];
                db[j] = db[j] + g;
                let w = &self.weight.data()[j * f..(j + 1) * f];
                for t in 0..f {
                    dx[i * f + t] = dx[i * f + t] + g * w[t];
                    dw[j * f + t] = dw[j * f + t] + g * row[t];
                }
            }
        }
        Ok(LinearGrads {
            dx: Tensor::from_vec(&[n, f], dx)?,
            weight: Tensor::from_vec(&[c, f], dw)?,
            bias: Tensor::from_vec(&[c], db)?,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Linear<U> {
        Linear {
            weight: self.weight.cast(),
            bias: self.bias.cast(),
        }
    }
}
