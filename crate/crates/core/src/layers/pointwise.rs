use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::shape_err;
use crate::{Result, Scalar, Tensor};

/// 1×1 convolution over `[N, C, spatial..]`.
#[derive(Clone, Debug)]
pub struct PointwiseConv<T = f32> {
    weight: Tensor<T>,
    bias: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct PointwiseCache<T> {
    input: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct PointwiseGrads<T> {
    pub dx: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> PointwiseConv<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weight.rank() != 2 || bias.dims() != [weight.dims()[0]] {
            return Err(shape_err!("invalid pointwise weight {:?} / bias {:?}", weight.dims(), bias.dims()));
        }
        Ok(PointwiseConv { weight, bias })
    }

    /// Uniform in `±1/√C_in`; zero bias.
    pub fn init<R: Rng>(c_in: usize, c_out: usize, rng: &mut R) -> Result<Self> {
        let s = 1.0 / libm::sqrt(c_in as f64);
        let w = (0..c_in * c_out).map(|_| T::from_f64(rng.random_range(-s..=s))).collect();
        Self::new(Tensor::from_vec(&[c_out, c_in], w)?, Tensor::zeros(&[c_out])?)
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

    fn check(&self, x: &Tensor<T>) -> Result<(usize, usize)> {
        let d = x.dims();
        if d.len() < 3 || d[1] != self.weight.dims()[1] {
            return Err(shape_err!(
                "pointwise conv expects [N, {}, ..], got {:?}",
                self.weight.dims()[1],
                d
            ));
        }
        Ok((d[0], d[2..].iter().product()))
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, PointwiseCache<T>)> {
        let (n, s) = self.check(x)?;
        let [c_out, c_in] = [self.weight.dims()[0], self.weight.dims()[1]];
        let mut out = vec![T::zero(); n * c_out * s];
        let w = self.weight.data();
        for i in 0..n {
            let xs = &x.data()[i * c_in * s..(i + 1) * c_in * s];
            for co in 0..c_out {
                let y = &mut out[(i * c_out + co) * s..][..s];
                for ci in 0..c_in {
                    let wv = w[co * c_in + ci];
                    for (o, &v) in y.iter_mut().zip(&xs[ci * s..(ci + 1) * s]) {
                        *o = *o + wv * v;
                    }
                }
                let b = self.bias.data()[co];
                for o in y.iter_mut() {
                    *o = *o + b;
                }
            }
        }
        let mut dims = x.dims().to_vec();
        dims[1] = c_out;
        Ok((Tensor::from_vec(&dims, out)?, PointwiseCache { input: x.clone() }))
    }

    pub fn backward(&self, dy: &Tensor<T>, cache: PointwiseCache<T>) -> Result<PointwiseGrads<T>> {
        let x = cache.input;
        let (n, s) = self.check(&x)?;
        let [c_out, c_in] = [self.weight.dims()[0], self.weight.dims()[1]];
        let mut ydims = x.dims().to_vec();
        ydims[1] = c_out;
        dy.expect_dims(&ydims)?;
        let w = self.weight.data();
        let mut dx = vec![T::zero(); x.len()];
        let mut dw = vec![T::zero(); c_out * c_in];
        let mut db: Vec<T> = vec![T::zero(); c_out];
        for i in 0..n {
            let xs = &x.data()[i * c_in * s..(i + 1) * c_in * s];
            let g = &dy.data()[i * c_out * s..(i + 1) * c_out * s];
            for co in 0..c_out {
                let gp = &g[co * s..(co + 1) * s];
                db[co] = db[co] + gp.iter().fold(T::zero(), |a, &v| a + v);
                for ci in 0..c_in {
                    let xp = &xs[ci * s..(ci + 1) * s];
                    let dot = gp.iter().zip(xp).fold(T::zero(), |a, (&u, &v)| a + u * v);
                    dw[co * c_in + ci] = dw[co * c_in + ci] + dot;
                    let wv = w[co * c_in + ci];
                    for (d, &u) in dx[(i * c_in + ci) * s..][..s].iter_mut().zip(gp) {
                        *d = *d + wv * u;
                    }
                }
            }
        }
        Ok(PointwiseGrads {
            dx: Tensor::from_vec(x.dims(), dx)?,
            weight: Tensor::from_vec(&[c_out, c_in], dw)?,
            bias: Tensor::from_vec(&[c_out], db)?,
        })
    }

    pub fn cast<U: Scalar>(&self) -> PointwiseConv<U> {
        PointwiseConv {
            weight: self.weight.cast(),
            bias: self.bias.cast(),
        }
    }
}
