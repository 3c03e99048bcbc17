//! SGD with classic momentum and the cosine-annealing schedule.

use crate::{Error, Result, Scalar, Tensor};

pub const DEFAULT_MOMENTUM: f64 = 0.9;

/// `v ← m·v + g`, then `p ← p − lr·v`.
pub fn sgd_step<T: Scalar>(
    param: &mut Tensor<T>,
    grad: &Tensor<T>,
    velocity: &mut Tensor<T>,
    lr: f64,
    momentum: f64,
) -> Result<()> {
    param.expect_same_shape(grad)?;
    param.expect_same_shape(velocity)?;
    let (lr, m) = (T::from_f64(lr), T::from_f64(momentum));
    for ((p, &g), v) in param.data_mut().iter_mut().zip(grad.data()).zip(velocity.data_mut()) {
        *v = m * *v + g;
        *p = *p - lr * *v;
    }
    Ok(())
}

/// `lr0 / 2 · (1 + cos(π t / T))`.
pub fn cosine_lr(step: usize, total: usize, lr0: f64) -> Result<f64> {
    if step > total || total == 0 {
        return Err(Error::ScheduleStep { step, total });
    }
    Ok(lr0 / 2.0 * (1.0 + libm::cos(core::f64::consts::PI * step as f64 / total as f64)))
}
