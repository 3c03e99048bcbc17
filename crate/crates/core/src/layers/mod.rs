//! Differentiable building blocks with hand-written backward passes.
//!
//! Every layer keeps its forward cache in a dedicated struct that the
//! matching `backward` consumes by value. SRE convolution sums spatial
//! neighborhoods in the symmetry-canonical order of [`crate::orbit`] in both
//! modes; the other layers commute with grid symmetries bit for bit in
//! evaluation mode.

mod activation;
mod batchnorm;
mod conv;
mod linear;
mod pointwise;
mod pool;

pub use activation::{relu, relu_backward, ReluCache};
pub use batchnorm::{BatchNorm, BatchNormCache, BatchNormGrads, BN_EPSILON, BN_MOMENTUM};
pub use conv::{conv_macs, ConvCache, ConvGrads, DenseConv, SreConv};
pub use linear::{Linear, LinearCache, LinearGrads};
pub use pointwise::{PointwiseCache, PointwiseConv, PointwiseGrads};
pub use pool::{avg_pool, avg_pool_backward, global_avg_pool, global_avg_pool_backward, PoolCache};

use crate::error::shape_err;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Splits `[N, C, spatial..]` into `(N, C, [D, H, W])`, with `D = 1` in 2D.
pub(crate) fn split_dims(dims: &[usize], spatial: usize) -> Result<(usize, usize, [usize; 3])> {
    if dims.len() != spatial + 2 || !(2..=3).contains(&spatial) {
        return Err(shape_err!(
            "expected [N, C] plus {} spatial axes, got {:?}",
            spatial,
            dims
        ));
    }
    let ext = if spatial == 2 {
        [1, dims[2], dims[3]]
    } else {
        [dims[2], dims[3], dims[4]]
    };
    Ok((dims[0], dims[1], ext))
}
