//! Symmetric rotation-equivariant (SRE) convolution.
//!
//! Kernels are parameterized by one weight per concentric distance band, so
//! every expanded kernel is invariant under the exact symmetries of the
//! pixel grid (the 8-element dihedral group in 2D, the 48-element
//! octahedral group in 3D). Networks built only from these kernels,
//! pointwise operations, aligned average pooling and global pooling are
//! equivariant through depth and invariant at the classifier.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO; file formats
//! and the command-line front end live in the `sre` crate.
//!
//! Evaluation-mode forward passes sum every symmetric group of terms in an
//! order invariant under the grid symmetries; the equivariance is exact in
//! floating point.
#![no_std]

extern crate alloc;

mod error;
pub mod data;
pub mod eval;
pub mod kernel;
pub mod layers;
pub mod linalg;
pub mod loss;
pub mod network;
pub mod optim;
pub(crate) mod orbit;
pub mod scalar;
pub mod symmetry;
pub mod tensor;
#[cfg(feature = "testing")]
pub mod testing;
pub mod train;
pub mod transform;

pub use error::{Error, Result};
pub use kernel::{BandSpec, BandWeights, IndexMatrix};
pub use network::{Network, NetworkConfig};
pub use scalar::Scalar;
pub use symmetry::GridSymmetry;
pub use tensor::{Shape, Tensor};
