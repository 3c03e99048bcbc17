use crate::{Result, Scalar, Tensor};

/// Positions where the input was strictly positive.
#[derive(Clone, Debug)]
pub struct ReluCache {
    mask: alloc::vec::Vec<bool>,
    dims: alloc::vec::Vec<usize>,
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> (Tensor<T>, ReluCache) {
    let mask: alloc::vec::Vec<bool> = x.data().iter().map(|&v| v > T::zero()).collect();
    let y = x.map(|v| if v > T::zero() { v } else { T::zero() });
    (
        y,
        ReluCache {
            mask,
            dims: x.dims().to_vec(),
        },
    )
}

pub fn relu_backward<T: Scalar>(dy: &Tensor<T>, cache: ReluCache) -> Result<Tensor<T>> {
    dy.expect_dims(&cache.dims)?;
    let data = dy
        .data()
        .iter()
        .zip(&cache.mask)
        .map(|(&g, &m)| if m { g } else { T::zero() })
        .collect();
    Tensor::from_vec(&cache.dims, data)
}
