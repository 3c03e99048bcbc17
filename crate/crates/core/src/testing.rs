//! Independent oracles for tests: central finite differences and a direct
//! (loop-nest) convolution.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Tensor;

/// Central differences `(f(x + h·e_i) − f(x − h·e_i)) / 2h` for every coordinate.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let norm = |v: &mut dyn Iterator<Item = f64>| libm::sqrt(v.map(|x| x * x).sum::<f64>());
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn random_tensor(dims: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("positive extents")
}

/// Zero-padded stride-1 cross-correlation by explicit loops over
/// `[N, C_in, spatial..]` and a `[C_out, C_in, k..]` kernel.
pub fn direct_conv(x: &Tensor<f64>, kernel: &Tensor<f64>, bias: &[f64]) -> Tensor<f64> {
    let d = x.rank() - 2;
    let (n, ci) = (x.dims()[0], x.dims()[1]);
    let co = kernel.dims()[0];
    let k = kernel.dims()[2];
    let r = (k / 2) as i64;
    let mut ext = [1usize; 3];
    ext[3 - d..].copy_from_slice(&x.dims()[2..]);
    let mut kext = [1usize; 3];
    kext[3 - d..].fill(k);
    let s: usize = ext.iter().product();
    let kv: usize = kext.iter().product();
    let mut out = vec![0.0; n * co * s];
    for b in 0..n {
        for o in 0..co {
            for p in 0..s {
                let u = [p / (ext[1] * ext[2]), p / ext[2] % ext[1], p % ext[2]];
                let mut acc = bias[o];
                for i in 0..ci {
                    for q in 0..kv {
                        let c = [q / (kext[1] * kext[2]), q / kext[2] % kext[1], q % kext[2]];
                        let mut src = [0i64; 3];
                        let mut inside = true;
                        for a in 0..3 {
                            let off = if kext[a] == 1 { 0 } else { c[a] as i64 - r };
                            src[a] = u[a] as i64 + off;
                            inside &= src[a] >= 0 && src[a] < ext[a] as i64;
                        }
                        if inside {
                            let xi = ((b * ci + i) * ext[0] + src[0] as usize) * ext[1] * ext[2]
                                + src[1] as usize * ext[2]
                                + src[2] as usize;
                            acc += kernel.data()[(o * ci + i) * kv + q] * x.data()[xi];
                        }
                    }
                }
                out[(b * co + o) * s + p] = acc;
            }
        }
    }
    let mut dims = x.dims().to_vec();
    dims[1] = co;
    Tensor::from_vec(&dims, out).expect("consistent shape")
}
