#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sre::npy::{write_npy, NpyArray};

const TOKENS: &[&str] = &[
    "{", "}", "(", ")", "[", "]", ":", ",", " ", "'", "\"", "descr", "fortran_order", "shape", "True", "False",
    "None", "'<f4'", "'|u1'", "'<i8'", "'>f8'", "'<c16'", "0", "1", "-1", "18446744073709551616", "99999999999",
    "'", "\\", "\n", "\u{e9}", "#",
];

fn valid_sample(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = rng.random_range(0..6);
    match rng.random_range(0..3) {
        0 => write_npy(&NpyArray::from_u8(vec![n, 2], (0..2 * n as u8).collect()).unwrap()),
        1 => write_npy(&NpyArray::from_i64(vec![n], &vec![-3; n]).unwrap()),
        _ => write_npy(&NpyArray::from_f32(vec![1, n], &vec![0.5; n]).unwrap()),
    }
}

/// Deterministic malformed or borderline NPY streams.
pub fn fuzzed_npy(seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bytes = valid_sample(&mut rng);
    match rng.random_range(0..7) {
        0 => {
            for _ in 0..rng.random_range(1..8) {
                let i = rng.random_range(0..bytes.len());
                bytes[i] = rng.random();
            }
        }
        1 => {
            let cut = rng.random_range(0..bytes.len());
            bytes.truncate(cut);
        }
        2 => {
            let v: u16 = rng.random();
            bytes[8..10].copy_from_slice(&v.to_le_bytes());
        }
        3 => {
            bytes[6] = rng.random_range(0..5);
            bytes[7] = rng.random_range(0..3);
        }
        4 | 5 => {
            let mut text = String::new();
            for _ in 0..rng.random_range(0..40) {
                text.push_str(TOKENS[rng.random_range(0..TOKENS.len())]);
            }
            if rng.random_bool(0.5) {
                text = format!(
                    "{{'descr': {}, 'fortran_order': {}, 'shape': ({}), }}",
                    TOKENS[rng.random_range(0..TOKENS.len())],
                    TOKENS[rng.random_range(0..TOKENS.len())],
                    text
                );
            }
            text.push('\n');
            let mut out = b"\x93NUMPY\x01\x00".to_vec();
            out.extend_from_slice(&(text.len() as u16).to_le_bytes());
            out.extend_from_slice(text.as_bytes());
            let tail = rng.random_range(0..64);
            out.extend((0..tail).map(|_| rng.random::<u8>()));
            bytes = out;
        }
        _ => {
            let n = rng.random_range(0..32);
            bytes = (0..n).map(|_| rng.random()).collect();
            if rng.random_bool(0.5) {
                bytes.splice(0..0, b"\x93NUMPY".iter().copied());
            }
        }
    }
    bytes
}

/// A small, fast run over synthetic data.
pub fn small_config(kind: &str) -> String {
    format!(
        r#"{{
  "network": {{
    "stem_channels": 4,
    "stages": [{{"channels": 4, "kernel_size": 5, "downsample": true}}],
    "conv_kind": "{kind}"
  }},
  "train": {{"epochs": 2, "batch_size": 16, "lr0": 0.05}},
  "data": {{"synthetic": {{"kind": "oriented-shapes", "n": 12, "size": 16, "seed": 5}}}}
}}"#
    )
}
