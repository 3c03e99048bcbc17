//! Rotations and reflections of images and volumes.
//!
//! Angles that are multiples of 90° and all flips are exact cell
//! permutations; other angles use bilinear interpolation about the grid
//! center with zero fill. Positive angles turn the grid the same way as
//! [`GridSymmetry::rot90`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::shape_err;
use crate::{GridSymmetry, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipAxis {
    /// Columns reversed.
    Horizontal,
    /// Rows reversed.
    Vertical,
}

/// Quarter turns for an angle, if it is a multiple of 90°.
fn quarter_turns(angle: f64) -> Option<usize> {
    let q = angle / 90.0;
    if q == libm::round(q) {
        Some((libm::round(q) as i64).rem_euclid(4) as usize)
    } else {
        None
    }
}

fn power(g: GridSymmetry, n: usize) -> GridSymmetry {
    (0..n).fold(GridSymmetry::identity(g.dims()), |acc, _| g.compose(&acc))
}

/// Bilinear rotation of the plane spanned by axes `(ai, aj)` of every
/// trailing `ext` block (2 or 3 axes).
fn rotate_plane<T: Scalar>(x: &Tensor<T>, ext: &[usize], ai: usize, aj: usize, angle: f64) -> Result<Tensor<T>> {
    let (s, c) = libm::sincos(angle.to_radians());
    let block: usize = ext.iter().product();
    let mut e3 = [1usize; 3];
    e3[3 - ext.len()..].copy_from_slice(ext);
    let (ai, aj) = (ai + 3 - ext.len(), aj + 3 - ext.len());
    let ci = (e3[ai] as f64 - 1.0) / 2.0;
    let cj = (e3[aj] as f64 - 1.0) / 2.0;
    let strides = [e3[1] * e3[2], e3[2], 1];
    let mut out = Vec::with_capacity(x.len());
    for chunk in x.data().chunks_exact(block) {
        for p in 0..block {
            let u = [p / strides[0], p / strides[1] % e3[1], p % e3[2]];
            let a = u[ai] as f64 - ci;
            let b = u[aj] as f64 - cj;
            let sa = c * a - s * b + ci;
            let sb = s * a + c * b + cj;
            let (fa, fb) = (libm::floor(sa), libm::floor(sb));
            let (wa, wb) = (sa - fa, sb - fb);
            let mut acc = 0.0;
            for (da, wa) in [(0, 1.0 - wa), (1, wa)] {
                for (db, wb) in [(0, 1.0 - wb), (1, wb)] {
                    let ia = fa as i64 + da;
                    let ib = fb as i64 + db;
                    if ia < 0 || ib < 0 || ia >= e3[ai] as i64 || ib >= e3[aj] as i64 || wa * wb == 0.0 {
                        continue;
                    }
                    let mut v = u;
                    v[ai] = ia as usize;
                    v[aj] = ib as usize;
                    acc += wa * wb * chunk[v[0] * strides[0] + v[1] * strides[1] + v[2]].to_f64();
                }
            }
            out.push(T::from_f64(acc));
        }
    }
    Tensor::from_vec(x.dims(), out)
}

fn trailing<T: Scalar>(x: &Tensor<T>, n: usize) -> Result<&[usize]> {
    let d = x.dims();
    if d.len() < n {
        return Err(shape_err!("expected at least {} spatial axes, got {:?}", n, d));
    }
    Ok(&d[d.len() - n..])
}

/// Rotates the two trailing axes by `angle` degrees about the center.
pub fn rotate_image<T: Scalar>(x: &Tensor<T>, angle: f64) -> Result<Tensor<T>> {
    let ext = trailing(x, 2)?.to_vec();
    match quarter_turns(angle) {
        Some(q) => power(GridSymmetry::rot90(), q).transform(x),
        None => rotate_plane(x, &ext, 0, 1, angle),
    }
}

/// Rotates the three trailing (cubic) axes by `angle` degrees about `axis`.
pub fn rotate_volume<T: Scalar>(x: &Tensor<T>, axis: usize, angle: f64) -> Result<Tensor<T>> {
    let ext = trailing(x, 3)?.to_vec();
    if ext.iter().any(|&e| e != ext[0]) {
        return Err(shape_err!("volume rotation needs a cubic grid, got {:?}", ext));
    }
    if axis > 2 {
        return Err(shape_err!("rotation axis {} out of range", axis));
    }
    let (i, j) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    match quarter_turns(angle) {
        Some(q) => power(GridSymmetry::rot90_about(3, axis), q).transform(x),
        None => rotate_plane(x, &ext, i, j, angle),
    }
}

pub fn reflect_image<T: Scalar>(x: &Tensor<T>, axis: FlipAxis) -> Result<Tensor<T>> {
    match axis {
        FlipAxis::Horizontal => GridSymmetry::hflip().transform(x),
        FlipAxis::Vertical => GridSymmetry::vflip().transform(x),
    }
}

/// One copy of a test set in an evaluation protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImageTransform {
    Identity,
    Rotate { angle: f64 },
    RotateAxis { axis: usize, angle: f64 },
    Flip { axis: FlipAxis },
}

impl ImageTransform {
    pub fn apply<T: Scalar>(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match *self {
            ImageTransform::Identity => Ok(x.clone()),
            ImageTransform::Rotate { angle } => rotate_image(x, angle),
            ImageTransform::RotateAxis { axis, angle } => rotate_volume(x, axis, angle),
            ImageTransform::Flip { axis } => reflect_image(x, axis),
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            ImageTransform::Rotate { angle } => ImageTransform::Rotate { angle: -angle },
            ImageTransform::RotateAxis { axis, angle } => ImageTransform::RotateAxis { axis, angle: -angle },
            t => t,
        }
    }

    /// True when the transform permutes cells without interpolation.
    pub fn is_exact(&self) -> bool {
        match *self {
            ImageTransform::Rotate { angle } | ImageTransform::RotateAxis { angle, .. } => quarter_turns(angle).is_some(),
            _ => true,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            ImageTransform::Identity => "identity".into(),
            ImageTransform::Rotate { angle } => format!("rotate {angle}°"),
            ImageTransform::RotateAxis { axis, angle } => format!("rotate {angle}° about axis {axis}"),
            ImageTransform::Flip { axis: FlipAxis::Horizontal } => "hflip".into(),
            ImageTransform::Flip { axis: FlipAxis::Vertical } => "vflip".into(),
        }
    }
}
