//! Exact symmetries of square and cubic grids.
//!
//! Every symmetry of a `d`-dimensional grid that fixes its center is a
//! signed permutation of the axes: 8 of them in 2D (the dihedral group of
//! the square) and 48 in 3D (the full octahedral group). Points use doubled
//! centered coordinates `2·i − (n − 1)`, which are integers for even and odd
//! extents alike.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::shape_err;
use crate::{Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridSymmetry {
    dims: u8,
    perm: [u8; 3],
    neg: [bool; 3],
}

impl GridSymmetry {
    /// Builds `u ↦ v` with `v[i] = ±u[perm[i]]` (minus where `neg[i]`).
    pub fn new(dims: usize, perm: &[usize], neg: &[bool]) -> Result<Self> {
        if !(1..=3).contains(&dims) || perm.len() != dims || neg.len() != dims {
            return Err(shape_err!("symmetry needs {} axes", dims));
        }
        let mut seen = [false; 3];
        let mut p = [0u8, 1, 2];
        let mut n = [false; 3];
        for i in 0..dims {
            if perm[i] >= dims || seen[perm[i]] {
                return Err(shape_err!("{:?} is not a permutation", perm));
            }
            seen[perm[i]] = true;
            p[i] = perm[i] as u8;
            n[i] = neg[i];
        }
        Ok(GridSymmetry {
            dims: dims as u8,
            perm: p,
            neg: n,
        })
    }

    pub fn identity(dims: usize) -> Self {
        GridSymmetry {
            dims: dims as u8,
            perm: [0, 1, 2],
            neg: [false; 3],
        }
    }

    /// Quarter turn of a 2D grid: `[[1,2],[3,4]] → [[3,1],[4,2]]`.
    pub fn rot90() -> Self {
        Self::rot90_about(2, 0)
    }

    /// Mirror across the vertical axis (columns reversed).
    pub fn hflip() -> Self {
        GridSymmetry {
            dims: 2,
            perm: [0, 1, 2],
            neg: [false, true, false],
        }
    }

    /// Mirror across the horizontal axis (rows reversed).
    pub fn vflip() -> Self {
        GridSymmetry {
            dims: 2,
            perm: [0, 1, 2],
            neg: [true, false, false],
        }
    }

    /// Quarter turn in the plane of the two trailing axes other than `axis`.
    /// In 2D `axis` is ignored.
    pub fn rot90_about(dims: usize, axis: usize) -> Self {
        let (i, j) = match (dims, axis) {
            (2, _) => (0, 1),
            (_, 0) => (1, 2),
            (_, 1) => (0, 2),
            _ => (0, 1),
        };
        let mut g = Self::identity(dims);
        g.perm[i] = j as u8;
        g.perm[j] = i as u8;
        g.neg[j] = true;
        g
    }

    /// All signed permutations for `dims` axes, identity first.
    pub fn all(dims: usize) -> Vec<Self> {
        let perms: Vec<Vec<usize>> = match dims {
            1 => vec![vec![0]],
            2 => vec![vec![0, 1], vec![1, 0]],
            _ => vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0],
            ],
        };
        let mut out = Vec::with_capacity(perms.len() << dims);
        for p in &perms {
            for signs in 0..(1usize << dims) {
                let neg: Vec<bool> = (0..dims).map(|i| signs >> i & 1 == 1).collect();
                out.push(Self::new(dims, p, &neg).expect("valid permutation"));
            }
        }
        out
    }

    /// Elements of [`all`](Self::all) that map a grid of these extents onto itself.
    pub fn all_for_extents(extents: &[usize]) -> Vec<Self> {
        Self::all(extents.len())
            .into_iter()
            .filter(|g| g.preserves(extents))
            .collect()
    }

    pub fn dims(&self) -> usize {
        self.dims as usize
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dims())
    }

    /// True when the permutation only exchanges axes of equal extent.
    pub fn preserves(&self, extents: &[usize]) -> bool {
        extents.len() == self.dims()
            && (0..self.dims()).all(|i| extents[self.perm[i] as usize] == extents[i])
    }

    /// Determinant +1 (a rotation rather than a reflection).
    pub fn is_proper(&self) -> bool {
        let d = self.dims();
        let mut parity = self.neg[..d].iter().filter(|&&n| n).count();
        for i in 0..d {
            for j in i + 1..d {
                if self.perm[i] > self.perm[j] {
                    parity += 1;
                }
            }
        }
        parity % 2 == 0
    }

    pub fn apply(&self, u: [i64; 3]) -> [i64; 3] {
        let mut v = [0i64; 3];
        for (i, vi) in v.iter_mut().enumerate().take(self.dims()) {
            let x = u[self.perm[i] as usize];
            *vi = if self.neg[i] { -x } else { x };
        }
        v
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut g = Self::identity(self.dims());
        for i in 0..self.dims() {
            let p = self.perm[i] as usize;
            g.perm[i] = other.perm[p];
            g.neg[i] = self.neg[i] ^ other.neg[p];
        }
        g
    }

    pub fn inverse(&self) -> Self {
        let mut g = Self::identity(self.dims());
        for i in 0..self.dims() {
            let p = self.perm[i] as usize;
            g.perm[p] = i as u8;
            g.neg[p] = self.neg[i];
        }
        g
    }

    pub fn label(&self) -> String {
        if self.dims == 2 {
            let names = [
                (Self::identity(2), "identity"),
                (Self::rot90(), "rot90"),
                (Self::rot90().compose(&Self::rot90()), "rot180"),
                (Self::rot90().inverse(), "rot270"),
                (Self::hflip(), "hflip"),
                (Self::vflip(), "vflip"),
                (Self::rot90().compose(&Self::hflip()), "transpose"),
                (Self::rot90().compose(&Self::vflip()), "antitranspose"),
            ];
            for (g, name) in names {
                if g == *self {
                    return name.into();
                }
            }
        }
        let mut s = String::from("axes");
        for i in 0..self.dims() {
            s.push_str(&format!(
                "{}{}",
                if self.neg[i] { '-' } else { '+' },
                self.perm[i]
            ));
        }
        s
    }

    /// For every output cell of a grid with `extents`, the source cell index.
    pub(crate) fn source_map(&self, extents: &[usize]) -> Result<Vec<usize>> {
        if !self.preserves(extents) {
            return Err(shape_err!(
                "symmetry {} does not preserve grid {:?}",
                self.label(),
                extents
            ));
        }
        let d = self.dims();
        let inv = self.inverse();
        let total: usize = extents.iter().product();
        let mut map = Vec::with_capacity(total);
        let mut idx = [0usize; 3];
        for _ in 0..total {
            let mut c = [0i64; 3];
            for i in 0..d {
                c[i] = 2 * idx[i] as i64 - (extents[i] as i64 - 1);
            }
            let u = inv.apply(c);
            let mut src = 0;
            for i in 0..d {
                src = src * extents[i] + ((u[i] + extents[i] as i64 - 1) / 2) as usize;
            }
            map.push(src);
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < extents[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        Ok(map)
    }

    /// Applies the symmetry to the trailing `dims()` axes of `x`: the value at
    /// cell `u` moves to cell `g·u`. Exact (a permutation of cells).
    pub fn transform<T: Scalar>(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let dims = x.dims();
        let d = self.dims();
        if dims.len() < d {
            return Err(shape_err!("tensor {:?} has fewer than {} axes", dims, d));
        }
        let extents = &dims[dims.len() - d..];
        let map = self.source_map(extents)?;
        let plane = map.len();
        let mut out = alloc::vec::Vec::with_capacity(x.len());
        for chunk in x.data().chunks_exact(plane) {
            out.extend(map.iter().map(|&s| chunk[s]));
        }
        Tensor::from_vec(dims, out)
    }
}

/// Applies `g` to the trailing spatial axes of `x`.
pub fn grid_transform<T: Scalar>(x: &Tensor<T>, g: &GridSymmetry) -> Result<Tensor<T>> {
    g.transform(x)
}
