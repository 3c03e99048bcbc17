//! Symmetry-canonical summation.
//!
//! A plan partitions grid points into orbits of the symmetry group and sums
//! each orbit with a fixed bracketing:
//!
//! * points are paired with their mirror image through the center;
//! * orbits of one or two pairs are summed directly;
//! * 2D orbits of four pairs are summed as `(P(q) + P(Rq)) + (P(q') + P(Rq'))`
//!   with `R` the quarter turn;
//! * larger orbits (3D) are summed after sorting the pair sums.
//!
//! Orbit totals are accumulated in a fixed orbit order, giving
//! `sum(g·x) == sum(x)` bit for bit.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::{GridSymmetry, Scalar};

/// Largest number of mirror pairs in one orbit (48-element group, no fixed point).
pub(crate) const MAX_TERMS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Term {
    Single(usize),
    Pair(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Combine {
    Chain,
    Tree4,
    Sorted,
}

#[derive(Clone, Debug)]
pub(crate) struct Orbit {
    pub terms: Vec<Term>,
    pub combine: Combine,
}

#[derive(Clone, Debug)]
pub(crate) struct OrbitPlan {
    pub orbits: Vec<Orbit>,
}

/// Doubled centered coordinates of every cell of a grid, row-major.
pub(crate) fn grid_points(extents: &[usize]) -> Vec<[i64; 3]> {
    let d = extents.len();
    let total: usize = extents.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = [0usize; 3];
    for _ in 0..total {
        let mut c = [0i64; 3];
        for i in 0..d {
            c[i] = 2 * idx[i] as i64 - (extents[i] as i64 - 1);
        }
        out.push(c);
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < extents[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    out
}

impl OrbitPlan {
    pub fn for_grid(extents: &[usize]) -> Self {
        Self::new(extents.len(), &grid_points(extents))
    }

    pub fn new(dims: usize, points: &[[i64; 3]]) -> Self {
        let index: BTreeMap<[i64; 3], usize> =
            points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let group: Vec<GridSymmetry> = GridSymmetry::all(dims)
            .into_iter()
            .filter(|g| points.iter().all(|&p| index.contains_key(&g.apply(p))))
            .collect();
        let quarter = GridSymmetry::rot90();
        let has_quarter = dims == 2 && group.contains(&quarter);
        let neg = |p: [i64; 3]| [-p[0], -p[1], -p[2]];

        let mut assigned = alloc::vec![false; points.len()];
        let mut orbits = Vec::new();
        for start in 0..points.len() {
            if assigned[start] {
                continue;
            }
            let mut members: Vec<usize> = group.iter().map(|g| index[&g.apply(points[start])]).collect();
            members.sort_unstable();
            members.dedup();
            for &m in &members {
                assigned[m] = true;
            }
            let mut paired = BTreeMap::new();
            let mut terms = Vec::new();
            for &m in &members {
                if paired.contains_key(&m) {
                    continue;
                }
                match index.get(&neg(points[m])) {
                    Some(&partner) if partner != m && members.contains(&partner) => {
                        paired.insert(m, terms.len());
                        paired.insert(partner, terms.len());
                        terms.push(Term::Pair(m, partner));
                    }
                    _ => {
                        paired.insert(m, terms.len());
                        terms.push(Term::Single(m));
                    }
                }
            }
            let combine = if terms.len() <= 2 {
                Combine::Chain
            } else if terms.len() == 4 && has_quarter {
                let first = match terms[0] {
                    Term::Pair(a, _) | Term::Single(a) => a,
                };
                let turned = paired[&index[&quarter.apply(points[first])]];
                let rest: Vec<Term> = (1..4).filter(|&t| t != turned).map(|t| terms[t]).collect();
                terms = alloc::vec![terms[0], terms[turned], rest[0], rest[1]];
                Combine::Tree4
            } else {
                Combine::Sorted
            };
            orbits.push(Orbit { terms, combine });
        }
        OrbitPlan { orbits }
    }

    /// Canonical sum of `leaf(i)` over all points.
    pub fn sum<T: Scalar>(&self, leaf: impl Fn(usize) -> T) -> T {
        let mut iter = self.orbits.iter();
        let mut acc = match iter.next() {
            Some(o) => o.sum(&leaf),
            None => return T::zero(),
        };
        for o in iter {
            acc = acc + o.sum(&leaf);
        }
        acc
    }
}

impl Term {
    #[inline]
    pub fn value<T: Scalar>(&self, leaf: &impl Fn(usize) -> T) -> T {
        match *self {
            Term::Single(i) => leaf(i),
            Term::Pair(a, b) => leaf(a) + leaf(b),
        }
    }
}

impl Orbit {
    #[inline]
    pub fn sum<T: Scalar>(&self, leaf: &impl Fn(usize) -> T) -> T {
        match self.combine {
            Combine::Chain => {
                let mut acc = self.terms[0].value(leaf);
                if let Some(t) = self.terms.get(1) {
                    acc = acc + t.value(leaf);
                }
                acc
            }
            Combine::Tree4 => {
                let t = &self.terms;
                (t[0].value(leaf) + t[1].value(leaf)) + (t[2].value(leaf) + t[3].value(leaf))
            }
            Combine::Sorted => {
                let mut buf = [T::zero(); MAX_TERMS];
                let n = self.terms.len();
                for (slot, t) in buf.iter_mut().zip(&self.terms) {
                    *slot = t.value(leaf);
                }
                sorted_sum(&mut buf[..n])
            }
        }
    }
}

/// Sum of the values in ascending total order; depends only on the multiset.
#[inline]
pub(crate) fn sorted_sum<T: Scalar>(vals: &mut [T]) -> T {
    vals.sort_unstable_by(|a, b| a.total_cmp(b));
    let mut acc = vals[0];
    for &v in &vals[1..] {
        acc = acc + v;
    }
    acc
}
