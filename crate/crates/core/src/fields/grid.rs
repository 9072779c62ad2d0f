use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Vector, MAX_DIM};

const ALIGN_TOL: f64 = 1e-9;

/// Uniform Cartesian grid on the outer box, with an inner box of cells on which
/// the deformation is free. Cells outside the inner box form the Dirichlet frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    origin: Vector,
    h: f64,
    counts: [usize; MAX_DIM],
    inner_lo: [usize; MAX_DIM],
    inner_hi: [usize; MAX_DIM],
}

/// An interior facet: the interface between `cell` and its successor along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FacetId {
    pub axis: usize,
    pub cell: usize,
}

impl Grid {
    /// `outer` and `inner` are per-axis `(lo, hi)` extents in length units.
    pub fn new(outer: &[(f64, f64)], inner: &[(f64, f64)], h: f64) -> Result<Self> {
        let dim = outer.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 2..=3")));
        }
        if inner.len() != dim {
            return Err(Error::InvalidGrid("inner box dimension differs from outer box".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("cell size {h} must be positive")));
        }
        let origin = Vector::from_slice(&outer.iter().map(|b| b.0).collect::<Vec<_>>());
        let mut counts = [1; MAX_DIM];
        let mut inner_lo = [0; MAX_DIM];
        let mut inner_hi = [1; MAX_DIM];
        let mut strict = false;
        for k in 0..dim {
            let (lo, hi) = outer[k];
            let n = to_steps(hi - lo, h).ok_or_else(|| {
                Error::InvalidGrid(format!("outer extent {lo}..{hi} on axis {k} is not a multiple of h = {h}"))
            })?;
            if n < 4 {
                return Err(Error::InvalidGrid(format!("axis {k} has {n} cells, need at least 4")));
            }
            let (ilo, ihi) = inner[k];
            let a = to_steps(ilo - lo, h);
            let b = to_steps(ihi - lo, h);
            let (Some(a), Some(b)) = (a, b) else {
                return Err(Error::InvalidGrid(format!("inner extent {ilo}..{ihi} on axis {k} is not facet-aligned")));
            };
            if ilo < lo - ALIGN_TOL * h || ihi > hi + ALIGN_TOL * h || b <= a || b > n {
                return Err(Error::InvalidGrid(format!("inner extent {ilo}..{ihi} not inside {lo}..{hi} on axis {k}")));
            }
            strict |= a > 0 || b < n;
            counts[k] = n;
            inner_lo[k] = a;
            inner_hi[k] = b;
        }
        if !strict {
            return Err(Error::InvalidGrid("inner box must be strictly smaller than the outer box on some face".into()));
        }
        Ok(Self { dim, origin, h, counts, inner_lo, inner_hi })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Vector {
        self.origin
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn n_cells(&self) -> usize {
        self.counts().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn facet_area(&self) -> f64 {
        self.h.powi(self.dim as i32 - 1)
    }

    /// Total volume of the outer box.
    pub fn volume(&self) -> f64 {
        self.n_cells() as f64 * self.cell_volume()
    }

    pub fn outer_extents(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|k| (self.origin[k], self.origin[k] + self.counts[k] as f64 * self.h))
            .collect()
    }

    pub fn inner_extents(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|k| {
                (self.origin[k] + self.inner_lo[k] as f64 * self.h, self.origin[k] + self.inner_hi[k] as f64 * self.h)
            })
            .collect()
    }

    /// Axis 0 varies fastest.
    pub fn index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for k in (0..self.dim).rev() {
            idx = idx * self.counts[k] + multi[k];
        }
        idx
    }

    pub fn multi_index(&self, mut c: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        for k in 0..self.dim {
            m[k] = c % self.counts[k];
            c /= self.counts[k];
        }
        m
    }

    pub fn center(&self, c: usize) -> Vector {
        let m = self.multi_index(c);
        let mut x = self.origin;
        for k in 0..self.dim {
            x[k] += (m[k] as f64 + 0.5) * self.h;
        }
        x
    }

    /// Whether cell `c` lies in the inner box Ω.
    pub fn in_inner(&self, c: usize) -> bool {
        let m = self.multi_index(c);
        (0..self.dim).all(|k| m[k] >= self.inner_lo[k] && m[k] < self.inner_hi[k])
    }

    pub fn is_frame(&self, c: usize) -> bool {
        !self.in_inner(c)
    }

    pub fn neighbor(&self, c: usize, axis: usize, forward: bool) -> Option<usize> {
        let m = self.multi_index(c);
        let stride: usize = self.counts[..axis].iter().product();
        if forward {
            (m[axis] + 1 < self.counts[axis]).then(|| c + stride)
        } else {
            (m[axis] > 0).then(|| c - stride)
        }
    }

    /// Facet between `c` and its neighbor in the given direction, if interior.
    pub fn facet_of(&self, c: usize, axis: usize, forward: bool) -> Option<FacetId> {
        if forward {
            self.neighbor(c, axis, true).map(|_| FacetId { axis, cell: c })
        } else {
            self.neighbor(c, axis, false).map(|n| FacetId { axis, cell: n })
        }
    }

    pub fn facet_cells(&self, f: FacetId) -> (usize, usize) {
        let stride: usize = self.counts[..f.axis].iter().product();
        (f.cell, f.cell + stride)
    }

    pub fn is_interior_facet(&self, f: FacetId) -> bool {
        f.axis < self.dim && f.cell < self.n_cells() && self.multi_index(f.cell)[f.axis] + 1 < self.counts[f.axis]
    }

    pub fn facet_midpoint(&self, f: FacetId) -> Vector {
        let mut x = self.center(f.cell);
        x[f.axis] += 0.5 * self.h;
        x
    }

    /// All interior facets in (axis, cell) order.
    pub fn interior_facets(&self) -> impl Iterator<Item = FacetId> + '_ {
        (0..self.dim).flat_map(move |axis| {
            (0..self.n_cells()).filter_map(move |c| self.facet_of(c, axis, true))
        })
    }

    /// Facets with both neighbours in Ω.
    pub fn is_inner_facet(&self, f: FacetId) -> bool {
        let (a, b) = self.facet_cells(f);
        self.in_inner(a) && self.in_inner(b)
    }

    /// Facets on the hyperplane `x_axis = at` whose midpoints fall in the closed box `span`
    /// over the remaining axes (given in increasing axis order).
    pub fn facets_on_plane(&self, axis: usize, at: f64, span: &[(f64, f64)]) -> Result<Vec<FacetId>> {
        let describe = || format!("plane x{axis} = {at}, span {span:?}");
        if axis >= self.dim || span.len() + 1 != self.dim {
            return Err(Error::InvalidParameter(format!("malformed crack segment: {}", describe())));
        }
        let steps = to_steps(at - self.origin[axis], self.h)
            .ok_or_else(|| Error::NotFacetAligned { segment: describe() })?;
        if steps == 0 || steps >= self.counts[axis] {
            return Err(Error::InvalidParameter(format!("segment not interior: {}", describe())));
        }
        let others: Vec<usize> = (0..self.dim).filter(|&k| k != axis).collect();
        for (&k, &(lo, hi)) in others.iter().zip(span) {
            let (olo, ohi) = self.outer_extents()[k];
            for b in [lo, hi] {
                if b > olo + ALIGN_TOL && b < ohi - ALIGN_TOL && to_steps(b - self.origin[k], self.h).is_none() {
                    return Err(Error::NotFacetAligned { segment: describe() });
                }
            }
        }
        let mut out = Vec::new();
        for c in 0..self.n_cells() {
            let m = self.multi_index(c);
            if m[axis] + 1 != steps {
                continue;
            }
            let x = self.center(c);
            if others.iter().zip(span).all(|(&k, &(lo, hi))| x[k] > lo && x[k] < hi) {
                out.push(FacetId { axis, cell: c });
            }
        }
        Ok(out)
    }

    /// Whether `x` is a facet-aligned coordinate on `axis`.
    pub fn is_aligned(&self, axis: usize, x: f64) -> bool {
        to_steps(x - self.origin[axis], self.h).is_some()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self == other
    }
}

fn to_steps(len: f64, h: f64) -> Option<usize> {
    let r = len / h;
    let n = r.round();
    ((r - n).abs() <= ALIGN_TOL * r.abs().max(1.0) && n >= 0.0).then_some(n as usize)
}
