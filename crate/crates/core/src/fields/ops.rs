use serde::{Deserialize, Serialize};

use super::facets::FacetSet;
use super::grid::{FacetId, Grid};
use super::jet::JetField;
use crate::linalg::{Mat, MAX_DIM};

/// Per-cell second gradient; `slices[k]` holds ∂_k ∇y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondGradient {
    pub dim: usize,
    pub slices: [Mat; MAX_DIM],
}

impl SecondGradient {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, slices: [Mat::zeros(dim); MAX_DIM] }
    }

    /// Component ∂_k (∇y)_{ij}.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.slices[k][(i, j)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.slices[..self.dim].iter().map(Mat::norm_sq).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.slices[..self.dim].iter().map(Mat::max_abs).fold(0.0, f64::max)
    }
}

/// Difference weights for ∂_k at cell `c`. Neighbours across `cut` are ignored: central
/// differences when both sides are reachable, one-sided with one, none with neither.
pub(crate) fn difference_stencil(grid: &Grid, cut: &FacetSet, c: usize, k: usize) -> Vec<(usize, f64)> {
    let h = grid.h();
    let reach = |forward: bool| {
        let f = grid.facet_of(c, k, forward)?;
        if cut.contains(&f) {
            return None;
        }
        grid.neighbor(c, k, forward)
    };
    match (reach(false), reach(true)) {
        (Some(a), Some(b)) => vec![(b, 0.5 / h), (a, -0.5 / h)],
        (None, Some(b)) => vec![(b, 1.0 / h), (c, -1.0 / h)],
        (Some(a), None) => vec![(c, 1.0 / h), (a, -1.0 / h)],
        (None, None) => Vec::new(),
    }
}

/// Finite differences of the cell gradients; see [`difference_stencil`] for the stencil.
pub fn second_gradient(field: &JetField) -> Vec<SecondGradient> {
    let grid = &field.grid;
    let cut = field.cut_set();
    let d = grid.dim();
    (0..grid.n_cells())
        .map(|c| {
            let mut out = SecondGradient::zeros(d);
            for k in 0..d {
                for (n, w) in difference_stencil(grid, &cut, c, k) {
                    out.slices[k] = out.slices[k] + field.grads[n].scale(w);
                }
            }
            out
        })
        .collect()
}

/// Compatibility tolerances for jets across facets outside the declared jump sets.
///
/// Traces may differ by `trace · h`. Gradients may differ by `grad + curvature · h`, so that
/// smooth fields with second derivatives up to `curvature` are accepted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub trace: f64,
    pub grad: f64,
    pub curvature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { trace: 1e-8, grad: 1e-8, curvature: 2.0 }
    }
}

impl Tolerances {
    /// Loose tolerances for fields produced by penalized solvers.
    pub fn solver() -> Self {
        Self { trace: 1e-2, grad: 1e-2, curvature: 1e3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Trace,
    Gradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub facet: FacetId,
    pub kind: ViolationKind,
    pub mismatch: f64,
    pub allowed: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub nonfinite_cells: Vec<usize>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.nonfinite_cells.is_empty()
    }

    pub fn count(&self) -> usize {
        self.violations.len() + self.nonfinite_cells.len()
    }

    pub fn facets(&self, kind: ViolationKind) -> Vec<FacetId> {
        self.violations.iter().filter(|v| v.kind == kind).map(|v| v.facet).collect()
    }
}

/// Lists every facet where the jets disagree beyond `tol` without a declared jump.
pub fn validate_field(field: &JetField, tol: &Tolerances) -> ValidationReport {
    let grid = &field.grid;
    let h = grid.h();
    let mut report = ValidationReport::default();
    for c in 0..grid.n_cells() {
        if !(field.values[c].as_slice().iter().all(|v| v.is_finite()) && field.grads[c].is_finite()) {
            report.nonfinite_cells.push(c);
        }
    }
    for f in grid.interior_facets() {
        let (a, b) = grid.facet_cells(f);
        if !field.jy.contains(&f) {
            let m = grid.facet_midpoint(f);
            let mismatch = (field.eval(a, &m) - field.eval(b, &m)).norm();
            let allowed = tol.trace * h;
            if !(mismatch <= allowed) {
                report.violations.push(Violation { facet: f, kind: ViolationKind::Trace, mismatch, allowed });
            }
        }
        if !field.jgrad.contains(&f) {
            let mismatch = (field.grads[a] - field.grads[b]).norm();
            let allowed = tol.grad + tol.curvature * h;
            if !(mismatch <= allowed) {
                report.violations.push(Violation { facet: f, kind: ViolationKind::Gradient, mismatch, allowed });
            }
        }
    }
    report
}
