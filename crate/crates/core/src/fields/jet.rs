use serde::{Deserialize, Serialize};

use super::facets::FacetSet;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

/// Piecewise-affine field: one value and one gradient per cell, plus declared
/// discontinuity sets for the field (`jy`) and for its gradient (`jgrad`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetField {
    pub grid: Grid,
    pub values: Vec<Vector>,
    pub grads: Vec<Mat>,
    pub jy: FacetSet,
    pub jgrad: FacetSet,
}

impl JetField {
    pub fn new(grid: Grid, values: Vec<Vector>, grads: Vec<Mat>, jy: FacetSet, jgrad: FacetSet) -> Result<Self> {
        let n = grid.n_cells();
        if values.len() != n || grads.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.len().min(grads.len()) });
        }
        let d = grid.dim();
        if let Some(bad) = values.iter().map(|v| v.dim).chain(grads.iter().map(|g| g.dim)).find(|&k| k != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad });
        }
        if !jy.fits(&grid) || !jgrad.fits(&grid) {
            return Err(Error::InvalidParameter("jump set contains a facet that is not interior".into()));
        }
        Ok(Self { grid, values, grads, jy, jgrad })
    }

    /// The identity deformation x ↦ x without jumps.
    pub fn identity(grid: &Grid) -> Self {
        let n = grid.n_cells();
        let d = grid.dim();
        Self {
            grid: grid.clone(),
            values: (0..n).map(|c| grid.center(c)).collect(),
            grads: vec![Mat::identity(d); n],
            jy: FacetSet::new(),
            jgrad: FacetSet::new(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    /// Affine extension of the jet of cell `c` evaluated at `x`.
    pub fn eval(&self, c: usize, x: &Vector) -> Vector {
        self.values[c] + self.grads[c].mul_vec(&(*x - self.grid.center(c)))
    }

    /// Jy ∪ J∇y: facets across which the second-gradient stencil does not reach.
    pub fn cut_set(&self) -> FacetSet {
        self.jy.union(&self.jgrad)
    }

    /// x ↦ R y(x) + b applied jet-wise.
    pub fn rigid_transform(&self, r: &Mat, b: &Vector) -> Self {
        let mut out = self.clone();
        for (v, g) in out.values.iter_mut().zip(out.grads.iter_mut()) {
            *v = r.mul_vec(v) + *b;
            *g = *r * *g;
        }
        out
    }
}

/// Rescaled displacement: a jet field whose value and gradient jumps both live in `Ju`,
/// together with a cell mask of the divergence set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementJet {
    field: JetField,
    divergence: Vec<bool>,
}

impl DisplacementJet {
    /// Merges the two jump sets of `field` into `Ju`. The divergence mask must avoid the frame.
    pub fn new(mut field: JetField, divergence: Vec<bool>) -> Result<Self> {
        if divergence.len() != field.n_cells() {
            return Err(Error::DimensionMismatch { expected: field.n_cells(), found: divergence.len() });
        }
        if let Some(c) = (0..divergence.len()).find(|&c| divergence[c] && field.grid.is_frame(c)) {
            return Err(Error::InvalidParameter(format!("divergence set touches the frame at cell {c}")));
        }
        let ju = field.cut_set();
        field.jy = ju.clone();
        field.jgrad = ju;
        Ok(Self { field, divergence })
    }

    pub fn without_divergence(field: JetField) -> Self {
        let n = field.n_cells();
        Self::new(field, vec![false; n]).expect("empty divergence mask is admissible")
    }

    pub fn field(&self) -> &JetField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        &self.field.grid
    }

    pub fn ju(&self) -> &FacetSet {
        &self.field.jy
    }

    pub fn divergence(&self) -> &[bool] {
        &self.divergence
    }

    pub fn value(&self, c: usize) -> Vector {
        self.field.values[c]
    }

    pub fn gradient(&self, c: usize) -> Mat {
        self.field.grads[c]
    }

    /// Symmetric strain e(u) of cell `c`.
    pub fn strain(&self, c: usize) -> Mat {
        self.field.grads[c].sym()
    }
}
