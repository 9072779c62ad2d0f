//! Closed-form piecewise-smooth fields and their sampling onto a grid.

use serde::{Deserialize, Serialize};

use super::facets::FacetSet;
use super::grid::Grid;
use super::jet::JetField;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    /// Deformations: the map starts from x ↦ x.
    #[default]
    Identity,
    /// Displacements: the map starts from 0.
    Zero,
}

/// Smooth map `x ↦ R(θ)(base(x) + b + A x + ½ Σ_i xᵀ H_i x e_i)`.
///
/// Every ingredient has an `eps_` twin scaled by ε, so `eps_linear = A` together with
/// base identity gives `x + εAx`. The planar rotation angle is `rotation + ε·eps_rotation`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothMap {
    #[serde(default)]
    pub rotation: f64,
    #[serde(default)]
    pub eps_rotation: f64,
    #[serde(default)]
    pub offset: Vec<f64>,
    #[serde(default)]
    pub eps_offset: Vec<f64>,
    #[serde(default)]
    pub linear: Vec<Vec<f64>>,
    #[serde(default)]
    pub eps_linear: Vec<Vec<f64>>,
    /// One Hessian per output component.
    #[serde(default)]
    pub quadratic: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub eps_quadratic: Vec<Vec<Vec<f64>>>,
}

/// A smooth piece; `region` is a per-axis box `[lo, hi]`, absent meaning everywhere.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(default)]
    pub region: Option<Vec<[f64; 2]>>,
    #[serde(flatten)]
    pub map: SmoothMap,
}

/// Axis-aligned facet segment `x_axis = at`, restricted to the box `span` over the other axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub axis: usize,
    pub at: f64,
    pub span: Vec<[f64; 2]>,
}

impl Segment {
    pub fn facets(&self, grid: &Grid) -> Result<FacetSet> {
        let span: Vec<(f64, f64)> = self.span.iter().map(|s| (s[0], s[1])).collect();
        Ok(grid.facets_on_plane(self.axis, self.at, &span)?.into_iter().collect())
    }
}

/// Finitely many smooth pieces; a cell is governed by the first piece whose region holds its center.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub base: Base,
    pub pieces: Vec<Piece>,
    /// Extra facets declared as jumps of both the field and its gradient.
    #[serde(default)]
    pub cracks: Vec<Segment>,
}

/// A smooth map with all ε-dependent parts resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedMap {
    base: Base,
    rotation: Mat,
    offset: Vector,
    linear: Mat,
    hessians: Vec<Mat>,
}

impl ResolvedMap {
    pub fn value(&self, x: &Vector) -> Vector {
        let d = x.dim;
        let mut v = self.offset + self.linear.mul_vec(x);
        if self.base == Base::Identity {
            v += *x;
        }
        for (i, h) in self.hessians.iter().enumerate() {
            v[i] += 0.5 * x.dot(&h.mul_vec(x));
        }
        debug_assert_eq!(v.dim, d);
        self.rotation.mul_vec(&v)
    }

    pub fn gradient(&self, x: &Vector) -> Mat {
        let d = x.dim;
        let mut g = self.linear;
        if self.base == Base::Identity {
            g += Mat::identity(d);
        }
        for (i, h) in self.hessians.iter().enumerate() {
            let row = h.mul_vec(x);
            for j in 0..d {
                g[(i, j)] += row[j];
            }
        }
        self.rotation * g
    }
}

fn vector_of(d: usize, v: &[f64], what: &str) -> Result<Vector> {
    match v.len() {
        0 => Ok(Vector::zeros(d)),
        n if n == d => Ok(Vector::from_slice(v)),
        n => Err(Error::DimensionMismatch { expected: d, found: n }).map_err(|e| annotate(e, what)),
    }
}

fn matrix_of(d: usize, m: &[Vec<f64>], what: &str) -> Result<Mat> {
    if m.is_empty() {
        return Ok(Mat::zeros(d));
    }
    if m.len() != d || m.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParameter(format!("{what} must be a {d}x{d} matrix")));
    }
    Mat::from_rows(m).ok_or_else(|| Error::InvalidParameter(format!("{what} is malformed")))
}

fn annotate(e: Error, what: &str) -> Error {
    Error::InvalidParameter(format!("{what}: {e}"))
}

impl SmoothMap {
    pub fn resolve(&self, base: Base, d: usize, eps: f64) -> Result<ResolvedMap> {
        let angle = self.rotation + eps * self.eps_rotation;
        if d != 2 && angle != 0.0 {
            return Err(Error::InvalidParameter("rotation angles are only supported in two dimensions".into()));
        }
        let offset = vector_of(d, &self.offset, "offset")? + vector_of(d, &self.eps_offset, "eps_offset")?.scale(eps);
        let linear = matrix_of(d, &self.linear, "linear")? + matrix_of(d, &self.eps_linear, "eps_linear")?.scale(eps);
        let mut hessians = vec![Mat::zeros(d); d];
        for (list, scale, what) in [(&self.quadratic, 1.0, "quadratic"), (&self.eps_quadratic, eps, "eps_quadratic")] {
            if list.is_empty() {
                continue;
            }
            if list.len() != d {
                return Err(Error::InvalidParameter(format!("{what} needs one Hessian per component ({d})")));
            }
            for (i, h) in list.iter().enumerate() {
                hessians[i] += matrix_of(d, h, what)?.sym().scale(scale);
            }
        }
        Ok(ResolvedMap { base, rotation: Mat::rotation(d, angle), offset, linear, hessians })
    }
}

impl Piece {
    fn check_region(&self, grid: &Grid, index: usize) -> Result<()> {
        let Some(region) = &self.region else { return Ok(()) };
        if region.len() != grid.dim() {
            return Err(Error::InvalidParameter(format!("piece {index}: region needs {} axes", grid.dim())));
        }
        let outer = grid.outer_extents();
        for (k, b) in region.iter().enumerate() {
            if b[0] > b[1] {
                return Err(Error::InvalidParameter(format!("piece {index}: empty range on axis {k}")));
            }
            for &x in b {
                let inside = x > outer[k].0 && x < outer[k].1;
                if inside && !grid.is_aligned(k, x) {
                    return Err(Error::NotFacetAligned { segment: format!("piece {index}: interface x{k} = {x}") });
                }
            }
        }
        Ok(())
    }

    fn contains(&self, x: &Vector) -> bool {
        match &self.region {
            None => true,
            Some(r) => r.iter().enumerate().all(|(k, b)| x[k] > b[0] && x[k] < b[1]),
        }
    }
}

const JUMP_TOL: f64 = 1e-12;

/// Samples `spec` at cell centers with the ε-dependent parts evaluated at `eps`.
///
/// Facets between cells governed by different pieces enter `jy` when the two maps
/// disagree at the facet midpoint, and `jgrad` when their gradients do.
pub fn sample_analytic(grid: &Grid, spec: &FieldSpec, eps: f64) -> Result<JetField> {
    let d = grid.dim();
    if spec.pieces.is_empty() {
        return Err(Error::InvalidParameter("field spec has no pieces".into()));
    }
    let mut maps = Vec::with_capacity(spec.pieces.len());
    for (i, p) in spec.pieces.iter().enumerate() {
        p.check_region(grid, i)?;
        maps.push(p.map.resolve(spec.base, d, eps).map_err(|e| annotate(e, &format!("piece {i}")))?);
    }
    let n = grid.n_cells();
    let mut owner = Vec::with_capacity(n);
    for c in 0..n {
        let x = grid.center(c);
        let p = spec
            .pieces
            .iter()
            .position(|p| p.contains(&x))
            .ok_or_else(|| Error::Uncovered { cell: c, center: x.as_slice().to_vec() })?;
        owner.push(p);
    }
    let values = (0..n).map(|c| maps[owner[c]].value(&grid.center(c))).collect();
    let grads = (0..n).map(|c| maps[owner[c]].gradient(&grid.center(c))).collect();
    let mut jy = FacetSet::new();
    let mut jgrad = FacetSet::new();
    for f in grid.interior_facets() {
        let (a, b) = grid.facet_cells(f);
        if owner[a] == owner[b] || maps[owner[a]] == maps[owner[b]] {
            continue;
        }
        let m = grid.facet_midpoint(f);
        let (va, vb) = (maps[owner[a]].value(&m), maps[owner[b]].value(&m));
        if (va - vb).norm() > JUMP_TOL * (1.0 + va.norm()) {
            jy.insert(f);
        }
        let (ga, gb) = (maps[owner[a]].gradient(&m), maps[owner[b]].gradient(&m));
        if (ga - gb).norm() > JUMP_TOL * (1.0 + ga.norm()) {
            jgrad.insert(f);
        }
    }
    for s in &spec.cracks {
        let facets = s.facets(grid)?;
        jy.extend(facets.iter().copied());
        jgrad.extend(facets.iter().copied());
    }
    JetField::new(grid.clone(), values, grads, jy, jgrad)
}
