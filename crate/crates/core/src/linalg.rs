//! Fixed-capacity vectors and matrices for dimensions 2 and 3.
//!
//! Per-cell jets are tiny, so these live on the stack. Singular value
//! decompositions in dimension 3 go through `nalgebra`; dimension 2 uses
//! closed forms.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 3;

/// A point or vector in ℝ^d, d ≤ 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub dim: usize,
    pub data: [f64; MAX_DIM],
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        Self { dim, data: [0.0; MAX_DIM] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = Self::zeros(s.len());
        v.data[..s.len()].copy_from_slice(s);
        v
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[axis] = 1.0;
        v
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut v = *self;
        v.data.iter_mut().for_each(|x| *x *= s);
        v
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(mut self, rhs: Vector) -> Vector {
        for i in 0..self.dim {
            self.data[i] += rhs.data[i];
        }
        self
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(mut self, rhs: Vector) -> Vector {
        for i in 0..self.dim {
            self.data[i] -= rhs.data[i];
        }
        self
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, rhs: Vector) {
        *self = *self + rhs;
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

/// A d×d matrix, d ≤ 3, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub dim: usize,
    pub data: [[f64; MAX_DIM]; MAX_DIM],
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        Self { dim, data: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.data[i][i] = e;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        let mut m = Self::zeros(dim);
        for (i, r) in rows.iter().enumerate() {
            m.data[i][..dim].copy_from_slice(r);
        }
        Some(m)
    }

    /// Row-major flattening, length d².
    pub fn from_flat(dim: usize, flat: &[f64]) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = flat[i * dim + j];
            }
        }
        m
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let d = self.dim;
        (0..d * d).map(|k| self.data[k / d][k % d]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.data[i][..self.dim].to_vec()).collect()
    }

    /// Planar rotation by `angle` (dimension 2), or about the last axis (dimension 3).
    pub fn rotation(dim: usize, angle: f64) -> Self {
        let mut m = Self::identity(dim);
        let (s, c) = angle.sin_cos();
        m.data[0][0] = c;
        m.data[0][1] = -s;
        m.data[1][0] = s;
        m.data[1][1] = c;
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[j][i] = self.data[i][j];
            }
        }
        m
    }

    pub fn sym(&self) -> Self {
        (*self + self.transpose()).scale(0.5)
    }

    pub fn skew(&self) -> Self {
        (*self - self.transpose()).scale(0.5)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for row in m.data.iter_mut() {
            row.iter_mut().for_each(|x| *x *= s);
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    /// Frobenius inner product.
    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.data[i][j] * other.data[i][j];
            }
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.data[i][j].abs());
            }
        }
        m
    }

    pub fn det(&self) -> f64 {
        let a = &self.data;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Cofactor matrix, the derivative of the determinant.
    pub fn cofactor(&self) -> Self {
        let a = &self.data;
        let mut c = Self::zeros(self.dim);
        match self.dim {
            1 => c.data[0][0] = 1.0,
            2 => {
                c.data[0][0] = a[1][1];
                c.data[0][1] = -a[1][0];
                c.data[1][0] = -a[0][1];
                c.data[1][1] = a[0][0];
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                        c.data[i][j] = a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1];
                    }
                }
            }
        }
        c
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            out.data[i] = (0..self.dim).map(|j| self.data[i][j] * v.data[j]).sum();
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.data[i][j])
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i][j] = m[(i, j)];
            }
        }
        out
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.to_dmatrix().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i][j]
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(mut self, rhs: Mat) -> Mat {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] += rhs.data[i][j];
            }
        }
        self
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(mut self, rhs: Mat) -> Mat {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
        self
    }
}

impl AddAssign for Mat {
    fn add_assign(&mut self, rhs: Mat) {
        *self = *self + rhs;
    }
}

impl SubAssign for Mat {
    fn sub_assign(&mut self, rhs: Mat) {
        *self = *self - rhs;
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        let d = self.dim;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.data[i][j] = (0..d).map(|k| self.data[i][k] * rhs.data[k][j]).sum();
            }
        }
        m
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

/// Result of projecting a matrix onto SO(d).
#[derive(Clone, Copy, Debug)]
pub struct RotationFit {
    pub rotation: Mat,
    /// Smallest singular value of the input; the projection is not unique when it vanishes
    /// together with a negative determinant.
    pub sigma_min: f64,
    pub degenerate: bool,
}

/// Below this smallest singular value the projection onto SO(d) is treated as undefined.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// Nearest point of SO(d) to `f` in the Frobenius norm.
///
/// Computed as `U Vᵀ` from `f = U Σ Vᵀ`, flipping the last column of `U` when
/// `det(U Vᵀ) < 0`. Degenerate inputs fall back to the identity.
pub fn nearest_rotation(f: &Mat) -> RotationFit {
    let d = f.dim;
    let sigma_min = f.singular_values().last().copied().unwrap_or(0.0);
    if sigma_min < DEGENERATE_SIGMA {
        return RotationFit { rotation: Mat::identity(d), sigma_min, degenerate: true };
    }
    let rotation = if d == 2 {
        polar_rotation_2d(f).unwrap_or_else(|| Mat::identity(2))
    } else {
        svd_rotation(f)
    };
    RotationFit { rotation, sigma_min, degenerate: false }
}

/// Closed-form maximiser of tr(R(θ)ᵀ F) over planar rotations; `None` when every
/// rotation is equidistant.
pub(crate) fn polar_rotation_2d(f: &Mat) -> Option<Mat> {
    let p = f.data[0][0] + f.data[1][1];
    let q = f.data[1][0] - f.data[0][1];
    let r = p.hypot(q);
    if r == 0.0 {
        return None;
    }
    let mut rot = Mat::zeros(2);
    rot.data[0][0] = p / r;
    rot.data[1][1] = p / r;
    rot.data[1][0] = q / r;
    rot.data[0][1] = -q / r;
    Some(rot)
}

fn svd_rotation(f: &Mat) -> Mat {
    let d = f.dim;
    let svd = f.to_dmatrix().svd(true, true);
    let (Some(mut u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Mat::identity(d);
    };
    if (&u * &v_t).determinant() < 0.0 {
        // flip the column belonging to the smallest singular value
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(d - 1);
        u.column_mut(k).neg_mut();
    }
    Mat::from_dmatrix(&(u * v_t))
}

/// Squared Frobenius distance from `f` to SO(d).
pub fn dist_sq_so(f: &Mat) -> f64 {
    if f.dim == 2 {
        let p = f.data[0][0] + f.data[1][1];
        let q = f.data[1][0] - f.data[0][1];
        return (f.norm_sq() + 2.0 - 2.0 * p.hypot(q)).max(0.0);
    }
    dist_so_svd(f).powi(2)
}

/// Distance from `f` to SO(d) through the signed singular values.
pub fn dist_so_svd(f: &Mat) -> f64 {
    let mut s = f.singular_values();
    if f.det() < 0.0 {
        if let Some(last) = s.last_mut() {
            *last = -*last;
        }
    }
    s.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>().sqrt()
}

pub fn is_rotation(r: &Mat, tol: f64) -> bool {
    (r.transpose() * *r - Mat::identity(r.dim)).norm() <= tol && r.det() > 0.0
}
