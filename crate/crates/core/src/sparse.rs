//! Sparse symmetric matrices, a banded Cholesky factorization, and preconditioned
//! conjugate gradients.

use std::collections::BTreeMap;

/// Coordinate-format accumulator; duplicate entries are summed.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            *self.entries.entry((i, j)).or_insert(0.0) += v;
        }
    }

    /// Adds `w · rᵀr` for the linear functional `r = Σ coeff · x[idx]`.
    pub fn add_outer(&mut self, row: &[(usize, f64)], w: f64) {
        for &(i, a) in row {
            for &(j, b) in row {
                self.add(i, j, w * a * b);
            }
        }
    }

    pub fn to_csr(&self) -> Csr {
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals = Vec::with_capacity(self.entries.len());
        for (&(i, j), &v) in &self.entries {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n: self.n, row_ptr, cols, vals }
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            out[i] = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec(x, &mut out);
        out
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(j, _)| j == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    /// Half bandwidth `max |i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Lower-triangular banded Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // l[i][k] stores L(i, i - bw + k) for k in 0..=bw
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factors `a + shift·diag(a)`; returns `None` when a pivot is not positive.
    pub fn factor(a: &Csr, shift: f64) -> Option<Self> {
        let n = a.n;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    let v = if i == j { v * (1.0 + shift) } else { v };
                    l[i * w + (j + bw - i)] += v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = l[i * w + (j + bw - i)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Some(Self { n, bw, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.l[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}

/// Preconditioner for the conjugate-gradient iteration.
#[derive(Clone, Debug)]
pub enum Preconditioner {
    Jacobi(Vec<f64>),
    Cholesky(BandedCholesky),
}

impl Preconditioner {
    /// Banded Cholesky of `a`, falling back to growing diagonal shifts and finally Jacobi.
    pub fn for_matrix(a: &Csr) -> Self {
        for shift in [0.0, 1e-12, 1e-9, 1e-6] {
            if let Some(c) = BandedCholesky::factor(a, shift) {
                return Preconditioner::Cholesky(c);
            }
        }
        Preconditioner::jacobi(a)
    }

    pub fn jacobi(a: &Csr) -> Self {
        Preconditioner::Jacobi(
            a.diagonal().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect(),
        )
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Jacobi(inv) => r.iter().zip(inv).map(|(a, b)| a * b).collect(),
            Preconditioner::Cholesky(c) => c.solve(r),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub breakdown: bool,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for `a x = b` from `x0`.
pub fn pcg(a: &Csr, b: &[f64], x0: &[f64], m: &Preconditioner, rel_tol: f64, max_iter: usize) -> CgOutcome {
    let n = a.n;
    let mut x = x0.to_vec();
    let mut ax = vec![0.0; n];
    a.mul_vec(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let b_norm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    if res <= rel_tol {
        return CgOutcome { x, iterations: 0, relative_residual: res, converged: true, breakdown: false };
    }
    let mut z = m.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return CgOutcome { x, iterations: it, relative_residual: res, converged: false, breakdown: true };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        if res <= rel_tol {
            // recompute the true residual to guard against drift
            a.mul_vec(&x, &mut ax);
            let true_res = b.iter().zip(&ax).map(|(b, ax)| (b - ax).powi(2)).sum::<f64>().sqrt() / b_norm;
            if true_res <= rel_tol {
                return CgOutcome { x, iterations: it, relative_residual: true_res, converged: true, breakdown: false };
            }
            r = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            res = true_res;
        }
        z = m.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome { x, iterations: max_iter, relative_residual: res, converged: false, breakdown: false }
}
