use crate::energy::{EnergyModel, QuadraticForm};
use crate::error::{Error, Result};
use crate::fields::{difference_stencil, DisplacementJet, FacetSet, Grid};
use crate::linalg::{Mat, Vector};
use crate::sparse::{Csr, Triplets};

/// Weight of the squared trace mismatch on facets outside the crack.
pub const TRACE_PENALTY: f64 = 1e3;

/// Unknowns are per-cell displacement jets (v_c, G_c), stored as d + d² consecutive entries.
/// Frame cells are held at the boundary datum.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub grid: Grid,
    pub d: usize,
    pub per_cell: usize,
    pub free: Vec<Option<usize>>,
    pub free_dofs: Vec<usize>,
    /// Full vector with the datum on frame cells and zeros on free entries.
    pub datum: Vec<f64>,
    /// Free unknowns of the datum extended to Ω.
    pub extension: Vec<f64>,
}

impl Layout {
    pub fn new(datum: &DisplacementJet) -> Self {
        let grid = datum.grid().clone();
        let d = grid.dim();
        let per_cell = d + d * d;
        let mut free = vec![None; grid.n_cells() * per_cell];
        let mut free_dofs = Vec::new();
        for c in (0..grid.n_cells()).filter(|&c| grid.in_inner(c)) {
            for k in 0..per_cell {
                free[c * per_cell + k] = Some(free_dofs.len());
                free_dofs.push(c * per_cell + k);
            }
        }
        let mut layout = Self { grid, d, per_cell, free, free_dofs, datum: Vec::new(), extension: Vec::new() };
        let values: Vec<Vector> = (0..layout.grid.n_cells()).map(|c| datum.value(c)).collect();
        let grads: Vec<Mat> = (0..layout.grid.n_cells()).map(|c| datum.gradient(c)).collect();
        let mut full = layout.pack(&values, &grads);
        layout.extension = layout.gather(&full);
        for &g in &layout.free_dofs {
            full[g] = 0.0;
        }
        layout.datum = full;
        layout
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn value_dof(&self, c: usize, i: usize) -> usize {
        c * self.per_cell + i
    }

    pub fn grad_dof(&self, c: usize, i: usize, j: usize) -> usize {
        c * self.per_cell + self.d + i * self.d + j
    }

    pub fn pack(&self, values: &[Vector], grads: &[Mat]) -> Vec<f64> {
        let mut z = vec![0.0; self.grid.n_cells() * self.per_cell];
        for c in 0..self.grid.n_cells() {
            for i in 0..self.d {
                z[self.value_dof(c, i)] = values[c][i];
                for j in 0..self.d {
                    z[self.grad_dof(c, i, j)] = grads[c][(i, j)];
                }
            }
        }
        z
    }

    pub fn unpack(&self, z: &[f64]) -> (Vec<Vector>, Vec<Mat>) {
        let d = self.d;
        (0..self.grid.n_cells())
            .map(|c| {
                let base = c * self.per_cell;
                (Vector::from_slice(&z[base..base + d]), Mat::from_flat(d, &z[base + d..base + self.per_cell]))
            })
            .unzip()
    }

    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.datum.clone();
        for (k, &g) in self.free_dofs.iter().enumerate() {
            z[g] = x[k];
        }
        z
    }

    pub fn gather(&self, z: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&g| z[g]).collect()
    }

    /// The free-free block of a full matrix.
    pub fn restrict(&self, a: &Csr) -> Csr {
        let mut t = Triplets::new(self.n_free());
        for (k, &g) in self.free_dofs.iter().enumerate() {
            for (j, v) in a.row(g) {
                if let Some(l) = self.free[j] {
                    t.add(k, l, v);
                }
            }
        }
        t.to_csr()
    }
}

/// Rejects cracks that leave the set of facets with both neighbours in Ω.
pub(crate) fn check_crack(grid: &Grid, crack: &FacetSet) -> Result<()> {
    match crack.iter().find(|f| !grid.is_interior_facet(**f) || !grid.is_inner_facet(**f)) {
        Some(f) => Err(Error::CrackOutsideDomain(format!("facet {f:?} is not between two cells of Ω"))),
        None => Ok(()),
    }
}

/// Penalty weight per facet for the displacement trace mismatch.
pub(crate) fn trace_weight(grid: &Grid, eps: f64) -> f64 {
    TRACE_PENALTY * (eps * eps).max(1.0) * grid.h().powi(grid.dim() as i32 - 2)
}

/// Weighted linear residuals rᵢ = Bᵢ·z, contributing Σ wᵢ rᵢ² to the objective. Summing
/// squares keeps the stiff trace penalty free of cancellation.
#[derive(Clone, Debug, Default)]
pub(crate) struct Residuals {
    ptr: Vec<usize>,
    entries: Vec<(usize, f64)>,
    weights: Vec<f64>,
}

impl Residuals {
    fn push(&mut self, row: &[(usize, f64)], w: f64) {
        if self.ptr.is_empty() {
            self.ptr.push(0);
        }
        self.entries.extend_from_slice(row);
        self.ptr.push(self.entries.len());
        self.weights.push(w);
    }

    fn rows(&self) -> impl Iterator<Item = (&[(usize, f64)], f64)> + '_ {
        self.ptr.windows(2).zip(&self.weights).map(|(p, &w)| (&self.entries[p[0]..p[1]], w))
    }

    /// Σ wᵢ rᵢ², adding its gradient into `grad`.
    pub fn accumulate(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let mut f = 0.0;
        for (row, w) in self.rows() {
            let r: f64 = row.iter().map(|&(j, b)| b * z[j]).sum();
            f += w * r * r;
            for &(j, b) in row {
                grad[j] += 2.0 * w * r * b;
            }
        }
        f
    }

    pub fn add_hessian(&self, t: &mut Triplets) {
        for (row, w) in self.rows() {
            t.add_outer(row, 2.0 * w);
        }
    }
}

/// Second-gradient rows with weight `curvature`·h^d per squared difference, and trace
/// mismatch rows with weight `trace` on facets outside the crack.
pub(crate) fn residuals(layout: &Layout, crack: &FacetSet, curvature: f64, trace: f64) -> Residuals {
    let grid = &layout.grid;
    let (d, h) = (layout.d, grid.h());
    let mut res = Residuals::default();
    if curvature > 0.0 {
        let w = curvature * grid.cell_volume();
        for c in 0..grid.n_cells() {
            for k in 0..d {
                let stencil = difference_stencil(grid, crack, c, k);
                if stencil.is_empty() {
                    continue;
                }
                for i in 0..d {
                    for j in 0..d {
                        let row: Vec<(usize, f64)> =
                            stencil.iter().map(|&(n, s)| (layout.grad_dof(n, i, j), s)).collect();
                        res.push(&row, w);
                    }
                }
            }
        }
    }
    for f in grid.interior_facets().filter(|f| !crack.contains(f)) {
        let (a, b) = grid.facet_cells(f);
        let k = f.axis;
        for i in 0..d {
            let row = [
                (layout.value_dof(a, i), 1.0),
                (layout.grad_dof(a, i, k), 0.5 * h),
                (layout.value_dof(b, i), -1.0),
                (layout.grad_dof(b, i, k), 0.5 * h),
            ];
            res.push(&row, trace);
        }
    }
    res
}

/// Full Hessian of the residual terms, plus h^d Q(sym ·) blocks on every cell when given.
pub(crate) fn quadratic_matrix(layout: &Layout, res: &Residuals, elastic: Option<&QuadraticForm>) -> Csr {
    let mut t = Triplets::new(layout.datum.len());
    res.add_hessian(&mut t);
    if let Some(q) = elastic {
        let d = layout.d;
        let vol = layout.grid.cell_volume();
        let qs = q.sym_matrix();
        let n = d * d;
        for c in 0..layout.grid.n_cells() {
            for a in 0..n {
                for b in 0..n {
                    t.add(layout.grad_dof(c, a / d, a % d), layout.grad_dof(c, b / d, b % d), vol * qs[a * n + b]);
                }
            }
        }
    }
    t.to_csr()
}

/// Σ h^d ½ Q(sym G_c) + residual terms, with the gradient in the full unknowns.
pub(crate) fn linear_objective(layout: &Layout, res: &Residuals, q: &QuadraticForm, z: &[f64]) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; z.len()];
    let mut f = res.accumulate(z, &mut g);
    let d = layout.d;
    let vol = layout.grid.cell_volume();
    for c in 0..layout.grid.n_cells() {
        let base = layout.grad_dof(c, 0, 0);
        let s = Mat::from_flat(d, &z[base..base + d * d]).sym();
        f += 0.5 * vol * q.eval(&s);
        for (k, v) in q.apply(&s).sym().scale(vol).to_flat().iter().enumerate() {
            g[base + k] += v;
        }
    }
    (f, g)
}

/// ε^{−2}Σ W(Id + εG_c)h^d plus the residual terms, with the gradient in the free unknowns.
pub(crate) fn nonlinear_objective(model: &EnergyModel, layout: &Layout, res: &Residuals, x: &[f64]) -> (f64, Vec<f64>) {
    let z = layout.scatter(x);
    let mut g = vec![0.0; z.len()];
    let mut f = res.accumulate(&z, &mut g);
    let (eps, d) = (model.eps, layout.d);
    let vol = layout.grid.cell_volume();
    let id = Mat::identity(d);
    for c in 0..layout.grid.n_cells() {
        let base = layout.grad_dof(c, 0, 0);
        let grad = Mat::from_flat(d, &z[base..base + d * d]);
        let def = id + grad.scale(eps);
        f += vol * model.density.eval(&def) / (eps * eps);
        if layout.grid.is_frame(c) {
            continue;
        }
        let dw = model.density.gradient(&def).scale(vol / eps).to_flat();
        for (k, v) in dw.iter().enumerate() {
            g[base + k] += v;
        }
    }
    (f, layout.gather(&g))
}

const TANGENT_STEP: f64 = 1e-6;

/// `quad_ff` plus h^d D²W(Id + εG_c) blocks on Ω cells, with D²W from central differences
/// of the density gradient.
pub(crate) fn tangent_matrix(model: &EnergyModel, layout: &Layout, quad_ff: &Csr, x: &[f64]) -> Csr {
    let mut t = Triplets::new(quad_ff.n);
    for i in 0..quad_ff.n {
        for (j, v) in quad_ff.row(i) {
            t.add(i, j, v);
        }
    }
    let z = layout.scatter(x);
    let (eps, d) = (model.eps, layout.d);
    let n = d * d;
    let vol = layout.grid.cell_volume();
    let id = Mat::identity(d);
    for c in (0..layout.grid.n_cells()).filter(|&c| layout.grid.in_inner(c)) {
        let base = layout.grad_dof(c, 0, 0);
        let def = id + Mat::from_flat(d, &z[base..base + n]).scale(eps);
        let mut block = vec![0.0; n * n];
        for b in 0..n {
            let mut e = Mat::zeros(d);
            e[(b / d, b % d)] = TANGENT_STEP;
            let diff = (model.density.gradient(&(def + e)) - model.density.gradient(&(def - e))).to_flat();
            for a in 0..n {
                block[a * n + b] = diff[a] / (2.0 * TANGENT_STEP);
            }
        }
        let row = layout.free[base].expect("Ω cells are free");
        for a in 0..n {
            for b in 0..n {
                t.add(row + a, row + b, 0.5 * vol * (block[a * n + b] + block[b * n + a]));
            }
        }
    }
    t.to_csr()
}
