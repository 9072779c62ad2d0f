use serde::{Deserialize, Serialize};

use super::lbfgs::{lbfgs, SolverOptions};
use super::problem::{
    check_crack, linear_objective, nonlinear_objective, quadratic_matrix, residuals, tangent_matrix, trace_weight, Layout,
    Residuals,
};
use crate::energy::{linear_energy, relaxed_energy, EnergyModel, EnergyReport, QuadraticForm};
use crate::error::{Error, Result};
use crate::fields::{surface_measure, DisplacementJet, FacetSet, JetField, Tolerances};
use crate::linalg::{Mat, Vector};
use crate::rigidity::rescale_displacement;
use crate::sparse::{pcg, BandedCholesky, CgOutcome, Csr, Preconditioner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Nonlinear,
    Linear,
}

/// Minimizer for one crack. `field` is the deformation (nonlinear) or displacement (linear);
/// `energy` re-evaluates it with the energy functionals under solver tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizationResult {
    pub kind: ProblemKind,
    pub crack: FacetSet,
    pub field: JetField,
    pub report: EnergyReport,
    pub energy: f64,
    /// Penalized discrete objective, surface included.
    pub objective: f64,
    pub iterations: usize,
    /// ‖∇J‖∞ (nonlinear) or the relative residual (linear) at exit.
    pub residual: f64,
    pub converged: bool,
    /// Index of the winning start.
    pub start: usize,
}

impl MinimizationResult {
    /// The displacement (y − id)/ε for nonlinear results, the field itself otherwise.
    pub fn displacement(&self, eps: f64) -> Result<DisplacementJet> {
        match self.kind {
            ProblemKind::Nonlinear => rescale_displacement(&self.field, eps),
            ProblemKind::Linear => Ok(DisplacementJet::without_divergence(self.field.clone())),
        }
    }
}

fn solver_model(model: &EnergyModel) -> EnergyModel {
    model.with_tolerances(Tolerances::solver())
}

fn finite_total(report: &EnergyReport) -> Result<f64> {
    report.total.finite().ok_or_else(|| Error::NonFinite("minimizer energy".into()))
}

/// Start vectors: the datum extension, then rotations of it by ±ε about the center of Ω.
fn starts(layout: &Layout, eps: f64, count: usize) -> Vec<Vec<f64>> {
    let grid = &layout.grid;
    let d = layout.d;
    let center = {
        let mut p = Vector::zeros(d);
        for (k, (lo, hi)) in grid.inner_extents().into_iter().enumerate() {
            p[k] = 0.5 * (lo + hi);
        }
        p
    };
    let z0 = layout.scatter(&layout.extension);
    let (v0, g0) = layout.unpack(&z0);
    (0..count)
        .map(|s| {
            if s == 0 {
                return layout.extension.clone();
            }
            let angle = if s % 2 == 1 { eps } else { -eps } * s.div_ceil(2) as f64;
            let r = Mat::rotation(d, angle);
            let id = Mat::identity(d);
            let (mut v, mut g) = (v0.clone(), g0.clone());
            for c in (0..grid.n_cells()).filter(|&c| grid.in_inner(c)) {
                let x = grid.center(c);
                let y = center + r.mul_vec(&(x - center + v0[c].scale(eps)));
                v[c] = (y - x).scale(1.0 / eps);
                g[c] = (r * (id + g0[c].scale(eps)) - id).scale(1.0 / eps);
            }
            layout.gather(&layout.pack(&v, &g))
        })
        .collect()
}

/// Minimizes the penalized relaxed energy over deformations id + εv with the crack fixed.
pub fn solve_fixed_crack_nonlinear(
    model: &EnergyModel,
    q: &QuadraticForm,
    datum: &DisplacementJet,
    crack: &FacetSet,
    opts: &SolverOptions,
) -> Result<MinimizationResult> {
    model.check()?;
    check_crack(datum.grid(), crack)?;
    let layout = Layout::new(datum);
    let grid = &layout.grid;
    let eps = model.eps;
    let curvature = eps.powf(2.0 - 2.0 * model.beta);
    let trace = trace_weight(grid, eps);
    let res = residuals(&layout, crack, curvature, trace);
    let quad_ff = layout.restrict(&quadratic_matrix(&layout, &res, None));
    let fallback = Preconditioner::for_matrix(&layout.restrict(&quadratic_matrix(&layout, &res, Some(q))));
    let precondition = |x: &[f64]| {
        let t = tangent_matrix(model, &layout, &quad_ff, x);
        BandedCholesky::factor(&t, 0.0).map_or_else(|| fallback.clone(), Preconditioner::Cholesky)
    };
    let objective = |x: &[f64]| nonlinear_objective(model, &layout, &res, x);
    let mut best: Option<(usize, super::lbfgs::LbfgsOutcome)> = None;
    for (s, x0) in starts(&layout, eps, opts.starts.max(1)).into_iter().enumerate() {
        let out = lbfgs(objective, precondition, x0, opts);
        if best.as_ref().map_or(true, |(_, b)| out.f < b.f) {
            best = Some((s, out));
        }
    }
    let (start, out) = best.expect("at least one start");
    let (v, g) = layout.unpack(&layout.scatter(&out.x));
    let id = Mat::identity(layout.d);
    let values = (0..grid.n_cells()).map(|c| grid.center(c) + v[c].scale(eps)).collect();
    let grads = g.iter().map(|g| id + g.scale(eps)).collect();
    let field = JetField::new(grid.clone(), values, grads, crack.clone(), crack.clone())?;
    let report = relaxed_energy(&solver_model(model), &field)?;
    Ok(MinimizationResult {
        kind: ProblemKind::Nonlinear,
        crack: crack.clone(),
        energy: finite_total(&report)?,
        report,
        field,
        objective: out.f + model.kappa * surface_measure(crack, grid),
        iterations: out.iterations,
        residual: out.grad_norm,
        converged: out.converged,
        start,
    })
}

/// The linearized problem with a fixed crack, reduced to the free unknowns: A x = b.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    layout: Layout,
    residuals: Residuals,
    q: QuadraticForm,
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub crack: FacetSet,
}

impl LinearSystem {
    pub fn new(q: &QuadraticForm, datum: &DisplacementJet, crack: &FacetSet) -> Result<Self> {
        check_crack(datum.grid(), crack)?;
        if q.dim != datum.grid().dim() {
            return Err(Error::DimensionMismatch { expected: datum.grid().dim(), found: q.dim });
        }
        let layout = Layout::new(datum);
        let trace = trace_weight(&layout.grid, 0.0);
        let residuals = residuals(&layout, crack, 0.0, trace);
        let full = quadratic_matrix(&layout, &residuals, Some(q));
        let matrix = layout.restrict(&full);
        let rhs = layout.gather(&full.apply(&layout.datum)).into_iter().map(|v| -v).collect();
        Ok(Self { layout, residuals, q: q.clone(), matrix, rhs, crack: crack.clone() })
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    /// The unknowns of the boundary datum extended to Ω.
    pub fn datum_extension(&self) -> &[f64] {
        &self.layout.extension
    }

    /// Penalized quadratic objective of the full jet vector built from `x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        linear_objective(&self.layout, &self.residuals, &self.q, &self.layout.scatter(x)).0
    }

    pub fn solve_pcg(&self, rel_tol: f64) -> CgOutcome {
        let m = Preconditioner::for_matrix(&self.matrix);
        pcg(&self.matrix, &self.rhs, &self.layout.extension, &m, rel_tol, 10 * self.len().max(10))
    }

    /// Dense Cholesky solve, falling back to LU.
    pub fn solve_dense(&self) -> Result<Vec<f64>> {
        let a = self.matrix.to_dense();
        let b = nalgebra::DVector::from_column_slice(&self.rhs);
        let x = match a.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => a.lu().solve(&b).ok_or_else(|| Error::NonFinite("singular linear system".into()))?,
        };
        Ok(x.iter().copied().collect())
    }

    pub fn displacement(&self, x: &[f64]) -> Result<DisplacementJet> {
        let (values, grads) = self.layout.unpack(&self.layout.scatter(x));
        let field = JetField::new(self.layout.grid.clone(), values, grads, self.crack.clone(), self.crack.clone())?;
        Ok(DisplacementJet::without_divergence(field))
    }
}

/// Minimizes the penalized linearized energy with the crack fixed.
pub fn solve_fixed_crack_linear(
    model: &EnergyModel,
    q: &QuadraticForm,
    datum: &DisplacementJet,
    crack: &FacetSet,
    opts: &SolverOptions,
) -> Result<MinimizationResult> {
    model.check()?;
    let sys = LinearSystem::new(q, datum, crack)?;
    let out = sys.solve_pcg(opts.linear_tol);
    let u = sys.displacement(&out.x)?;
    let report = linear_energy(&solver_model(model), q, &u)?;
    Ok(MinimizationResult {
        kind: ProblemKind::Linear,
        crack: crack.clone(),
        energy: finite_total(&report)?,
        report,
        field: u.field().clone(),
        objective: sys.objective(&out.x) + model.kappa * surface_measure(crack, &sys.layout.grid),
        iterations: out.iterations,
        residual: out.relative_residual,
        converged: out.converged,
        start: 0,
    })
}
