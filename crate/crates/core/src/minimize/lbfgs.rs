use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::sparse::{dot, Preconditioner};

/// Settings of the limited-memory quasi-Newton iteration and the multi-start driver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub memory: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_iter: usize,
    /// Stop when ‖∇J‖∞ falls below this multiple of max(1, ‖∇J(x₀)‖∞).
    pub grad_tol: f64,
    /// Relative residual of the conjugate-gradient solve.
    pub linear_tol: f64,
    pub starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { memory: 10, armijo: 1e-4, backtrack: 0.5, max_iter: 5000, grad_tol: 1e-8, linear_tol: 1e-10, starts: 3 }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Two-loop recursion with M⁻¹ as the initial inverse Hessian.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, m: &Preconditioner) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(q, y)| *q -= a * y);
        alphas.push(a);
    }
    let mut r = m.apply(&q);
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &r);
        r.iter_mut().zip(s).for_each(|(r, s)| *r += (a - b) * s);
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

/// Steps shorter than this count as a stall and trigger a preconditioner refresh.
const STALL_STEP: f64 = 1e-6;
const MAX_REFRESH: usize = 20;
/// A predicted decrease −∇Jᵀp below this multiple of max(|J|, 1) is lost in the roundoff of J,
/// so the iterate counts as converged.
const DECREMENT_FLOOR: f64 = 16.0 * f64::EPSILON;

/// Minimizes `objective` from `x0`. `precondition` builds M ≈ ∇²J at a point; it is called at
/// the start and again whenever the line search stalls. Stops when ‖∇J‖∞ meets the tolerance or
/// the predicted decrease falls below the resolution of J.
pub(crate) fn lbfgs(
    objective: impl Fn(&[f64]) -> (f64, Vec<f64>),
    precondition: impl Fn(&[f64]) -> Preconditioner,
    x0: Vec<f64>,
    opts: &SolverOptions,
) -> LbfgsOutcome {
    let mut x = x0;
    let mut m = precondition(&x);
    let mut refreshes = 0;
    let (mut f, mut g) = objective(&x);
    let tol = opts.grad_tol * inf_norm(&g).max(1.0);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut resolved = false;
    while iterations < opts.max_iter && f.is_finite() && inf_norm(&g) > tol {
        iterations += 1;
        let mut p = direction(&g, &pairs, &m);
        let mut slope = dot(&p, &g);
        if !(slope < 0.0) {
            pairs.clear();
            p = direction(&g, &pairs, &m);
            slope = dot(&p, &g);
            if !(slope < 0.0) {
                break;
            }
        }
        if -slope <= DECREMENT_FLOOR * f.abs().max(1.0) {
            resolved = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(x, p)| x + step * p).collect();
            let (ft, gt) = objective(&trial);
            // near the minimum f stops resolving progress; flat steps are judged by the curvature condition
            let flat = (ft - f).abs() <= 8.0 * f64::EPSILON * f.abs().max(1.0) && dot(&gt, &p).abs() <= 0.9 * slope.abs();
            if ft.is_finite() && (ft <= f + opts.armijo * step * slope || flat) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= opts.backtrack;
        }
        let stalled = accepted.is_none() || step < STALL_STEP;
        if stalled && refreshes < MAX_REFRESH {
            refreshes += 1;
            m = precondition(&x);
            pairs.clear();
            if accepted.is_none() {
                continue;
            }
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
    }
    let grad_norm = inf_norm(&g);
    LbfgsOutcome { converged: (grad_norm <= tol || resolved) && f.is_finite(), x, f, grad_norm, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;

    #[test]
    fn minimizes_rosenbrock() {
        let obj = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (f, g)
        };
        let mut t = Triplets::new(2);
        t.add(0, 0, 1.0);
        t.add(1, 1, 1.0);
        let m = Preconditioner::jacobi(&t.to_csr());
        let out = lbfgs(obj, |_| m.clone(), vec![-1.2, 1.0], &SolverOptions { grad_tol: 1e-10, ..Default::default() });
        assert!(out.converged, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exact_preconditioner_solves_quadratic_in_one_step() {
        let mut t = Triplets::new(3);
        for (i, j, v) in [(0, 0, 4.0), (1, 1, 3.0), (2, 2, 2.0), (0, 1, 1.0), (1, 0, 1.0)] {
            t.add(i, j, v);
        }
        let a = t.to_csr();
        let b = [1.0, -2.0, 0.5];
        let obj = |x: &[f64]| {
            let ax = a.apply(x);
            (0.5 * dot(x, &ax) - dot(&b, x), ax.iter().zip(&b).map(|(p, q)| p - q).collect())
        };
        let out = lbfgs(obj, |_| Preconditioner::for_matrix(&a), vec![0.0; 3], &SolverOptions::default());
        assert!(out.converged);
        assert!(out.iterations <= 2);
    }
}
