//! Fixed-crack minimization of the penalized discrete energies and the search over a
//! finite crack family.

mod family;
mod lbfgs;
mod problem;
mod solve;

pub use family::{minima_convergence_sweep, minimize_over_cracks, ConvergenceRow, ConvergenceSweep, CrackFamily, CrackSearch};
pub use lbfgs::SolverOptions;
pub use problem::TRACE_PENALTY;
pub use solve::{solve_fixed_crack_linear, solve_fixed_crack_nonlinear, LinearSystem, MinimizationResult, ProblemKind};

#[cfg(test)]
mod tests;
