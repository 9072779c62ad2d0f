//! Stored-energy densities, the nonlinear, relaxed and linearized energies, and the
//! quadratic form of the linearization.

mod density;
mod functional;
mod model;
mod quadratic;

pub use density::Density;
pub use functional::{linear_energy, nonlinear_energy, relaxed_energy, Energy, EnergyReport};
pub use model::{parameter_window, EnergyModel};
pub use quadratic::{hessian_q, remainder_omega, QuadraticForm, HESSIAN_STEP, RICHARDSON_TOL};
