use serde::{Deserialize, Serialize};

use super::density::Density;
use crate::error::{Error, Result};
use crate::fields::Tolerances;
use crate::linalg::Mat;

/// Density plus the constants ε, β, γ, κ of the energies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub density: Density,
    pub eps: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Checks 2/3 < β < 1 and 2/3 < γ < β, returning one message per violation.
pub fn parameter_window(beta: f64, gamma: f64) -> Vec<String> {
    let mut out = Vec::new();
    if !(beta > 2.0 / 3.0 && beta < 1.0) {
        out.push(format!("β = {beta} violates β ∈ (2/3, 1)"));
    }
    if !(gamma > 2.0 / 3.0 && gamma < beta) {
        out.push(format!("γ = {gamma} violates γ ∈ (2/3, β)"));
    }
    out
}

impl EnergyModel {
    pub fn new(density: Density, eps: f64, beta: f64, gamma: f64, kappa: f64) -> Result<Self> {
        let model = Self { density, eps, beta, gamma, kappa, tolerances: Tolerances::default() };
        model.check()?;
        Ok(model)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::OutOfRange(format!("ε = {} must be positive", self.eps)));
        }
        if let Some(msg) = parameter_window(self.beta, self.gamma).into_iter().next() {
            return Err(Error::OutOfRange(msg));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::OutOfRange(format!("κ = {} must be positive", self.kappa)));
        }
        if !self.density.is_valid() {
            return Err(Error::InvalidParameter(format!("density parameters of {} must be positive", self.density.name())));
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let m = Self { eps, ..self.clone() };
        m.check()?;
        Ok(m)
    }

    pub fn with_tolerances(&self, tolerances: Tolerances) -> Self {
        Self { tolerances, ..self.clone() }
    }

    pub fn w(&self, f: &Mat) -> f64 {
        self.density.eval(f)
    }

    /// Bin width ε^γ of the gradient quantization.
    pub fn bin_width(&self) -> f64 {
        self.eps.powf(self.gamma)
    }

    /// Weight ε^{−2β} of the second-gradient term.
    pub fn curvature_weight(&self) -> f64 {
        self.eps.powf(-2.0 * self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_enforced() {
        let d = Density::default();
        assert!(EnergyModel::new(d, 0.1, 0.9, 0.8, 1.0).is_ok());
        let e = EnergyModel::new(d, 0.1, 0.9, 0.5, 1.0).unwrap_err();
        assert!(e.to_string().contains("γ ∈ (2/3, β)"));
        let e = EnergyModel::new(d, 0.1, 1.0, 0.8, 1.0).unwrap_err();
        assert!(e.to_string().contains("β ∈ (2/3, 1)"));
        assert!(EnergyModel::new(d, 0.1, 0.9, 0.95, 1.0).is_err());
        assert!(EnergyModel::new(d, 0.0, 0.9, 0.8, 1.0).is_err());
        assert!(EnergyModel::new(d, 0.1, 0.9, 0.8, 0.0).is_err());
        assert_eq!(parameter_window(1.0, 0.5).len(), 2);
    }
}
