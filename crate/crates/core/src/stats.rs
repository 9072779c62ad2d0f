//! Log-log regression for scaling exponents.

use serde::{Deserialize, Serialize};

/// Fitted exponent of `y ~ C x^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Slope {
    /// Least-squares slope over the positive samples.
    Fitted(f64),
    /// Every sample is zero, so any exponent is consistent.
    Exact,
    /// Too few positive samples to fit.
    Undetermined,
}

impl Slope {
    /// Whether the slope is at least `min`.
    pub fn at_least(&self, min: f64) -> bool {
        match self {
            Slope::Fitted(p) => *p >= min,
            Slope::Exact => true,
            Slope::Undetermined => false,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Slope::Fitted(p) => Some(*p),
            _ => None,
        }
    }
}

impl std::fmt::Display for Slope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Slope::Fitted(p) => write!(f, "{p:.4}"),
            Slope::Exact => f.write_str("exact"),
            Slope::Undetermined => f.write_str("undetermined"),
        }
    }
}

/// Values at or below this are treated as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-14;

/// Least-squares slope of log y against log x.
///
/// Samples with y ≤ `ZERO_FLOOR` are dropped; if all are, the slope is `Exact`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Slope {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > 0.0 && b > ZERO_FLOOR)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.is_empty() && y.iter().all(|&b| b.abs() <= ZERO_FLOOR) && !y.is_empty() {
        return Slope::Exact;
    }
    if pts.len() < 2 {
        return Slope::Undetermined;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Slope::Undetermined;
    }
    Slope::Fitted(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let x = [0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let Slope::Fitted(p) = loglog_slope(&x, &y) else { panic!() };
        assert!((p - 1.7).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_exact() {
        assert_eq!(loglog_slope(&[0.1, 0.2], &[0.0, 0.0]), Slope::Exact);
        assert!(Slope::Exact.at_least(5.0));
        assert_eq!(loglog_slope(&[0.1], &[1.0]), Slope::Undetermined);
    }
}
