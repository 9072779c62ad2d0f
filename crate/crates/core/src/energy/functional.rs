use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::model::EnergyModel;
use super::quadratic::QuadraticForm;
use crate::error::{Error, Result};
use crate::fields::{second_gradient, surface_measure, validate_field, DisplacementJet, JetField};

/// An energy value that is either finite or the +∞ sentinel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    Finite(f64),
    Infinite,
}

impl Energy {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Energy::Finite(v) => Some(*v),
            Energy::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Energy::Infinite)
    }
}

impl std::fmt::Display for Energy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Energy::Finite(v) => write!(f, "{v:.17e}"),
            Energy::Infinite => f.write_str("INF"),
        }
    }
}

impl Serialize for Energy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Energy::Finite(v) => s.serialize_f64(*v),
            Energy::Infinite => s.serialize_str("INF"),
        }
    }
}

impl<'de> Deserialize<'de> for Energy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Energy::Finite(v)),
            Raw::Str(s) if s == "INF" => Ok(Energy::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unexpected energy {s:?}"))),
        }
    }
}

/// Itemized energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub elastic: f64,
    pub second_gradient: f64,
    pub surface: f64,
    pub total: Energy,
    /// Whether J∇y ⊆ Jy.
    pub gradient_jumps_inside_jumps: bool,
}

fn require_valid(field: &JetField, model: &EnergyModel) -> Result<()> {
    let report = validate_field(field, &model.tolerances);
    if report.passed() {
        Ok(())
    } else {
        Err(Error::Unvalidated { violations: report.count() })
    }
}

/// ε^{−2}Σ W(F_c)h^d and ε^{−2β}Σ|∇²y_c|²h^d over every grid cell.
fn bulk_terms(model: &EnergyModel, y: &JetField) -> (f64, f64) {
    let vol = y.grid.cell_volume();
    let elastic: f64 = y.grads.iter().map(|f| model.w(f)).sum::<f64>() * vol / (model.eps * model.eps);
    let curv: f64 = second_gradient(y).iter().map(|s| s.norm_sq()).sum::<f64>() * vol * model.curvature_weight();
    (elastic, curv)
}

fn report(elastic: f64, second: f64, surface: f64, inside: bool, sentinel: bool) -> EnergyReport {
    let total = if sentinel { Energy::Infinite } else { Energy::Finite(elastic + second + surface) };
    EnergyReport { elastic, second_gradient: second, surface, total, gradient_jumps_inside_jumps: inside }
}

/// Nonsimple Griffith energy; +∞ when a gradient jump is not a jump of the field.
pub fn nonlinear_energy(model: &EnergyModel, y: &JetField) -> Result<EnergyReport> {
    require_valid(y, model)?;
    let (elastic, second) = bulk_terms(model, y);
    let surface = model.kappa * surface_measure(&y.jy, &y.grid);
    let inside = y.jgrad.is_subset(&y.jy);
    Ok(report(elastic, second, surface, inside, !inside))
}

/// Relaxed energy: the surface term charges Jy ∪ J∇y.
pub fn relaxed_energy(model: &EnergyModel, y: &JetField) -> Result<EnergyReport> {
    require_valid(y, model)?;
    let (elastic, second) = bulk_terms(model, y);
    let surface = model.kappa * surface_measure(&y.cut_set(), &y.grid);
    Ok(report(elastic, second, surface, y.jgrad.is_subset(&y.jy), false))
}

/// Linearized Griffith energy Σ ½Q(e(u))h^d + κ|Ju|.
pub fn linear_energy(model: &EnergyModel, q: &QuadraticForm, u: &DisplacementJet) -> Result<EnergyReport> {
    require_valid(u.field(), model)?;
    let grid = u.grid();
    let elastic: f64 = (0..grid.n_cells()).map(|c| 0.5 * q.eval(&u.strain(c))).sum::<f64>() * grid.cell_volume();
    let surface = model.kappa * surface_measure(u.ju(), grid);
    Ok(report(elastic, 0.0, surface, true, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::density::Density;
    use crate::energy::quadratic::hessian_q;
    use crate::fields::FacetSet;
    use crate::fields::{sample_analytic, FieldSpec, Grid, Piece, SmoothMap};
    use crate::linalg::{Mat, Vector};

    fn grid() -> Grid {
        Grid::new(&[(-1.0, 1.0), (-1.0, 1.0)], &[(-0.75, 0.75), (-0.75, 0.75)], 0.25).unwrap()
    }

    fn model(eps: f64, kappa: f64) -> EnergyModel {
        EnergyModel::new(Density::default(), eps, 0.9, 0.8, kappa).unwrap()
    }

    fn y_delta(delta: f64) -> JetField {
        let spec = FieldSpec {
            pieces: vec![
                Piece { region: Some(vec![[-1.0, 0.0], [-1.0, 1.0]]), map: SmoothMap::default() },
                Piece {
                    region: None,
                    map: SmoothMap {
                        offset: vec![delta, 0.0],
                        linear: vec![vec![1.0, 0.0], vec![0.0, 0.0]],
                        ..Default::default()
                    },
                },
            ],
            ..Default::default()
        };
        sample_analytic(&grid(), &spec, 0.0).unwrap()
    }

    #[test]
    fn rigid_motion_costs_nothing() {
        let y = JetField::identity(&grid()).rigid_transform(&Mat::rotation(2, 1.1), &Vector::from_slice(&[0.3, -2.0]));
        let r = nonlinear_energy(&model(0.1, 1.0), &y).unwrap();
        assert!(r.total.finite().unwrap() < 1e-12);
    }

    #[test]
    fn y_delta_closed_form() {
        let eps = 0.1;
        let r = nonlinear_energy(&model(eps, 1.0), &y_delta(0.1)).unwrap();
        let expect = 2.0 / (eps * eps) + 2.0;
        assert!((r.total.finite().unwrap() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn y_zero_is_infinite_but_relaxes() {
        let m = model(0.1, 1.5);
        let y = y_delta(0.0);
        let r = nonlinear_energy(&m, &y).unwrap();
        assert_eq!(r.total, Energy::Infinite);
        assert!(!r.gradient_jumps_inside_jumps);
        let rel = relaxed_energy(&m, &y).unwrap();
        let expect = 2.0 / 0.01 + 2.0 * 1.5;
        assert!((rel.total.finite().unwrap() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn unvalidated_fields_are_rejected() {
        let mut y = y_delta(0.1);
        y.jy = FacetSet::new();
        assert!(matches!(nonlinear_energy(&model(0.1, 1.0), &y), Err(Error::Unvalidated { .. })));
    }

    #[test]
    fn uniform_dilation_linear_energy() {
        let m = model(0.1, 1.0);
        let q = hessian_q(&m, 2).unwrap();
        let t = 0.3;
        let spec = FieldSpec {
            base: crate::fields::Base::Zero,
            pieces: vec![Piece {
                region: None,
                map: SmoothMap { linear: vec![vec![t, 0.0], vec![0.0, t]], ..Default::default() },
            }],
            ..Default::default()
        };
        let u = DisplacementJet::without_divergence(sample_analytic(&grid(), &spec, 0.0).unwrap());
        let e = linear_energy(&m, &q, &u).unwrap().total.finite().unwrap();
        assert!((e - t * t * 2.0 * 4.0).abs() < 1e-5);
    }

    #[test]
    fn sentinel_serializes_as_text() {
        assert_eq!(serde_json::to_string(&Energy::Infinite).unwrap(), "\"INF\"");
        let back: Energy = serde_json::from_str("\"INF\"").unwrap();
        assert_eq!(back, Energy::Infinite);
    }
}
