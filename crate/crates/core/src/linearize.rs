//! Linearization identities and recovery sequences y_ε = id + ε v_ε.

use serde::{Deserialize, Serialize};

use crate::energy::{linear_energy, nonlinear_energy, EnergyModel, QuadraticForm};
use crate::error::{Error, Result};
use crate::fields::{second_gradient, DisplacementJet, JetField};
use crate::linalg::{dist_sq_so, is_rotation, Mat};
use crate::stats::{loglog_slope, Slope};

/// |sym(F − Id)| against dist(F, SO(d)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FjmCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub remainder: f64,
}

pub fn fjm_identity_check(f: &Mat) -> FjmCheck {
    let lhs = (*f - Mat::identity(f.dim)).sym().norm();
    let rhs = dist_sq_so(f).sqrt();
    FjmCheck { lhs, rhs, remainder: lhs - rhs }
}

/// (|sym(R₂R₁ᵀ − Id)|, |R₁ − R₂|²) for two rotations.
pub fn rotation_symmetry_bound(r1: &Mat, r2: &Mat) -> Result<(f64, f64)> {
    for r in [r1, r2] {
        if !is_rotation(r, 1e-10) {
            return Err(Error::InvalidParameter(format!("not a rotation: {:?}", r.to_rows())));
        }
    }
    let lhs = (*r2 * r1.transpose() - Mat::identity(r1.dim)).sym().norm();
    Ok((lhs, (*r1 - *r2).norm_sq()))
}

/// One member of a recovery family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMember {
    pub eps: f64,
    /// v_ε, equal to the base displacement unless the budget forced a scaling.
    pub v: DisplacementJet,
    /// y_ε = id + ε v_ε with Jy = J∇y = Ju.
    pub y: JetField,
    /// ε^{(β−1)/2}.
    pub budget: f64,
    /// ‖∇v‖_∞ + ‖∇²v‖_∞ before scaling.
    pub sup_norm: f64,
    /// Factor applied to v (1 when the budget does not bind).
    pub scale: f64,
}

impl RecoveryMember {
    pub fn clipped(&self) -> bool {
        self.scale < 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryFamily {
    pub base: DisplacementJet,
    pub members: Vec<RecoveryMember>,
}

/// ‖∇v‖_∞ + ‖∇²v‖_∞ over the cells.
pub fn sup_norm(v: &DisplacementJet) -> f64 {
    let grad = v.field().grads.iter().map(Mat::norm).fold(0.0, f64::max);
    let hess = second_gradient(v.field()).iter().map(|s| s.norm_sq().sqrt()).fold(0.0, f64::max);
    grad + hess
}

fn scaled(u: &DisplacementJet, s: f64) -> DisplacementJet {
    let mut f = u.field().clone();
    for (a, g) in f.values.iter_mut().zip(f.grads.iter_mut()) {
        *a = a.scale(s);
        *g = g.scale(s);
    }
    DisplacementJet::without_divergence(f)
}

/// y = id + ε v jet-wise, with both jump sets equal to Ju.
pub fn deformation_from(v: &DisplacementJet, eps: f64) -> JetField {
    let grid = v.grid();
    let d = grid.dim();
    let mut y = v.field().clone();
    for c in 0..grid.n_cells() {
        y.values[c] = grid.center(c) + v.value(c).scale(eps);
        y.grads[c] = Mat::identity(d) + v.gradient(c).scale(eps);
    }
    y
}

/// Recovery deformations id + ε v_ε for each ε. When ‖∇u‖_∞ + ‖∇²u‖_∞ exceeds the budget
/// ε^{(β−1)/2}, v_ε is u scaled down to 0.9 of the budget and the member is marked clipped.
pub fn build_recovery(u: &DisplacementJet, model: &EnergyModel, eps_list: &[f64]) -> Result<RecoveryFamily> {
    if u.divergence().iter().any(|&b| b) {
        return Err(Error::InvalidParameter("recovery needs a displacement without divergence set".into()));
    }
    let norm = sup_norm(u);
    let members = eps_list
        .iter()
        .map(|&eps| {
            let m = model.with_eps(eps)?;
            let budget = eps.powf(0.5 * (m.beta - 1.0));
            let scale = if norm > budget { 0.9 * budget / norm } else { 1.0 };
            let v = if scale < 1.0 { scaled(u, scale) } else { u.clone() };
            let y = deformation_from(&v, eps);
            Ok(RecoveryMember { eps, v, y, budget, sup_norm: norm, scale })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryFamily { base: u.clone(), members })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimsupRow {
    pub eps: f64,
    pub energy: f64,
    pub limit: f64,
    pub gap: f64,
    pub elastic: f64,
    pub second_grad_term: f64,
    pub clipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimsupTable {
    pub rows: Vec<LimsupRow>,
    /// Fitted exponent of the second-gradient column against ε.
    pub second_grad_slope: Slope,
}

impl LimsupTable {
    /// |gap| / max(E(u), 1) at the smallest ε.
    pub fn final_relative_gap(&self) -> Option<f64> {
        self.rows
            .iter()
            .min_by(|a, b| a.eps.total_cmp(&b.eps))
            .map(|r| r.gap.abs() / r.limit.max(1.0))
    }
}

/// E_ε(y_ε) against E(u) along the family.
pub fn limsup_check(family: &RecoveryFamily, model: &EnergyModel, q: &QuadraticForm) -> Result<LimsupTable> {
    let limit = linear_energy(model, q, &family.base)?
        .total
        .finite()
        .ok_or_else(|| Error::NonFinite("linear energy".into()))?;
    let rows = family
        .members
        .iter()
        .map(|mem| {
            let m = model.with_eps(mem.eps)?;
            let r = nonlinear_energy(&m, &mem.y)?;
            let energy = r.total.finite().ok_or_else(|| {
                Error::InvalidParameter(format!("recovery deformation at ε = {} has infinite energy", mem.eps))
            })?;
            Ok(LimsupRow {
                eps: mem.eps,
                energy,
                limit,
                gap: energy - limit,
                elastic: r.elastic,
                second_grad_term: r.second_gradient,
                clipped: mem.clipped(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let sg: Vec<f64> = rows.iter().map(|r| r.second_grad_term).collect();
    Ok(LimsupTable { second_grad_slope: loglog_slope(&eps, &sg), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{block_grid, smooth_bending};
    use crate::energy::{hessian_q, remainder_omega, Density};
    use crate::fields::{sample_analytic, validate_field, Base, FieldSpec, Piece, SmoothMap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> EnergyModel {
        EnergyModel::new(Density::default(), 0.1, 0.75, 0.7, 1.0).unwrap()
    }

    fn displacement(spec: &FieldSpec) -> DisplacementJet {
        DisplacementJet::without_divergence(sample_analytic(&block_grid(0.125).unwrap(), spec, 1.0).unwrap())
    }

    fn step(lambda: f64) -> FieldSpec {
        FieldSpec {
            base: Base::Zero,
            pieces: vec![
                Piece { region: Some(vec![[0.0, 2.0], [0.0, 1.0]]), map: SmoothMap::default() },
                Piece { region: None, map: SmoothMap { offset: vec![lambda, 0.3], ..Default::default() } },
            ],
            cracks: vec![],
        }
    }

    #[test]
    fn fjm_examples() {
        assert_eq!(fjm_identity_check(&Mat::identity(2)), FjmCheck { lhs: 0.0, rhs: 0.0, remainder: 0.0 });
        let c = fjm_identity_check(&Mat::diag(&[1.3, 1.0]));
        assert!((c.lhs - 0.3).abs() < 1e-15 && (c.rhs - 0.3).abs() < 1e-7 && c.remainder.abs() < 1e-7);
        let a = Mat::from_flat(2, &[0.0, -1.0, 1.0, 0.0]).scale(1.0 / 2f64.sqrt());
        for t in [1e-1, 1e-2, 1e-3] {
            let c = fjm_identity_check(&(Mat::identity(2) + a.scale(t)));
            assert_eq!(c.lhs, 0.0);
            assert!(c.rhs / (t * t) < 1.0);
        }
    }

    #[test]
    fn rotation_pairs_have_quadratic_symmetric_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(rotation_symmetry_bound(&Mat::identity(2), &Mat::identity(2)).unwrap(), (0.0, 0.0));
        for _ in 0..100 {
            let r1 = Mat::rotation(2, rng.gen_range(-3.0..3.0));
            let r2 = Mat::rotation(2, rng.gen_range(-3.0..3.0));
            let (lhs, rhs) = rotation_symmetry_bound(&r1, &r2).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
        assert!(rotation_symmetry_bound(&Mat::diag(&[1.0, -1.0]), &Mat::identity(2)).is_err());
    }

    #[test]
    fn zero_displacement_gives_identity() {
        let m = model();
        let q = hessian_q(&m, 2).unwrap();
        let u = displacement(&FieldSpec { base: Base::Zero, pieces: vec![Piece::default()], cracks: vec![] });
        let fam = build_recovery(&u, &m, &[0.1, 0.01]).unwrap();
        let table = limsup_check(&fam, &m, &q).unwrap();
        assert!(table.rows.iter().all(|r| r.energy == 0.0 && r.gap == 0.0));
    }

    #[test]
    fn cracked_rigid_displacement_has_no_gap() {
        let m = model();
        let q = hessian_q(&m, 2).unwrap();
        let u = displacement(&step(0.7));
        let fam = build_recovery(&u, &m, &[0.1, 0.01, 0.001]).unwrap();
        let table = limsup_check(&fam, &m, &q).unwrap();
        for r in &table.rows {
            assert!((r.energy - 1.0).abs() < 1e-15, "{r:?}");
            assert_eq!(r.gap, 0.0);
        }
        assert_eq!(table.second_grad_slope, Slope::Exact);
    }

    #[test]
    fn smooth_recovery_converges() {
        let m = model();
        let q = hessian_q(&m, 2).unwrap();
        let spec = FieldSpec { base: Base::Zero, ..smooth_bending(0.2, 0.1, 0.1, 0.1) };
        let u = displacement(&spec);
        let eps_list: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
        let fam = build_recovery(&u, &m, &eps_list).unwrap();
        for mem in &fam.members {
            assert!(validate_field(&mem.y, &m.tolerances).passed());
            assert!(!mem.clipped());
        }
        let table = limsup_check(&fam, &m, &q).unwrap();
        assert!(table.final_relative_gap().unwrap() <= 0.05, "{table:?}");
        assert!(table.second_grad_slope.at_least(2.0 - 2.0 * m.beta - 0.1));
    }

    #[test]
    fn elastic_term_splits_into_quadratic_and_remainder() {
        let m = model();
        let q = hessian_q(&m, 2).unwrap();
        let eps = 0.05;
        let u = displacement(&FieldSpec { base: Base::Zero, ..smooth_bending(0.4, -0.2, 0.3, 0.1) });
        let y = deformation_from(&u, eps);
        let me = m.with_eps(eps).unwrap();
        let elastic = nonlinear_energy(&me, &y).unwrap().elastic;
        let vol = y.grid.cell_volume();
        let split: f64 = (0..y.n_cells())
            .map(|c| {
                let g = u.gradient(c);
                0.5 * q.eval(&g.sym()) + remainder_omega(&m, &q, &g.scale(eps)).unwrap() / (eps * eps)
            })
            .sum::<f64>()
            * vol;
        assert!((elastic - split).abs() <= 1e-9 * elastic.max(1.0));
    }

    #[test]
    fn budget_scaling_is_flagged() {
        let m = model();
        let u = displacement(&FieldSpec { base: Base::Zero, ..smooth_bending(0.0, 0.0, 0.0, 50.0) });
        let fam = build_recovery(&u, &m, &[0.5, 1e-20]).unwrap();
        assert!(fam.members[0].clipped());
        assert!(sup_norm(&fam.members[0].v) <= fam.members[0].budget);
        assert!(!fam.members[1].clipped());
    }
}
