use serde::{Deserialize, Serialize};

use super::partition::CaccioppoliPartition;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::fields::{surface_measure, DisplacementJet, JetField};
use crate::linalg::Mat;
use crate::stats::{loglog_slope, Slope};

/// u = (y_rot − id)/ε jet-wise; the jump set is Jy ∪ J∇y of `y_rot`.
pub fn rescale_displacement(y_rot: &JetField, eps: f64) -> Result<DisplacementJet> {
    if !(eps != 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange(format!("rescaling needs a finite nonzero ε, got {eps}")));
    }
    let grid = &y_rot.grid;
    let d = grid.dim();
    let mut u = y_rot.clone();
    for c in 0..grid.n_cells() {
        u.values[c] = (y_rot.values[c] - grid.center(c)).scale(1.0 / eps);
        u.grads[c] = (y_rot.grads[c] - Mat::identity(d)).scale(1.0 / eps);
    }
    Ok(DisplacementJet::without_divergence(u))
}

/// Measured quantities behind the four rigidity bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundMeasurements {
    pub eps: f64,
    /// Largest deviation of y_rot from the boundary datum on frame cells (values and gradients).
    pub frame_deviation: f64,
    /// Measure of (Jy_rot ∪ J∇y_rot) ∖ (Jy ∪ J∇y).
    pub new_jumps: f64,
    /// Measure of ∂P ∖ J∇y.
    pub boundary_excess: f64,
    /// ‖sym(∇y_rot) − Id‖ in L².
    pub sym_deviation: f64,
    /// ‖∇y_rot − Id‖ in L².
    pub full_deviation: f64,
}

/// Constants C of the budgets C ε^{β−γ}, C ε, C ε^γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub jumps: f64,
    pub sym: f64,
    pub full: f64,
}

impl BoundConstants {
    /// Four times the constants realized by `coarsest`.
    pub fn from_coarsest(coarsest: &BoundMeasurements, model: &EnergyModel) -> Self {
        let e = coarsest.eps;
        Self {
            jumps: 4.0 * coarsest.new_jumps.max(coarsest.boundary_excess) / e.powf(model.beta - model.gamma),
            sym: 4.0 * coarsest.sym_deviation / e,
            full: 4.0 * coarsest.full_deviation / e.powf(model.gamma),
        }
    }
}

/// Absolute slack absorbing roundoff in pass checks.
const PASS_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityCertificate {
    pub measured: BoundMeasurements,
    pub constants: BoundConstants,
    pub jumps_budget: f64,
    pub sym_budget: f64,
    pub full_budget: f64,
    pub frame_ok: bool,
    pub jumps_ok: bool,
    pub sym_ok: bool,
    pub full_ok: bool,
}

impl RigidityCertificate {
    pub fn passed(&self) -> bool {
        self.frame_ok && self.jumps_ok && self.sym_ok && self.full_ok
    }
}

fn l2_norm(field: &JetField, f: impl Fn(&Mat) -> Mat) -> f64 {
    (field.grads.iter().map(|g| f(g).norm_sq()).sum::<f64>() * field.grid.cell_volume()).sqrt()
}

/// Measures the four bounds for `y_rot` built from `y`; `datum` is the boundary deformation
/// id + εh sampled on the same grid.
pub fn measure_bounds(
    y: &JetField,
    y_rot: &JetField,
    partition: &CaccioppoliPartition,
    datum: &JetField,
    eps: f64,
) -> Result<BoundMeasurements> {
    if y.grid != y_rot.grid || y.grid != datum.grid || partition.labels.len() != y.n_cells() {
        return Err(Error::GridMismatch);
    }
    let grid = &y.grid;
    let d = grid.dim();
    let frame_deviation = (0..grid.n_cells())
        .filter(|&c| grid.is_frame(c))
        .map(|c| (y_rot.values[c] - datum.values[c]).norm().max((y_rot.grads[c] - datum.grads[c]).norm()))
        .fold(0.0, f64::max);
    let before = y.cut_set();
    let new_jumps = surface_measure(&y_rot.cut_set().difference(&before), grid);
    let boundary_excess = surface_measure(&partition.boundary.difference(&y.jgrad), grid);
    let id = Mat::identity(d);
    Ok(BoundMeasurements {
        eps,
        frame_deviation,
        new_jumps,
        boundary_excess,
        sym_deviation: l2_norm(y_rot, |g| g.sym() - id),
        full_deviation: l2_norm(y_rot, |g| *g - id),
    })
}

/// Compares measurements with C ε^{β−γ}, C ε and C ε^γ.
pub fn certify_bounds(m: &BoundMeasurements, model: &EnergyModel, constants: &BoundConstants) -> RigidityCertificate {
    let e = m.eps;
    let jumps_budget = constants.jumps * e.powf(model.beta - model.gamma);
    let sym_budget = constants.sym * e;
    let full_budget = constants.full * e.powf(model.gamma);
    RigidityCertificate {
        measured: *m,
        constants: *constants,
        jumps_budget,
        sym_budget,
        full_budget,
        frame_ok: m.frame_deviation <= PASS_FLOOR,
        jumps_ok: m.new_jumps.max(m.boundary_excess) <= jumps_budget + PASS_FLOOR,
        sym_ok: m.sym_deviation <= sym_budget + PASS_FLOOR,
        full_ok: m.full_deviation <= full_budget + PASS_FLOOR,
    }
}

/// Certificates of an ε-sweep with constants fixed at the coarsest ε, plus fitted exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCertificate {
    pub rows: Vec<RigidityCertificate>,
    pub jumps_slope: Slope,
    pub sym_slope: Slope,
    pub full_slope: Slope,
}

pub fn certify_sweep(measurements: &[BoundMeasurements], model: &EnergyModel) -> Result<SweepCertificate> {
    let coarsest = measurements
        .iter()
        .max_by(|a, b| a.eps.total_cmp(&b.eps))
        .ok_or_else(|| Error::InvalidParameter("empty sweep".into()))?;
    let constants = BoundConstants::from_coarsest(coarsest, model);
    let rows = measurements.iter().map(|m| certify_bounds(m, model, &constants)).collect();
    let eps: Vec<f64> = measurements.iter().map(|m| m.eps).collect();
    let col = |f: fn(&BoundMeasurements) -> f64| measurements.iter().map(f).collect::<Vec<_>>();
    Ok(SweepCertificate {
        rows,
        jumps_slope: loglog_slope(&eps, &col(|m| m.boundary_excess.max(m.new_jumps))),
        sym_slope: loglog_slope(&eps, &col(|m| m.sym_deviation)),
        full_slope: loglog_slope(&eps, &col(|m| m.full_deviation)),
    })
}

/// Discrete coarea budget 2ε^{−γ}(|Ω′| M)^{1/2} ε^β for an energy bound M.
pub fn coarea_budget(model: &EnergyModel, volume: f64, energy_bound: f64) -> f64 {
    2.0 * model.eps.powf(-model.gamma) * (volume * energy_bound).sqrt() * model.eps.powf(model.beta)
}

/// max |e(u1) − e(u2)| over cells outside both divergence sets.
pub fn compare_limit_strains(u1: &DisplacementJet, u2: &DisplacementJet) -> Result<f64> {
    if u1.grid() != u2.grid() {
        return Err(Error::GridMismatch);
    }
    Ok((0..u1.grid().n_cells())
        .filter(|&c| !u1.divergence()[c] && !u2.divergence()[c])
        .map(|c| (u1.strain(c) - u2.strain(c)).norm())
        .fold(0.0, f64::max))
}

/// Ω-cells whose displacement magnitude grows at least like ε^{−1/2} along the sweep and
/// exceeds `floor` at the smallest ε.
pub fn divergence_mask(sweep: &[(f64, &DisplacementJet)], floor: f64) -> Result<Vec<bool>> {
    let Some((_, first)) = sweep.first() else {
        return Err(Error::InvalidParameter("empty sweep".into()));
    };
    let grid = first.grid();
    if sweep.iter().any(|(_, u)| u.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let eps: Vec<f64> = sweep.iter().map(|s| s.0).collect();
    let smallest = eps.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    Ok((0..grid.n_cells())
        .map(|c| {
            if grid.is_frame(c) {
                return false;
            }
            let mags: Vec<f64> = sweep.iter().map(|(_, u)| u.value(c).norm()).collect();
            mags[smallest] >= floor && matches!(loglog_slope(&eps, &mags), Slope::Fitted(p) if p <= -0.5)
        })
        .collect())
}
