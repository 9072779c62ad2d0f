use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgs::SolverOptions;
use super::problem::check_crack;
use super::solve::{solve_fixed_crack_linear, solve_fixed_crack_nonlinear, MinimizationResult, ProblemKind};
use crate::energy::{EnergyModel, QuadraticForm};
use crate::error::{Error, Result};
use crate::fields::{sample_analytic, DisplacementJet, FacetSet, FieldSpec, Grid, Segment};
use crate::rigidity::{
    coarea_partition, compare_limit_strains, divergence_mask, fit_rotations, piecewise_rotate, rescale_displacement,
};

/// Finite list of admissible cracks; always contains the empty crack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrackFamily {
    pub names: Vec<String>,
    pub cracks: Vec<FacetSet>,
}

impl CrackFamily {
    pub fn new(grid: &Grid, entries: Vec<(String, FacetSet)>) -> Result<Self> {
        for (name, crack) in &entries {
            check_crack(grid, crack).map_err(|e| Error::CrackOutsideDomain(format!("{name}: {e}")))?;
        }
        if !entries.iter().any(|(_, c)| c.is_empty()) {
            return Err(Error::InvalidParameter("crack family must contain the empty crack".into()));
        }
        let (names, cracks) = entries.into_iter().unzip();
        Ok(Self { names, cracks })
    }

    pub fn from_segments(grid: &Grid, entries: &[(String, Vec<Segment>)]) -> Result<Self> {
        let mut out = Vec::with_capacity(entries.len());
        for (name, segments) in entries {
            let mut crack = FacetSet::new();
            for s in segments {
                crack = crack.union(&s.facets(grid)?);
            }
            out.push((name.clone(), crack));
        }
        Self::new(grid, out)
    }

    /// The empty crack, then for each fraction and each plane x₀ = `at` a cut rising from the
    /// bottom of Ω through that fraction of its height.
    pub fn column_cuts(grid: &Grid, planes: &[f64], fractions: &[f64]) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::InvalidParameter("column cuts need a planar grid".into()));
        }
        let inner = grid.inner_extents();
        let (lo, hi) = inner[1];
        let mut entries = vec![("empty".to_string(), FacetSet::new())];
        for &frac in fractions {
            for &at in planes {
                let top = lo + frac * (hi - lo);
                let crack: FacetSet = grid.facets_on_plane(0, at, &[(lo, top)])?.into_iter().collect();
                entries.push((format!("x0={at}:{frac}"), crack));
            }
        }
        Self::new(grid, entries)
    }

    pub fn len(&self) -> usize {
        self.cracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cracks.is_empty()
    }
}

/// All fixed-crack minimizers in family order and the winning index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrackSearch {
    pub results: Vec<MinimizationResult>,
    pub argmin: usize,
}

impl CrackSearch {
    pub fn best(&self) -> &MinimizationResult {
        &self.results[self.argmin]
    }
}

/// Relative tolerance under which two energies count as tied.
const TIE_TOL: f64 = 1e-12;

fn argmin(results: &[MinimizationResult]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        let b = &results[best];
        let scale = r.energy.abs().max(b.energy.abs()).max(1.0);
        let tied = (r.energy - b.energy).abs() <= TIE_TOL * scale;
        if (!tied && r.energy < b.energy) || (tied && r.crack.len() < b.crack.len()) {
            best = i;
        }
    }
    best
}

/// Solves every candidate (in parallel, order preserved) and picks the least energy;
/// ties go to fewer crack facets, then to the earlier candidate.
pub fn minimize_over_cracks(
    kind: ProblemKind,
    model: &EnergyModel,
    q: &QuadraticForm,
    datum: &DisplacementJet,
    family: &CrackFamily,
    opts: &SolverOptions,
) -> Result<CrackSearch> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty crack family".into()));
    }
    let results = family
        .cracks
        .par_iter()
        .map(|crack| match kind {
            ProblemKind::Nonlinear => solve_fixed_crack_nonlinear(model, q, datum, crack, opts),
            ProblemKind::Linear => solve_fixed_crack_linear(model, q, datum, crack, opts),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrackSearch { argmin: argmin(&results), results })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub nonlinear_min: f64,
    pub linear_min: f64,
    pub gap: f64,
    pub nonlinear_argmin: usize,
    pub linear_argmin: usize,
    /// Largest strain difference between the rescaled nonlinear and the linear minimizer
    /// outside the divergence set.
    pub strain_discrepancy: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSweep {
    pub rows: Vec<ConvergenceRow>,
    /// Ω cells where the rescaled nonlinear minimizers diverge along the sweep.
    pub divergence: Vec<bool>,
}

impl ConvergenceSweep {
    /// Whether |gap| decreases strictly along decreasing ε.
    pub fn gap_decreasing(&self) -> bool {
        let mut rows: Vec<&ConvergenceRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs())
    }
}

/// Nonlinear versus linearized minima over the crack family for each ε. The datum is
/// sampled from `datum` at each ε; nonlinear minimizers are mapped to displacements through
/// the rigidity pipeline before their strains are compared.
pub fn minima_convergence_sweep(
    model: &EnergyModel,
    q: &QuadraticForm,
    grid: &Grid,
    datum: &FieldSpec,
    family: &CrackFamily,
    eps_list: &[f64],
    opts: &SolverOptions,
) -> Result<ConvergenceSweep> {
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut pairs = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let m = model.with_eps(eps)?;
        let h = DisplacementJet::without_divergence(sample_analytic(grid, datum, eps)?);
        let nl = minimize_over_cracks(ProblemKind::Nonlinear, &m, q, &h, family, opts)?;
        let lin = minimize_over_cracks(ProblemKind::Linear, &m, q, &h, family, opts)?;
        let y = &nl.best().field;
        let partition = fit_rotations(&coarea_partition(y, &m));
        let u = rescale_displacement(&piecewise_rotate(y, &partition)?, eps)?;
        let converged = nl.results.iter().chain(&lin.results).all(|r| r.converged);
        rows.push(ConvergenceRow {
            eps,
            nonlinear_min: nl.best().energy,
            linear_min: lin.best().energy,
            gap: nl.best().energy - lin.best().energy,
            nonlinear_argmin: nl.argmin,
            linear_argmin: lin.argmin,
            strain_discrepancy: 0.0,
            converged,
        });
        pairs.push((eps, u, lin.best().displacement(eps)?));
    }
    let sweep: Vec<(f64, &DisplacementJet)> = pairs.iter().map(|(e, u, _)| (*e, u)).collect();
    let divergence = divergence_mask(&sweep, 1.0)?;
    for (row, (_, u, lin)) in rows.iter_mut().zip(&pairs) {
        let u = DisplacementJet::new(u.field().clone(), divergence.clone())?;
        row.strain_discrepancy = compare_limit_strains(&u, lin)?;
    }
    Ok(ConvergenceSweep { rows, divergence })
}
