//! Experiment runners. Numerical failures become flagged rows; only I/O errors abort.

use anyhow::Result;
use griffith_core::energy::{hessian_q, linear_energy, nonlinear_energy, relaxed_energy, EnergyModel, EnergyReport, QuadraticForm};
use griffith_core::fields::{sample_analytic, DisplacementJet, JetField};
use griffith_core::linalg::{Mat, Vector};
use griffith_core::linearize::{build_recovery, deformation_from, limsup_check};
use griffith_core::minimize::{minima_convergence_sweep, minimize_over_cracks, CrackSearch, ProblemKind};
use griffith_core::rigidity::{
    certify_sweep, coarea_budget, coarea_partition, fit_rotations, measure_bounds, piecewise_rotate, BoundMeasurements,
    CaccioppoliPartition,
};
use griffith_core::stats::Slope;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{energy, num, Reporter, Table};
use crate::scenario::{MinimizeKind, PartitionMode, Scenario};

/// Slack on the coarea budget absorbing the discretization of the level-set boundaries.
pub const COAREA_SLACK: f64 = 1.25;

/// Frame-indifference tolerance relative to 1 + E.
pub const FRAME_TOL: f64 = 1e-10;

fn report_cells(r: &EnergyReport) -> Vec<String> {
    vec![num(r.elastic), num(r.second_gradient), num(r.surface), energy(r.total)]
}

fn slope(s: &Slope) -> String {
    match s {
        Slope::Fitted(p) => num(*p),
        Slope::Exact => "exact".into(),
        Slope::Undetermined => "undetermined".into(),
    }
}

/// A report, or the reason it could not be computed.
#[derive(Serialize)]
#[serde(untagged)]
enum Outcome {
    Report(EnergyReport),
    Failed { error: String },
}

impl From<&std::result::Result<EnergyReport, String>> for Outcome {
    fn from(r: &std::result::Result<EnergyReport, String>) -> Self {
        match r {
            Ok(r) => Outcome::Report(*r),
            Err(e) => Outcome::Failed { error: e.clone() },
        }
    }
}

#[derive(Serialize)]
struct EvaluateRecord {
    field: String,
    eps: f64,
    nonlinear: Outcome,
    relaxed: Outcome,
}

pub fn evaluate(s: &Scenario, out: &mut Reporter) -> Result<()> {
    let mut table = Table::new(&["field", "eps", "functional", "elastic", "second_gradient", "surface", "total"]);
    let mut frame = Table::new(&["field", "eps", "sample", "angle", "shift_0", "shift_1", "total", "moved_total", "difference"]);
    let mut records = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    for f in &s.fields {
        for &eps in &s.eps_list {
            let lead = vec![f.name.clone(), num(eps)];
            let y = match sample_analytic(&s.grid, &f.spec, eps) {
                Ok(y) => y,
                Err(e) => {
                    table.push_error(lead, e);
                    continue;
                }
            };
            let model = EnergyModel { eps, ..s.model.clone() };
            let nl = nonlinear_energy(&model, &y).map_err(|e| e.to_string());
            let rel = relaxed_energy(&model, &y).map_err(|e| e.to_string());
            for (name, r) in [("nonlinear", &nl), ("relaxed", &rel)] {
                let mut lead = lead.clone();
                lead.push(name.into());
                match r {
                    Ok(r) => {
                        lead.extend(report_cells(r));
                        table.push(lead, None);
                    }
                    Err(e) => table.push_error(lead, e),
                }
            }
            if let Ok(base) = &nl {
                for k in 0..s.evaluate.rigid_samples {
                    let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    let shift: Vec<f64> = (0..s.grid.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let moved = y.rigid_transform(&Mat::rotation(s.grid.dim(), angle), &Vector::from_slice(&shift));
                    frame_row(&mut frame, &lead, k, angle, &shift, base, nonlinear_energy(&model, &moved));
                }
            }
            records.push(EvaluateRecord { field: f.name.clone(), eps, nonlinear: (&nl).into(), relaxed: (&rel).into() });
        }
    }
    out.table("evaluate.csv", &table)?;
    if s.evaluate.rigid_samples > 0 {
        out.table("frame_indifference.csv", &frame)?;
    }
    out.json("evaluate.json", &records)
}

fn frame_row(
    table: &mut Table,
    lead: &[String],
    k: usize,
    angle: f64,
    shift: &[f64],
    base: &EnergyReport,
    moved: griffith_core::Result<EnergyReport>,
) {
    let mut cells = lead.to_vec();
    cells.extend([k.to_string(), num(angle), num(shift[0]), num(shift.get(1).copied().unwrap_or(0.0))]);
    let moved = match moved {
        Ok(m) => m,
        Err(e) => return table.push_error(cells, e),
    };
    let (a, b) = (base.total.finite(), moved.total.finite());
    let (diff, flag) = match (a, b) {
        (Some(a), Some(b)) => {
            let d = (a - b).abs();
            (d, (d > FRAME_TOL * (1.0 + a)).then(|| "energy changed under a rigid motion".to_string()))
        }
        (None, None) => (0.0, None),
        _ => (f64::INFINITY, Some("finiteness changed under a rigid motion".to_string())),
    };
    cells.extend([energy(base.total), energy(moved.total), num(diff)]);
    table.push(cells, flag);
}

#[derive(Serialize)]
struct CertifyRecord {
    eps: f64,
    energy: f64,
    energy_bound: f64,
    coarea_budget: f64,
    labels: usize,
    measured: BoundMeasurements,
}

/// Measurements at one ε plus the energy bound M used for the coarea budget.
fn certify_one(s: &Scenario, eps: f64) -> griffith_core::Result<CertifyRecord> {
    let name = s.certify.field.clone().unwrap_or_else(|| s.fields[0].name.clone());
    let spec = &s.field(&name).expect("validated field").spec;
    let model = EnergyModel { eps, ..s.model.clone() };
    let y = sample_analytic(&s.grid, spec, eps)?;
    let datum = match &s.certify.datum {
        Some(d) => sample_analytic(&s.grid, &s.field(d).expect("validated field").spec, eps)?,
        None => y.clone(),
    };
    let energy = relaxed_energy(&model, &y)?
        .total
        .finite()
        .ok_or_else(|| griffith_core::Error::NonFinite("relaxed energy".into()))?;
    let partition = match s.certify.partition {
        PartitionMode::Coarea => coarea_partition(&y, &model),
        PartitionMode::Single => CaccioppoliPartition::single(&y),
    };
    let partition = fit_rotations(&partition);
    let y_rot = piecewise_rotate(&y, &partition)?;
    let measured = measure_bounds(&y, &y_rot, &partition, &datum, eps)?;
    let energy_bound = s.certify.energy_bound.unwrap_or(energy);
    Ok(CertifyRecord {
        eps,
        energy,
        energy_bound,
        coarea_budget: coarea_budget(&model, s.grid.volume(), energy_bound),
        labels: partition.n_labels(),
        measured,
    })
}

pub fn certify(s: &Scenario, out: &mut Reporter) -> Result<()> {
    let mut table = Table::new(&[
        "eps",
        "energy",
        "labels",
        "frame_deviation",
        "new_jumps",
        "boundary_excess",
        "coarea_budget",
        "jumps_budget",
        "sym_deviation",
        "sym_budget",
        "full_deviation",
        "full_budget",
        "jumps_slope",
        "sym_slope",
        "full_slope",
    ]);
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for &eps in &s.eps_list {
        match certify_one(s, eps) {
            Ok(r) => records.push(r),
            Err(e) => failed.push((eps, e)),
        }
    }
    let measurements: Vec<BoundMeasurements> = records.iter().map(|r| r.measured).collect();
    let sweep = if measurements.is_empty() { None } else { certify_sweep(&measurements, &s.model).ok() };
    for (i, r) in records.iter().enumerate() {
        let m = &r.measured;
        let mut cells = vec![num(r.eps), num(r.energy), r.labels.to_string(), num(m.frame_deviation), num(m.new_jumps)];
        cells.extend([num(m.boundary_excess), num(r.coarea_budget)]);
        let mut flags = Vec::new();
        if m.boundary_excess > COAREA_SLACK * r.coarea_budget {
            flags.push("coarea budget");
        }
        match &sweep {
            Some(sw) => {
                let c = &sw.rows[i];
                cells.extend([num(c.jumps_budget), num(m.sym_deviation), num(c.sym_budget)]);
                cells.extend([num(m.full_deviation), num(c.full_budget)]);
                cells.extend([slope(&sw.jumps_slope), slope(&sw.sym_slope), slope(&sw.full_slope)]);
                for (ok, what) in [(c.frame_ok, "frame"), (c.jumps_ok, "jumps"), (c.sym_ok, "sym"), (c.full_ok, "full")] {
                    if !ok {
                        flags.push(what);
                    }
                }
            }
            None => {
                cells.extend(["", "", "", "", "", "", "", ""].map(String::from));
                flags.push("no sweep certificate");
            }
        }
        let flag = (!flags.is_empty()).then(|| format!("bounds exceeded: {}", flags.join(", ")));
        table.push(cells, flag);
    }
    for (eps, e) in failed {
        table.push_error(vec![num(eps)], e);
    }
    out.table("certify.csv", &table)?;
    out.json("certify.json", &serde_json::json!({ "records": records, "sweep": sweep }))
}

fn quadratic(s: &Scenario) -> griffith_core::Result<QuadraticForm> {
    hessian_q(&s.model, s.grid.dim())
}

pub fn recovery(s: &Scenario, out: &mut Reporter) -> Result<()> {
    let mut table = Table::new(&["eps", "E_eps", "E_lim", "gap", "elastic", "second_grad_term", "clipped", "second_grad_slope"]);
    let name = s.recovery.field.clone().unwrap_or_else(|| s.fields[0].name.clone());
    let spec = &s.field(&name).expect("validated field").spec;
    let run = || -> griffith_core::Result<_> {
        let u = DisplacementJet::without_divergence(sample_analytic(&s.grid, spec, 1.0)?);
        let family = build_recovery(&u, &s.model, &s.eps_list)?;
        limsup_check(&family, &s.model, &quadratic(s)?)
    };
    match run() {
        Ok(t) => {
            for r in &t.rows {
                let cells = vec![num(r.eps), num(r.energy), num(r.limit), num(r.gap), num(r.elastic)];
                let mut cells = cells;
                cells.extend([num(r.second_grad_term), r.clipped.to_string(), slope(&t.second_grad_slope)]);
                table.push(cells, None);
            }
            out.table("recovery.csv", &table)?;
            out.json("recovery.json", &t)
        }
        Err(e) => {
            table.push_error(vec![], e.to_string());
            out.table("recovery.csv", &table)?;
            out.json("recovery.json", &serde_json::json!({ "error": e.to_string() }))
        }
    }
}

/// Energy of a competitor displacement in the given problem, or why it is not admissible.
fn competitor_energy(
    kind: ProblemKind,
    model: &EnergyModel,
    q: &QuadraticForm,
    datum: &JetField,
    u: &JetField,
) -> std::result::Result<f64, String> {
    let grid = &u.grid;
    let off = (0..grid.n_cells())
        .filter(|&c| grid.is_frame(c))
        .map(|c| (u.values[c] - datum.values[c]).norm().max((u.grads[c] - datum.grads[c]).norm()))
        .fold(0.0, f64::max);
    if off > 1e-9 {
        return Err(format!("differs from the datum on the frame by {off:e}"));
    }
    let u = DisplacementJet::without_divergence(u.clone());
    let r = match kind {
        ProblemKind::Nonlinear => relaxed_energy(model, &deformation_from(&u, model.eps)),
        ProblemKind::Linear => linear_energy(model, q, &u),
    }
    .map_err(|e| e.to_string())?;
    r.total.finite().ok_or_else(|| "infinite energy".to_string())
}

/// Relative slack when comparing a minimum with a competitor energy.
pub const COMPETITOR_TOL: f64 = 1e-6;

fn kinds(k: MinimizeKind) -> Vec<ProblemKind> {
    match k {
        MinimizeKind::Nonlinear => vec![ProblemKind::Nonlinear],
        MinimizeKind::Linear => vec![ProblemKind::Linear],
        MinimizeKind::Both => vec![ProblemKind::Nonlinear, ProblemKind::Linear],
    }
}

fn kind_name(k: ProblemKind) -> &'static str {
    match k {
        ProblemKind::Nonlinear => "nonlinear",
        ProblemKind::Linear => "linear",
    }
}

#[derive(Serialize)]
struct MinimizeRecord<'a> {
    eps: f64,
    kind: ProblemKind,
    argmin: usize,
    name: &'a str,
    search: &'a CrackSearch,
}

pub fn minimize(s: &Scenario, out: &mut Reporter) -> Result<()> {
    let family = s.family.as_ref().expect("validated family");
    let datum_spec = s.datum.as_ref().expect("validated datum");
    let mut table = Table::new(&[
        "eps", "kind", "candidate", "name", "facets", "energy", "objective", "iterations", "residual", "converged", "start",
        "argmin",
    ]);
    let mut bounds = Table::new(&["eps", "kind", "competitor", "competitor_energy", "minimum"]);
    let mut searches = Vec::new();
    let q = quadratic(s);
    for &eps in &s.eps_list {
        let model = EnergyModel { eps, ..s.model.clone() };
        let datum = match q.clone().and_then(|_| sample_analytic(&s.grid, datum_spec, eps)) {
            Ok(d) => d,
            Err(e) => {
                table.push_error(vec![num(eps)], e);
                continue;
            }
        };
        let q = q.as_ref().expect("checked above");
        let h = DisplacementJet::without_divergence(datum.clone());
        for kind in kinds(s.minimize.kind) {
            let lead = vec![num(eps), kind_name(kind).to_string()];
            let search = match minimize_over_cracks(kind, &model, q, &h, family, &s.solver) {
                Ok(r) => r,
                Err(e) => {
                    table.push_error(lead, e);
                    continue;
                }
            };
            for (i, r) in search.results.iter().enumerate() {
                let mut cells = lead.clone();
                cells.extend([i.to_string(), family.names[i].clone(), r.crack.len().to_string(), num(r.energy)]);
                cells.extend([num(r.objective), r.iterations.to_string(), num(r.residual), r.converged.to_string()]);
                cells.extend([r.start.to_string(), (i == search.argmin).to_string()]);
                table.push(cells, (!r.converged).then(|| "solver did not converge".to_string()));
            }
            let min = search.best().energy;
            for c in &s.competitors {
                let mut cells = lead.clone();
                cells.push(c.name.clone());
                let e = sample_analytic(&s.grid, &c.spec, eps)
                    .map_err(|e| e.to_string())
                    .and_then(|u| competitor_energy(kind, &model, q, &datum, &u));
                match e {
                    Ok(e) => {
                        cells.extend([num(e), num(min)]);
                        let beaten = min > e * (1.0 + COMPETITOR_TOL) + 1e-12;
                        bounds.push(cells, beaten.then(|| "minimum exceeds competitor".to_string()));
                    }
                    Err(e) => bounds.push_error(cells, e),
                }
            }
            searches.push((eps, kind, search));
        }
    }
    out.table("minimize.csv", &table)?;
    if !s.competitors.is_empty() {
        out.table("competitors.csv", &bounds)?;
    }
    let records: Vec<MinimizeRecord> = searches
        .iter()
        .map(|(eps, kind, search)| MinimizeRecord {
            eps: *eps,
            kind: *kind,
            argmin: search.argmin,
            name: &family.names[search.argmin],
            search,
        })
        .collect();
    out.json("minimize.json", &records)
}

pub fn full_gamma(s: &Scenario, out: &mut Reporter) -> Result<()> {
    let family = s.family.as_ref().expect("validated family");
    let datum = s.datum.as_ref().expect("validated datum");
    let mut table = Table::new(&[
        "eps",
        "inf_E_eps",
        "min_E",
        "gap",
        "strain_discrepancy",
        "nonlinear_argmin",
        "linear_argmin",
        "converged",
    ]);
    let sweep = quadratic(s)
        .and_then(|q| minima_convergence_sweep(&s.model, &q, &s.grid, datum, family, &s.eps_list, &s.solver));
    match sweep {
        Ok(sw) => {
            let decreasing = sw.gap_decreasing();
            for r in &sw.rows {
                let mut cells = vec![num(r.eps), num(r.nonlinear_min), num(r.linear_min), num(r.gap)];
                cells.extend([num(r.strain_discrepancy), r.nonlinear_argmin.to_string(), r.linear_argmin.to_string()]);
                cells.push(r.converged.to_string());
                table.push(cells, (!r.converged).then(|| "solver did not converge".to_string()));
            }
            out.table("full_gamma.csv", &table)?;
            out.json(
                "full_gamma.json",
                &serde_json::json!({ "rows": sw.rows, "gap_decreasing": decreasing, "names": family.names }),
            )
        }
        Err(e) => {
            table.push_error(vec![], e.to_string());
            out.table("full_gamma.csv", &table)?;
            out.json("full_gamma.json", &serde_json::json!({ "error": e.to_string() }))
        }
    }
}
