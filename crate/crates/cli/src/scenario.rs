//! Scenario files: raw TOML types, validation, and the checked [`Scenario`].

use std::fmt;
use std::path::{Path, PathBuf};

use griffith_core::energy::{parameter_window, Density, EnergyModel};
use griffith_core::fields::{sample_analytic, Base, FacetSet, FieldSpec, Grid, Piece, Segment, Tolerances};
use griffith_core::minimize::{CrackFamily, SolverOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::keys::prune_unknown;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Evaluate,
    Certify,
    Recovery,
    Minimize,
    FullGamma,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Evaluate => "evaluate",
            Experiment::Certify => "certify",
            Experiment::Recovery => "recovery",
            Experiment::Minimize => "minimize",
            Experiment::FullGamma => "full-gamma",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
struct RawGrid {
    outer: Vec<[f64; 2]>,
    inner: Vec<[f64; 2]>,
    h: f64,
}

#[derive(Clone, Debug, Deserialize)]
struct RawModel {
    eps: Option<f64>,
    eps_list: Option<Vec<f64>>,
    beta: f64,
    gamma: f64,
    kappa: f64,
    #[serde(default)]
    density: Density,
    #[serde(default)]
    tolerances: Option<Tolerances>,
}

#[derive(Clone, Debug, Deserialize)]
struct RawField {
    name: Option<String>,
    #[serde(default)]
    base: Option<Base>,
    pieces: Vec<Piece>,
    #[serde(default)]
    cracks: Vec<Segment>,
}

impl RawField {
    fn spec(&self, default_base: Base) -> FieldSpec {
        FieldSpec { base: self.base.unwrap_or(default_base), pieces: self.pieces.clone(), cracks: self.cracks.clone() }
    }
}

#[derive(Clone, Debug, Deserialize)]
struct RawCandidate {
    name: String,
    segments: Vec<Segment>,
}

#[derive(Clone, Debug, Deserialize)]
struct RawColumns {
    planes: Vec<f64>,
    fractions: Vec<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
struct RawFamily {
    #[serde(default)]
    candidates: Vec<RawCandidate>,
    columns: Option<RawColumns>,
}

#[derive(Clone, Debug, Default, Deserialize)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// Options of the `evaluate` experiment.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
pub struct EvaluateOptions {
    /// Random rigid motions applied to every field to check frame indifference.
    #[serde(default)]
    pub rigid_samples: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    #[default]
    Coarea,
    Single,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
pub struct CertifyOptions {
    pub field: Option<String>,
    /// Field whose frame values serve as boundary datum; the certified field itself by default.
    pub datum: Option<String>,
    #[serde(default)]
    pub partition: PartitionMode,
    /// Energy bound M of the coarea budget; the relaxed energy at each ε by default.
    pub energy_bound: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
pub struct RecoveryOptions {
    pub field: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeKind {
    Nonlinear,
    Linear,
    #[default]
    Both,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
pub struct MinimizeOptions {
    #[serde(default)]
    pub kind: MinimizeKind,
}

#[derive(Clone, Debug, Deserialize)]
struct RawScenario {
    experiment: Option<Experiment>,
    seed: Option<u64>,
    grid: RawGrid,
    model: RawModel,
    #[serde(default)]
    fields: Vec<RawField>,
    datum: Option<RawField>,
    family: Option<RawFamily>,
    #[serde(default)]
    competitors: Vec<RawField>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    evaluate: EvaluateOptions,
    #[serde(default)]
    certify: CertifyOptions,
    #[serde(default)]
    recovery: RecoveryOptions,
    #[serde(default)]
    minimize: MinimizeOptions,
    #[serde(default)]
    solver: SolverOptions,
}

/// A named field spec.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedField {
    pub name: String,
    pub spec: FieldSpec,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub grid: Grid,
    /// Model at the first ε of `eps_list`.
    pub model: EnergyModel,
    pub eps_list: Vec<f64>,
    pub fields: Vec<NamedField>,
    /// Boundary displacement h.
    pub datum: Option<FieldSpec>,
    pub family: Option<CrackFamily>,
    /// Displacements whose energies bound the minima from above.
    pub competitors: Vec<NamedField>,
    pub output_dir: Option<PathBuf>,
    pub evaluate: EvaluateOptions,
    pub certify: CertifyOptions,
    pub recovery: RecoveryOptions,
    pub minimize: MinimizeOptions,
    pub solver: SolverOptions,
    /// Hex SHA-256 of the file contents.
    pub hash: String,
}

impl Scenario {
    pub fn field(&self, name: &str) -> Option<&NamedField> {
        self.fields.iter().find(|f| f.name == name)
    }
}

/// Every violation found in a scenario file.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioError {
    pub path: PathBuf,
    pub violations: Vec<String>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} violation(s)", self.path.display(), self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioError {}

/// Reads and validates the scenario at `path`. `experiment` (the requested verb) adds the
/// requirements of that experiment; the file's own selector is used when it is `None`.
pub fn parse_scenario(path: &Path, experiment: Option<Experiment>) -> Result<Scenario, ScenarioError> {
    let fail = |violations| ScenarioError { path: path.to_path_buf(), violations };
    let text = std::fs::read_to_string(path).map_err(|e| fail(vec![format!("cannot read scenario: {e}")]))?;
    parse_str(&text, experiment).map_err(fail)
}

fn plural_eps(raw: &RawModel, errors: &mut Vec<String>) -> Vec<f64> {
    let list = match (raw.eps, &raw.eps_list) {
        (Some(_), Some(_)) => {
            errors.push("give either `model.eps` or `model.eps_list`, not both".into());
            return vec![];
        }
        (Some(e), None) => vec![e],
        (None, Some(l)) => l.clone(),
        (None, None) => {
            errors.push("missing `model.eps` or `model.eps_list`".into());
            return vec![];
        }
    };
    if list.is_empty() {
        errors.push("`model.eps_list` is empty".into());
    }
    for e in &list {
        if !(*e > 0.0 && e.is_finite()) {
            errors.push(format!("ε = {e} must be positive and finite"));
        }
    }
    list
}

fn check_field(grid: &Grid, spec: &FieldSpec, eps: f64, what: &str, errors: &mut Vec<String>) {
    if let Err(e) = sample_analytic(grid, spec, eps) {
        errors.push(format!("{what}: {e}"));
    }
}

fn displacement(raw: &RawField, what: &str, errors: &mut Vec<String>) -> FieldSpec {
    let spec = raw.spec(Base::Zero);
    if spec.base != Base::Zero {
        errors.push(format!("{what} is a displacement and needs base = \"zero\""));
    }
    spec
}

fn build_family(grid: &Grid, raw: &RawFamily, errors: &mut Vec<String>) -> Option<CrackFamily> {
    let mut entries = match &raw.columns {
        Some(c) => match CrackFamily::column_cuts(grid, &c.planes, &c.fractions) {
            Ok(f) => f.names.into_iter().zip(f.cracks).collect(),
            Err(e) => {
                errors.push(format!("family.columns: {e}"));
                return None;
            }
        },
        None => vec![("empty".to_string(), FacetSet::new())],
    };
    let mut ok = true;
    for (i, c) in raw.candidates.iter().enumerate() {
        let facets = c.segments.iter().try_fold(FacetSet::new(), |acc, s| s.facets(grid).map(|f| acc.union(&f)));
        match facets {
            Ok(f) => entries.push((c.name.clone(), f)),
            Err(e) => {
                errors.push(format!("family.candidates[{i}] `{}`: {e}", c.name));
                ok = false;
            }
        }
    }
    if !ok {
        return None;
    }
    CrackFamily::new(grid, entries).map_err(|e| errors.push(format!("family: {e}"))).ok()
}

fn named(raw: &[RawField], what: &str, default_base: Base, errors: &mut Vec<String>) -> Vec<NamedField> {
    let mut out: Vec<NamedField> = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        let name = r.name.clone().unwrap_or_else(|| format!("{what}{i}"));
        if out.iter().any(|f| f.name == name) {
            errors.push(format!("{what}[{i}]: duplicate name `{name}`"));
        }
        out.push(NamedField { name, spec: r.spec(default_base) });
    }
    out
}

fn resolve(fields: &[NamedField], key: &str, name: &Option<String>, errors: &mut Vec<String>) {
    match name {
        Some(n) if !fields.iter().any(|f| &f.name == n) => errors.push(format!("`{key}` names unknown field `{n}`")),
        None if fields.len() != 1 => errors.push(format!("`{key}` is required unless exactly one field is declared")),
        _ => {}
    }
}

/// Parses and validates scenario text, collecting every violation.
pub fn parse_str(text: &str, experiment: Option<Experiment>) -> Result<Scenario, Vec<String>> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| vec![format!("malformed scenario: {e}")])?;
    let mut errors = prune_unknown(&mut table);
    let raw: RawScenario = match toml::Value::Table(table).try_into() {
        Ok(r) => r,
        Err(e) => {
            errors.push(format!("{}", e.to_string().trim_end()));
            return Err(errors);
        }
    };
    if let (Some(a), Some(b)) = (experiment, raw.experiment) {
        if a != b {
            errors.push(format!("scenario selects `{}` but `{}` was requested", b.name(), a.name()));
        }
    }
    let experiment = experiment.or(raw.experiment);

    errors.extend(parameter_window(raw.model.beta, raw.model.gamma));
    let eps_list = plural_eps(&raw.model, &mut errors);
    let eps = eps_list.first().copied().unwrap_or(f64::NAN);
    let mut model = EnergyModel {
        density: raw.model.density,
        eps,
        beta: raw.model.beta,
        gamma: raw.model.gamma,
        kappa: raw.model.kappa,
        tolerances: raw.model.tolerances.unwrap_or_default(),
    };
    if !(model.kappa > 0.0 && model.kappa.is_finite()) {
        errors.push(format!("κ = {} must be positive", model.kappa));
    }
    if !model.density.is_valid() {
        errors.push(format!("density parameters of {} must be positive", model.density.name()));
    }
    if !eps.is_finite() {
        model.eps = 1.0;
    }

    let outer: Vec<(f64, f64)> = raw.grid.outer.iter().map(|b| (b[0], b[1])).collect();
    let inner: Vec<(f64, f64)> = raw.grid.inner.iter().map(|b| (b[0], b[1])).collect();
    let grid = Grid::new(&outer, &inner, raw.grid.h).map_err(|e| errors.push(format!("grid: {e}"))).ok();

    let fields = named(&raw.fields, "fields", Base::Identity, &mut errors);
    let competitors = named(&raw.competitors, "competitors", Base::Zero, &mut errors);
    for c in &competitors {
        if c.spec.base != Base::Zero {
            errors.push(format!("competitor `{}` is a displacement and needs base = \"zero\"", c.name));
        }
    }
    let datum = raw.datum.as_ref().map(|d| displacement(d, "datum", &mut errors));
    let mut family = None;
    if let Some(grid) = &grid {
        let probe = if eps.is_finite() { eps } else { 1.0 };
        for f in &fields {
            check_field(grid, &f.spec, probe, &format!("field `{}`", f.name), &mut errors);
        }
        for c in &competitors {
            check_field(grid, &c.spec, probe, &format!("competitor `{}`", c.name), &mut errors);
        }
        if let Some(d) = &datum {
            check_field(grid, d, probe, "datum", &mut errors);
        }
        if let Some(f) = &raw.family {
            family = build_family(grid, f, &mut errors);
        }
    }

    match experiment {
        Some(Experiment::Evaluate) if fields.is_empty() => errors.push("evaluate needs at least one field".into()),
        Some(Experiment::Certify) => {
            resolve(&fields, "certify.field", &raw.certify.field, &mut errors);
            if let Some(n) = &raw.certify.datum {
                resolve(&fields, "certify.datum", &Some(n.clone()), &mut errors);
            }
            if let Some(m) = raw.certify.energy_bound {
                if !(m > 0.0 && m.is_finite()) {
                    errors.push(format!("certify.energy_bound = {m} must be positive"));
                }
            }
        }
        Some(Experiment::Recovery) => {
            resolve(&fields, "recovery.field", &raw.recovery.field, &mut errors);
            let name = raw.recovery.field.clone().or_else(|| fields.first().map(|f| f.name.clone()));
            let base = name.and_then(|n| raw.fields.iter().zip(&fields).find(|(_, f)| f.name == n)).map(|(r, _)| r.base);
            if let Some(b) = base {
                if b != Some(Base::Zero) {
                    errors.push("the recovery field is a displacement and needs base = \"zero\"".into());
                }
            }
        }
        Some(Experiment::Minimize) | Some(Experiment::FullGamma) => {
            if raw.datum.is_none() {
                errors.push("minimization needs a `datum`".into());
            }
            if raw.family.is_none() {
                errors.push("minimization needs a crack `family`".into());
            }
            if experiment == Some(Experiment::FullGamma) && eps_list.len() < 2 {
                errors.push("full-gamma needs `model.eps_list` with at least two values".into());
            }
        }
        _ => {}
    }
    if raw.solver.memory == 0 || raw.solver.starts == 0 || !(raw.solver.backtrack > 0.0 && raw.solver.backtrack < 1.0) {
        errors.push("solver: memory and starts must be positive and backtrack in (0, 1)".into());
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Scenario {
        experiment,
        seed: raw.seed.unwrap_or(0),
        grid: grid.expect("grid validated"),
        model,
        eps_list,
        fields,
        datum,
        family,
        competitors,
        output_dir: raw.output.dir,
        evaluate: raw.evaluate,
        certify: raw.certify,
        recovery: raw.recovery,
        minimize: raw.minimize,
        solver: raw.solver,
        hash: hex::encode(Sha256::digest(text.as_bytes())),
    })
}
