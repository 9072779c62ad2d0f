//! Schema walk over the raw TOML tree: unknown keys are reported by dotted path and removed,
//! so typed parsing can still surface the remaining violations.

use toml::{Table, Value};

const TOP: &[&str] = &[
    "experiment", "seed", "grid", "model", "fields", "datum", "family", "competitors", "output", "evaluate",
    "certify", "recovery", "minimize", "solver",
];
const GRID: &[&str] = &["outer", "inner", "h"];
const MODEL: &[&str] = &["eps", "eps_list", "beta", "gamma", "kappa", "density", "tolerances"];
const DENSITY: &[&str] = &["kind", "scale", "mu", "lambda"];
const TOLERANCES: &[&str] = &["trace", "grad", "curvature"];
const FIELD: &[&str] = &["name", "base", "pieces", "cracks"];
const PIECE: &[&str] = &[
    "region", "rotation", "eps_rotation", "offset", "eps_offset", "linear", "eps_linear", "quadratic", "eps_quadratic",
];
const SEGMENT: &[&str] = &["axis", "at", "span"];
const FAMILY: &[&str] = &["candidates", "columns"];
const CANDIDATE: &[&str] = &["name", "segments"];
const COLUMNS: &[&str] = &["planes", "fractions"];
const OUTPUT: &[&str] = &["dir"];
const EVALUATE: &[&str] = &["rigid_samples"];
const CERTIFY: &[&str] = &["field", "datum", "partition", "energy_bound"];
const RECOVERY: &[&str] = &["field"];
const MINIMIZE: &[&str] = &["kind"];
const SOLVER: &[&str] = &["memory", "armijo", "backtrack", "max_iter", "grad_tol", "linear_tol", "starts"];

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn prune(table: &mut Table, path: &str, allowed: &[&str], errors: &mut Vec<String>) {
    let unknown: Vec<String> = table.keys().filter(|k| !allowed.contains(&k.as_str())).cloned().collect();
    for k in unknown {
        errors.push(format!("unknown key `{}`", join(path, &k)));
        table.remove(&k);
    }
}

fn table<'a>(parent: &'a mut Table, key: &str) -> Option<&'a mut Table> {
    parent.get_mut(key).and_then(Value::as_table_mut)
}

fn each_table(parent: &mut Table, key: &str, path: &str, mut f: impl FnMut(&mut Table, &str)) {
    if let Some(items) = parent.get_mut(key).and_then(Value::as_array_mut) {
        for (i, item) in items.iter_mut().enumerate() {
            if let Some(t) = item.as_table_mut() {
                f(t, &format!("{}[{i}]", join(path, key)));
            }
        }
    }
}

fn field_spec(t: &mut Table, path: &str, errors: &mut Vec<String>) {
    prune(t, path, FIELD, errors);
    each_table(t, "pieces", path, |p, at| prune(p, at, PIECE, errors));
    each_table(t, "cracks", path, |s, at| prune(s, at, SEGMENT, errors));
}

/// Removes every key outside the schema and returns one message per removed key.
pub fn prune_unknown(root: &mut Table) -> Vec<String> {
    let mut errors = Vec::new();
    prune(root, "", TOP, &mut errors);
    for (key, allowed) in [
        ("grid", GRID),
        ("output", OUTPUT),
        ("evaluate", EVALUATE),
        ("certify", CERTIFY),
        ("recovery", RECOVERY),
        ("minimize", MINIMIZE),
        ("solver", SOLVER),
    ] {
        if let Some(t) = table(root, key) {
            prune(t, key, allowed, &mut errors);
        }
    }
    if let Some(m) = table(root, "model") {
        prune(m, "model", MODEL, &mut errors);
        if let Some(d) = table(m, "density") {
            prune(d, "model.density", DENSITY, &mut errors);
        }
        if let Some(t) = table(m, "tolerances") {
            prune(t, "model.tolerances", TOLERANCES, &mut errors);
        }
    }
    each_table(root, "fields", "", |t, at| field_spec(t, at, &mut errors));
    each_table(root, "competitors", "", |t, at| field_spec(t, at, &mut errors));
    if let Some(t) = table(root, "datum") {
        field_spec(t, "datum", &mut errors);
    }
    if let Some(f) = table(root, "family") {
        prune(f, "family", FAMILY, &mut errors);
        each_table(f, "candidates", "family", |c, at| {
            prune(c, at, CANDIDATE, &mut errors);
            each_table(c, "segments", at, |s, at| prune(s, at, SEGMENT, &mut errors));
        });
        if let Some(c) = table(f, "columns") {
            prune(c, "family.columns", COLUMNS, &mut errors);
        }
    }
    errors
}
