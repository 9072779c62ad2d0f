use std::path::{Path, PathBuf};
use std::process::Command;

use griffith_cli::scenario::parse_str;
use griffith_cli::{parse_scenario, run, Experiment, RunManifest};

const MINIMAL: &str = r#"
[grid]
outer = [[0.0, 1.0], [0.0, 1.0]]
inner = [[0.25, 0.75], [0.0, 1.0]]
h = 0.125

[model]
eps = 0.1
beta = 0.9
gamma = 0.8
kappa = 1.0

[[fields]]
name = "id"
[[fields.pieces]]
"#;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> PathBuf {
    repo().join("scenarios").join(name)
}

fn griffith(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_griffith")).args(args).output().unwrap()
}

#[test]
fn minimal_scenario_parses() {
    let s = parse_str(MINIMAL, Some(Experiment::Evaluate)).unwrap();
    assert_eq!(s.eps_list, vec![0.1]);
    assert_eq!(s.fields[0].name, "id");
    assert_eq!(s.seed, 0);
    assert_eq!(s.hash.len(), 64);
}

#[test]
fn window_violations_cite_the_admissible_ranges() {
    let low_gamma = MINIMAL.replace("gamma = 0.8", "gamma = 0.5");
    let errs = parse_str(&low_gamma, None).unwrap_err();
    assert!(errs.iter().any(|e| e.contains("γ ∈ (2/3, β)")), "{errs:?}");
    let beta_one = MINIMAL.replace("beta = 0.9", "beta = 1.0");
    let errs = parse_str(&beta_one, None).unwrap_err();
    assert!(errs.iter().any(|e| e.contains("β ∈ (2/3, 1)")), "{errs:?}");
}

#[test]
fn every_violation_is_listed() {
    let text = MINIMAL.replace("gamma = 0.8", "gamma = 0.95\ncolour = 3")
        + r#"
[datum]
base = "zero"
[[datum.pieces]]
[[family.candidates]]
name = "off grid"
segments = [{ axis = 0, at = 0.3, span = [[0.0, 1.0]] }]
"#;
    let errs = parse_str(&text, Some(Experiment::Minimize)).unwrap_err();
    assert!(errs.iter().any(|e| e.contains("unknown key `model.colour`")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("γ ∈ (2/3, β)")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("off grid") && e.contains("not facet-aligned")), "{errs:?}");
    assert_eq!(errs.len(), 3, "{errs:?}");
}

#[test]
fn experiment_requirements_are_checked() {
    let errs = parse_str(MINIMAL, Some(Experiment::FullGamma)).unwrap_err();
    assert!(errs.iter().any(|e| e.contains("datum")));
    assert!(errs.iter().any(|e| e.contains("family")));
    assert!(errs.iter().any(|e| e.contains("at least two")));
    let selected = format!("experiment = \"certify\"\n{MINIMAL}");
    let errs = parse_str(&selected, Some(Experiment::Evaluate)).unwrap_err();
    assert!(errs[0].contains("selects `certify`"), "{errs:?}");
}

#[test]
fn cracks_touching_the_frame_are_rejected() {
    let text = MINIMAL.to_string()
        + r#"
[datum]
base = "zero"
[[datum.pieces]]
[[family.candidates]]
name = "into frame"
segments = [{ axis = 0, at = 0.125, span = [[0.0, 1.0]] }]
"#;
    let errs = parse_str(&text, Some(Experiment::Minimize)).unwrap_err();
    assert!(errs.iter().any(|e| e.contains("into frame")), "{errs:?}");
}

#[test]
fn shipped_scenarios_validate() {
    for entry in std::fs::read_dir(repo().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        parse_scenario(&path, None).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn evaluate_reports_the_relaxation_closed_form() {
    let s = parse_scenario(&scenario("relaxation_gap.toml"), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run(&s, Experiment::Evaluate, dir.path()).unwrap();
    assert_eq!(m.flagged(), 0);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("evaluate.json")).unwrap()).unwrap();
    let y0 = &json[0];
    assert_eq!(y0["field"], "y_0");
    assert_eq!(y0["nonlinear"]["total"], "INF");
    let relaxed = y0["relaxed"]["total"].as_f64().unwrap();
    let (eps, kappa) = (s.model.eps, s.model.kappa);
    let want = 2.0 / (eps * eps) + 2.0 * kappa;
    assert!((relaxed - want).abs() <= 1e-10 * want);
}

#[test]
fn manifest_lists_existing_parseable_outputs() {
    let s = parse_scenario(&scenario("block_rotation_single.toml"), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(&s, Experiment::Certify, dir.path()).unwrap();
    let m: RunManifest = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.scenario_sha256, s.hash);
    assert_eq!(m.outputs.len(), 2);
    for o in &m.outputs {
        let bytes = std::fs::read(&o.path).unwrap();
        if o.path.extension().unwrap() == "csv" {
            let mut r = csv::Reader::from_reader(bytes.as_slice());
            let header = r.headers().unwrap().clone();
            assert!(header.iter().any(|h| h == "sym_slope"));
            let rows: Vec<_> = r.records().map(|r| r.unwrap()).collect();
            assert_eq!(rows.len(), o.rows);
            for row in &rows {
                for cell in row.iter() {
                    assert_ne!(cell, "NaN");
                }
            }
        } else {
            serde_json::from_slice::<serde_json::Value>(&bytes).unwrap();
        }
    }
}

#[test]
fn exit_codes_follow_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = griffith(&["recovery", "--scenario", scenario("cracked_recovery.toml").to_str().unwrap(), "--out", out]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, MINIMAL.replace("beta = 0.9", "beta = 1.0")).unwrap();
    let parse = griffith(&["evaluate", "--scenario", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("β ∈ (2/3, 1)"));
    let missing = griffith(&["validate", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    // a competitor that ignores the boundary datum cannot be evaluated, which flags its row
    let text = std::fs::read_to_string(scenario("strip_cut.toml")).unwrap().replace(
        "[[competitors.pieces]]\nlinear = [[0.4, 0.0], [0.0, 0.0]]",
        "[[competitors.pieces]]\nlinear = [[0.0, 0.0], [0.0, 0.0]]",
    );
    let flagged = dir.path().join("flagged.toml");
    std::fs::write(&flagged, text).unwrap();
    let run = griffith(&["minimize", "--scenario", flagged.to_str().unwrap(), "--out", out, "--threads", "1"]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(dir.path().join("competitors.csv")).unwrap();
    assert!(csv.contains("differs from the datum on the frame"));
}

#[test]
fn seed_changes_only_sampled_rows() {
    let s = parse_scenario(&scenario("relaxation_gap.toml"), None).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&s, Experiment::Evaluate, a.path()).unwrap();
    let mut other = s.clone();
    other.seed += 1;
    run(&other, Experiment::Evaluate, b.path()).unwrap();
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "evaluate.csv"), read(b.path(), "evaluate.csv"));
    assert_ne!(read(a.path(), "frame_indifference.csv"), read(b.path(), "frame_indifference.csv"));
}
