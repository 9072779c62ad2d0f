//! Scenario runner: parses scenario files, dispatches experiments and writes reports.

pub mod experiments;
pub mod keys;
pub mod output;
pub mod scenario;

use std::path::Path;
use std::time::Instant;

use anyhow::Result;

pub use output::RunManifest;
pub use scenario::{parse_scenario, Experiment, Scenario, ScenarioError};

/// Runs `experiment` on `scenario`, writing its reports and `manifest.json` under `dir`.
pub fn run(scenario: &Scenario, experiment: Experiment, dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut out = output::Reporter::new(dir);
    log::info!("running {} into {}", experiment.name(), dir.display());
    match experiment {
        Experiment::Evaluate => experiments::evaluate(scenario, &mut out)?,
        Experiment::Certify => experiments::certify(scenario, &mut out)?,
        Experiment::Recovery => experiments::recovery(scenario, &mut out)?,
        Experiment::Minimize => experiments::minimize(scenario, &mut out)?,
        Experiment::FullGamma => experiments::full_gamma(scenario, &mut out)?,
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: experiment.name().to_string(),
        scenario_sha256: scenario.hash.clone(),
        seed: scenario.seed,
        outputs: out.outputs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    output::write_atomic(&dir.join("manifest.json"), &bytes)?;
    Ok(manifest)
}
