//! Scenario execution: drives the configured engine over the time grid and
//! serializes the results deterministically.
//!
//! Output contract:
//! - one CSV row per (time, observable) with the fixed header
//!   [`RESULTS_HEADER`], rows sorted by (scenario, time, observable);
//! - an optional JSON rendering of the same records;
//! - a `<name>.meta.json` sidecar with provenance (build version, config
//!   hash) and run health (record count, taint flag, transform cutoff).
//!
//! Everything here is a pure function of (scenario, seed, build): no
//! timestamps, no environment-dependent fields, so rerunning a scenario
//! reproduces the output byte for byte.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::evolution::{
    evolve_observable, phase_kick_ensemble, Engine, PhaseKickModel, SeriesPoint, TAINT_THRESHOLD,
};
use crate::quasiparticle::{
    minimal_transformed_cutoff, TransformBasis, TransformDirection, TransformOptions,
};
use crate::scenario::{EngineSpec, Scenario};

/// Fixed column order of the results CSV.
pub const RESULTS_HEADER: &str = "scenario,engine,time,observable,value,leakage,seed,version";

/// Version string embedded at build time: the package version extended with
/// `+g<describe>` when built inside a git checkout.
pub fn build_version() -> &'static str {
    option_env!("BUILD_VERSION").unwrap_or(env!("CARGO_PKG_VERSION"))
}

/// One emitted data point. Field order matches [`RESULTS_HEADER`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub scenario: String,
    pub engine: String,
    pub time: f64,
    pub observable: String,
    pub value: f64,
    pub leakage: f64,
    pub seed: u64,
    pub version: String,
}

/// The full product of one scenario run, before serialization.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Records sorted by (scenario, time, observable).
    pub records: Vec<ResultRecord>,
    /// True when any grid point pushed more than [`TAINT_THRESHOLD`] of
    /// squared norm through the truncation boundary; the series is still
    /// emitted, but the sidecar flags it.
    pub tainted: bool,
    /// Smallest per-mode boson cutoff that represents the initial state
    /// exactly after the quasi-mode transform; `None` for other engines.
    pub transformed_boson_cutoff: Option<u32>,
}

/// Run metadata sidecar, written next to the results file.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub scenario: String,
    pub engine: String,
    pub seed: u64,
    pub version: String,
    /// SHA-256 of the scenario's canonical (compact) JSON serialization.
    pub config_sha256: String,
    pub schema_version: u32,
    pub records: usize,
    /// Distinct observable labels present in the records, sorted.
    pub observables: Vec<String>,
    pub tainted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transformed_boson_cutoff: Option<u32>,
}

/// File format for the results body (the metadata sidecar is always JSON).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Paths produced by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub results: PathBuf,
    pub metadata: PathBuf,
}

fn push_series(
    records: &mut Vec<ResultRecord>,
    scenario: &Scenario,
    version: &str,
    series: Vec<SeriesPoint>,
) {
    let engine = scenario.engine.label();
    for point in series {
        records.push(ResultRecord {
            scenario: scenario.name.clone(),
            engine: engine.to_string(),
            time: point.time,
            observable: point.observable,
            value: point.value,
            leakage: point.leakage,
            seed: scenario.seed,
            version: version.to_string(),
        });
    }
}

/// Execute a scenario on its configured engine.
///
/// Deterministic given (scenario, build): the dense and quasi engines are
/// exact arithmetic over a fixed basis order, and the phase-kick ensemble
/// uses counter-based streams keyed by the scenario seed.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let spec = scenario.network_spec()?;
    let rep = scenario.fermion_representation.to_rep();
    let grid = scenario.grid.to_grid()?;
    let version = build_version();

    let mut records = Vec::new();
    let mut transformed_boson_cutoff = None;

    match &scenario.engine {
        EngineSpec::Dense => {
            let hamiltonian = scenario.hamiltonian(&spec)?;
            let initial = scenario.initial_state(&spec)?;
            let observables = scenario.observable_list(&spec)?;
            let series = evolve_observable(
                &initial,
                Engine::Dense {
                    hamiltonian: &hamiltonian,
                },
                &grid,
                &observables,
                rep,
                scenario.allow_multi_excitation,
            )?;
            push_series(&mut records, scenario, version, series);
        }
        EngineSpec::Quasi => {
            let basis = scenario.quasi_basis(&spec)?;
            let initial = scenario.initial_state(&spec)?;
            let observables = scenario.observable_list(&spec)?;
            let options = TransformOptions {
                rep,
                allow_multi_excitation: scenario.allow_multi_excitation,
            };
            transformed_boson_cutoff = Some(minimal_transformed_cutoff(
                &initial,
                TransformBasis::Blocks(&basis),
                TransformDirection::ToQuasi,
                &options,
            )?);
            let series = evolve_observable(
                &initial,
                Engine::Quasi {
                    basis: TransformBasis::Blocks(&basis),
                },
                &grid,
                &observables,
                rep,
                scenario.allow_multi_excitation,
            )?;
            push_series(&mut records, scenario, version, series);
        }
        EngineSpec::PhaseKick {
            alpha,
            beta,
            distribution,
            kicks_per_unit_time,
            samples,
        } => {
            let model = PhaseKickModel {
                distribution: distribution.to_distribution(),
                kicks_per_unit_time: *kicks_per_unit_time,
                seed: scenario.seed,
            };
            let ensemble = phase_kick_ensemble(
                alpha.to_complex(),
                beta.to_complex(),
                &model,
                &grid,
                *samples,
            )?;
            let engine = scenario.engine.label();
            for (k, &time) in ensemble.times.iter().enumerate() {
                for (observable, value) in [
                    ("kick_coherence", ensemble.coherence[k]),
                    ("kick_std_error", ensemble.std_error[k]),
                ] {
                    records.push(ResultRecord {
                        scenario: scenario.name.clone(),
                        engine: engine.to_string(),
                        time,
                        observable: observable.to_string(),
                        value,
                        leakage: 0.0,
                        seed: scenario.seed,
                        version: version.to_string(),
                    });
                }
            }
        }
    }

    records.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.time.total_cmp(&b.time))
            .then_with(|| a.observable.cmp(&b.observable))
    });
    let tainted = records.iter().any(|r| r.leakage > TAINT_THRESHOLD);
    Ok(RunOutput {
        records,
        tainted,
        transformed_boson_cutoff,
    })
}

/// Render records as CSV with the fixed header. Floating-point fields use
/// normalized scientific notation with 12 fractional digits, which is both
/// stable across platforms and lossless enough for every stated tolerance.
pub fn results_csv(records: &[ResultRecord]) -> String {
    let mut out = String::with_capacity(72 * (records.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:.12e},{},{:.12e},{:.12e},{},{}",
            r.scenario, r.engine, r.time, r.observable, r.value, r.leakage, r.seed, r.version
        );
    }
    out
}

/// Render records as a pretty-printed JSON array (same content as the CSV).
pub fn results_json(records: &[ResultRecord]) -> Result<String> {
    let mut body = serde_json::to_string_pretty(records)?;
    body.push('\n');
    Ok(body)
}

/// Compute the run metadata sidecar for a finished run.
pub fn run_metadata(scenario: &Scenario, output: &RunOutput) -> Result<RunMetadata> {
    let canonical = serde_json::to_string(scenario)?;
    let config_sha256 = hex::encode(Sha256::digest(canonical.as_bytes()));
    let observables: BTreeSet<String> = output
        .records
        .iter()
        .map(|r| r.observable.clone())
        .collect();
    Ok(RunMetadata {
        scenario: scenario.name.clone(),
        engine: scenario.engine.label().to_string(),
        seed: scenario.seed,
        version: build_version().to_string(),
        config_sha256,
        schema_version: scenario.schema_version,
        records: output.records.len(),
        observables: observables.into_iter().collect(),
        tainted: output.tainted,
        transformed_boson_cutoff: output.transformed_boson_cutoff,
    })
}

/// Write the results body (`<name>.csv` or `<name>.json`) and the
/// `<name>.meta.json` sidecar into `out_dir`, creating it if needed.
pub fn write_outputs(
    scenario: &Scenario,
    output: &RunOutput,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<WrittenFiles> {
    fs::create_dir_all(out_dir)?;
    let results = match format {
        OutputFormat::Csv => {
            let path = out_dir.join(format!("{}.csv", scenario.name));
            fs::write(&path, results_csv(&output.records))?;
            path
        }
        OutputFormat::Json => {
            let path = out_dir.join(format!("{}.json", scenario.name));
            fs::write(&path, results_json(&output.records)?)?;
            path
        }
    };
    let metadata = out_dir.join(format!("{}.meta.json", scenario.name));
    let mut body = serde_json::to_string_pretty(&run_metadata(scenario, output)?)?;
    body.push('\n');
    fs::write(&metadata, body)?;
    Ok(WrittenFiles { results, metadata })
}
