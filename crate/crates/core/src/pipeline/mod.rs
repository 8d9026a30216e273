//! End-to-end pipeline orchestration: stage execution over a run directory,
//! resumable via the manifest, plus the human-readable report.
//!
//! Run directory layout (one subdirectory per stage, a top-level manifest):
//!
//! ```text
//! run/
//!   manifest.json
//!   ingest/tree.json
//!   analyze/summaries.json, modules.json
//!   model/models.json, testing_points.json
//!   gen_cases/testcases.json[, warnings.json]
//!   verify/verification.json, breadth_report.json, depth_report.json,
//!          supplementary_cases.json, all_cases.json[, external_breadth.json]
//!   forge/forge_manifest.json, script.<case>, config.<case>, trace.<case>.json,
//!         escalations_pending.json, kb/
//!   loop/escalations.json[, script.<case>, config.<case>]
//!   metrics/metric_report.json
//! ```
//!
//! Completed stages' files are never rewritten by later stages; stage
//! artifacts carry no timestamps so replayed runs are byte-identical (the
//! manifest holds wall-clock durations and is excluded from that guarantee).

mod config;
mod manifest;
mod report;
mod stages;

pub use config::{RunConfig, TestbedPaths};
pub use manifest::{file_sha256, RunManifest, StageState, StageStatus};
pub use report::report;

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("stage {stage} failed: {cause}")]
    StageFailed { stage: &'static str, cause: String },
    #[error("stage {stage} needs artifacts from {missing}, which has not completed")]
    MissingPredecessorArtifact {
        stage: &'static str,
        missing: String,
    },
    #[error("no manifest at {0}")]
    ManifestMissing(std::path::PathBuf),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Analyze,
    Model,
    GenCases,
    Verify,
    Forge,
    Loop,
    Metrics,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Analyze,
        Stage::Model,
        Stage::GenCases,
        Stage::Verify,
        Stage::Forge,
        Stage::Loop,
        Stage::Metrics,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Analyze => "analyze",
            Stage::Model => "model",
            Stage::GenCases => "gen_cases",
            Stage::Verify => "verify",
            Stage::Forge => "forge",
            Stage::Loop => "loop",
            Stage::Metrics => "metrics",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        match name {
            "ingest" => Some(Stage::Ingest),
            "analyze" => Some(Stage::Analyze),
            "model" => Some(Stage::Model),
            "gen-cases" | "gen_cases" => Some(Stage::GenCases),
            "verify" => Some(Stage::Verify),
            "forge" => Some(Stage::Forge),
            "loop" => Some(Stage::Loop),
            "metrics" => Some(Stage::Metrics),
            _ => None,
        }
    }
}

/// How a stage obtains its completion gateway. The default builds one from
/// the config's backend descriptor (with per-stage overrides); tests and
/// fixture recording inject their own.
pub type GatewayFactory<'a> = &'a dyn Fn(Stage) -> Result<crate::gateway::Gateway, String>;

/// Runs the selected stages (all of them when `selection` is `None`) against
/// a run directory. Stages already done with intact checksums are skipped;
/// a selected stage whose predecessors are neither selected nor done fails
/// with `MissingPredecessorArtifact`.
pub fn run(
    config: &RunConfig,
    run_dir: &Path,
    selection: Option<&[Stage]>,
) -> Result<RunManifest, PipelineError> {
    let factory = |stage: Stage| stages::default_gateway(config, stage);
    run_with_gateways(config, run_dir, selection, &factory)
}

/// [`run`] with explicit gateway construction per stage.
pub fn run_with_gateways(
    config: &RunConfig,
    run_dir: &Path,
    selection: Option<&[Stage]>,
    gateways: GatewayFactory<'_>,
) -> Result<RunManifest, PipelineError> {
    let digest = config.digest();
    let mut manifest = match RunManifest::load(run_dir) {
        Ok(m) if m.config_digest == digest => m,
        _ => RunManifest::new(&digest),
    };
    let selected: Vec<Stage> = selection
        .map(|s| s.to_vec())
        .unwrap_or_else(|| Stage::ALL.to_vec());

    for (i, stage) in Stage::ALL.iter().enumerate() {
        if !selected.contains(stage) {
            continue;
        }
        for pred in &Stage::ALL[..i] {
            let runs_before = selected.contains(pred);
            if !runs_before && !manifest.stage_verified(pred.name(), run_dir) {
                return Err(PipelineError::MissingPredecessorArtifact {
                    stage: stage.name(),
                    missing: pred.name().to_string(),
                });
            }
        }
    }

    for stage in Stage::ALL {
        if !selected.contains(&stage) {
            continue;
        }
        if manifest.stage_verified(stage.name(), run_dir) {
            continue;
        }
        let stage_dir = run_dir.join(stage.name());
        std::fs::create_dir_all(&stage_dir)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", stage_dir.display())))?;
        let started = std::time::Instant::now();
        let outcome = stages::execute(stage, config, run_dir, gateways);
        let duration_ms = started.elapsed().as_millis() as u64;
        match outcome {
            Ok(()) => {
                let artifacts = collect_artifacts(&stage_dir)?;
                manifest.stages.insert(
                    stage.name().to_string(),
                    StageStatus {
                        status: StageState::Done,
                        duration_ms,
                        artifacts,
                        error: None,
                    },
                );
                manifest.save(run_dir)?;
            }
            Err(cause) => {
                manifest.stages.insert(
                    stage.name().to_string(),
                    StageStatus {
                        status: StageState::Failed,
                        duration_ms,
                        artifacts: Default::default(),
                        error: Some(cause.clone()),
                    },
                );
                manifest.save(run_dir)?;
                return Err(PipelineError::StageFailed {
                    stage: stage.name(),
                    cause,
                });
            }
        }
    }
    Ok(manifest)
}

/// Recursively checksums every file under a stage directory, keyed by the
/// path relative to it.
fn collect_artifacts(
    stage_dir: &Path,
) -> Result<std::collections::BTreeMap<String, String>, PipelineError> {
    let mut artifacts = std::collections::BTreeMap::new();
    fn walk(
        dir: &Path,
        base: &Path,
        out: &mut std::collections::BTreeMap<String, String>,
    ) -> Result<(), PipelineError> {
        let entries = std::fs::read_dir(dir)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths {
            if path.is_dir() {
                walk(&path, base, out)?;
            } else if let Some(digest) = manifest::file_sha256(&path) {
                let rel = path
                    .strip_prefix(base)
                    .unwrap_or(&path)
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, digest);
            }
        }
        Ok(())
    }
    walk(stage_dir, stage_dir, &mut artifacts)?;
    Ok(artifacts)
}
