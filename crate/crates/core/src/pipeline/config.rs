//! Run configuration: one JSON file holding every tunable, with relative
//! paths resolved against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::gateway::BackendDescriptor;
use crate::loops::LoopConfig;
use crate::testcase::CoverageConfig;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TestbedPaths {
    #[serde(default)]
    pub grammar: Option<PathBuf>,
    #[serde(default)]
    pub tester_api: Option<PathBuf>,
    #[serde(default)]
    pub fault_profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec_path: PathBuf,
    pub backend: BackendDescriptor,
    /// Per-stage backend overrides, keyed by stage name.
    #[serde(default)]
    pub backend_overrides: std::collections::BTreeMap<String, BackendDescriptor>,
    #[serde(default)]
    pub coverage: CoverageConfig,
    #[serde(default, rename = "loop")]
    pub loop_cfg: LoopConfig,
    /// Task knowledge base directory; the built-in minimal base is used when
    /// absent.
    #[serde(default)]
    pub kb_path: Option<PathBuf>,
    #[serde(default)]
    pub testbed: TestbedPaths,
    /// Directory of `script.<case_id>` / `config.<case_id>` reference
    /// artifacts for recall/similarity scoring.
    #[serde(default)]
    pub metrics_reference_dir: Option<PathBuf>,
    /// External test suite (same case schema) for comparative breadth
    /// scoring.
    #[serde(default)]
    pub external_suite: Option<PathBuf>,
    #[serde(default)]
    pub cleaning_rules: Option<PathBuf>,
    #[serde(default)]
    pub few_shot_cases: Option<PathBuf>,
    #[serde(default = "default_max_repairs")]
    pub max_repairs: u32,
    #[serde(default)]
    pub strict_fsm: bool,
    #[serde(default = "default_max_iterations")]
    pub max_module_iterations: u32,
    #[serde(default = "default_true")]
    pub exempt_zero_importance_appendix: bool,
}

fn default_max_repairs() -> u32 {
    crate::gateway::DEFAULT_MAX_REPAIRS
}

fn default_max_iterations() -> u32 {
    10
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| PipelineError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.spec_path);
        if let Some(p) = &mut self.backend.transcript_path {
            resolve(p);
        }
        for descriptor in self.backend_overrides.values_mut() {
            if let Some(p) = &mut descriptor.transcript_path {
                resolve(p);
            }
        }
        for opt in [
            &mut self.kb_path,
            &mut self.testbed.grammar,
            &mut self.testbed.tester_api,
            &mut self.testbed.fault_profile,
            &mut self.metrics_reference_dir,
            &mut self.external_suite,
            &mut self.cleaning_rules,
            &mut self.few_shot_cases,
        ]
        .into_iter()
        .flatten()
        {
            resolve(opt);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.spec_path.exists() {
            return Err(PipelineError::InvalidConfig(format!(
                "spec_path {} does not exist",
                self.spec_path.display()
            )));
        }
        self.backend
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.coverage
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        for (path, what) in [
            (&self.kb_path, "kb_path"),
            (&self.testbed.grammar, "testbed.grammar"),
            (&self.testbed.tester_api, "testbed.tester_api"),
            (&self.testbed.fault_profile, "testbed.fault_profile"),
            (&self.metrics_reference_dir, "metrics_reference_dir"),
            (&self.external_suite, "external_suite"),
            (&self.cleaning_rules, "cleaning_rules"),
            (&self.few_shot_cases, "few_shot_cases"),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(PipelineError::InvalidConfig(format!(
                        "{what} {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Digest identifying this configuration for resume checks and the run
    /// id. Canonical-serialization based, so a reordered config file hashes
    /// identically.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}
