//! The run manifest: per-stage status, timings, and artifact checksums.
//! Stage artifacts themselves carry no timestamps; wall-clock durations live
//! only here.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageState {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageStatus {
    pub status: StageState,
    pub duration_ms: u64,
    /// artifact file name -> sha256
    pub artifacts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_digest: String,
    pub stages: BTreeMap<String, StageStatus>,
}

impl RunManifest {
    pub fn new(config_digest: &str) -> Self {
        Self {
            run_id: format!("run-{}", &config_digest[..16.min(config_digest.len())]),
            config_digest: config_digest.to_string(),
            stages: BTreeMap::new(),
        }
    }

    pub fn path(run_dir: &Path) -> std::path::PathBuf {
        run_dir.join("manifest.json")
    }

    pub fn load(run_dir: &Path) -> Result<Self, PipelineError> {
        let path = Self::path(run_dir);
        if !path.exists() {
            return Err(PipelineError::ManifestMissing(path));
        }
        let raw = std::fs::read_to_string(&path)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&raw)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, run_dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(run_dir)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", run_dir.display())))?;
        let path = Self::path(run_dir);
        let pretty =
            serde_json::to_string_pretty(self).map_err(|e| PipelineError::Io(e.to_string()))?;
        std::fs::write(&path, pretty + "\n")
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
    }

    pub fn stage_done(&self, stage: &str) -> bool {
        self.stages
            .get(stage)
            .map(|s| s.status == StageState::Done)
            .unwrap_or(false)
    }

    /// True when the stage is done and every recorded artifact still hashes
    /// to its manifest checksum.
    pub fn stage_verified(&self, stage: &str, run_dir: &Path) -> bool {
        let Some(status) = self.stages.get(stage) else {
            return false;
        };
        if status.status != StageState::Done {
            return false;
        }
        status.artifacts.iter().all(|(file, digest)| {
            let path = run_dir.join(stage).join(file);
            file_sha256(&path).map(|d| d == *digest).unwrap_or(false)
        })
    }
}

pub fn file_sha256(path: &Path) -> Option<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).ok()?;
    let hash = Sha256::digest(&bytes);
    Some(hash.iter().map(|b| format!("{b:02x}")).collect())
}
