//! The domain-specific task knowledge base: task information, expert
//! heuristics, SOPs, the experience pool, the hierarchical summary index, and
//! the orchestrator's few-shot examples. Stored as a directory of structured
//! files, copied (versioned) into each run.

use serde::{Deserialize, Serialize};

use super::draft::FineGrainedIntent;
use super::ForgeError;
use crate::loops::FaultCategory;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TaskInfo {
    pub task_description: String,
    pub repository_structure: String,
    pub device_inventory: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceEntry {
    /// Normalized error pattern (lowercased, digits and addresses collapsed).
    pub error_signature: String,
    pub category: FaultCategory,
    pub resolution: String,
    /// Run or case id the entry came from.
    pub provenance: String,
    pub hit_count: u32,
}

/// Error-signature -> resolution pool. Signatures are unique; recording an
/// existing signature bumps its hit count instead of duplicating.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExperiencePool {
    entries: Vec<ExperienceEntry>,
}

impl ExperiencePool {
    pub fn entries(&self) -> &[ExperienceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn record(
        &mut self,
        signature: &str,
        category: FaultCategory,
        resolution: &str,
        provenance: &str,
    ) {
        match self
            .entries
            .iter_mut()
            .find(|e| e.error_signature == signature)
        {
            Some(existing) => existing.hit_count += 1,
            None => self.entries.push(ExperienceEntry {
                error_signature: signature.to_string(),
                category,
                resolution: resolution.to_string(),
                provenance: provenance.to_string(),
                hit_count: 0,
            }),
        }
    }

    /// Best entry whose signature token-overlap with `signature` meets the
    /// cutoff. Increments the winner's hit count.
    pub fn find_best(&mut self, signature: &str, cutoff: f64) -> Option<&ExperienceEntry> {
        let best = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i, token_overlap(&e.error_signature, signature)))
            .filter(|(_, score)| *score >= cutoff)
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                self.entries[i].hit_count += 1;
                Some(&self.entries[i])
            }
            None => None,
        }
    }
}

/// Token-level overlap between two signatures (intersection over the larger
/// token set).
pub(crate) fn token_overlap(a: &str, b: &str) -> f64 {
    let ta: std::collections::BTreeSet<&str> = a.split_whitespace().collect();
    let tb: std::collections::BTreeSet<&str> = b.split_whitespace().collect();
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let inter = ta.intersection(&tb).count();
    inter as f64 / ta.len().max(tb.len()) as f64
}

/// One node of the hierarchical summary index. Leaves carry payload
/// references into the underlying repository or documentation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryIndexNode {
    pub entry_id: String,
    pub summary: String,
    #[serde(default)]
    pub children: Vec<SummaryIndexNode>,
    #[serde(default)]
    pub payload_ref: Option<String>,
}

impl SummaryIndexNode {
    pub fn leaf_count(&self) -> usize {
        if self.children.is_empty() {
            usize::from(self.payload_ref.is_some())
        } else {
            self.children.iter().map(|c| c.leaf_count()).sum()
        }
    }

    /// Rewrites the summary of the leaf pointing at `payload` so the missed
    /// query's vocabulary is represented next time.
    pub fn refresh_summary(&mut self, query: &str, payload: &str) {
        if self.payload_ref.as_deref() == Some(payload) {
            if !self.summary.contains(query) {
                self.summary = format!("{} (also: {})", self.summary, query);
            }
            return;
        }
        for child in &mut self.children {
            child.refresh_summary(query, payload);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub case_title: String,
    pub intents: FineGrainedIntent,
    pub uses: u32,
    pub passes: u32,
}

impl FewShotExample {
    pub fn pass_rate(&self) -> f64 {
        if self.uses == 0 {
            // unproven examples rank between winners and losers
            0.5
        } else {
            f64::from(self.passes) / f64::from(self.uses)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskKnowledgeBase {
    pub task_info: TaskInfo,
    pub expert_heuristics: Vec<String>,
    pub sops: Vec<String>,
    pub pool: ExperiencePool,
    pub index: SummaryIndexNode,
    pub few_shots: Vec<FewShotExample>,
}

impl TaskKnowledgeBase {
    /// Loads a knowledge-base directory: task_info.json, heuristics.json,
    /// sops.json, pool.json, index.json, few_shots.json.
    pub fn load(dir: &std::path::Path) -> Result<Self, ForgeError> {
        fn read<T: serde::de::DeserializeOwned>(
            dir: &std::path::Path,
            file: &str,
        ) -> Result<T, ForgeError> {
            let path = dir.join(file);
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| ForgeError::KnowledgeBase(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&raw)
                .map_err(|e| ForgeError::KnowledgeBase(format!("{}: {e}", path.display())))
        }
        let kb = Self {
            task_info: read(dir, "task_info.json")?,
            expert_heuristics: read(dir, "heuristics.json")?,
            sops: read(dir, "sops.json")?,
            pool: read(dir, "pool.json")?,
            index: read(dir, "index.json")?,
            few_shots: read(dir, "few_shots.json")?,
        };
        if kb.sops.is_empty() {
            return Err(ForgeError::KnowledgeBase(
                "sops.json must contain at least one step".to_string(),
            ));
        }
        Ok(kb)
    }

    /// Writes the knowledge base into a directory (one file per part).
    pub fn save(&self, dir: &std::path::Path) -> Result<(), ForgeError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| ForgeError::KnowledgeBase(format!("{}: {e}", dir.display())))?;
        fn write<T: Serialize>(
            dir: &std::path::Path,
            file: &str,
            value: &T,
        ) -> Result<(), ForgeError> {
            let path = dir.join(file);
            let pretty = serde_json::to_string_pretty(value)
                .map_err(|e| ForgeError::KnowledgeBase(e.to_string()))?;
            std::fs::write(&path, pretty + "\n")
                .map_err(|e| ForgeError::KnowledgeBase(format!("{}: {e}", path.display())))
        }
        write(dir, "task_info.json", &self.task_info)?;
        write(dir, "heuristics.json", &self.expert_heuristics)?;
        write(dir, "sops.json", &self.sops)?;
        write(dir, "pool.json", &self.pool)?;
        write(dir, "index.json", &self.index)?;
        write(dir, "few_shots.json", &self.few_shots)?;
        Ok(())
    }

    /// Small but complete knowledge base for unit tests.
    pub fn minimal_for_tests() -> Self {
        Self {
            task_info: TaskInfo {
                task_description: "Produce a tester script and a DUT configuration.".to_string(),
                repository_structure: "scripts/, configs/".to_string(),
                device_inventory: vec!["dut1".to_string(), "tester1".to_string()],
            },
            expert_heuristics: vec!["Reserve tester ports before any traffic step.".to_string()],
            sops: vec![
                "Draft the artifacts.".to_string(),
                "Validate the draft against the artifact schema.".to_string(),
                "Deploy and execute on the testbed.".to_string(),
                "Consult the fault corrector on failure and redraft.".to_string(),
            ],
            pool: ExperiencePool::default(),
            index: SummaryIndexNode {
                entry_id: "root".to_string(),
                summary: "knowledge root".to_string(),
                children: vec![SummaryIndexNode {
                    entry_id: "apis".to_string(),
                    summary: "tester api usage".to_string(),
                    children: Vec::new(),
                    payload_ref: Some("doc:apis".to_string()),
                }],
                payload_ref: None,
            },
            few_shots: Vec::new(),
        }
    }
}
