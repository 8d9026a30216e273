//! Stage-1 understanding: per-section summaries with classification and test
//! importance, then module formation with the rule-based uncovered-section
//! completion loop.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{FieldSchema, Gateway, GatewayError, PromptTemplate, Schema};
use crate::ingest::SpecTree;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("section {section}: {source}")]
    Section {
        section: String,
        #[source]
        source: GatewayError,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("model named unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("invalid agent catalog: {0}")]
    InvalidCatalog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Functional,
    Descriptive,
    Appendix,
    Configuration,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Functional => "functional",
            Classification::Descriptive => "descriptive",
            Classification::Appendix => "appendix",
            Classification::Configuration => "configuration",
        }
    }
}

/// Display label for a 0-100 importance value.
pub fn importance_label(importance: u8) -> &'static str {
    match importance {
        67..=u8::MAX => "high",
        34..=66 => "medium",
        _ => "low",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionSummary {
    pub section_number: String,
    pub summary: String,
    pub references: Vec<String>,
    /// References the model produced that do not resolve in the tree; kept
    /// for inspection rather than dropped.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved_references: Vec<String>,
    pub classification: Classification,
    pub test_importance: u8,
    #[serde(default)]
    pub empty_body: bool,
}

/// Summaries in document (traversal) order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SummarySet {
    pub summaries: Vec<SectionSummary>,
}

impl SummarySet {
    pub fn get(&self, number: &str) -> Option<&SectionSummary> {
        self.summaries.iter().find(|s| s.section_number == number)
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    PacketField,
    Fsm,
    TimeSequence,
    ProtocolSpecific,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::PacketField => "packet_field",
            AgentKind::Fsm => "fsm",
            AgentKind::TimeSequence => "time_sequence",
            AgentKind::ProtocolSpecific => "protocol_specific",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        match name {
            "packet_field" => Some(AgentKind::PacketField),
            "fsm" => Some(AgentKind::Fsm),
            "time_sequence" => Some(AgentKind::TimeSequence),
            "protocol_specific" => Some(AgentKind::ProtocolSpecific),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentDescriptor {
    pub name: String,
    pub functionality: String,
    pub capabilities: String,
    pub input_spec: String,
    pub output_spec: String,
}

#[derive(Debug, Clone)]
pub struct AgentCatalog {
    pub agents: Vec<AgentDescriptor>,
}

impl AgentCatalog {
    pub fn from_json(json: &str) -> Result<Self, AnalysisError> {
        let agents: Vec<AgentDescriptor> =
            serde_json::from_str(json).map_err(|e| AnalysisError::InvalidCatalog(e.to_string()))?;
        for a in &agents {
            if AgentKind::parse(&a.name).is_none() {
                return Err(AnalysisError::InvalidCatalog(format!(
                    "agent `{}` is not a known modeling agent",
                    a.name
                )));
            }
        }
        Ok(Self { agents })
    }

    pub fn describe(&self) -> String {
        self.agents
            .iter()
            .map(|a| {
                format!(
                    "- {}: {} {} Input: {} Output: {}",
                    a.name, a.functionality, a.capabilities, a.input_spec, a.output_spec
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn resolve(&self, name: &str) -> Result<AgentKind, AnalysisError> {
        if self.agents.iter().any(|a| a.name == name) {
            AgentKind::parse(name).ok_or_else(|| AnalysisError::UnknownAgent(name.to_string()))
        } else {
            Err(AnalysisError::UnknownAgent(name.to_string()))
        }
    }
}

impl Default for AgentCatalog {
    fn default() -> Self {
        Self::from_json(crate::datafiles::AGENTS).expect("embedded agent catalog valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolModule {
    pub module_name: String,
    pub description: String,
    pub assigned_agent: AgentKind,
    pub section_numbers: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModuleSet {
    pub modules: Vec<ProtocolModule>,
    pub iteration_count: u32,
    pub uncovered_after: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Appendix-classified sections with importance 0 are exempt from the
    /// uncovered-section check.
    pub exempt_zero_importance_appendix: bool,
    pub max_iterations: u32,
    pub max_repairs: u32,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            exempt_zero_importance_appendix: true,
            max_iterations: 10,
            max_repairs: crate::gateway::DEFAULT_MAX_REPAIRS,
        }
    }
}

fn summary_schema() -> Schema {
    Schema::object(vec![
        FieldSchema::required("summary", Schema::non_empty_string()),
        FieldSchema::required("references", Schema::array(Schema::string())),
        FieldSchema::required(
            "classification",
            Schema::enumeration(&["functional", "descriptive", "appendix", "configuration"]),
        ),
        FieldSchema::required("test_importance", Schema::int(0, 100)),
    ])
}

fn modules_schema() -> Schema {
    Schema::object(vec![FieldSchema::required(
        "modules",
        Schema::non_empty_array(Schema::object(vec![
            FieldSchema::required("module_name", Schema::non_empty_string()),
            FieldSchema::required("description", Schema::string()),
            FieldSchema::required("assigned_agent", Schema::non_empty_string()),
            FieldSchema::required("section_numbers", Schema::non_empty_array(Schema::string())),
        ])),
    )])
}

fn toc_text(tree: &SpecTree) -> String {
    tree.metadata
        .toc_entries
        .iter()
        .map(|e| format!("{} {}", e.number, e.title))
        .collect::<Vec<_>>()
        .join("\n")
}

/// "key information" block for one section: number, title, summary, and the
/// testing importance score.
pub fn key_information(summary: &SectionSummary, tree: &SpecTree) -> String {
    let title = tree
        .get(&summary.section_number)
        .map(|n| n.title.as_str())
        .unwrap_or_default();
    format!(
        "Section {} ({}): {} [importance {} ({})]",
        summary.section_number,
        title,
        summary.summary,
        summary.test_importance,
        importance_label(summary.test_importance)
    )
}

fn render(
    templates: &BTreeMap<String, PromptTemplate>,
    id: &str,
    bindings: &[(&str, String)],
) -> Result<String, GatewayError> {
    let template = templates
        .get(id)
        .unwrap_or_else(|| panic!("template `{id}` missing from registry"));
    let map: BTreeMap<String, String> = bindings
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
    template.render(&map)
}

/// Summarizes every section in sequential pre-order. Each prompt carries the
/// document title, the table of contents, and all previously produced
/// summaries. Sections with blank content short-circuit to a degenerate
/// summary without calling the backend.
pub fn summarize_sections(
    tree: &SpecTree,
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    opts: &AnalysisOptions,
) -> Result<SummarySet, AnalysisError> {
    let schema = summary_schema();
    let toc = toc_text(tree);
    let mut set = SummarySet::default();
    for id in tree.pre_order() {
        let node = tree.node(id);
        if !node.has_content() {
            set.summaries.push(SectionSummary {
                section_number: node.number.clone(),
                summary: format!("Section {} ({}) has no body text.", node.number, node.title),
                references: Vec::new(),
                unresolved_references: Vec::new(),
                classification: Classification::Descriptive,
                test_importance: 0,
                empty_body: true,
            });
            continue;
        }
        let prior = set
            .summaries
            .iter()
            .map(|s| format!("{}: {}", s.section_number, s.summary))
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = render(
            templates,
            "summarize_section",
            &[
                ("spec_title", tree.metadata.title.clone()),
                ("toc", toc.clone()),
                (
                    "prior_summaries",
                    if prior.is_empty() {
                        "(none yet)".to_string()
                    } else {
                        prior
                    },
                ),
                ("section_number", node.number.clone()),
                ("section_title", node.title.clone()),
                ("section_content", node.content.clone()),
            ],
        )
        .map_err(|e| AnalysisError::Section {
            section: node.number.clone(),
            source: e,
        })?;
        let completed = gateway
            .complete_structured(&prompt, &schema, opts.max_repairs)
            .map_err(|e| AnalysisError::Section {
                section: node.number.clone(),
                source: e,
            })?;
        let v = completed.value;
        let classification = match v["classification"].as_str().unwrap_or_default() {
            "functional" => Classification::Functional,
            "appendix" => Classification::Appendix,
            "configuration" => Classification::Configuration,
            _ => Classification::Descriptive,
        };
        let mut references = Vec::new();
        let mut unresolved = Vec::new();
        if let Some(refs) = v["references"].as_array() {
            for r in refs.iter().filter_map(|r| r.as_str()) {
                if tree.contains(r) {
                    references.push(r.to_string());
                } else {
                    unresolved.push(r.to_string());
                }
            }
        }
        set.summaries.push(SectionSummary {
            section_number: node.number.clone(),
            summary: v["summary"].as_str().unwrap_or_default().to_string(),
            references,
            unresolved_references: unresolved,
            classification,
            test_importance: v["test_importance"].as_i64().unwrap_or(0).clamp(0, 100) as u8,
            empty_body: false,
        });
    }
    Ok(set)
}

fn parse_module_set(
    value: &serde_json::Value,
    catalog: &AgentCatalog,
    tree: &SpecTree,
) -> Result<Vec<ProtocolModule>, AnalysisError> {
    let mut modules = Vec::new();
    for m in value["modules"].as_array().into_iter().flatten() {
        let agent_name = m["assigned_agent"].as_str().unwrap_or_default();
        let assigned_agent = catalog.resolve(agent_name)?;
        let section_numbers: Vec<String> = m["section_numbers"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|s| s.as_str())
            .filter(|s| tree.contains(s))
            .map(|s| s.to_string())
            .collect();
        if section_numbers.is_empty() {
            continue;
        }
        modules.push(ProtocolModule {
            module_name: m["module_name"].as_str().unwrap_or_default().to_string(),
            description: m["description"].as_str().unwrap_or_default().to_string(),
            assigned_agent,
            section_numbers,
        });
    }
    Ok(modules)
}

/// Initial module formation over the complete summary set.
pub fn form_modules(
    tree: &SpecTree,
    summaries: &SummarySet,
    catalog: &AgentCatalog,
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    opts: &AnalysisOptions,
) -> Result<ModuleSet, AnalysisError> {
    let key_info = summaries
        .summaries
        .iter()
        .map(|s| key_information(s, tree))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = render(
        templates,
        "form_modules",
        &[
            ("agent_catalog", catalog.describe()),
            ("sections_key_info", key_info),
        ],
    )?;
    let completed = gateway.complete_structured(&prompt, &modules_schema(), opts.max_repairs)?;
    let modules = parse_module_set(&completed.value, catalog, tree)?;
    Ok(ModuleSet {
        modules,
        iteration_count: 0,
        uncovered_after: BTreeSet::new(),
    })
}

/// Content-bearing sections not present in any module's section list.
/// Appendix-classified sections with importance 0 are exempt when the option
/// is set.
pub fn find_uncovered(
    tree: &SpecTree,
    summaries: &SummarySet,
    modules: &[ProtocolModule],
    opts: &AnalysisOptions,
) -> BTreeSet<String> {
    let covered: BTreeSet<&str> = modules
        .iter()
        .flat_map(|m| m.section_numbers.iter().map(|s| s.as_str()))
        .collect();
    tree.content_bearing()
        .into_iter()
        .filter(|n| !covered.contains(n.number.as_str()))
        .filter(|n| {
            if !opts.exempt_zero_importance_appendix {
                return true;
            }
            match summaries.get(&n.number) {
                Some(s) => {
                    !(s.classification == Classification::Appendix && s.test_importance == 0)
                }
                None => true,
            }
        })
        .map(|n| n.number.clone())
        .collect()
}

/// Merges a supplement round into the module list: modules with a known name
/// get their section lists unioned, new names are appended.
fn merge_modules(existing: &mut Vec<ProtocolModule>, supplement: Vec<ProtocolModule>) {
    for new_module in supplement {
        match existing
            .iter_mut()
            .find(|m| m.module_name == new_module.module_name)
        {
            Some(current) => {
                for number in new_module.section_numbers {
                    if !current.section_numbers.contains(&number) {
                        current.section_numbers.push(number);
                    }
                }
            }
            None => existing.push(new_module),
        }
    }
}

/// Iterative completion: prompts with the uncovered sections' key information
/// plus the current modules until nothing is uncovered or `max_iterations`
/// supplement rounds have run (a warning is recorded on the result when
/// sections remain).
pub fn complete_modules(
    tree: &SpecTree,
    summaries: &SummarySet,
    initial: ModuleSet,
    catalog: &AgentCatalog,
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    opts: &AnalysisOptions,
) -> Result<ModuleSet, AnalysisError> {
    let mut modules = initial.modules;
    let mut iteration_count = initial.iteration_count;
    for round in 1..=opts.max_iterations {
        let uncovered = find_uncovered(tree, summaries, &modules, opts);
        if uncovered.is_empty() {
            break;
        }
        let uncovered_info = uncovered
            .iter()
            .filter_map(|n| summaries.get(n))
            .map(|s| key_information(s, tree))
            .collect::<Vec<_>>()
            .join("\n");
        let current = serde_json::to_string_pretty(&modules).unwrap_or_default();
        let prompt = render(
            templates,
            "supplement_modules",
            &[
                ("agent_catalog", catalog.describe()),
                ("uncovered_key_info", uncovered_info),
                ("current_modules", current),
            ],
        )?;
        let completed =
            gateway.complete_structured(&prompt, &modules_schema(), opts.max_repairs)?;
        let supplement = parse_module_set(&completed.value, catalog, tree)?;
        merge_modules(&mut modules, supplement);
        iteration_count = round;
    }
    let uncovered_after = find_uncovered(tree, summaries, &modules, opts);
    Ok(ModuleSet {
        modules,
        iteration_count,
        uncovered_after,
    })
}
