//! Stage-2 understanding: convert each protocol module into structured models
//! and enumerate traversable testing points.

mod fields;
mod fsm;
mod points;
mod sequence;
mod specific;

pub use fields::{model_fields, FieldPosition, FieldSpec, PacketModel};
pub use fsm::{model_fsm, FsmModel, FsmTransition};
pub use points::{enumerate_points, enumerate_points_tagged, PointOrigin, TestingPoint};
pub use sequence::{model_sequence, MessageStep, SequenceModel};
pub use specific::{model_protocol_specific, SpecificModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{AgentKind, ProtocolModule, SummarySet};
use crate::gateway::{Gateway, GatewayError, PromptTemplate};
use crate::ingest::SpecTree;

#[derive(Debug, Error)]
pub enum ModelingError {
    #[error("module `{module}` section {section}: {source}")]
    Section {
        module: String,
        section: String,
        #[source]
        source: GatewayError,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("transition references undeclared state `{0}`")]
    DanglingState(String),
    #[error("ordering constraints admit no valid order (cycle through `{0}`)")]
    CyclicOrdering(String),
}

#[derive(Debug, Clone)]
pub struct ModelingOptions {
    pub max_repairs: u32,
    /// Strict mode turns dangling FSM states into errors instead of
    /// auto-promoting them.
    pub strict_fsm: bool,
    /// Title keywords that pull sections to the front of the header-to-body
    /// reorder.
    pub reorder_keywords: Vec<String>,
}

impl Default for ModelingOptions {
    fn default() -> Self {
        Self {
            max_repairs: crate::gateway::DEFAULT_MAX_REPAIRS,
            strict_fsm: false,
            reorder_keywords: serde_json::from_str(crate::datafiles::REORDER_KEYWORDS)
                .expect("embedded keywords valid"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub tool_name: String,
    pub functionality: String,
    pub input_spec: String,
    pub output_spec: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Toolkit {
    pub tools: Vec<ToolDescriptor>,
}

impl Toolkit {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let tools: Vec<ToolDescriptor> = serde_json::from_str(json)?;
        Ok(Self { tools })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.iter().any(|t| t.tool_name == name)
    }

    pub fn describe(&self) -> String {
        self.tools
            .iter()
            .map(|t| {
                format!(
                    "- {}: {} Input: {} Output: {}",
                    t.tool_name, t.functionality, t.input_spec, t.output_spec
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl Default for Toolkit {
    fn default() -> Self {
        Self::from_json(crate::datafiles::TOOLKIT).expect("embedded toolkit valid")
    }
}

/// One module's structured model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModuleModel {
    Packet(PacketModel),
    Fsm(FsmModel),
    Sequence(SequenceModel),
    Specific(SpecificModel),
}

impl ModuleModel {
    pub fn module_name(&self) -> &str {
        match self {
            ModuleModel::Packet(m) => &m.module_name,
            ModuleModel::Fsm(m) => &m.module_name,
            ModuleModel::Sequence(m) => &m.module_name,
            ModuleModel::Specific(m) => &m.module_name,
        }
    }
}

/// Dispatches one module to its assigned modeling agent.
pub fn model_module(
    module: &ProtocolModule,
    tree: &SpecTree,
    summaries: &SummarySet,
    toolkit: &Toolkit,
    gateway: &Gateway,
    templates: &std::collections::BTreeMap<String, PromptTemplate>,
    opts: &ModelingOptions,
) -> Result<ModuleModel, ModelingError> {
    match module.assigned_agent {
        AgentKind::PacketField => {
            model_fields(module, tree, gateway, templates, opts).map(ModuleModel::Packet)
        }
        AgentKind::Fsm => model_fsm(module, tree, gateway, templates, opts).map(ModuleModel::Fsm),
        AgentKind::TimeSequence => {
            model_sequence(module, tree, gateway, templates, opts).map(ModuleModel::Sequence)
        }
        AgentKind::ProtocolSpecific => {
            model_protocol_specific(module, tree, summaries, toolkit, gateway, templates, opts)
                .map(ModuleModel::Specific)
        }
    }
}

pub(crate) fn render_template(
    templates: &std::collections::BTreeMap<String, PromptTemplate>,
    id: &str,
    bindings: &[(&str, String)],
) -> Result<String, GatewayError> {
    let template = templates
        .get(id)
        .unwrap_or_else(|| panic!("template `{id}` missing from registry"));
    let map: std::collections::BTreeMap<String, String> = bindings
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
    template.render(&map)
}

/// Section content block used inside modeling prompts.
pub(crate) fn section_block(tree: &SpecTree, number: &str) -> String {
    match tree.get(number) {
        Some(node) => format!(
            "Section {} ({}):\n{}",
            node.number, node.title, node.content
        ),
        None => format!("Section {number}: (missing)"),
    }
}
