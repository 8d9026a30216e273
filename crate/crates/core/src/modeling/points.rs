//! Testing points: the traversable test targets emitted by stage-2 models.
//! One point per packet field, per FSM transition, per message step, plus all
//! protocol-specific points, in a deterministic order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FieldPosition, ModuleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointOrigin {
    Field,
    Fsm,
    TimeSequence,
    ProtocolSpecific,
}

impl PointOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointOrigin::Field => "field",
            PointOrigin::Fsm => "fsm",
            PointOrigin::TimeSequence => "time_sequence",
            PointOrigin::ProtocolSpecific => "protocol_specific",
        }
    }

    /// Short tag used in case identifiers.
    pub fn tag(&self) -> &'static str {
        match self {
            PointOrigin::Field => "FLD",
            PointOrigin::Fsm => "FSM",
            PointOrigin::TimeSequence => "SEQ",
            PointOrigin::ProtocolSpecific => "PSP",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestingPoint {
    pub title: String,
    pub objective: String,
    pub parameters: BTreeMap<String, String>,
    pub reference_sections: Vec<String>,
    pub origin: PointOrigin,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub additional_tools_required: Vec<String>,
}

/// Enumerates every testing point from the stage-2 models. Ordering is
/// deterministic: origin, then source section, then extraction index.
pub fn enumerate_points(models: &[ModuleModel]) -> Vec<TestingPoint> {
    enumerate_points_tagged(models)
        .into_iter()
        .map(|(point, _)| point)
        .collect()
}

/// Like [`enumerate_points`] but keeps each point's source module name.
pub fn enumerate_points_tagged(models: &[ModuleModel]) -> Vec<(TestingPoint, String)> {
    let mut buckets: Vec<(PointOrigin, String, usize, TestingPoint, String)> = Vec::new();
    for model in models {
        match model {
            ModuleModel::Packet(m) => {
                for (i, field) in m.fields.iter().enumerate() {
                    let position = match &field.position {
                        FieldPosition::Bits {
                            offset_bits,
                            width_bits,
                        } => format!("bits {offset_bits}+{width_bits}"),
                        FieldPosition::Symbolic(s) => s.clone(),
                    };
                    let mut parameters = BTreeMap::new();
                    parameters.insert("field".to_string(), field.field_name.clone());
                    parameters.insert("position".to_string(), position);
                    parameters.insert("constraints".to_string(), field.value_constraints.clone());
                    buckets.push((
                        PointOrigin::Field,
                        primary_section(&field.source_sections),
                        i,
                        TestingPoint {
                            title: format!("Field `{}` constraint handling", field.field_name),
                            objective: format!(
                                "Verify handling of field `{}`: {}. Expected response: {}",
                                field.field_name, field.value_constraints, field.expected_response
                            ),
                            parameters,
                            reference_sections: field.source_sections.clone(),
                            origin: PointOrigin::Field,
                            additional_tools_required: Vec::new(),
                        },
                        m.module_name.clone(),
                    ));
                }
            }
            ModuleModel::Fsm(m) => {
                for (i, t) in m.transitions.iter().enumerate() {
                    let mut parameters = BTreeMap::new();
                    parameters.insert("source_state".to_string(), t.source.clone());
                    parameters.insert("target_state".to_string(), t.target.clone());
                    parameters.insert("event".to_string(), t.event.clone());
                    if !t.constraints.is_empty() {
                        parameters.insert("constraints".to_string(), t.constraints.join("; "));
                    }
                    buckets.push((
                        PointOrigin::Fsm,
                        primary_section(&t.source_sections),
                        i,
                        TestingPoint {
                            title: format!(
                                "Transition {} to {} on {}",
                                t.source, t.target, t.event
                            ),
                            objective: format!(
                                "Drive the device to state {} and trigger `{}`; verify the transition to {} and the action: {}",
                                t.source, t.event, t.target, t.action
                            ),
                            parameters,
                            reference_sections: t.source_sections.clone(),
                            origin: PointOrigin::Fsm,
                            additional_tools_required: Vec::new(),
                        },
                        m.module_name.clone(),
                    ));
                }
            }
            ModuleModel::Sequence(m) => {
                for (i, s) in m.steps.iter().enumerate() {
                    let mut parameters = BTreeMap::new();
                    parameters.insert("message_type".to_string(), s.message_type.clone());
                    parameters.insert("sender".to_string(), s.sender_role.clone());
                    parameters.insert("receiver".to_string(), s.receiver_role.clone());
                    buckets.push((
                        PointOrigin::TimeSequence,
                        primary_section(&s.source_sections),
                        i,
                        TestingPoint {
                            title: format!(
                                "Message step {}: {} from {}",
                                s.step_id, s.message_type, s.sender_role
                            ),
                            objective: format!(
                                "Exercise the `{}` exchange from {} to {}; verify: {}",
                                s.message_type, s.sender_role, s.receiver_role, s.expected_response
                            ),
                            parameters,
                            reference_sections: s.source_sections.clone(),
                            origin: PointOrigin::TimeSequence,
                            additional_tools_required: Vec::new(),
                        },
                        m.module_name.clone(),
                    ));
                }
            }
            ModuleModel::Specific(m) => {
                for (i, p) in m.points.iter().enumerate() {
                    buckets.push((
                        PointOrigin::ProtocolSpecific,
                        primary_section(&p.reference_sections),
                        i,
                        p.clone(),
                        m.module_name.clone(),
                    ));
                }
            }
        }
    }
    buckets.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| section_key(&a.1).cmp(&section_key(&b.1)))
            .then_with(|| a.2.cmp(&b.2))
    });
    buckets
        .into_iter()
        .map(|(_, _, _, point, module)| (point, module))
        .collect()
}

fn primary_section(sections: &[String]) -> String {
    sections.first().cloned().unwrap_or_default()
}

/// Numeric-aware key so "3.10" sorts after "3.9".
fn section_key(number: &str) -> Vec<(u8, u64, String)> {
    number
        .split('.')
        .map(|part| match part.parse::<u64>() {
            Ok(v) => (0u8, v, String::new()),
            Err(_) => (1u8, 0, part.to_string()),
        })
        .collect()
}
