//! Stage implementations. Each stage reads its predecessors' artifacts from
//! the run directory and writes only into its own stage directory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RunConfig, Stage};
use crate::analysis::{
    complete_modules, form_modules, summarize_sections, AgentCatalog, AnalysisOptions, ModuleSet,
    SummarySet,
};
use crate::datafiles;
use crate::forge::{ExecutableArtifact, FixTemplates, TaskKnowledgeBase};
use crate::gateway::{Gateway, PromptTemplate};
use crate::ingest::{ingest_document, IngestRules, RawSpecDocument, SpecTree};
use crate::loops::{
    escalate, run_small_loop, Disposition, EscalationDeps, EscalationTicket, FaultRules, LoopTrace,
    SmallLoopDeps, SmallLoopOutcome, SuspectedOrigin,
};
use crate::metrics::{build_report, LineKind, LineSequence, MetricReport, NormalizationRules};
use crate::modeling::{
    enumerate_points_tagged, model_module, ModelingOptions, ModuleModel, TestingPoint, Toolkit,
};
use crate::testbed::{DutCliGrammar, FaultProfile, Testbed, TesterApiRegistry};
use crate::testcase::{
    compute_breadth, generate_cases, select_key_sections, verify_and_refine, TestCase,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaggedPoint {
    pub point: TestingPoint,
    pub module_name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseForgeRecord {
    pub passed: bool,
    pub rounds: u32,
    pub attempt: u32,
    pub escalated: bool,
    #[serde(default)]
    pub observed_calls: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscalationResolution {
    pub case_id: String,
    pub suspected_origin: SuspectedOrigin,
    pub disposition: Disposition,
    pub regenerated_case_ids: Vec<String>,
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub verdicts: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<MetricReport>,
}

pub(super) fn execute(
    stage: Stage,
    config: &RunConfig,
    run_dir: &Path,
    gateways: super::GatewayFactory<'_>,
) -> Result<(), String> {
    match stage {
        Stage::Ingest => run_ingest(config, run_dir),
        Stage::Analyze => run_analyze(config, run_dir, gateways),
        Stage::Model => run_model(config, run_dir, gateways),
        Stage::GenCases => run_gen_cases(config, run_dir, gateways),
        Stage::Verify => run_verify(config, run_dir, gateways),
        Stage::Forge => run_forge(config, run_dir, gateways),
        Stage::Loop => run_loop(config, run_dir, gateways),
        Stage::Metrics => run_metrics(config, run_dir),
    }
}

/// Builds a stage gateway from the run config's descriptors.
pub(super) fn default_gateway(config: &RunConfig, stage: Stage) -> Result<Gateway, String> {
    let descriptor = config
        .backend_overrides
        .get(stage.name())
        .unwrap_or(&config.backend);
    Gateway::from_descriptor(descriptor).map_err(|e| e.to_string())
}

fn templates() -> BTreeMap<String, PromptTemplate> {
    datafiles::default_templates()
}

fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> Result<(), String> {
    let pretty = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(dir.join(file), pretty + "\n")
        .map_err(|e| format!("{}: {e}", dir.join(file).display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let raw = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&raw).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_tree(run_dir: &Path) -> Result<SpecTree, String> {
    SpecTree::load(&run_dir.join("ingest/tree.json")).map_err(|e| e.to_string())
}

fn load_summaries(run_dir: &Path) -> Result<SummarySet, String> {
    read_json(&run_dir.join("analyze/summaries.json"))
}

fn load_modules(run_dir: &Path) -> Result<ModuleSet, String> {
    read_json(&run_dir.join("analyze/modules.json"))
}

fn load_few_shots(config: &RunConfig) -> Result<Vec<TestCase>, String> {
    match &config.few_shot_cases {
        Some(path) => read_json(path),
        None => serde_json::from_str(datafiles::FEW_SHOT_CASES).map_err(|e| e.to_string()),
    }
}

fn load_testbed(config: &RunConfig) -> Result<Testbed, String> {
    let grammar = match &config.testbed.grammar {
        Some(path) => DutCliGrammar::load(path).map_err(|e| e.to_string())?,
        None => DutCliGrammar::from_json(datafiles::DUT_GRAMMAR).map_err(|e| e.to_string())?,
    };
    let registry = match &config.testbed.tester_api {
        Some(path) => TesterApiRegistry::load(path).map_err(|e| e.to_string())?,
        None => TesterApiRegistry::from_json(datafiles::TESTER_API).map_err(|e| e.to_string())?,
    };
    let profile = match &config.testbed.fault_profile {
        Some(path) => {
            let raw =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            FaultProfile::from_json(&raw).map_err(|e| e.to_string())?
        }
        None => FaultProfile::default(),
    };
    Ok(Testbed {
        grammar,
        registry,
        profile,
    })
}

/// Knowledge base built from the shipped testbed surface when the config
/// names no directory.
fn load_kb(config: &RunConfig, testbed: &Testbed) -> Result<TaskKnowledgeBase, String> {
    match &config.kb_path {
        Some(dir) => TaskKnowledgeBase::load(dir).map_err(|e| e.to_string()),
        None => Ok(default_kb(testbed)),
    }
}

fn default_kb(testbed: &Testbed) -> TaskKnowledgeBase {
    use crate::forge::{ExperiencePool, SummaryIndexNode, TaskInfo};
    TaskKnowledgeBase {
        task_info: TaskInfo {
            task_description: "Convert one natural-language network test case into a tester \
                               script (one API call per line, `expect` lines for checks) and a \
                               device configuration (one CLI command per line)."
                .to_string(),
            repository_structure: "scripts/ (tester scripts), configs/ (device configurations)"
                .to_string(),
            device_inventory: vec!["dut1".to_string(), "tester1 (ports p1..p4)".to_string()],
        },
        expert_heuristics: vec![
            "Reserve tester ports before any traffic or emulation step, and release them last."
                .to_string(),
            "Address the device interface before enabling any routing protocol.".to_string(),
            "Verify every expected result with an `expect` line; never leave a result unchecked."
                .to_string(),
        ],
        sops: vec![
            "Draft the tester script and device configuration from the intents.".to_string(),
            "Validate the draft against the artifact format before any deployment.".to_string(),
            "Deploy the configuration, then execute the script on the testbed.".to_string(),
            "On failure, consult the fault corrector and redraft with its hints.".to_string(),
        ],
        pool: ExperiencePool::default(),
        index: SummaryIndexNode {
            entry_id: "root".to_string(),
            summary: "testbed knowledge".to_string(),
            payload_ref: None,
            children: vec![
                SummaryIndexNode {
                    entry_id: "tester-apis".to_string(),
                    summary: format!(
                        "tester api calls: {}",
                        testbed.registry.api_names().join(" ")
                    ),
                    payload_ref: Some("doc:tester-api".to_string()),
                    children: Vec::new(),
                },
                SummaryIndexNode {
                    entry_id: "dut-cli".to_string(),
                    summary: format!(
                        "device cli configuration commands: {}",
                        testbed.grammar.template_lines().join("; ")
                    ),
                    payload_ref: Some("doc:dut-grammar".to_string()),
                    children: Vec::new(),
                },
            ],
        },
        few_shots: Vec::new(),
    }
}

fn run_ingest(config: &RunConfig, run_dir: &Path) -> Result<(), String> {
    let rules = IngestRules::load(config.cleaning_rules.as_deref()).map_err(|e| e.to_string())?;
    let raw = RawSpecDocument::from_file(&config.spec_path).map_err(|e| e.to_string())?;
    let tree = ingest_document(&raw, &rules).map_err(|e| e.to_string())?;
    tree.write(&run_dir.join("ingest/tree.json"))
        .map_err(|e| e.to_string())
}

fn run_analyze(
    config: &RunConfig,
    run_dir: &Path,
    gateways: super::GatewayFactory<'_>,
) -> Result<(), String> {
    let tree = load_tree(run_dir)?;
    let gateway = gateways(Stage::Analyze)?;
    let templates = templates();
    let catalog = AgentCatalog::default();
    let opts = AnalysisOptions {
        exempt_zero_importance_appendix: config.exempt_zero_importance_appendix,
        max_iterations: config.max_module_iterations,
        max_repairs: config.max_repairs,
    };
    let summaries =
        summarize_sections(&tree, &gateway, &templates, &opts).map_err(|e| e.to_string())?;
    let dir = run_dir.join("analyze");
    write_json(&dir, "summaries.json", &summaries)?;
    let initial = form_modules(&tree, &summaries, &catalog, &gateway, &templates, &opts)
        .map_err(|e| e.to_string())?;
    let complete = complete_modules(
        &tree, &summaries, initial, &catalog, &gateway, &templates, &opts,
    )
    .map_err(|e| e.to_string())?;
    write_json(&dir, "modules.json", &complete)
}

fn run_model(
    config: &RunConfig,
    run_dir: &Path,
    gateways: super::GatewayFactory<'_>,
) -> Result<(), String> {
    let tree = load_tree(run_dir)?;
    let summaries = load_summaries(run_dir)?;
    let modules = load_modules(run_dir)?;
    let gateway = gateways(Stage::Model)?;
    let templates = templates();
    let toolkit = Toolkit::default();
    let opts = ModelingOptions {
        max_repairs: config.max_repairs,
        strict_fsm: config.strict_fsm,
        ..ModelingOptions::default()
    };
    let mut models: Vec<ModuleModel> = Vec::new();
    for module in &modules.modules {
        let model = model_module(
            module, &tree, &summaries, &toolkit, &gateway, &templates, &opts,
        )
        .map_err(|e| e.to_string())?;
        models.push(model);
    }
    let dir = run_dir.join("model");
    write_json(&dir, "models.json", &models)?;
    let tagged: Vec<TaggedPoint> = enumerate_points_tagged(&models)
        .into_iter()
        .map(|(point, module_name)| TaggedPoint { point, module_name })
        .collect();
    write_json(&dir, "testing_points.json", &tagged)
}

fn run_gen_cases(
    config: &RunConfig,
    run_dir: &Path,
    gateways: super::GatewayFactory<'_>,
) -> Result<(), String> {
    let tree = load_tree(run_dir)?;
    let summaries = load_summaries(run_dir)?;
    let modules = load_modules(run_dir)?;
    let tagged: Vec<TaggedPoint> = read_json(&run_dir.join("model/testing_points.json"))?;
    let gateway = gateways(Stage::GenCases)?;
    let templates = templates();
    let few_shots = load_few_shots(config)?;
    let descriptions: BTreeMap<&str, &str> = modules
        .modules
        .iter()
        .map(|m| (m.module_name.as_str(), m.description.as_str()))
        .collect();
    let pairs: Vec<(TestingPoint, (String, String))> = tagged
        .into_iter()
        .map(|t| {
            let description = descriptions
                .get(t.module_name.as_str())
                .copied()
                .unwrap_or_default()
                .to_string();
            (t.point, (t.module_name, description))
        })
        .collect();
    let (cases, warnings) = generate_cases(
        &pairs,
        &tree,
        &summaries,
        &few_shots,
        &gateway,
        &templates,
        config.max_repairs,
    )
    .map_err(|e| e.to_string())?;
    let dir = run_dir.join("gen_cases");
    write_json(&dir, "testcases.json", &cases)?;
    if !warnings.is_empty() {
        write_json(&dir, "warnings.json", &warnings)?;
    }
    Ok(())
}

fn run_verify(
    config: &RunConfig,
    run_dir: &Path,
    gateways: super::GatewayFactory<'_>,
) -> Result<(), String> {
    let tree = load_tree(run_dir)?;
    let summaries = load_summaries(run_dir)?;
    let cases: Vec<TestCase> = read_json(&run_dir.join("gen_cases/testcases.json"))?;
    let gateway = gateways(Stage::Verify)?;
    let templates = templates();
    let few_shots = load_few_shots(config)?;
    let key_sections =
        select_key_sections(&summaries, &config.coverage).map_err(|e| e.to_string())?;
    let outcome = verify_and_refine(
        &cases,
        &key_sections,
        &tree,
        &few_shots,
        &config.coverage,
        &gateway,
        &templates,
        config.max_repairs,
    )
    .map_err(|e| e.to_string())?;
    let dir = run_dir.join("verify");
    write_json(&dir, "verification.json", &outcome)?;
    write_json(&dir, "breadth_report.json", &outcome.final_breadth)?;
    write_json(&dir, "depth_report.json", &outcome.final_depth)?;
    write_json(
        &dir,
        "supplementary_cases.json",
        &outcome.supplementary_cases,
    )?;
    let mut all_cases = cases;
    all_cases.extend(outcome.supplementary_cases.iter().cloned());
    write_json(&dir, "all_cases.json", &all_cases)?;
    if let Some(path) = &config.external_suite {
        let external: Vec<TestCase> = read_json(path)?;
        let breadth = compute_breadth(&external, &key_sections);
        write_json(&dir, "external_breadth.json", &breadth)?;
    }
    Ok(())
}

fn run_forge(
    config: &RunConfig,
    run_dir: &Path,
    gateways: super::GatewayFactory<'_>,
) -> Result<(), String> {
    let cases: Vec<TestCase> = read_json(&run_dir.join("verify/all_cases.json"))?;
    let gateway = gateways(Stage::Forge)?;
    let templates = templates();
    let testbed = load_testbed(config)?;
    let mut kb = load_kb(config, &testbed)?;
    let fault_rules = FaultRules::default();
    let fix_templates = FixTemplates::default();
    let dir = run_dir.join("forge");
    let mut manifest: BTreeMap<String, CaseForgeRecord> = BTreeMap::new();
    let mut pending: Vec<EscalationTicket> = Vec::new();
    for case in &cases {
        let mut deps = SmallLoopDeps {
            kb: &mut kb,
            testbed: &testbed,
            gateway: &gateway,
            templates: &templates,
            fault_rules: &fault_rules,
            fix_templates: &fix_templates,
            max_repairs: config.max_repairs,
        };
        let outcome =
            run_small_loop(case, &mut deps, &config.loop_cfg).map_err(|e| e.to_string())?;
        match outcome {
            SmallLoopOutcome::Pass {
                artifact,
                rounds,
                attempt,
                trace,
                observed_calls,
                final_log,
            } => {
                write_artifact(&dir, &artifact)?;
                write_trace(&dir, &trace)?;
                final_log
                    .write_jsonl(&dir.join(format!("log.{}.jsonl", artifact.case_id)))
                    .map_err(|e| e.to_string())?;
                manifest.insert(
                    case.case_id.clone(),
                    CaseForgeRecord {
                        passed: true,
                        rounds,
                        attempt,
                        escalated: false,
                        observed_calls,
                    },
                );
            }
            SmallLoopOutcome::Escalated(ticket, trace) => {
                write_trace(&dir, &trace)?;
                manifest.insert(
                    case.case_id.clone(),
                    CaseForgeRecord {
                        passed: false,
                        rounds: config.loop_cfg.max_rounds_per_attempt,
                        attempt: config.loop_cfg.max_attempts,
                        escalated: true,
                        observed_calls: Vec::new(),
                    },
                );
                pending.push(ticket);
            }
        }
    }
    write_json(&dir, "forge_manifest.json", &manifest)?;
    write_json(&dir, "escalations_pending.json", &pending)?;
    kb.save(&dir.join("kb")).map_err(|e| e.to_string())?;
    Ok(())
}

fn write_artifact(dir: &Path, artifact: &ExecutableArtifact) -> Result<(), String> {
    std::fs::write(
        dir.join(format!("script.{}", artifact.case_id)),
        &artifact.tester_script,
    )
    .map_err(|e| e.to_string())?;
    std::fs::write(
        dir.join(format!("config.{}", artifact.case_id)),
        &artifact.dut_config,
    )
    .map_err(|e| e.to_string())
}

fn write_trace(dir: &Path, trace: &LoopTrace) -> Result<(), String> {
    let pretty = serde_json::to_string_pretty(trace).map_err(|e| e.to_string())?;
    std::fs::write(
        dir.join(format!("trace.{}.json", trace.case_id)),
        pretty + "\n",
    )
    .map_err(|e| e.to_string())
}

fn run_loop(
    config: &RunConfig,
    run_dir: &Path,
    gateways: super::GatewayFactory<'_>,
) -> Result<(), String> {
    let pending: Vec<EscalationTicket> =
        read_json(&run_dir.join("forge/escalations_pending.json"))?;
    let cases: Vec<TestCase> = read_json(&run_dir.join("verify/all_cases.json"))?;
    let tree = load_tree(run_dir)?;
    let gateway = gateways(Stage::Loop)?;
    let templates = templates();
    let testbed = load_testbed(config)?;
    // the knowledge base continues from the forge stage's versioned copy
    let mut kb = TaskKnowledgeBase::load(&run_dir.join("forge/kb")).map_err(|e| e.to_string())?;
    let fault_rules = FaultRules::default();
    let fix_templates = FixTemplates::default();
    let dir = run_dir.join("loop");
    let mut resolutions: Vec<EscalationResolution> = Vec::new();
    for ticket in pending {
        let Some(original) = cases.iter().find(|c| c.case_id == ticket.case_id) else {
            return Err(format!(
                "escalation ticket references unknown case {}",
                ticket.case_id
            ));
        };
        let case_id = ticket.case_id.clone();
        let suspected_origin = ticket.suspected_origin;
        let escalation = EscalationDeps {
            tree: &tree,
            original_case: original,
        };
        let mut deps = SmallLoopDeps {
            kb: &mut kb,
            testbed: &testbed,
            gateway: &gateway,
            templates: &templates,
            fault_rules: &fault_rules,
            fix_templates: &fix_templates,
            max_repairs: config.max_repairs,
        };
        match escalate(ticket, &escalation, &mut deps, &config.loop_cfg)
            .map_err(|e| e.to_string())?
        {
            crate::loops::LargeLoopOutcome::Resolved {
                new_cases,
                artifact,
                ..
            } => {
                write_artifact(&dir, &artifact)?;
                resolutions.push(EscalationResolution {
                    case_id,
                    suspected_origin,
                    disposition: Disposition::RegenerateCase,
                    regenerated_case_ids: new_cases.iter().map(|c| c.case_id.clone()).collect(),
                    resolved: true,
                });
            }
            crate::loops::LargeLoopOutcome::ManualReview(final_ticket) => {
                resolutions.push(EscalationResolution {
                    case_id,
                    suspected_origin: final_ticket.suspected_origin,
                    disposition: Disposition::ManualReview,
                    regenerated_case_ids: Vec::new(),
                    resolved: false,
                });
            }
        }
    }
    write_json(&dir, "escalations.json", &resolutions)?;
    kb.save(&dir.join("kb")).map_err(|e| e.to_string())?;
    Ok(())
}

fn run_metrics(config: &RunConfig, run_dir: &Path) -> Result<(), String> {
    let forge_manifest: BTreeMap<String, CaseForgeRecord> =
        read_json(&run_dir.join("forge/forge_manifest.json"))?;
    let resolutions: Vec<EscalationResolution> = read_json(&run_dir.join("loop/escalations.json"))?;
    let resolved: std::collections::BTreeSet<&str> = resolutions
        .iter()
        .filter(|r| r.resolved)
        .map(|r| r.case_id.as_str())
        .collect();
    let mut verdicts_map: BTreeMap<String, bool> = BTreeMap::new();
    for (case_id, record) in &forge_manifest {
        verdicts_map.insert(
            case_id.clone(),
            record.passed || resolved.contains(case_id.as_str()),
        );
    }
    let verdicts: Vec<bool> = verdicts_map.values().copied().collect();
    let rules = NormalizationRules::default();
    let mut script_pairs: Vec<(LineSequence, LineSequence)> = Vec::new();
    let mut config_pairs: Vec<(LineSequence, LineSequence)> = Vec::new();
    if let Some(reference_dir) = &config.metrics_reference_dir {
        for (case_id, record) in &forge_manifest {
            let script_ref = reference_dir.join(format!("script.{case_id}"));
            if script_ref.exists() {
                let answer_text = std::fs::read_to_string(&script_ref)
                    .map_err(|e| format!("{}: {e}", script_ref.display()))?;
                let answer = script_call_sequence(&answer_text, &rules);
                let output = LineSequence::from_units(
                    record
                        .observed_calls
                        .iter()
                        .filter_map(|l| crate::metrics::normalize_line(l, LineKind::Script, &rules))
                        .collect(),
                );
                script_pairs.push((answer, output));
            }
            let config_ref = reference_dir.join(format!("config.{case_id}"));
            let generated = run_dir.join("forge").join(format!("config.{case_id}"));
            if config_ref.exists() && generated.exists() {
                let answer_text = std::fs::read_to_string(&config_ref)
                    .map_err(|e| format!("{}: {e}", config_ref.display()))?;
                let output_text = std::fs::read_to_string(&generated)
                    .map_err(|e| format!("{}: {e}", generated.display()))?;
                config_pairs.push((
                    LineSequence::from_text(&answer_text, LineKind::Config, &rules),
                    LineSequence::from_text(&output_text, LineKind::Config, &rules),
                ));
            }
        }
    }
    let script = if script_pairs.is_empty() {
        None
    } else {
        Some(build_report(&verdicts, &script_pairs).map_err(|e| e.to_string())?)
    };
    let config_report = if config_pairs.is_empty() {
        None
    } else {
        Some(build_report(&verdicts, &config_pairs).map_err(|e| e.to_string())?)
    };
    let artifact = MetricsArtifact {
        verdicts: verdicts_map,
        script,
        config: config_report,
    };
    write_json(&run_dir.join("metrics"), "metric_report.json", &artifact)
}

/// API-call units of a tester script: normalized non-expect lines.
pub fn script_call_sequence(script: &str, rules: &NormalizationRules) -> LineSequence {
    LineSequence::from_units(
        script
            .lines()
            .filter_map(|l| crate::metrics::normalize_line(l, LineKind::Script, rules))
            .filter(|l| !l.starts_with("expect "))
            .collect(),
    )
}
