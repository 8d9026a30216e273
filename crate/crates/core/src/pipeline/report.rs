//! Human-readable run report: understanding statistics, per-origin case
//! counts, coverage tables, loop outcomes, and metric columns.

use std::collections::BTreeMap;
use std::path::Path;

use super::stages::{CaseForgeRecord, EscalationResolution, MetricsArtifact, TaggedPoint};
use super::{PipelineError, RunManifest};
use crate::analysis::ModuleSet;
use crate::ingest::SpecTree;
use crate::testcase::{BreadthReport, DepthReport, TestCase};

fn try_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Option<T> {
    let raw = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&raw).ok()
}

/// Renders whatever artifacts exist in the run directory. The manifest must
/// exist.
pub fn report(run_dir: &Path) -> Result<String, PipelineError> {
    let manifest = RunManifest::load(run_dir)?;
    let mut out = String::new();
    let push = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };
    push(&mut out, &format!("run {}", manifest.run_id));
    push(&mut out, "");

    push(&mut out, "stages:");
    for (name, status) in &manifest.stages {
        push(
            &mut out,
            &format!(
                "  {:<10} {:>8?} {:>7} ms  {} artifact(s)",
                name,
                status.status,
                status.duration_ms,
                status.artifacts.len()
            ),
        );
    }
    push(&mut out, "");

    if let Ok(tree) = SpecTree::load(&run_dir.join("ingest/tree.json")) {
        push(&mut out, "understanding:");
        push(
            &mut out,
            &format!(
                "  specification: {} ({})",
                tree.metadata.title, tree.metadata.spec_number
            ),
        );
        let mut line = format!("  sections: {}", tree.len());
        if let Some(modules) = try_json::<ModuleSet>(&run_dir.join("analyze/modules.json")) {
            line.push_str(&format!("  modules: {}", modules.modules.len()));
            if !modules.uncovered_after.is_empty() {
                line.push_str(&format!(
                    "  (uncovered after {} iterations: {:?})",
                    modules.iteration_count, modules.uncovered_after
                ));
            }
        }
        if let Some(breadth) =
            try_json::<BreadthReport>(&run_dir.join("verify/breadth_report.json"))
        {
            line.push_str(&format!("  key sections: {}", breadth.key_sections.len()));
        }
        push(&mut out, &line);
        push(&mut out, "");
    }

    if let Some(points) = try_json::<Vec<TaggedPoint>>(&run_dir.join("model/testing_points.json")) {
        let mut by_origin: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &points {
            *by_origin.entry(t.point.origin.as_str()).or_insert(0) += 1;
        }
        push(&mut out, &format!("testing points: {}", points.len()));
        for (origin, count) in by_origin {
            push(&mut out, &format!("  {origin:<18} {count}"));
        }
        push(&mut out, "");
    }

    let generated = try_json::<Vec<TestCase>>(&run_dir.join("gen_cases/testcases.json"));
    let supplementary = try_json::<Vec<TestCase>>(&run_dir.join("verify/supplementary_cases.json"));
    if let Some(cases) = &generated {
        let mut by_prefix: BTreeMap<String, usize> = BTreeMap::new();
        for case in cases {
            let prefix = case
                .case_id
                .split('-')
                .nth(1)
                .unwrap_or("other")
                .to_string();
            *by_prefix.entry(prefix).or_insert(0) += 1;
        }
        push(&mut out, "test cases:");
        for (prefix, count) in &by_prefix {
            push(&mut out, &format!("  {prefix:<18} {count}"));
        }
        let supplement_count = supplementary.as_ref().map(|s| s.len()).unwrap_or(0);
        push(
            &mut out,
            &format!("  {:<18} {}", "1R-supplement", supplement_count),
        );
        push(
            &mut out,
            &format!("  {:<18} {}", "total", cases.len() + supplement_count),
        );
        push(&mut out, "");
    }

    if let Some(breadth) = try_json::<BreadthReport>(&run_dir.join("verify/breadth_report.json")) {
        push(&mut out, "coverage:");
        push(
            &mut out,
            &format!(
                "  key section coverage: {:.2}% ({} of {})",
                breadth.coverage_rate * 100.0,
                breadth.covered.len(),
                breadth.key_sections.len()
            ),
        );
        if let Some(depth) = try_json::<DepthReport>(&run_dir.join("verify/depth_report.json")) {
            if !depth.entries.is_empty() {
                let n = depth.entries.len() as f64;
                let basic: f64 = depth
                    .entries
                    .values()
                    .map(|e| f64::from(e.basic_function_score))
                    .sum::<f64>()
                    / n;
                let boundary: f64 = depth
                    .entries
                    .values()
                    .map(|e| f64::from(e.boundary_case_score))
                    .sum::<f64>()
                    / n;
                push(
                    &mut out,
                    &format!("  depth scores: basic {basic:.1}, boundary {boundary:.1}"),
                );
            }
        }
        if let Some(external) =
            try_json::<BreadthReport>(&run_dir.join("verify/external_breadth.json"))
        {
            push(
                &mut out,
                &format!(
                    "  external suite coverage: {:.2}%",
                    external.coverage_rate * 100.0
                ),
            );
        }
        push(&mut out, "");
    }

    if let Some(forge) =
        try_json::<BTreeMap<String, CaseForgeRecord>>(&run_dir.join("forge/forge_manifest.json"))
    {
        let passed = forge.values().filter(|r| r.passed).count();
        let escalated = forge.values().filter(|r| r.escalated).count();
        let first_draft = forge.values().filter(|r| r.passed && r.rounds == 1).count();
        push(&mut out, "artifact generation:");
        push(
            &mut out,
            &format!(
                "  cases: {}  passed: {passed}  first-draft passes: {first_draft}  escalated: {escalated}",
                forge.len()
            ),
        );
        if let Some(resolutions) =
            try_json::<Vec<EscalationResolution>>(&run_dir.join("loop/escalations.json"))
        {
            if !resolutions.is_empty() {
                push(&mut out, "  escalations:");
                for r in &resolutions {
                    push(
                        &mut out,
                        &format!(
                            "    {}: {:?} -> {:?}{}",
                            r.case_id,
                            r.suspected_origin,
                            r.disposition,
                            if r.resolved { " (resolved)" } else { "" }
                        ),
                    );
                }
            }
        }
        push(&mut out, "");
    }

    if let Some(metrics) = try_json::<MetricsArtifact>(&run_dir.join("metrics/metric_report.json"))
    {
        push(&mut out, "metrics:");
        push(&mut out, "  task     VR        R         SIM");
        let row = |name: &str, r: &Option<crate::metrics::MetricReport>| -> String {
            match r {
                Some(m) => format!(
                    "  {:<8} {:>6.1}%  {:>6.1}%  {:>6.1}%",
                    name,
                    m.validation_rate * 100.0,
                    m.recall * 100.0,
                    m.similarity * 100.0
                ),
                None => format!("  {name:<8} (no reference artifacts)"),
            }
        };
        push(&mut out, &row("script", &metrics.script));
        push(&mut out, &row("config", &metrics.config));
        let passes = metrics.verdicts.values().filter(|v| **v).count();
        push(
            &mut out,
            &format!("  verdicts: {passes}/{} passing", metrics.verdicts.len()),
        );
    }

    Ok(out)
}
