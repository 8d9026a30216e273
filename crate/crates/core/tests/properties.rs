//! Property tests for the library's cross-cutting invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use protoforge::analysis::{Classification, SectionSummary, SummarySet};
use protoforge::gateway::{normalize_prompt, request_hash, PromptTemplate};
use protoforge::metrics::{
    edit_distance, line_recall, normalize_line, similarity, LineKind, LineSequence,
    NormalizationRules,
};
use protoforge::testcase::{compute_breadth, select_key_sections, CoverageConfig, TestCase};

fn units() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-e]{1,3}", 0..12)
}

proptest! {
    #[test]
    fn edit_distance_is_symmetric(a in units(), b in units()) {
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
    }

    #[test]
    fn edit_distance_triangle_inequality(a in units(), b in units(), c in units()) {
        let ab = edit_distance(&a, &b);
        let bc = edit_distance(&b, &c);
        let ac = edit_distance(&a, &c);
        prop_assert!(ac <= ab + bc, "d(a,c)={ac} > d(a,b)+d(b,c)={}", ab + bc);
    }

    #[test]
    fn similarity_and_recall_stay_in_unit_interval(a in units(), b in units()) {
        let sa = LineSequence::from_units(a);
        let sb = LineSequence::from_units(b);
        let sim = similarity(&sa, &sb).value;
        prop_assert!((0.0..=1.0).contains(&sim));
        let recall = line_recall(&sa, &sb).value;
        prop_assert!((0.0..=1.0).contains(&recall));
    }

    #[test]
    fn recall_monotone_when_output_gains_answer_lines(a in units(), b in units()) {
        let answer = LineSequence::from_units(a.clone());
        let before = line_recall(&answer, &LineSequence::from_units(b.clone())).value;
        let mut extended = b;
        extended.extend(a);
        let after = line_recall(&answer, &LineSequence::from_units(extended)).value;
        prop_assert!(after >= before);
    }

    #[test]
    fn normalization_is_idempotent(line in "[ !#a-z0-9./]{0,40}") {
        let rules = NormalizationRules::default();
        if let Some(once) = normalize_line(&line, LineKind::Config, &rules) {
            let twice = normalize_line(&once, LineKind::Config, &rules);
            prop_assert_eq!(Some(once), twice);
        }
    }

    #[test]
    fn netmask_rewrite_never_changes_similarity(prefix in 0u32..=32) {
        // a config and its netmask-rewritten form are the same sequence
        let rules = NormalizationRules::default();
        let mask = if prefix == 0 { 0u32 } else { u32::MAX << (32 - prefix) };
        let dotted = format!(
            "{}.{}.{}.{}",
            (mask >> 24) & 0xff,
            (mask >> 16) & 0xff,
            (mask >> 8) & 0xff,
            mask & 0xff
        );
        let cidr_text = format!("interface eth0\nip address 10.1.2.3/{prefix}\nexit\n");
        let mask_text = format!("interface eth0\nip address 10.1.2.3 {dotted}\nexit\n");
        let a = LineSequence::from_text(&cidr_text, LineKind::Config, &rules);
        let b = LineSequence::from_text(&mask_text, LineKind::Config, &rules);
        prop_assert_eq!(similarity(&a, &b).value, 1.0);
    }

    #[test]
    fn prompt_hash_ignores_whitespace(words in prop::collection::vec("[a-z]{1,6}", 1..10)) {
        let spaced = words.join(" ");
        let messy = words.join("  \n\t");
        prop_assert_eq!(request_hash(&spaced), request_hash(&messy));
        prop_assert_eq!(normalize_prompt(&spaced), normalize_prompt(&messy));
    }

    #[test]
    fn template_rendering_is_deterministic(value in "[a-zA-Z0-9 ]{0,20}") {
        let template = PromptTemplate::new("t", "before {x} after");
        let mut bindings = BTreeMap::new();
        bindings.insert("x".to_string(), value);
        let once = template.render(&bindings).unwrap();
        let twice = template.render(&bindings).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn breadth_never_decreases_with_more_cases(
        referenced in prop::collection::vec(0usize..6, 0..8),
        extra in prop::collection::vec(0usize..6, 0..4),
    ) {
        let key: Vec<(String, f64)> = (0..6).map(|i| (format!("{i}"), 60.0)).collect();
        let case = |i: usize, n: usize| TestCase {
            case_id: format!("TC-{i}"),
            title: "t".into(),
            objective: "o".into(),
            steps: vec!["s".into()],
            expected_results: vec!["r".into()],
            reference_sections: vec![format!("{n}")],
            topology: "t".into(),
            parameters: BTreeMap::new(),
        };
        let mut cases: Vec<TestCase> = referenced.iter().enumerate().map(|(i, n)| case(i, *n)).collect();
        let before = compute_breadth(&cases, &key).coverage_rate;
        cases.extend(extra.iter().enumerate().map(|(i, n)| case(100 + i, *n)));
        let after = compute_breadth(&cases, &key).coverage_rate;
        prop_assert!(after >= before);
    }

    #[test]
    fn key_selection_matches_filter_definition(
        importances in prop::collection::vec(0u32..=100, 1..20),
        threshold in 0.0f64..100.0,
    ) {
        let summaries: Vec<SectionSummary> = importances
            .iter()
            .enumerate()
            .map(|(i, imp)| SectionSummary {
                section_number: format!("{}", i + 1),
                summary: String::new(),
                references: Vec::new(),
                unresolved_references: Vec::new(),
                classification: Classification::Functional,
                test_importance: *imp as u8,
                empty_body: false,
            })
            .collect();
        let config = CoverageConfig {
            threshold,
            ..CoverageConfig::default()
        };
        let set = SummarySet { summaries };
        let selected = select_key_sections(&set, &config).unwrap();
        for s in &set.summaries {
            let expected = f64::from(s.test_importance) >= threshold;
            let present = selected.iter().any(|(n, _)| *n == s.section_number);
            prop_assert_eq!(expected, present);
        }
    }
}
