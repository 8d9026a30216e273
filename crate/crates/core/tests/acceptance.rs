//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line with the measured evidence. Run with `--nocapture` to see every
//! line:
//!
//! ```text
//! cargo test -p protoforge --test acceptance -- --nocapture
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{rngs::StdRng, Rng, SeedableRng};

use protoforge::analysis::{
    complete_modules, AgentCatalog, AgentKind, AnalysisOptions, Classification, ModuleSet,
    ProtocolModule, SectionSummary, SummarySet,
};
use protoforge::forge::{FixTemplates, TaskKnowledgeBase};
use protoforge::gateway::Gateway;
use protoforge::ingest::{
    build_section_tree, clean_document, extract_metadata, IngestRules, RawSpecDocument,
};
use protoforge::loops::{
    classify, escalate, run_small_loop, Disposition, EscalationDeps, FaultCategory, FaultRules,
    LoopConfig, SmallLoopDeps, SmallLoopOutcome,
};
use protoforge::metrics::{
    edit_distance, estimate_fix_time, normalize_line, similarity, speedup, LineKind, LineSequence,
    NormalizationRules,
};
use protoforge::pipeline::{run, RunConfig};
use protoforge::testbed::{
    EventKind, ExecutionLog, FaultProfile, InjectKind, InjectedFault, LogEvent, Testbed,
};
use protoforge::testcase::{compute_score, select_key_sections, CoverageConfig};
use protoforge::testkit::{fixture_tree, ClosureBackend};

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_1_rfc_section_counts() {
    let rules = IngestRules::default();
    let expectations = [
        ("rfc2453.txt", 36usize),
        ("rfc2328.txt", 154),
        ("rfc4271.txt", 81),
    ];
    let mut measured = Vec::new();
    for (file, expected) in expectations {
        let path = fixtures_dir().join("rfc").join(file);
        let raw = RawSpecDocument::from_file(&path).unwrap();
        let started = std::time::Instant::now();
        let cleaned = clean_document(&raw, &rules).unwrap();
        let metadata = extract_metadata(&cleaned, &rules).unwrap();
        let tree = build_section_tree(&metadata, &cleaned, &rules).unwrap();
        let elapsed = started.elapsed();
        assert!(
            elapsed.as_millis() < 1000,
            "{file}: parse took {elapsed:?}, budget is 1 s"
        );
        assert_eq!(tree.len(), expected, "{file}: section node count");
        measured.push(format!("{file} -> {} nodes in {elapsed:?}", tree.len()));
    }
    // spot checks on identity and structure
    let raw = RawSpecDocument::from_file(&fixtures_dir().join("rfc/rfc2453.txt")).unwrap();
    let cleaned = clean_document(&raw, &rules).unwrap();
    let metadata = extract_metadata(&cleaned, &rules).unwrap();
    assert_eq!(metadata.spec_number, "2453");
    println!(
        "acceptance criterion 1: PASS — exact section counts: {}",
        measured.join("; ")
    );
}

// ---------------------------------------------------------------- criterion 2

/// Independent full-matrix Levenshtein oracle, textbook recurrence.
fn dp_oracle(a: &[String], b: &[String]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = (table[i - 1][j] + 1)
                .min(table[i][j - 1] + 1)
                .min(table[i - 1][j - 1] + cost);
        }
    }
    table[a.len()][b.len()]
}

#[test]
fn criterion_2_metric_arithmetic_and_ned_oracle() {
    let fix = estimate_fix_time(9.10, 0.897, 0.724, 104.4).unwrap();
    assert!((fix - 12.07).abs() <= 0.05, "fix-time {fix}");
    let ratio = speedup(104.4, fix).unwrap();
    assert!((ratio - 8.65).abs() <= 0.02, "speedup {ratio}");

    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let alphabet = ["a", "b", "c", "d", "e", "f"];
    for case in 0..1000 {
        let len_a = rng.random_range(0..12);
        let len_b = rng.random_range(0..12);
        let a: Vec<String> = (0..len_a)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())].to_string())
            .collect();
        let b: Vec<String> = (0..len_b)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())].to_string())
            .collect();
        let fast = edit_distance(&a, &b);
        let oracle = dp_oracle(&a, &b);
        assert_eq!(
            fast, oracle,
            "case {case}: distance mismatch for {a:?} vs {b:?}"
        );
        let sim = similarity(
            &LineSequence::from_units(a.clone()),
            &LineSequence::from_units(b.clone()),
        );
        let denom = a.len().max(b.len());
        let oracle_sim = if denom == 0 {
            1.0
        } else {
            1.0 - oracle as f64 / denom as f64
        };
        assert_eq!(sim.value, oracle_sim, "case {case}: SIM mismatch");
        assert_eq!(sim.edit_distance, oracle);
    }
    println!(
        "acceptance criterion 2: PASS — fix-time {fix:.2} min, speedup {ratio:.2}x, 1000 randomized SIM/NED pairs match the DP oracle exactly"
    );
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_3_normalization_equivalence() {
    let rules = NormalizationRules::default();
    let netmask = normalize_line(
        "ip address 10.0.0.1 255.255.255.0",
        LineKind::Config,
        &rules,
    );
    let cidr = normalize_line("ip address 10.0.0.1/24", LineKind::Config, &rules);
    assert_eq!(netmask, cidr);
    assert_eq!(netmask.as_deref(), Some("ip address 10.0.0.1/24"));

    let config = "hostname dut1\ninterface eth0\nip address 192.168.10.1/28\n! enable routing\nip route 0.0.0.0/0 192.168.10.14\n";
    let rewritten = "hostname    dut1\ninterface eth0\nip address 192.168.10.1 255.255.255.240\n\nip route 0.0.0.0 0.0.0.0 192.168.10.14\n";
    let a = LineSequence::from_text(config, LineKind::Config, &rules);
    let b = LineSequence::from_text(rewritten, LineKind::Config, &rules);
    let sim = similarity(&a, &b);
    assert_eq!(
        sim.value, 1.0,
        "equivalence-rewritten config must score 1.0"
    );
    println!(
        "acceptance criterion 3: PASS — netmask and CIDR forms normalize identically; rewritten config scores SIM = 1.0"
    );
}

// ---------------------------------------------------------------- criterion 4

fn summaries_for(numbers: &[String]) -> SummarySet {
    SummarySet {
        summaries: numbers
            .iter()
            .map(|n| SectionSummary {
                section_number: n.clone(),
                summary: format!("summary of {n}"),
                references: Vec::new(),
                unresolved_references: Vec::new(),
                classification: Classification::Functional,
                test_importance: 60,
                empty_body: false,
            })
            .collect(),
    }
}

fn initial_modules(covered: &[String]) -> ModuleSet {
    ModuleSet {
        modules: vec![ProtocolModule {
            module_name: "m".into(),
            description: String::new(),
            assigned_agent: AgentKind::ProtocolSpecific,
            section_numbers: covered.to_vec(),
        }],
        iteration_count: 0,
        uncovered_after: BTreeSet::new(),
    }
}

fn supplement_json(sections: &[String]) -> String {
    let numbers = sections
        .iter()
        .map(|n| format!("\"{n}\""))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "{{\"modules\": [{{\"module_name\": \"m\", \"description\": \"\", \"assigned_agent\": \"protocol_specific\", \"section_numbers\": [{numbers}]}}]}}"
    )
}

fn parse_uncovered(prompt: &str) -> BTreeSet<String> {
    let block = prompt
        .split("Key information for the uncovered sections:")
        .nth(1)
        .and_then(|rest| rest.split("Current module formation result:").next())
        .unwrap_or_default();
    block
        .split("Section ")
        .skip(1)
        .filter_map(|part| part.split(' ').next())
        .map(|s| s.to_string())
        .collect()
}

#[test]
fn criterion_4_module_formation_loop() {
    let templates = protoforge::datafiles::default_templates();
    let catalog = AgentCatalog::default();
    let opts = AnalysisOptions::default();

    // (a) full coverage in one supplement round, through a recorded replay
    // transcript
    let numbers: Vec<String> = (1..=5).map(|i| i.to_string()).collect();
    let refs: Vec<&str> = numbers.iter().map(|s| s.as_str()).collect();
    let tree = fixture_tree(&refs);
    let summaries = summaries_for(&numbers);
    let transcript_dir = tempfile::tempdir().unwrap();
    let transcript = transcript_dir.path().join("t.jsonl");
    {
        let respond = {
            let all = numbers.clone();
            move |prompt: &str| {
                let mut uncovered: Vec<String> = parse_uncovered(prompt).into_iter().collect();
                if uncovered.is_empty() {
                    uncovered = all.clone();
                }
                supplement_json(&uncovered)
            }
        };
        let recorder = Gateway::record(
            Box::new(ClosureBackend::new(respond)),
            transcript.clone(),
            protoforge::gateway::Clock::Fixed("0".into()),
        );
        let result = complete_modules(
            &tree,
            &summaries,
            initial_modules(&numbers[..3]),
            &catalog,
            &recorder,
            &templates,
            &opts,
        )
        .unwrap();
        assert_eq!(result.iteration_count, 1);
    }
    let replayed = Gateway::replay(&transcript).unwrap();
    let result = complete_modules(
        &tree,
        &summaries,
        initial_modules(&numbers[..3]),
        &catalog,
        &replayed,
        &templates,
        &opts,
    )
    .unwrap();
    assert_eq!(result.iteration_count, 1, "(a) one supplement round");
    assert!(result.uncovered_after.is_empty());

    // (b) a never-covered section terminates at exactly 10 iterations,
    // flagged
    let numbers_b: Vec<String> = vec!["1".into(), "9".into()];
    let tree_b = fixture_tree(&["1", "9"]);
    let summaries_b = summaries_for(&numbers_b);
    let stubborn = Gateway::with_backend(Box::new(ClosureBackend::new(|_| {
        supplement_json(&["1".to_string()])
    })));
    let result_b = complete_modules(
        &tree_b,
        &summaries_b,
        initial_modules(&["1".to_string()]),
        &catalog,
        &stubborn,
        &templates,
        &opts,
    )
    .unwrap();
    assert_eq!(result_b.iteration_count, 10, "(b) cap at 10 iterations");
    assert_eq!(
        result_b.uncovered_after.iter().collect::<Vec<_>>(),
        vec!["9"],
        "(b) the never-covered section stays flagged"
    );

    // (c) uncovered-set monotonicity over 100 randomized transcript fixtures,
    // checked by inspecting the uncovered set each supplement prompt carries
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    for fixture in 0..100 {
        let n = rng.random_range(3..10usize);
        let numbers: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = numbers.iter().map(|s| s.as_str()).collect();
        let tree = fixture_tree(&refs);
        let summaries = summaries_for(&numbers);
        let initial_cover: Vec<String> = numbers
            .iter()
            .filter(|_| rng.random_range(0..100) < 50)
            .cloned()
            .collect();
        let initial_cover = if initial_cover.is_empty() {
            vec![numbers[0].clone()]
        } else {
            initial_cover
        };
        let seen: std::sync::Arc<std::sync::Mutex<Vec<BTreeSet<String>>>> = Default::default();
        let seen_in = seen.clone();
        let per_round_rng =
            std::sync::Mutex::new(StdRng::seed_from_u64(0xfeed_0000 + fixture as u64));
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(move |prompt: &str| {
            let uncovered = parse_uncovered(prompt);
            seen_in.lock().unwrap().push(uncovered.clone());
            let mut rng = per_round_rng.lock().unwrap();
            let mut add: Vec<String> = uncovered
                .iter()
                .filter(|_| rng.random_range(0..100) < 40)
                .cloned()
                .collect();
            if add.is_empty() {
                // a round that covers nothing new: re-assign a section that
                // may already be covered, keeping the reply schema-valid
                add.push("1".to_string());
            }
            supplement_json(&add)
        })));
        let result = complete_modules(
            &tree,
            &summaries,
            initial_modules(&initial_cover),
            &catalog,
            &gw,
            &templates,
            &opts,
        )
        .unwrap();
        let prompts = seen.lock().unwrap();
        for window in prompts.windows(2) {
            assert!(
                window[1].is_subset(&window[0]),
                "fixture {fixture}: uncovered set grew between rounds: {:?} -> {:?}",
                window[0],
                window[1]
            );
        }
        if let Some(last) = prompts.last() {
            assert!(
                result.uncovered_after.is_subset(last),
                "fixture {fixture}: final uncovered not a subset of the last prompt's set"
            );
        }
        assert!(result.iteration_count <= 10);
    }
    println!(
        "acceptance criterion 4: PASS — replay supplement round reports iteration_count = 1; never-covered section stops at 10 with the section flagged; monotonicity held on 100 randomized transcript fixtures"
    );
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn criterion_5_coverage_formulas_vs_oracle() {
    let classifications = [
        Classification::Functional,
        Classification::Descriptive,
        Classification::Appendix,
        Classification::Configuration,
    ];
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    for case in 0..1000 {
        let n = rng.random_range(1..30usize);
        let summaries: Vec<SectionSummary> = (0..n)
            .map(|i| SectionSummary {
                section_number: format!("{}", i + 1),
                summary: String::new(),
                references: Vec::new(),
                unresolved_references: Vec::new(),
                classification: classifications[rng.random_range(0..4)],
                test_importance: rng.random_range(0..=100u32) as u8,
                empty_body: false,
            })
            .collect();
        let mut config = CoverageConfig::default();
        for c in &classifications {
            config.weight_map.insert(
                c.as_str().to_string(),
                rng.random_range(0..=100u32) as f64 / 100.0,
            );
        }
        config.threshold = rng.random_range(0..=10000u32) as f64 / 100.0;
        let set = SummarySet { summaries };

        // brute-force oracle: recompute from first principles
        let mut expected = Vec::new();
        for s in &set.summaries {
            let w = config.weight_map[s.classification.as_str()];
            let score = s.test_importance as f64 * w;
            assert_eq!(compute_score(s, &config).unwrap(), score, "case {case}");
            if score >= config.threshold {
                expected.push((s.section_number.clone(), score));
            }
        }
        let got = select_key_sections(&set, &config).unwrap();
        assert_eq!(got, expected, "case {case}: selection mismatch");

        // threshold monotonicity: raising theta never enlarges the set
        let mut tighter = config.clone();
        tighter.threshold += rng.random_range(1..=2000u32) as f64 / 100.0;
        let smaller = select_key_sections(&set, &tighter).unwrap();
        let got_numbers: BTreeSet<&String> = got.iter().map(|(n, _)| n).collect();
        assert!(
            smaller.iter().all(|(n, _)| got_numbers.contains(n)),
            "case {case}: threshold monotonicity"
        );

        // weight monotonicity: raising one weight never shrinks the set
        let mut heavier = config.clone();
        let bump = classifications[rng.random_range(0..4)];
        let w = heavier.weight_map.get_mut(bump.as_str()).unwrap();
        *w = (*w + 0.3).min(1.0);
        let larger = select_key_sections(&set, &heavier).unwrap();
        let larger_numbers: BTreeSet<&String> = larger.iter().map(|(n, _)| n).collect();
        assert!(
            got.iter().all(|(n, _)| larger_numbers.contains(n)),
            "case {case}: weight monotonicity"
        );
    }
    println!(
        "acceptance criterion 5: PASS — 1000 randomized fixtures match the brute-force threshold oracle; threshold and weight monotonicity held"
    );
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_end_to_end_replay_run() {
    let config = RunConfig::load(&fixtures_dir().join("mini_run_config.json")).unwrap();
    let started = std::time::Instant::now();
    let dir_a = tempfile::tempdir().unwrap();
    run(&config, dir_a.path(), None).unwrap();
    let first = started.elapsed();
    let dir_b = tempfile::tempdir().unwrap();
    run(&config, dir_b.path(), None).unwrap();
    assert!(first.as_secs() < 30, "offline run took {first:?}");

    // byte-identical stage artifacts (manifest excluded: it carries timings)
    fn collect(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                collect(&path, base, out);
            } else {
                let rel = path
                    .strip_prefix(base)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                if rel != "manifest.json" {
                    out.insert(rel, std::fs::read(&path).unwrap());
                }
            }
        }
    }
    let mut bytes_a = BTreeMap::new();
    let mut bytes_b = BTreeMap::new();
    collect(dir_a.path(), dir_a.path(), &mut bytes_a);
    collect(dir_b.path(), dir_b.path(), &mut bytes_b);
    assert_eq!(
        bytes_a.keys().collect::<Vec<_>>(),
        bytes_b.keys().collect::<Vec<_>>()
    );
    for (file, content) in &bytes_a {
        assert_eq!(content, &bytes_b[file], "{file} differs across runs");
    }

    let modules: ModuleSet = serde_json::from_str(
        &std::fs::read_to_string(dir_a.path().join("analyze/modules.json")).unwrap(),
    )
    .unwrap();
    assert!(modules.modules.len() >= 3, "≥3 modules");
    let points: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir_a.path().join("model/testing_points.json")).unwrap(),
    )
    .unwrap();
    let point_count = points.as_array().unwrap().len();
    assert!(point_count >= 10, "≥10 testing points, got {point_count}");
    let cases: Vec<protoforge::testcase::TestCase> = serde_json::from_str(
        &std::fs::read_to_string(dir_a.path().join("verify/all_cases.json")).unwrap(),
    )
    .unwrap();
    assert!(cases.len() >= 10, "≥10 cases, got {}", cases.len());
    for case in &cases {
        assert!(!case.steps.is_empty() && !case.expected_results.is_empty());
        assert!(!case.reference_sections.is_empty());
    }
    let verification: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir_a.path().join("verify/verification.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(verification["rounds_used"], 1, "one refinement round");
    assert_eq!(
        verification["final_breadth"]["coverage_rate"]
            .as_f64()
            .unwrap(),
        1.0,
        "breadth = 100% on key sections after one round"
    );
    println!(
        "acceptance criterion 6: PASS — deterministic byte-identical replay run in {first:?}: {} modules, {point_count} points, {} cases, breadth 100% after 1 refinement round",
        modules.modules.len(),
        cases.len()
    );
}

// ---------------------------------------------------------------- criterion 7

/// Local drafting backend for profile-driven loop tests: the config uses an
/// address the profile rejects until a hint names the conflict.
fn profile_aware_backend() -> ClosureBackend {
    ClosureBackend::new(|prompt: &str| {
        if prompt.starts_with("Decompose a natural-language network test case") {
            return serde_json::json!({
                "script_intents": ["reserve a port", "send traffic", "check counters"],
                "config_intents": ["address the interface"],
                "topology_intents": ["connect p1 to eth0"],
            })
            .to_string();
        }
        if prompt.starts_with("Rewrite a network protocol test case") {
            return serde_json::json!({
                "title": "regenerated check",
                "objective": "simplified objective",
                "steps": ["do the exchange"],
                "expected_results": ["exchange holds"],
                "reference_sections": ["1"],
                "topology": "tester(p1) <-> dut(eth0)",
                "parameters": {},
            })
            .to_string();
        }
        if prompt.starts_with("Produce executable testing artifacts") {
            let address = if prompt.contains("injected address conflict") {
                "10.0.0.2/24"
            } else {
                "10.0.0.1/24"
            };
            let config =
                format!("hostname dut1\ninterface eth0\nip address {address}\nno shutdown\nexit\n");
            return serde_json::json!({
                "tester_script": protoforge::testkit::CLEAN_SCRIPT,
                "dut_config": config,
            })
            .to_string();
        }
        panic!("unexpected prompt: {}", &prompt[..prompt.len().min(80)]);
    })
}

#[test]
fn criterion_7_feedback_loops() {
    let templates = protoforge::datafiles::default_templates();
    let fault_rules = FaultRules::default();
    let fix_templates = FixTemplates::default();
    let cfg = LoopConfig::default();

    // (a) a round-2-fixable injected fault passes with rounds = 2
    let mut testbed = Testbed::with_defaults();
    testbed.profile = FaultProfile {
        injected: vec![InjectedFault {
            trigger: "ip address 10\\.0\\.0\\.1/24".to_string(),
            kind: InjectKind::RejectConfig,
            detail: "injected address conflict".to_string(),
        }],
    };
    let gateway = Gateway::with_backend(Box::new(profile_aware_backend()));
    let mut kb = TaskKnowledgeBase::minimal_for_tests();
    let case = protoforge::testkit::typo_case("TC-A-0001");
    let mut deps = SmallLoopDeps {
        kb: &mut kb,
        testbed: &testbed,
        gateway: &gateway,
        templates: &templates,
        fault_rules: &fault_rules,
        fix_templates: &fix_templates,
        max_repairs: 3,
    };
    let rounds_a = match run_small_loop(&case, &mut deps, &cfg).unwrap() {
        SmallLoopOutcome::Pass {
            rounds, attempt, ..
        } => {
            assert_eq!(rounds, 2, "(a) fixed in round 2");
            assert_eq!(attempt, 1);
            rounds
        }
        other => panic!("(a) expected a pass, got {other:?}"),
    };

    // (b) an unfixable injected fault escalates after exactly 3 attempts x 10
    // rounds
    let mut testbed_b = Testbed::with_defaults();
    testbed_b.profile = FaultProfile {
        injected: vec![InjectedFault {
            trigger: "hostname dut1".to_string(),
            kind: InjectKind::RejectConfig,
            detail: "injected permanent failure".to_string(),
        }],
    };
    let gateway_b = Gateway::with_backend(Box::new(profile_aware_backend()));
    let mut kb_b = TaskKnowledgeBase::minimal_for_tests();
    let case_b = protoforge::testkit::typo_case("TC-B-0001");
    let mut deps_b = SmallLoopDeps {
        kb: &mut kb_b,
        testbed: &testbed_b,
        gateway: &gateway_b,
        templates: &templates,
        fault_rules: &fault_rules,
        fix_templates: &fix_templates,
        max_repairs: 3,
    };
    let ticket = match run_small_loop(&case_b, &mut deps_b, &cfg).unwrap() {
        SmallLoopOutcome::Escalated(ticket, trace) => {
            assert_eq!(ticket.history.len(), 3, "(b) exactly 3 attempts");
            assert!(
                ticket.history.iter().all(|a| a.rounds == 10),
                "(b) 10 rounds each"
            );
            assert_eq!(trace.rounds.len(), 30, "(b) 30 executions");
            ticket
        }
        other => panic!("(b) expected escalation, got {other:?}"),
    };

    // (c) escalation with failing regeneration ends in manual review, and the
    // regeneration pass always happens first
    let regen_prompts = std::sync::Arc::new(std::sync::atomic::AtomicUsize::new(0));
    let counter = regen_prompts.clone();
    let counting_gateway =
        Gateway::with_backend(Box::new(ClosureBackend::new(move |prompt: &str| {
            if prompt.starts_with("Rewrite a network protocol test case") {
                counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            }
            let inner = profile_aware_backend();
            use protoforge::gateway::CompletionBackend;
            inner.complete(prompt).unwrap()
        })));
    let tree = fixture_tree(&["1"]);
    let mut kb_c = TaskKnowledgeBase::minimal_for_tests();
    let mut deps_c = SmallLoopDeps {
        kb: &mut kb_c,
        testbed: &testbed_b, // the permanent-failure profile also dooms regenerated drafts
        gateway: &counting_gateway,
        templates: &templates,
        fault_rules: &fault_rules,
        fix_templates: &fix_templates,
        max_repairs: 3,
    };
    let escalation = EscalationDeps {
        tree: &tree,
        original_case: &case_b,
    };
    match escalate(ticket, &escalation, &mut deps_c, &cfg).unwrap() {
        protoforge::loops::LargeLoopOutcome::ManualReview(final_ticket) => {
            assert_eq!(final_ticket.disposition, Disposition::ManualReview);
        }
        other => panic!("(c) expected manual review, got {other:?}"),
    }
    assert!(
        regen_prompts.load(std::sync::atomic::Ordering::SeqCst) >= 1,
        "(c) manual review never precedes a regeneration pass"
    );
    println!(
        "acceptance criterion 7: PASS — injected fault fixed at rounds = {rounds_a}; unfixable fault escalated after 3 attempts x 10 rounds; failing regeneration ended in manual review after ≥1 regeneration pass"
    );
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_8_fault_classification_labeled_fixture() {
    // 50-event log: a scripted mix of passes and hand-labeled failures
    let mut events = Vec::new();
    let mut labels: Vec<(usize, FaultCategory)> = Vec::new();
    let mut add = |kind: EventKind,
                   detail: &str,
                   label: Option<FaultCategory>,
                   events: &mut Vec<LogEvent>| {
        let index = events.len();
        events.push(LogEvent {
            kind,
            line_or_call: index + 1,
            detail: detail.to_string(),
        });
        if let Some(category) = label {
            labels.push((index, category));
        }
    };
    for i in 0..10 {
        add(
            EventKind::ConfigAccept,
            &format!("hostname dut{i}"),
            None,
            &mut events,
        );
    }
    add(
        EventKind::ConfigReject,
        "unknown command: ip addres 10.0.0.1/24",
        Some(FaultCategory::SyntaxError),
        &mut events,
    );
    add(
        EventKind::ConfigReject,
        "parse error near token area",
        Some(FaultCategory::SyntaxError),
        &mut events,
    );
    add(
        EventKind::ConfigReject,
        "invalid input: ip address banana",
        Some(FaultCategory::SyntaxError),
        &mut events,
    );
    add(
        EventKind::ConfigReject,
        "unsupported command on this platform: mpls ldp",
        Some(FaultCategory::UnsupportedCommand),
        &mut events,
    );
    add(
        EventKind::ConfigReject,
        "address overlaps with interface eth1",
        Some(FaultCategory::ConfigurationMismatch),
        &mut events,
    );
    add(
        EventKind::ConfigReject,
        "network statement outside process",
        Some(FaultCategory::ConfigurationMismatch),
        &mut events,
    );
    for i in 0..10 {
        add(
            EventKind::ApiCall,
            &format!("send_packets p1 {i}"),
            None,
            &mut events,
        );
    }
    add(
        EventKind::ApiError,
        "unsupported command: warp_core",
        Some(FaultCategory::UnsupportedCommand),
        &mut events,
    );
    add(
        EventKind::ApiError,
        "arity mismatch: reserve_port takes 1 argument(s), got 3",
        Some(FaultCategory::SyntaxError),
        &mut events,
    );
    add(
        EventKind::ApiError,
        "bad argument `q9` for send_packets.port",
        Some(FaultCategory::SyntaxError),
        &mut events,
    );
    add(
        EventKind::ApiError,
        "session lost while reading counters",
        Some(FaultCategory::Environment),
        &mut events,
    );
    add(
        EventKind::ApiError,
        "timeout contacting tester chassis",
        Some(FaultCategory::Environment),
        &mut events,
    );
    for i in 0..10 {
        add(
            EventKind::AssertionPass,
            &format!("expectation {i} held"),
            None,
            &mut events,
        );
    }
    add(
        EventKind::AssertionFail,
        "route 10.0.1.0/24 missing from table",
        Some(FaultCategory::AssertionFailure),
        &mut events,
    );
    add(
        EventKind::AssertionFail,
        "metric is 3, expected 2",
        Some(FaultCategory::AssertionFailure),
        &mut events,
    );
    add(
        EventKind::AssertionFail,
        "notification not received",
        Some(FaultCategory::AssertionFailure),
        &mut events,
    );
    for i in 0..6 {
        add(
            EventKind::ConfigAccept,
            &format!("interface eth{i}"),
            None,
            &mut events,
        );
    }
    let log = ExecutionLog { events };
    assert_eq!(log.events.len(), 50, "fixture is exactly 50 events");

    let reports = classify(&log, &FaultRules::default());
    assert_eq!(
        reports.len(),
        labels.len(),
        "every failure event maps to exactly one report"
    );
    let mut seen = BTreeSet::new();
    for report in &reports {
        for idx in &report.source_events {
            assert!(seen.insert(*idx), "event {idx} appears in two reports");
        }
    }
    for (report, (index, expected)) in reports.iter().zip(&labels) {
        assert_eq!(report.source_events, vec![*index]);
        assert_eq!(
            report.category, *expected,
            "event {index} ({}) misclassified",
            log.events[*index].detail
        );
    }
    println!(
        "acceptance criterion 8: PASS — 50-event labeled fixture: {} failure events, categories match hand labels 100%",
        labels.len()
    );
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn criterion_9_live_scale_results_declared_out_of_reach() {
    // The published live-model scale (thousands of generated cases, live
    // coverage and validation percentages, bug-coverage counts, expert
    // scores) depends on proprietary models, industrial suites, and hardware
    // testbeds. This artifact replaces them with the deterministic property
    // suites in this file plus an optional live smoke run, which must be
    // documented in the README and must not run in CI.
    let readme =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md"))
            .expect("README.md present at the workspace root");
    assert!(
        readme.contains("PROTOFORGE_ENDPOINT"),
        "README documents the live-backend configuration"
    );
    assert!(
        readme.to_lowercase().contains("live smoke"),
        "README documents the optional live smoke run"
    );
    assert!(
        readme.contains("rfc2453"),
        "README points the live smoke at the bundled RIPv2 document"
    );
    println!(
        "acceptance criterion 9: PASS — live-scale results are declared not reproducible at desk scale; replacement property suites run here and the optional live smoke is documented in the README (non-CI)"
    );
}
