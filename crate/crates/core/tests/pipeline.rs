//! End-to-end scenarios over the shipped fixtures: corpus hygiene,
//! reverse planning, probe and baseline plumbing, and failure paths.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{head_tail_configs, rule, rules, run_rule, world, BackendTuning};
use longtail_core::analysis::{compute_delta, summarize_method};
use longtail_core::baseline::{build_instruction_prompt, parse_tuple_reply, posthoc_rerank};
use longtail_core::dataset::{
    dataset_stats, emit_records, parse_jsonl, to_jsonl, Distribution, EmitContext,
    GenerationMethod, StatementLabel,
};
use longtail_core::gateway::scripted::ScriptedResponder;
use longtail_core::gateway::synthetic::{
    enumerate_satisfying_bindings, label_bindings, SyntheticScorer, SyntheticTupleGenerator,
};
use longtail_core::gateway::{GenerationRequest, KnowledgeSource, ScoreStatistic};
use longtail_core::probe::{build_probe_set, render_templates, run_probe, ProbeShots, ShotShuffle};
use longtail_core::rule::{
    parse_rule_file, plan_search_order, validate_rule, PlanDirection, Rule,
};
use longtail_core::search::{Beam, SearchConfig};

#[test]
fn shipped_corpus_validates_clean() {
    for rule in rules() {
        let report = validate_rule(&rule);
        assert!(
            report.ok,
            "rule {} unexpectedly invalid: {:?}",
            rule.id, report.violations
        );
    }
}

#[test]
fn negative_corpus_trips_each_check() {
    let negatives = parse_rule_file(common::NEGATIVE_RULES_TXT).expect("negative corpus parses");
    let expected: BTreeMap<&str, &str> = BTreeMap::from([
        ("neg_min_variables", "min_variables"),
        ("neg_linear_chain", "linear_chain"),
        ("neg_conclusion_args", "conclusion_args_in_premise"),
        ("neg_tautology", "tautology"),
        ("neg_templates", "templates_present"),
    ]);
    assert_eq!(negatives.len(), expected.len());
    for rule in &negatives {
        let check = expected[rule.id.as_str()];
        let report = validate_rule(rule);
        assert!(!report.ok, "{} should be invalid", rule.id);
        assert!(
            report.violations.iter().any(|v| v.check == check),
            "{} should trip {check}, got {:?}",
            rule.id,
            report.violations
        );
    }
}

#[test]
fn plans_satisfy_dependencies_in_both_directions() {
    for rule in rules() {
        for direction in [
            PlanDirection::ForwardFromSubject,
            PlanDirection::ReverseFromConclusion,
        ] {
            let plan = plan_search_order(&rule, direction).unwrap();
            assert!(plan.dependencies_hold(), "{} {:?}", rule.id, direction);
            assert_eq!(plan.steps.len(), rule.variables.len());
        }
    }
}

#[test]
fn reverse_search_stays_world_sound() {
    let mut rule = rule("branch_office");
    rule.reverse_search = true;
    let (_, tail_cfg) = head_tail_configs(17);
    let (outcome, records) = run_rule(&rule, &tail_cfg, BackendTuning::default());
    assert!(!outcome.beams.is_empty());
    let world = world();
    let oracle: BTreeSet<BTreeMap<String, String>> =
        enumerate_satisfying_bindings(&world, &rule).into_iter().collect();
    for beam in &outcome.beams {
        assert!(oracle.contains(&beam.bindings), "unsound: {:?}", beam.bindings);
    }
    assert_eq!(outcome.beams.len(), records.len());
}

#[test]
fn completed_beams_have_distinct_bindings() {
    let rule = rule("allergen_dish");
    let (_, tail_cfg) = head_tail_configs(5);
    let (outcome, _) = run_rule(&rule, &tail_cfg, BackendTuning::default());
    let distinct: BTreeSet<String> = outcome
        .beams
        .iter()
        .map(|b| {
            b.bindings
                .iter()
                .map(|(k, v)| format!("{k}={}", longtail_core::gateway::normalize(v)))
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect();
    assert_eq!(distinct.len(), outcome.beams.len());
}

#[test]
fn search_dying_out_reports_a_diagnostic_not_an_error() {
    let rule = longtail_core::rule::parse_rule(
        "haunts(Person X, Ghost A) & befriends(Ghost A, Spirit B) -> channels(Person X, Spirit B)",
    )
    .unwrap();
    let (_, tail_cfg) = head_tail_configs(3);
    let (outcome, records) = run_rule(&rule, &tail_cfg, BackendTuning::default());
    assert!(outcome.beams.is_empty());
    assert!(records.is_empty());
    assert!(
        outcome.diagnostics.iter().any(|d| d.contains("no beams survived")),
        "missing diagnostic: {:?}",
        outcome.diagnostics
    );
}

#[test]
fn probe_end_to_end_with_world_oracle_labels() {
    let rule = rule("instrument_bag");
    let (head_cfg, tail_cfg) = head_tail_configs(29);
    let tuning = BackendTuning::default();
    let (_, mut records) = run_rule(&rule, &head_cfg, tuning);
    records.extend(run_rule(&rule, &tail_cfg, tuning).1);

    let world = world();
    let labels: BTreeMap<String, StatementLabel> = records
        .iter()
        .map(|r| (r.record_id.clone(), label_bindings(&world, &rule, &r.bindings)))
        .collect();
    let probe_set = build_probe_set(&records, &labels).unwrap();
    assert!(!probe_set.is_empty());
    // noise=0 search output is sound, so every admitted statement
    // carries the entailment gold.
    assert!(probe_set.iter().all(|s| s.gold_entailment));

    // A responder scripted to the gold answers everything right.
    let mut responder = ScriptedResponder::new("No");
    for statement in &probe_set {
        for item in render_templates(&statement.record, statement.gold_entailment).unwrap() {
            responder.set(&item.question, &item.gold);
        }
    }
    let report = run_probe(
        &probe_set,
        &mut responder,
        &ProbeShots::default(),
        13,
        ShotShuffle::PerQuery,
    )
    .unwrap();
    assert_eq!(report.total.head.acc_all, 1.0);
    assert_eq!(report.total.tail.acc_all, 1.0);
    assert_eq!(report.total.delta_rel, Some(0.0));
    assert_eq!(responder.calls, probe_set.len() * 13);
}

#[test]
fn baseline_tuples_flow_through_the_same_record_path() {
    let rule = rule("allergen_dish");
    let world = world();
    let prompt = build_instruction_prompt(&rule, 40, Some(1)).unwrap();
    assert!(prompt.body.ends_with("Use less frequent terms of A and B and Z."));

    let mut generator = SyntheticTupleGenerator::new(world.clone(), rule.clone(), 77);
    let mut request = GenerationRequest::new(prompt.body.clone());
    request.n_values = 40;
    let reply = generator.complete(&request).unwrap();
    let parsed = parse_tuple_reply(&reply, &rule);
    assert!(!parsed.bindings.is_empty());
    assert!(parsed.residue.is_empty());

    let beams: Vec<Beam> = parsed
        .bindings
        .iter()
        .map(|binding| {
            let mut full = binding.clone();
            full.insert(rule.subject_symbol.clone(), rule.subject_placeholder());
            Beam::with_bindings(full)
        })
        .collect();
    let mut scorer = SyntheticScorer::new(world.clone());
    let ctx = EmitContext {
        method: Some(GenerationMethod::InstructionOnly),
        suffix_id: prompt.longtail_suffix_id,
        seed: 77,
        statistic: ScoreStatistic::Sum,
        ..EmitContext::default()
    };
    let records = emit_records(&rule, &beams, Distribution::Tail, &mut scorer, &ctx).unwrap();
    assert_eq!(records.len(), beams.len());
    assert!(records
        .iter()
        .all(|r| r.method == GenerationMethod::InstructionOnly && r.suffix_id == Some(1)));

    // Every tuple the generator produced satisfies the world.
    for record in &records {
        let label = label_bindings(&world, &rule, &record.bindings);
        assert!(label.correct && label.data_type_ok);
    }

    // Post-hoc reranking completes and yields a delta report.
    let tail = posthoc_rerank(&records, Distribution::Tail, 0.75);
    let head = posthoc_rerank(&records, Distribution::Head, 0.75);
    let tail_scores: Vec<f64> = tail.iter().filter_map(|r| r.score_value()).collect();
    let head_scores: Vec<f64> = head.iter().filter_map(|r| r.score_value()).collect();
    let report = compute_delta(&rule.id, ScoreStatistic::Sum, &head_scores, &tail_scores).unwrap();
    assert!(report.delta >= 0.0);
    assert!(summarize_method(&[report]).is_ok());
}

#[test]
fn jsonl_round_trip_over_a_real_run() {
    let rule = rule("vanished_plant");
    let (_, tail_cfg) = head_tail_configs(61);
    let (_, records) = run_rule(&rule, &tail_cfg, BackendTuning::default());
    assert!(!records.is_empty());
    let text = to_jsonl(&records);
    let back = parse_jsonl(&text).unwrap();
    assert_eq!(records, back);
    let stats = dataset_stats(&records);
    assert_eq!(stats.total.tail, records.len());
    assert_eq!(stats.total.head, 0);
}

#[test]
fn head_and_tail_runs_disagree_on_kept_values() {
    let rule = rule("allergen_dish");
    let (head_cfg, tail_cfg) = head_tail_configs(47);
    let tuning = BackendTuning::default();
    let (head_outcome, _) = run_rule(&rule, &head_cfg, tuning);
    let (tail_outcome, _) = run_rule(&rule, &tail_cfg, tuning);
    let values = |beams: &[Beam]| -> BTreeSet<String> {
        beams.iter().map(|b| b.bindings["B"].clone()).collect()
    };
    let head_values = values(&head_outcome.beams);
    let tail_values = values(&tail_outcome.beams);
    assert_ne!(head_values, tail_values, "directions must select different ends");
}

#[test]
fn template_warning_rules_still_run() {
    // A compatibility rule whose conclusion verb looks negative only
    // warns; the search itself proceeds.
    let mut rule: Rule = rule("branch_office");
    rule.principle = longtail_core::rule::Principle::MutualExclusivity;
    let report = validate_rule(&rule);
    assert!(report.ok);
    assert!(!report.warnings.is_empty());
    let (_, tail_cfg) = head_tail_configs(2);
    let cfg = SearchConfig {
        calls_per_variable: 2,
        ..tail_cfg
    };
    let (outcome, _) = run_rule(&rule, &cfg, BackendTuning::default());
    assert!(!outcome.beams.is_empty());
}
