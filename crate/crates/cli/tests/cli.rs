//! End-to-end checks of the `longtail` binary over the repo fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use longtail_core::dataset::{parse_jsonl, GenerationMethod};

static DIR_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .unwrap()
        .to_path_buf()
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "longtail-cli-{}-{tag}-{}",
        std::process::id(),
        DIR_COUNTER.fetch_add(1, Ordering::SeqCst)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn longtail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longtail"))
        .current_dir(workspace_root())
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

#[test]
fn lint_accepts_the_corpus_and_rejects_the_negative_corpus() {
    let good = longtail(&["rules", "lint", "fixtures/rules.txt"]);
    assert_ok(&good);
    assert!(String::from_utf8_lossy(&good.stdout).contains("5 rules, 0 invalid"));

    let bad = longtail(&["rules", "lint", "fixtures/rules_negative.txt"]);
    assert_eq!(bad.status.code(), Some(1), "invalid corpus is a user error");
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("min_variables"));
    assert!(stdout.contains("linear_chain"));
}

#[test]
fn lint_accepts_the_json_corpus_form() {
    let output = longtail(&["rules", "lint", "fixtures/rules.sample.json"]);
    assert_ok(&output);
    assert!(String::from_utf8_lossy(&output.stdout).contains("branch_office_json: ok"));
}

#[test]
fn probe_accepts_an_external_labels_file() {
    let out = scratch_dir("probe-labels");
    let run = longtail(&[
        "search",
        "--direction",
        "tail",
        "--seed",
        "15",
        "--rule-filter",
        "branch_office",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&run);
    let records =
        parse_jsonl(&std::fs::read_to_string(out.join("lint.jsonl")).unwrap()).unwrap();
    assert!(records.len() >= 2);
    // Hand-label: flag one record's data type so it gets excluded, and
    // split the rest between head/tail so aggregation has both sides.
    let mut labels = serde_json::Map::new();
    for (i, record) in records.iter().enumerate() {
        labels.insert(
            record.record_id.clone(),
            serde_json::json!({"correct": i % 2 == 0, "data_type_ok": i != 0}),
        );
    }
    // The probe needs a head partition too; reuse the tail output as a
    // second head run.
    let head_out = scratch_dir("probe-labels-head");
    let head_run = longtail(&[
        "search",
        "--direction",
        "head",
        "--seed",
        "15",
        "--rule-filter",
        "branch_office",
        "--out",
        head_out.to_str().unwrap(),
    ]);
    assert_ok(&head_run);
    let head_records =
        parse_jsonl(&std::fs::read_to_string(head_out.join("lint.jsonl")).unwrap()).unwrap();
    for record in &head_records {
        labels.insert(
            record.record_id.clone(),
            serde_json::json!({"correct": true, "data_type_ok": true}),
        );
    }
    let labels_path = out.join("labels.json");
    std::fs::write(&labels_path, serde_json::to_string_pretty(&labels).unwrap()).unwrap();

    let probe_out = scratch_dir("probe-labels-out");
    let output = longtail(&[
        "probe",
        "--records",
        out.join("lint.jsonl").to_str().unwrap(),
        head_out.join("lint.jsonl").to_str().unwrap(),
        "--labels",
        labels_path.to_str().unwrap(),
        "--out",
        probe_out.to_str().unwrap(),
    ]);
    assert_ok(&output);
    assert!(String::from_utf8_lossy(&output.stderr).contains("1 excluded"));
    assert!(probe_out.join("probe_report.json").exists());
}

#[test]
fn plan_prints_the_chain_order() {
    let output = longtail(&["rules", "plan", "allergen_dish"]);
    assert_ok(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    let positions: Vec<usize> = ["1. X", "2. A", "3. Z", "4. B"]
        .iter()
        .map(|needle| stdout.find(needle).unwrap_or_else(|| panic!("missing {needle}")))
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn expand_prints_prompts() {
    let output = longtail(&[
        "rules",
        "expand",
        "instrument_bag",
        "--k",
        "5",
        "--reply",
        "Cello Case, Gig Bag",
    ]);
    // instrument_bag has no generic Object/Person variable -> user error.
    assert_eq!(output.status.code(), Some(1));

    let rule_file = scratch_dir("expand").join("generic.txt");
    std::fs::write(
        &rule_file,
        "id: operate\ndomain: outcome_effect\nprinciple: mutual_exclusivity\nsubject: A\n\
         rule: is_of_age(Person A, Age X) & requires_a_minimal_age_of(Object B, Age Y) & is_smaller_than(Age X, Age Y) -> cannot_operate(Person A, Object B)\n",
    )
    .unwrap();
    let output = longtail(&[
        "rules",
        "expand",
        "operate",
        "--k",
        "10",
        "--rules",
        rule_file.to_str().unwrap(),
    ]);
    assert_ok(&output);
    assert!(String::from_utf8_lossy(&output.stdout)
        .contains("List 10 subcategories of object that B could be that also make the rule true."));

    let output = longtail(&[
        "rules",
        "expand",
        "operate",
        "--specialize",
        "Vehicle",
        "--rules",
        rule_file.to_str().unwrap(),
    ]);
    assert_ok(&output);
    assert!(String::from_utf8_lossy(&output.stdout).contains("[mask](Person A, Vehicle B)"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let out_a = scratch_dir("det-a");
    let out_b = scratch_dir("det-b");
    for out in [&out_a, &out_b] {
        let output = longtail(&[
            "search",
            "--direction",
            "tail",
            "--seed",
            "12",
            "--rule-filter",
            "branch_office",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_ok(&output);
    }
    for file in ["lint.jsonl", "trace.jsonl", "manifest.json"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn search_then_analyze_then_probe() {
    let head = scratch_dir("head");
    let tail = scratch_dir("tail");
    for (dir, direction) in [(&head, "head"), (&tail, "tail")] {
        let output = longtail(&[
            "search",
            "--direction",
            direction,
            "--seed",
            "4",
            "--rule-filter",
            "allergen_dish",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_ok(&output);
    }
    let head_records = head.join("lint.jsonl");
    let tail_records = tail.join("lint.jsonl");
    let records = parse_jsonl(&std::fs::read_to_string(&tail_records).unwrap()).unwrap();
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r.method == GenerationMethod::BeamSearch));

    let analysis = scratch_dir("analysis");
    let output = longtail(&[
        "analyze",
        "delta",
        "--head",
        head_records.to_str().unwrap(),
        "--tail",
        tail_records.to_str().unwrap(),
        "--out",
        analysis.to_str().unwrap(),
    ]);
    assert_ok(&output);
    let csv = std::fs::read_to_string(analysis.join("delta.csv")).unwrap();
    assert!(csv.starts_with("rule_id,mean_head,mean_tail,delta,n_head,n_tail"));
    assert!(csv.contains("allergen_dish"));

    let output = longtail(&[
        "analyze",
        "hist",
        "--records",
        tail_records.to_str().unwrap(),
        "--bins",
        "8",
        "--tag",
        "tail",
        "--out",
        analysis.to_str().unwrap(),
    ]);
    assert_ok(&output);
    assert!(analysis.join("hist_tail.csv").exists());

    let probe_out = scratch_dir("probe");
    let output = longtail(&[
        "probe",
        "--records",
        head_records.to_str().unwrap(),
        tail_records.to_str().unwrap(),
        "--out",
        probe_out.to_str().unwrap(),
        "--seed",
        "4",
    ]);
    assert_ok(&output);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(probe_out.join("probe_report.json")).unwrap())
            .unwrap();
    assert!(report["total"]["head"]["n"].as_u64().unwrap() > 0);
    let table = String::from_utf8_lossy(&output.stdout);
    assert!(table.contains("Pos"));
    assert!(table.contains("Total"));
}

#[test]
fn baseline_emits_instruction_only_records() {
    let out = scratch_dir("baseline");
    let output = longtail(&[
        "baseline",
        "--suffix",
        "3",
        "--n",
        "12",
        "--rule-filter",
        "branch_office",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&output);
    let records = parse_jsonl(&std::fs::read_to_string(out.join("lint.jsonl")).unwrap()).unwrap();
    assert!(!records.is_empty());
    assert!(records
        .iter()
        .all(|r| r.method == GenerationMethod::InstructionOnly && r.suffix_id == Some(3)));

    let posthoc_out = scratch_dir("posthoc");
    let output = longtail(&[
        "ablate",
        "posthoc",
        "--records",
        out.join("lint.jsonl").to_str().unwrap(),
        "--out",
        posthoc_out.to_str().unwrap(),
    ]);
    assert_ok(&output);
    assert!(posthoc_out.join("posthoc_head.jsonl").exists());
    assert!(posthoc_out.join("posthoc_tail.jsonl").exists());
    assert!(posthoc_out.join("delta.csv").exists());
}

#[test]
fn ablate_variants_run_and_mark_the_manifest() {
    let out = scratch_dir("ablate");
    let output = longtail(&[
        "ablate",
        "no-reranker",
        "--direction",
        "tail",
        "--seed",
        "6",
        "--rule-filter",
        "branch_office",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&output);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["command"].as_str().unwrap().contains("no-reranker"));
    assert_eq!(manifest["search"]["rerank_mode"], "uniform_sample");
    assert_eq!(manifest["completed"], true);

    let out = scratch_dir("ablate-nc");
    let output = longtail(&[
        "ablate",
        "no-critic",
        "--direction",
        "tail",
        "--seed",
        "6",
        "--rule-filter",
        "branch_office",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&output);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["search"]["critic_enabled"], false);
}

#[test]
fn stats_writes_csv() {
    let out = scratch_dir("stats-run");
    let run = longtail(&[
        "search",
        "--direction",
        "tail",
        "--seed",
        "2",
        "--rule-filter",
        "vanished_plant",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&run);
    let output = longtail(&[
        "stats",
        "--records",
        out.join("lint.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ok(&output);
    let csv = std::fs::read_to_string(out.join("stats.csv")).unwrap();
    assert!(csv.starts_with("domain,rules,head,tail"));
    assert!(csv.contains("Temporal,1,0,"));
}

#[test]
fn unreachable_backend_exits_two() {
    let out = scratch_dir("backend-fail");
    let output = longtail(&[
        "search",
        "--direction",
        "tail",
        "--rule-filter",
        "branch_office",
        "--backend-role",
        "knowledge=http://127.0.0.1:9,none",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2), "backend failure must exit 2");
    // Partial outputs still flushed, manifest notes incompleteness.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["completed"], false);
}

#[test]
fn unknown_rule_filter_exits_one() {
    let output = longtail(&["search", "--direction", "tail", "--rule-filter", "nope"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn config_file_drives_the_run() {
    let dir = scratch_dir("config");
    let root = workspace_root();
    let config = serde_json::json!({
        "rules": root.join("fixtures/rules.txt"),
        "seed": 21,
        "out": dir.join("out"),
        "search": {"values_per_call": 10, "keep_cap": 40},
        "backends": {
            "knowledge": {"kind": "synthetic", "world": root.join("fixtures/world.json"), "distractor_rate": 0.2},
            "critic": {"kind": "synthetic", "world": root.join("fixtures/world.json")},
            "scorer": {"kind": "synthetic", "world": root.join("fixtures/world.json")},
            "responder": {"kind": "scripted", "default_answer": "No"}
        }
    });
    let config_path = dir.join("run.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let output = longtail(&[
        "search",
        "--direction",
        "tail",
        "--rule-filter",
        "instrument_bag",
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert_ok(&output);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("out/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 21);
    assert_eq!(manifest["search"]["values_per_call"], 10);
    assert_eq!(manifest["search"]["keep_cap"], 40);
}

#[test]
fn compare_needs_a_second_scorer_role() {
    let dir = scratch_dir("compare");
    let root = workspace_root();
    let run = longtail(&[
        "search",
        "--direction",
        "tail",
        "--seed",
        "8",
        "--rule-filter",
        "branch_office",
        "--out",
        dir.join("run").to_str().unwrap(),
    ]);
    assert_ok(&run);
    let records = dir.join("run/lint.jsonl");

    // Without a scorer_b role: user error.
    let missing = longtail(&[
        "analyze",
        "compare",
        "--records",
        records.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(1));

    // With scorer_b backed by the same world, ranks agree perfectly.
    let config = serde_json::json!({
        "rules": root.join("fixtures/rules.txt"),
        "out": dir,
        "backends": {
            "knowledge": {"kind": "synthetic", "world": root.join("fixtures/world.json")},
            "critic": {"kind": "synthetic", "world": root.join("fixtures/world.json")},
            "scorer": {"kind": "synthetic", "world": root.join("fixtures/world.json")},
            "scorer_b": {"kind": "synthetic", "world": root.join("fixtures/world.json")}
        }
    });
    let config_path = dir.join("compare.json");
    std::fs::write(&config_path, serde_json::to_string(&config).unwrap()).unwrap();
    let output = longtail(&[
        "analyze",
        "compare",
        "--records",
        records.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert_ok(&output);
    assert!(String::from_utf8_lossy(&output.stdout).contains("rank correlation"));
    assert!(String::from_utf8_lossy(&output.stdout).contains("1.0000"));
    assert!(dir.join("compare.csv").exists());
}
