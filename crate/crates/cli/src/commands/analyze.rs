//! `analyze delta|hist|compare` and `ablate posthoc` — distribution
//! reports over emitted records.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use longtail_core::analysis::{
    compare_scorers, compute_delta, delta_csv, histogram_csv, histogram_export, summarize_method,
    DistributionReport, DEFAULT_SEPARATION_THRESHOLD,
};
use longtail_core::baseline::posthoc_rerank;
use longtail_core::dataset::{to_jsonl, Distribution, StatementRecord};
use longtail_core::gateway::ScoreStatistic;

use crate::backends::build_scorer;
use crate::config::RunConfig;
use crate::io::{load_records, write_text};

fn scores_by_rule(records: &[StatementRecord]) -> BTreeMap<String, Vec<f64>> {
    let mut map: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for record in records {
        if let Some(score) = record.score_value() {
            map.entry(record.rule_id.clone()).or_default().push(score);
        }
    }
    map
}

fn per_rule_reports(
    head: &[StatementRecord],
    tail: &[StatementRecord],
    statistic: ScoreStatistic,
) -> Result<Vec<DistributionReport>> {
    let head_by_rule = scores_by_rule(head);
    let tail_by_rule = scores_by_rule(tail);
    let mut reports = Vec::new();
    for (rule_id, head_scores) in &head_by_rule {
        let Some(tail_scores) = tail_by_rule.get(rule_id) else {
            eprintln!("~ {rule_id}: no tail records, skipped");
            continue;
        };
        reports.push(compute_delta(rule_id, statistic, head_scores, tail_scores)?);
    }
    if reports.is_empty() {
        bail!("no rule appears in both head and tail records");
    }
    Ok(reports)
}

pub fn delta(
    head_paths: &[PathBuf],
    tail_paths: &[PathBuf],
    threshold: Option<f64>,
    out: &Path,
) -> Result<()> {
    let head = load_records(head_paths)?;
    let tail = load_records(tail_paths)?;
    let statistic = head
        .first()
        .map(|r| r.score_statistic)
        .unwrap_or(ScoreStatistic::Sum);
    let threshold = threshold.unwrap_or(DEFAULT_SEPARATION_THRESHOLD);
    let reports = per_rule_reports(&head, &tail, statistic)?;
    write_text(&out.join("delta.csv"), &delta_csv(&reports))?;
    let mean = summarize_method(&reports)?;
    for report in &reports {
        let mark = if report.separated(threshold) {
            "separated"
        } else {
            "weak"
        };
        println!(
            "{}: delta {:.4} (head {:.4}, tail {:.4}; n {}/{}) [{mark}]",
            report.rule_id, report.delta, report.mean_head, report.mean_tail, report.n_head,
            report.n_tail
        );
    }
    println!(
        "mean delta over {} rules: {:.4} (threshold {threshold})",
        reports.len(),
        mean
    );
    Ok(())
}

pub fn hist(records_paths: &[PathBuf], bins: usize, tag: &str, out: &Path) -> Result<()> {
    let records = load_records(records_paths)?;
    let scores: Vec<f64> = records.iter().filter_map(|r| r.score_value()).collect();
    let histogram = histogram_export(&scores, bins)?;
    let path = out.join(format!("hist_{tag}.csv"));
    write_text(&path, &histogram_csv(&histogram))?;
    println!("{} scores into {} bins -> {}", scores.len(), bins, path.display());
    Ok(())
}

pub fn compare(config: &RunConfig, records_paths: &[PathBuf], out: &Path) -> Result<()> {
    let records = load_records(records_paths)?;
    let statements: Vec<String> = records.iter().map(|r| r.statement_text()).collect();
    if statements.is_empty() {
        bail!("no records to compare");
    }
    let statistic = records[0].score_statistic;
    let mut scorer_a = build_scorer(config, "scorer")?;
    let mut scorer_b = build_scorer(config, "scorer_b")?;
    let comparison = compare_scorers(&statements, statistic, &mut *scorer_a, &mut *scorer_b)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut csv = String::from("score_a,score_b\n");
    for (a, b) in &comparison.pairs {
        csv.push_str(&format!("{a},{b}\n"));
    }
    write_text(&out.join("compare.csv"), &csv)?;
    println!(
        "rank correlation over {} statements: {:.4}",
        comparison.pairs.len(),
        comparison.rank_correlation
    );
    Ok(())
}

/// `ablate posthoc` — a single global rerank over finished records, no
/// per-variable structure.
pub fn posthoc(records_paths: &[PathBuf], keep_fraction: f64, out: &Path) -> Result<()> {
    let records = load_records(records_paths)?;
    if records.is_empty() {
        bail!("no records to rerank");
    }
    let statistic = records[0].score_statistic;
    let tail = posthoc_rerank(&records, Distribution::Tail, keep_fraction);
    let head = posthoc_rerank(&records, Distribution::Head, keep_fraction);
    write_text(&out.join("posthoc_tail.jsonl"), &to_jsonl(&tail))?;
    write_text(&out.join("posthoc_head.jsonl"), &to_jsonl(&head))?;
    let reports = per_rule_reports(&head, &tail, statistic)?;
    write_text(&out.join("delta.csv"), &delta_csv(&reports))?;
    println!(
        "post-hoc rerank kept {}/{} per side; mean delta {:.4}",
        tail.len(),
        records.len(),
        summarize_method(&reports)?
    );
    Ok(())
}
