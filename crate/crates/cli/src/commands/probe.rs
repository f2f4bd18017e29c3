//! `probe` — the 13-template entailment evaluation over emitted
//! records, with strict scoring and the head-to-tail relative drop.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use longtail_core::dataset::StatementLabel;
use longtail_core::gateway::synthetic::label_bindings;
use longtail_core::probe::{
    build_probe_set, run_probe, ProbeReport, ProbeShots, ShotShuffle,
};
use longtail_core::rule::Domain;

use crate::backends::build_backends;
use crate::config::RunConfig;
use crate::io::{load_labels, load_records, load_rules, write_text};

pub struct ProbeArgs {
    pub records: Vec<PathBuf>,
    /// JSON map record_id -> {correct, data_type_ok}. When absent the
    /// synthetic critic world labels records directly.
    pub labels: Option<PathBuf>,
    /// CSV `domain,accuracy` rows merged into the report as the human
    /// baseline column.
    pub human: Option<PathBuf>,
    pub shuffle: ShotShuffle,
}

pub fn run(config: &RunConfig, args: &ProbeArgs) -> Result<()> {
    let records = load_records(&args.records)?;
    if records.is_empty() {
        bail!("no records to probe");
    }
    let rules = load_rules(&config.rules)?;
    let mut backends = build_backends(config, &rules, config.seed)?;

    let labels: BTreeMap<String, StatementLabel> = match &args.labels {
        Some(path) => load_labels(path)?,
        None => {
            let world = backends
                .world_for(config, "critic")
                .context("no labels file and the critic backend has no synthetic world to label with")?;
            let by_id: BTreeMap<&str, &longtail_core::rule::Rule> =
                rules.iter().map(|r| (r.id.as_str(), r)).collect();
            records
                .iter()
                .map(|record| {
                    let rule = by_id.get(record.rule_id.as_str()).with_context(|| {
                        format!("record {} references unknown rule {}", record.record_id, record.rule_id)
                    })?;
                    Ok((
                        record.record_id.clone(),
                        label_bindings(&world, rule, &record.bindings),
                    ))
                })
                .collect::<Result<_>>()?
        }
    };

    let probe_set = build_probe_set(&records, &labels)?;
    eprintln!(
        "probing {} statements ({} excluded for data-type violations)",
        probe_set.len(),
        records.len() - probe_set.len()
    );
    let mut report = run_probe(
        &probe_set,
        &mut *backends.responder,
        &ProbeShots::default(),
        config.seed,
        args.shuffle,
    )?;

    if let Some(path) = &args.human {
        merge_human_baseline(&mut report, path)?;
    }

    write_text(
        &config.out.join("probe_report.json"),
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    print_report(&report);
    Ok(())
}

fn merge_human_baseline(report: &mut ProbeReport, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading human baseline {}", path.display()))?;
    let mut by_label: BTreeMap<String, f64> = BTreeMap::new();
    for line in text.lines().skip_while(|l| l.starts_with("domain")) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (label, value) = line
            .split_once(',')
            .with_context(|| format!("bad human baseline row: {line}"))?;
        by_label.insert(label.trim().to_string(), value.trim().parse()?);
    }
    for row in report.rows.iter_mut() {
        if let Some(domain) = row.domain {
            row.human_baseline = by_label.get(domain.label()).copied();
        }
    }
    report.total.human_baseline = by_label.get("Total").copied();
    Ok(())
}

fn print_report(report: &ProbeReport) {
    let pct = |v: f64| format!("{:.2}", v * 100.0);
    println!(
        "{:<22} {:<6} {:>8} {:>8} {:>8} {:>9}",
        "Domain", "Dist", "Pos", "Neg", "All", "Human"
    );
    for row in report.rows.iter().chain(std::iter::once(&report.total)) {
        let label = row.domain.map(Domain::label).unwrap_or("Total");
        let human = row
            .human_baseline
            .map(|h| format!("{h:.2}"))
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{label:<22} {:<6} {:>8} {:>8} {:>8} {:>9}",
            "head",
            pct(row.head.acc_pos),
            pct(row.head.acc_neg),
            pct(row.head.acc_all),
            human,
        );
        println!(
            "{:<22} {:<6} {:>8} {:>8} {:>8} {:>9}",
            "",
            "tail",
            pct(row.tail.acc_pos),
            pct(row.tail.acc_neg),
            pct(row.tail.acc_all),
            "",
        );
        let drop = row
            .delta_rel
            .map(|d| format!("{:+.2}%", d * 100.0))
            .unwrap_or_else(|| "-".to_string());
        println!("{:<22} {:<6} {:>8} {:>8} {:>8}", "", "drop", "", "", drop);
    }
}
