//! Statement records — the emitted dataset rows — and corpus statistics.
//!
//! Records serialize to JSONL with a fixed field order; everything a
//! record states can be regenerated from `(rule_id, bindings)` through
//! the rule's verbalization templates.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{ScoreResult, ScoreStatistic, Scorer};
use crate::rule::{
    render_conclusion_negated, render_conclusion_question, render_statement, Domain, Principle,
    Rule, VerbalizeError,
};
use crate::search::Beam;

/// Which end of the likelihood distribution a run targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Head,
    Tail,
}

impl Distribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Distribution::Head => "head",
            Distribution::Tail => "tail",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMethod {
    BeamSearch,
    InstructionOnly,
}

/// One finished knowledge statement with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub record_id: String,
    pub rule_id: String,
    pub domain: Domain,
    pub principle: Principle,
    pub distribution: Distribution,
    pub method: GenerationMethod,
    pub suffix_id: Option<u8>,
    pub bindings: BTreeMap<String, String>,
    pub premise: String,
    pub conclusion: String,
    pub conclusion_negated: String,
    pub conclusion_question: String,
    pub score: Option<ScoreResult>,
    pub score_statistic: ScoreStatistic,
    pub seed: u64,
    /// Model role -> backend identity.
    pub backends: BTreeMap<String, String>,
    /// Wall-clock stamp, deliberately absent by default so identical
    /// seeded runs stay byte-identical.
    pub created_at: Option<String>,
}

impl StatementRecord {
    /// The text whose likelihood tags the record, premise then
    /// conclusion.
    pub fn statement_text(&self) -> String {
        alloc::format!("{} {}", self.premise, self.conclusion)
    }

    pub fn score_value(&self) -> Option<f64> {
        self.score.map(|s| s.statistic(self.score_statistic))
    }
}

/// Correctness annotation for a record, from the synthetic oracle or an
/// external annotation file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementLabel {
    pub correct: bool,
    pub data_type_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EmitError {
    #[error("rule {rule_id}: {source}")]
    Verbalize {
        rule_id: String,
        source: VerbalizeError,
    },
}

/// Run provenance shared by every record of one emission.
#[derive(Clone, Debug, Default)]
pub struct EmitContext {
    pub method: Option<GenerationMethod>,
    pub suffix_id: Option<u8>,
    pub seed: u64,
    pub backends: BTreeMap<String, String>,
    pub statistic: ScoreStatistic,
    pub created_at: Option<String>,
}

/// Turn completed beams into records. The recorded score is computed on
/// the full rendered statement (not the search-time partial); a scoring
/// failure leaves the record in place with a null score.
pub fn emit_records(
    rule: &Rule,
    beams: &[Beam],
    direction: Distribution,
    scorer: &mut dyn Scorer,
    ctx: &EmitContext,
) -> Result<Vec<StatementRecord>, EmitError> {
    let mut records = Vec::with_capacity(beams.len());
    for (index, beam) in beams.iter().enumerate() {
        let wrap = |source: VerbalizeError| EmitError::Verbalize {
            rule_id: rule.id.clone(),
            source,
        };
        let (premise, conclusion) = render_statement(rule, &beam.bindings).map_err(wrap)?;
        let conclusion_negated = render_conclusion_negated(rule, &beam.bindings).map_err(wrap)?;
        let conclusion_question = render_conclusion_question(rule, &beam.bindings).map_err(wrap)?;
        let statement = alloc::format!("{premise} {conclusion}");
        let score = scorer.score(&statement).ok();
        records.push(StatementRecord {
            record_id: alloc::format!("{}-{}-{:04}", rule.id, direction.as_str(), index),
            rule_id: rule.id.clone(),
            domain: rule.domain,
            principle: rule.principle,
            distribution: direction,
            method: ctx.method.unwrap_or(GenerationMethod::BeamSearch),
            suffix_id: ctx.suffix_id,
            bindings: beam.bindings.clone(),
            premise,
            conclusion,
            conclusion_negated,
            conclusion_question,
            score,
            score_statistic: ctx.statistic,
            seed: ctx.seed,
            backends: ctx.backends.clone(),
            created_at: ctx.created_at.clone(),
        });
    }
    Ok(records)
}

/// Serialize records as JSONL, one record per line, fixed field order.
pub fn to_jsonl(records: &[StatementRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct JsonlError {
    pub line: usize,
    pub message: String,
}

pub fn parse_jsonl(text: &str) -> Result<Vec<StatementRecord>, JsonlError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| JsonlError {
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub domain: Option<Domain>,
    pub rules: usize,
    pub head: usize,
    pub tail: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub rows: Vec<StatsRow>,
    pub total: StatsRow,
}

impl DatasetStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("domain,rules,head,tail\n");
        for row in self.rows.iter().chain(core::iter::once(&self.total)) {
            let label = row.domain.map(Domain::label).unwrap_or("Total");
            out.push_str(&alloc::format!(
                "{label},{},{},{}\n",
                row.rules,
                row.head,
                row.tail
            ));
        }
        out
    }
}

/// Per-domain rule and statement counts, plus a totals row. Every domain
/// appears even when empty.
pub fn dataset_stats(records: &[StatementRecord]) -> DatasetStats {
    let order = [
        Domain::Temporal,
        Domain::OutcomeEffect,
        Domain::NaturalProperties,
        Domain::Locational,
    ];
    let mut rows = Vec::with_capacity(order.len());
    let mut total = StatsRow {
        domain: None,
        rules: 0,
        head: 0,
        tail: 0,
    };
    for domain in order {
        let mut rule_ids: alloc::collections::BTreeSet<&str> = alloc::collections::BTreeSet::new();
        let mut head = 0;
        let mut tail = 0;
        for record in records.iter().filter(|r| r.domain == domain) {
            rule_ids.insert(&record.rule_id);
            match record.distribution {
                Distribution::Head => head += 1,
                Distribution::Tail => tail += 1,
            }
        }
        total.rules += rule_ids.len();
        total.head += head;
        total.tail += tail;
        rows.push(StatsRow {
            domain: Some(domain),
            rules: rule_ids.len(),
            head,
            tail,
        });
    }
    DatasetStats { rows, total }
}
