//! The entailment classification probe.
//!
//! Every labeled statement renders into thirteen question templates; a
//! model answers each with chain-of-thought prompting and two in-context
//! examples in seeded-shuffled order. A statement counts as answered
//! correctly only if all thirteen template answers are correct, and the
//! report carries the relative head-to-tail drop of that strict
//! accuracy.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Distribution, StatementLabel, StatementRecord};
use crate::gateway::{build_chat_prompt, Responder};
use crate::rng::{hash_str, Rng};
use crate::rule::Domain;

mod templates;

pub use templates::{BaseGold, TemplateSpec, TokenPair, TEMPLATES};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("record {record_id} has no label")]
    MissingLabel { record_id: String },
    #[error("record {record_id} is missing its {what} form")]
    MissingForm {
        record_id: String,
        what: &'static str,
    },
    #[error("expected 13 verdicts, got {got}")]
    WrongVerdictCount { got: usize },
    #[error("empty {side} partition")]
    EmptyPartition { side: &'static str },
}

/// One rendered probe question with its gold token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeItem {
    pub record_id: String,
    pub template_id: u8,
    pub question: String,
    pub gold: String,
    pub pair: TokenPair,
}

impl ProbeItem {
    pub fn gold_is_positive(&self) -> bool {
        self.gold == self.pair.positive()
    }
}

/// A statement admitted to the probe with its entailment gold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledStatement {
    pub record: StatementRecord,
    pub gold_entailment: bool,
}

/// Select and label probe inputs: records with data-type violations are
/// excluded, factually correct records probe as entailment, incorrect
/// ones as contradiction.
pub fn build_probe_set(
    records: &[StatementRecord],
    labels: &BTreeMap<String, StatementLabel>,
) -> Result<Vec<LabeledStatement>, ProbeError> {
    let mut out = Vec::new();
    for record in records {
        let label = labels
            .get(&record.record_id)
            .ok_or_else(|| ProbeError::MissingLabel {
                record_id: record.record_id.clone(),
            })?;
        if !label.data_type_ok {
            continue;
        }
        out.push(LabeledStatement {
            record: record.clone(),
            gold_entailment: label.correct,
        });
    }
    Ok(out)
}

fn strip_period(text: &str) -> &str {
    text.trim().trim_end_matches('.')
}

/// Render all thirteen templates for one statement. Gold labels follow
/// the registry; for contradiction-gold statements every label flips
/// within its token pair.
pub fn render_templates(
    record: &StatementRecord,
    gold_entailment: bool,
) -> Result<Vec<ProbeItem>, ProbeError> {
    for (what, text) in [
        ("premise", &record.premise),
        ("conclusion", &record.conclusion),
        ("negated conclusion", &record.conclusion_negated),
        ("question conclusion", &record.conclusion_question),
    ] {
        if text.trim().is_empty() {
            return Err(ProbeError::MissingForm {
                record_id: record.record_id.clone(),
                what,
            });
        }
    }
    let conclusion_positive = record.principle.conclusion_is_positive();
    let mut items = Vec::with_capacity(TEMPLATES.len());
    for spec in &TEMPLATES {
        let question = spec
            .text
            .replace("{premise}", strip_period(&record.premise))
            .replace("{conclusion}", strip_period(&record.conclusion))
            .replace("{conclusion_negation}", strip_period(&record.conclusion_negated))
            .replace("{conclusion_question}", record.conclusion_question.trim());
        let base_positive = match spec.base_gold {
            BaseGold::Positive => true,
            BaseGold::Negative => false,
            BaseGold::ConclusionPolarity => conclusion_positive,
        };
        let positive = if gold_entailment { base_positive } else { !base_positive };
        let gold = if positive {
            spec.pair.positive()
        } else {
            spec.pair.negative()
        };
        items.push(ProbeItem {
            record_id: record.record_id.clone(),
            template_id: spec.id,
            question,
            gold: gold.to_string(),
            pair: spec.pair,
        });
    }
    Ok(items)
}

/// A parsed model answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    Positive,
    Negative,
    /// Neither target token appeared; counts as wrong.
    Unparseable,
}

/// Case-insensitive scan for the template's target tokens; the last
/// word-boundary occurrence decides.
pub fn extract_answer(response: &str, pair: TokenPair) -> Extraction {
    let positive = pair.positive().to_lowercase();
    let negative = pair.negative().to_lowercase();
    let mut verdict = Extraction::Unparseable;
    for word in response
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        let lowered = word.to_lowercase();
        if lowered == positive {
            verdict = Extraction::Positive;
        } else if lowered == negative {
            verdict = Extraction::Negative;
        }
    }
    verdict
}

/// One answered template.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item: ProbeItem,
    pub extraction: Extraction,
}

impl ItemOutcome {
    pub fn correct(&self) -> bool {
        match self.extraction {
            Extraction::Positive => self.item.gold_is_positive(),
            Extraction::Negative => !self.item.gold_is_positive(),
            Extraction::Unparseable => false,
        }
    }
}

/// Per-statement strict score with per-polarity tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementScore {
    pub strict: bool,
    pub pos_correct: usize,
    pub pos_total: usize,
    pub neg_correct: usize,
    pub neg_total: usize,
}

/// Fold thirteen verdicts into the strict flag and polarity tallies.
pub fn score_statement(outcomes: &[ItemOutcome]) -> Result<StatementScore, ProbeError> {
    if outcomes.len() != TEMPLATES.len() {
        return Err(ProbeError::WrongVerdictCount {
            got: outcomes.len(),
        });
    }
    let mut score = StatementScore {
        strict: true,
        ..StatementScore::default()
    };
    for outcome in outcomes {
        let correct = outcome.correct();
        score.strict &= correct;
        if outcome.item.gold_is_positive() {
            score.pos_total += 1;
            score.pos_correct += usize::from(correct);
        } else {
            score.neg_total += 1;
            score.neg_correct += usize::from(correct);
        }
    }
    Ok(score)
}

/// A scored statement, ready for aggregation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredStatement {
    pub record_id: String,
    pub domain: Domain,
    pub distribution: Distribution,
    pub score: StatementScore,
}

/// Accuracy block for one (domain, distribution) cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeAccuracy {
    pub n: usize,
    /// Template-level accuracy over positive-gold items.
    pub acc_pos: f64,
    /// Template-level accuracy over negative-gold items.
    pub acc_neg: f64,
    /// Strict all-templates accuracy.
    pub acc_all: f64,
    /// Secondary view: accuracy averaged over all templates.
    pub acc_avg_templates: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub domain: Option<Domain>,
    pub head: ProbeAccuracy,
    pub tail: ProbeAccuracy,
    /// `(tail - head) / head` on strict accuracy; absent when a side is
    /// empty or head accuracy is zero.
    pub delta_rel: Option<f64>,
    pub human_baseline: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub total: ProbeRow,
}

fn accuracy(results: &[&ScoredStatement]) -> ProbeAccuracy {
    let n = results.len();
    if n == 0 {
        return ProbeAccuracy::default();
    }
    let strict = results.iter().filter(|r| r.score.strict).count();
    let (mut pc, mut pt, mut nc, mut nt) = (0usize, 0usize, 0usize, 0usize);
    for r in results {
        pc += r.score.pos_correct;
        pt += r.score.pos_total;
        nc += r.score.neg_correct;
        nt += r.score.neg_total;
    }
    ProbeAccuracy {
        n,
        acc_pos: ratio(pc, pt),
        acc_neg: ratio(nc, nt),
        acc_all: strict as f64 / n as f64,
        acc_avg_templates: ratio(pc + nc, pt + nt),
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn relative_drop(head: &ProbeAccuracy, tail: &ProbeAccuracy) -> Option<f64> {
    if head.n == 0 || tail.n == 0 || head.acc_all == 0.0 {
        None
    } else {
        Some((tail.acc_all - head.acc_all) / head.acc_all)
    }
}

/// Aggregate scored statements into per-domain rows and a totals row.
/// Errors when either overall partition is empty.
pub fn aggregate(results: &[ScoredStatement]) -> Result<ProbeReport, ProbeError> {
    let head: Vec<&ScoredStatement> = results
        .iter()
        .filter(|r| r.distribution == Distribution::Head)
        .collect();
    let tail: Vec<&ScoredStatement> = results
        .iter()
        .filter(|r| r.distribution == Distribution::Tail)
        .collect();
    if head.is_empty() {
        return Err(ProbeError::EmptyPartition { side: "head" });
    }
    if tail.is_empty() {
        return Err(ProbeError::EmptyPartition { side: "tail" });
    }

    let mut rows = Vec::new();
    for domain in Domain::ALL {
        let head_d: Vec<&ScoredStatement> =
            head.iter().copied().filter(|r| r.domain == domain).collect();
        let tail_d: Vec<&ScoredStatement> =
            tail.iter().copied().filter(|r| r.domain == domain).collect();
        if head_d.is_empty() && tail_d.is_empty() {
            continue;
        }
        let head_acc = accuracy(&head_d);
        let tail_acc = accuracy(&tail_d);
        rows.push(ProbeRow {
            domain: Some(domain),
            delta_rel: relative_drop(&head_acc, &tail_acc),
            head: head_acc,
            tail: tail_acc,
            human_baseline: None,
        });
    }
    let head_acc = accuracy(&head);
    let tail_acc = accuracy(&tail);
    let total = ProbeRow {
        domain: None,
        delta_rel: relative_drop(&head_acc, &tail_acc),
        head: head_acc,
        tail: tail_acc,
        human_baseline: None,
    };
    Ok(ProbeReport { rows, total })
}

/// Chain-of-thought scaffolding for probe queries: a system instruction
/// and one positive-label plus one negative-label worked example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeShots {
    pub system: String,
    pub positive: (String, String),
    pub negative: (String, String),
}

impl Default for ProbeShots {
    fn default() -> Self {
        ProbeShots {
            system: "Answer the question about the statement. Think step by step, then end \
                     your answer with the single requested answer word."
                .to_string(),
            positive: (
                "Yes or no: if Person X is allergic to milk, Person X is not able to eat cheese."
                    .to_string(),
                "Cheese is made from milk, so it contains the allergen the premise names. \
                 The answer is Yes."
                    .to_string(),
            ),
            negative: (
                "Yes or no: if Person X is allergic to milk, Person X is not able to eat plain rice."
                    .to_string(),
                "Plain rice contains no milk, so the premise does not prevent eating it. \
                 The answer is No."
                    .to_string(),
            ),
        }
    }
}

/// Whether shot order reshuffles for every query or once per run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotShuffle {
    #[default]
    PerQuery,
    PerRun,
}

/// Order the two shots for one query under the given seed.
pub fn ordered_shots(
    shots: &ProbeShots,
    seed: u64,
    shuffle: ShotShuffle,
    question: &str,
) -> Vec<(String, String)> {
    let roll = match shuffle {
        ShotShuffle::PerQuery => Rng::new(seed ^ hash_str(question)).next_f64(),
        ShotShuffle::PerRun => Rng::new(seed).next_f64(),
    };
    if roll < 0.5 {
        alloc::vec![shots.positive.clone(), shots.negative.clone()]
    } else {
        alloc::vec![shots.negative.clone(), shots.positive.clone()]
    }
}

/// Query every template of every statement, extract and score answers,
/// and aggregate. Transport failures mark items unparseable.
pub fn run_probe(
    dataset: &[LabeledStatement],
    responder: &mut dyn Responder,
    shots: &ProbeShots,
    seed: u64,
    shuffle: ShotShuffle,
) -> Result<ProbeReport, ProbeError> {
    let mut scored = Vec::with_capacity(dataset.len());
    for statement in dataset {
        let items = render_templates(&statement.record, statement.gold_entailment)?;
        let mut outcomes = Vec::with_capacity(items.len());
        for item in items {
            let ordered = ordered_shots(shots, seed, shuffle, &item.question);
            let extraction = match responder.chat(&shots.system, &ordered, &item.question) {
                Ok(answer) => extract_answer(&answer, item.pair),
                Err(_) => Extraction::Unparseable,
            };
            outcomes.push(ItemOutcome { item, extraction });
        }
        let score = score_statement(&outcomes)?;
        scored.push(ScoredStatement {
            record_id: statement.record.record_id.clone(),
            domain: statement.record.domain,
            distribution: statement.record.distribution,
            score,
        });
    }
    aggregate(&scored)
}

/// Reference cut of the probe prompt for wire-level backends.
pub fn probe_prompt(shots: &ProbeShots, ordered: &[(String, String)], question: &str) -> String {
    build_chat_prompt(&shots.system, ordered, question)
}
