//! Deterministic world-backed model roles for offline runs.
//!
//! A [`SyntheticWorld`] is a closed set of ground facts `(predicate,
//! subject, object)` with a type table and positive frequency weights.
//! The backends derived from it behave like the real roles:
//!
//! - the generator proposes candidate values of the requested type by
//!   frequency weight (optionally mixing in same-type distractors that
//!   violate a predicate, so the critic has something to reject),
//! - the critic answers 1.0/0.0 by world membership, with an optional
//!   seeded noise flip,
//! - the scorer sums `ln(freq(value) / total)` over the values appearing
//!   in a statement plus a fixed per-word constant, so likelihood is
//!   monotone in value rarity by construction.
//!
//! Everything is seeded and iterates ordered maps, so identical requests
//! against identical worlds reproduce byte-identical outputs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::StatementLabel;
use crate::rng::{hash_str, Rng};
use crate::rule::{Rule, TemplateSet, Term};

use super::{
    normalize, Critic, CriticQuery, GatewayError, GenerationRequest, KnowledgeSource, ScoreResult,
    Scorer,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("fact value \"{value}\" is missing from the type table")]
    UntypedValue { value: String },
    #[error("frequency for \"{value}\" must be strictly positive")]
    NonPositiveFrequency { value: String },
}

/// Serialized form of a world file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WorldDoc {
    pub facts: Vec<(String, String, String)>,
    pub types: BTreeMap<String, String>,
    #[serde(default)]
    pub frequencies: BTreeMap<String, f64>,
}

/// Closed set of ground facts with types and frequency weights. Keys are
/// normalized; display forms are preserved for output.
#[derive(Clone, Debug)]
pub struct SyntheticWorld {
    facts: BTreeSet<(String, String, String)>,
    types: BTreeMap<String, String>,
    display: BTreeMap<String, String>,
    freq: BTreeMap<String, f64>,
    total_freq: f64,
}

impl SyntheticWorld {
    pub fn from_doc(doc: &WorldDoc) -> Result<Self, WorldError> {
        let mut types = BTreeMap::new();
        let mut display = BTreeMap::new();
        for (value, ty) in &doc.types {
            let key = normalize(value);
            display.entry(key.clone()).or_insert_with(|| value.clone());
            types.insert(key, ty.clone());
        }
        let mut facts = BTreeSet::new();
        for (pred, subj, obj) in &doc.facts {
            for value in [subj, obj] {
                if !types.contains_key(&normalize(value)) {
                    return Err(WorldError::UntypedValue {
                        value: value.clone(),
                    });
                }
            }
            facts.insert((normalize(pred), normalize(subj), normalize(obj)));
        }
        let mut freq = BTreeMap::new();
        for key in types.keys() {
            freq.insert(key.clone(), 1.0);
        }
        for (value, weight) in &doc.frequencies {
            if *weight <= 0.0 {
                return Err(WorldError::NonPositiveFrequency {
                    value: value.clone(),
                });
            }
            freq.insert(normalize(value), *weight);
        }
        let total_freq = freq.values().sum();
        Ok(SyntheticWorld {
            facts,
            types,
            display,
            freq,
            total_freq,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        let doc: WorldDoc = serde_json::from_str(text).map_err(|e| GatewayError::Malformed {
            message: alloc::format!("world file: {e}"),
        })?;
        SyntheticWorld::from_doc(&doc).map_err(|e| GatewayError::Malformed {
            message: e.to_string(),
        })
    }

    pub fn holds(&self, predicate: &str, subject: &str, object: &str) -> bool {
        self.facts
            .contains(&(normalize(predicate), normalize(subject), normalize(object)))
    }

    pub fn type_of(&self, value: &str) -> Option<&str> {
        self.types.get(&normalize(value)).map(String::as_str)
    }

    pub fn type_matches(&self, value: &str, type_label: &str) -> bool {
        self.type_of(value)
            .is_some_and(|ty| normalize(ty) == normalize(type_label))
    }

    /// Display forms of every value with the given type, in normalized
    /// key order.
    pub fn values_of_type(&self, type_label: &str) -> Vec<&str> {
        let wanted = normalize(type_label);
        self.types
            .iter()
            .filter(|(_, ty)| normalize(ty) == wanted)
            .map(|(key, _)| self.display[key].as_str())
            .collect()
    }

    pub fn frequency(&self, value: &str) -> f64 {
        self.freq.get(&normalize(value)).copied().unwrap_or(1.0)
    }

    /// `ln(freq(value) / total_freq)`; strictly increasing in the
    /// value's weight.
    pub fn log_rel_frequency(&self, value: &str) -> f64 {
        libm::log(self.frequency(value) / self.total_freq)
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    fn predicate_names(&self) -> BTreeSet<&str> {
        self.facts.iter().map(|(p, _, _)| p.as_str()).collect()
    }
}

/// Brute-force enumeration of every full binding that satisfies all
/// premise predicates in the world. The oracle the search output is
/// checked against.
pub fn enumerate_satisfying_bindings(
    world: &SyntheticWorld,
    rule: &Rule,
) -> Vec<BTreeMap<String, String>> {
    let mut symbols: Vec<&String> = rule.variables.keys().collect();
    symbols.retain(|s| **s != rule.subject_symbol);
    let mut bindings = BTreeMap::new();
    bindings.insert(rule.subject_symbol.clone(), rule.subject_placeholder());
    let mut out = Vec::new();
    fill(world, rule, &symbols, 0, &mut bindings, &mut out);
    out
}

fn fill(
    world: &SyntheticWorld,
    rule: &Rule,
    symbols: &[&String],
    depth: usize,
    bindings: &mut BTreeMap<String, String>,
    out: &mut Vec<BTreeMap<String, String>>,
) {
    if depth == symbols.len() {
        if premise_holds(world, rule, bindings) {
            out.push(bindings.clone());
        }
        return;
    }
    let symbol = symbols[depth];
    let ty = rule.data_type(symbol).unwrap_or_default();
    for value in world.values_of_type(ty) {
        bindings.insert(symbol.clone(), value.to_string());
        // Prune: every fully bound predicate must already hold.
        let viable = rule.premise.iter().all(|pred| {
            match grounded(pred, bindings) {
                Some((s, o)) => world.holds(&pred.name, &s, &o),
                None => true,
            }
        });
        if viable {
            fill(world, rule, symbols, depth + 1, bindings, out);
        }
        bindings.remove(symbol);
    }
}

fn grounded(pred: &crate::rule::Predicate, bindings: &BTreeMap<String, String>) -> Option<(String, String)> {
    let term = |t: &Term| -> Option<String> {
        match t {
            Term::Var(sym) => bindings.get(sym).cloned(),
            Term::Literal(text) => Some(text.clone()),
        }
    };
    Some((term(&pred.subject)?, term(&pred.object)?))
}

fn premise_holds(world: &SyntheticWorld, rule: &Rule, bindings: &BTreeMap<String, String>) -> bool {
    rule.premise.iter().all(|pred| match grounded(pred, bindings) {
        Some((s, o)) => world.holds(&pred.name, &s, &o),
        None => false,
    })
}

/// World-oracle label for a finished binding: factually correct when
/// every premise fact holds, type-conforming when every searched value
/// has its declared type.
pub fn label_bindings(
    world: &SyntheticWorld,
    rule: &Rule,
    bindings: &BTreeMap<String, String>,
) -> StatementLabel {
    let correct = premise_holds(world, rule, bindings);
    let data_type_ok = rule
        .variables
        .iter()
        .filter(|(sym, _)| **sym != rule.subject_symbol)
        .all(|(sym, ty)| {
            bindings
                .get(sym)
                .is_some_and(|value| world.type_matches(value, ty))
        });
    StatementLabel {
        correct,
        data_type_ok,
    }
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

/// Variable-prompt generator. Parses the search prompt back into its
/// predicates, then proposes values of the requested type that satisfy
/// them, weighted by frequency. A configurable fraction of each reply is
/// same-type distractors violating at least one predicate; distractors
/// only ever ride along with at least one valid value, and a step with
/// no valid values left yields an empty reply.
pub struct SyntheticGenerator {
    world: Arc<SyntheticWorld>,
    rng: Rng,
    distractor_rate: f64,
    seed: u64,
}

impl SyntheticGenerator {
    pub fn new(world: Arc<SyntheticWorld>, seed: u64, distractor_rate: f64) -> Self {
        SyntheticGenerator {
            world,
            rng: Rng::new(seed).fork("synthetic-generator"),
            distractor_rate,
            seed,
        }
    }
}

/// Structured view of a variable prompt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub symbol: String,
    pub data_type: String,
    /// `(name, subject, object)` with the step symbol left bare.
    pub predicates: Vec<(String, String, String)>,
}

/// Parse a prompt built by the search prompt builder. Returns `None`
/// for prompts in any other shape.
pub fn parse_variable_prompt(prompt: &str) -> Option<ParsedPrompt> {
    let after = prompt.split(" values of ").nth(1)?;
    let symbol = after.split_whitespace().next()?.to_string();
    let marker = alloc::format!(", where {symbol} is a ");
    let tail = prompt.split(&marker).nth(1)?;
    let tail = tail.split(" Do not generate these values:").next()?.trim();
    let data_type = tail.trim_end_matches('.').to_string();

    let mut predicates = Vec::new();
    if let Some(rest) = prompt.split("to fill in the sentence \"").nth(1) {
        let sentence = rest.split('"').next()?;
        for part in sentence.split(" & ") {
            let (name, args) = part.split_once('(')?;
            let args = args.strip_suffix(')')?;
            let (a, b) = args.split_once(", ")?;
            predicates.push((name.trim().to_string(), a.to_string(), b.to_string()));
        }
    }
    Some(ParsedPrompt {
        symbol,
        data_type,
        predicates,
    })
}

impl SyntheticGenerator {
    fn satisfies(&self, parsed: &ParsedPrompt, candidate: &str) -> bool {
        parsed.predicates.iter().all(|(name, a, b)| {
            let subst = |arg: &str| {
                if arg == parsed.symbol {
                    candidate.to_string()
                } else {
                    arg.to_string()
                }
            };
            self.world.holds(name, &subst(a), &subst(b))
        })
    }
}

impl KnowledgeSource for SyntheticGenerator {
    fn complete(&mut self, request: &GenerationRequest) -> Result<String, GatewayError> {
        let parsed = parse_variable_prompt(&request.prompt).ok_or_else(|| {
            GatewayError::bad_request("synthetic generator cannot interpret this prompt")
        })?;
        let excluded: BTreeSet<String> = request
            .banned_values
            .iter()
            .chain(request.already_accepted.iter())
            .map(|v| normalize(v))
            .collect();

        let mut valid: Vec<&str> = Vec::new();
        let mut distractors: Vec<&str> = Vec::new();
        for value in self.world.values_of_type(&parsed.data_type) {
            if excluded.contains(&normalize(value)) {
                continue;
            }
            if self.satisfies(&parsed, value) {
                valid.push(value);
            } else if !parsed.predicates.is_empty() {
                distractors.push(value);
            }
        }
        if valid.is_empty() {
            return Ok(String::new());
        }

        let budget = request.n_values;
        let n_distract = ((budget as f64 * self.distractor_rate) as usize).min(distractors.len());
        let n_valid = budget.saturating_sub(n_distract).min(valid.len()).max(1);

        let mut picks: Vec<&str> = Vec::with_capacity(n_valid + n_distract);
        let mut pool = valid;
        for _ in 0..n_valid {
            let weights: Vec<f64> = pool.iter().map(|v| self.world.frequency(v)).collect();
            let idx = self.rng.weighted_index(&weights);
            picks.push(pool.swap_remove(idx));
        }
        for idx in self.rng.sample_indices(distractors.len(), n_distract) {
            picks.push(distractors[idx]);
        }
        self.rng.shuffle(&mut picks);

        let mut reply = String::new();
        for (i, value) in picks.iter().enumerate() {
            reply.push_str(&alloc::format!("{}. {value}.\n", i + 1));
        }
        Ok(reply)
    }

    fn identity(&self) -> String {
        alloc::format!("synthetic-generator(seed={})", self.seed)
    }
}

// ---------------------------------------------------------------------------
// Tuple generator (instruction-only baselines)
// ---------------------------------------------------------------------------

/// Rule-aware generator for instruction-only prompts: samples full
/// satisfying assignments from the world, weighted by frequency product,
/// and formats them as `1. A=v, B=v, Z=v` lines.
pub struct SyntheticTupleGenerator {
    world: Arc<SyntheticWorld>,
    rule: Rule,
    rng: Rng,
    seed: u64,
}

impl SyntheticTupleGenerator {
    pub fn new(world: Arc<SyntheticWorld>, rule: Rule, seed: u64) -> Self {
        SyntheticTupleGenerator {
            world,
            rule,
            rng: Rng::new(seed).fork("synthetic-tuples"),
            seed,
        }
    }
}

impl KnowledgeSource for SyntheticTupleGenerator {
    fn complete(&mut self, request: &GenerationRequest) -> Result<String, GatewayError> {
        let mut assignments = enumerate_satisfying_bindings(&self.world, &self.rule);
        if assignments.is_empty() {
            return Ok(String::new());
        }
        let free: Vec<&str> = self.rule.free_variables();
        let n = request.n_values.min(assignments.len());
        let mut reply = String::new();
        for line in 0..n {
            let weights: Vec<f64> = assignments
                .iter()
                .map(|b| free.iter().map(|sym| self.world.frequency(&b[*sym])).product())
                .collect();
            let idx = self.rng.weighted_index(&weights);
            let picked = assignments.swap_remove(idx);
            let fields: Vec<String> = free
                .iter()
                .map(|sym| alloc::format!("{sym}={}", picked[*sym]))
                .collect();
            reply.push_str(&alloc::format!("{}. {}\n", line + 1, fields.join(", ")));
        }
        Ok(reply)
    }

    fn identity(&self) -> String {
        alloc::format!("synthetic-tuples(rule={}, seed={})", self.rule.id, self.seed)
    }
}

// ---------------------------------------------------------------------------
// Critic
// ---------------------------------------------------------------------------

struct Pattern {
    predicate: String,
    prefix: String,
    mid: String,
    suffix: String,
}

/// World-membership critic. Statements are matched back to predicates
/// through the verbalization templates (plus the snake_case fallback for
/// every predicate in the world); `{value} is a {type}` statements check
/// the type table. Entailed statements score 1.0 and everything else
/// 0.0, then an optional per-statement seeded flip models critic error.
pub struct SyntheticCritic {
    world: Arc<SyntheticWorld>,
    patterns: Vec<Pattern>,
    noise: f64,
    seed: u64,
}

impl SyntheticCritic {
    pub fn new(world: Arc<SyntheticWorld>, templates: &TemplateSet, noise: f64, seed: u64) -> Self {
        let mut patterns = Vec::new();
        let mut covered: BTreeSet<String> = BTreeSet::new();
        for name in world.predicate_names() {
            if let Some(entry) = templates.get(name) {
                if let Some(text) = &entry.positive {
                    if let Some(pattern) = Pattern::from_template(name, text) {
                        covered.insert(name.to_string());
                        patterns.push(pattern);
                    }
                }
            }
        }
        for name in world.predicate_names() {
            if !covered.contains(name) {
                let fallback = alloc::format!("{{subject}} {} {{object}}", name.replace('_', " "));
                if let Some(pattern) = Pattern::from_template(name, &fallback) {
                    patterns.push(pattern);
                }
            }
        }
        // Longest mid first, so specific templates win over the generic
        // type-conformity split.
        patterns.sort_by(|a, b| {
            b.mid
                .len()
                .cmp(&a.mid.len())
                .then_with(|| a.predicate.cmp(&b.predicate))
        });
        SyntheticCritic {
            world,
            patterns,
            noise,
            seed,
        }
    }

    fn clean_verdict(&self, statement: &str) -> f64 {
        let text = normalize(statement.trim().trim_end_matches('.'));
        for pattern in &self.patterns {
            if let Some((subject, object)) = pattern.split(&text) {
                return if self.world.holds(&pattern.predicate, &subject, &object) {
                    1.0
                } else {
                    0.0
                };
            }
        }
        if let Some((value, ty)) = text.split_once(" is a ") {
            return if self.world.type_matches(value, ty) { 1.0 } else { 0.0 };
        }
        0.0
    }
}

impl Pattern {
    fn from_template(predicate: &str, template: &str) -> Option<Pattern> {
        let subj = template.find("{subject}")?;
        let obj = template.find("{object}")?;
        if subj >= obj {
            return None;
        }
        Some(Pattern {
            predicate: predicate.to_string(),
            prefix: normalize(&template[..subj]),
            mid: normalize(&template[subj + "{subject}".len()..obj]),
            suffix: normalize(&template[obj + "{object}".len()..]),
        })
    }

    fn split(&self, text: &str) -> Option<(String, String)> {
        let rest = if self.prefix.is_empty() {
            text
        } else {
            text.strip_prefix(self.prefix.as_str())?.trim_start()
        };
        let rest = if self.suffix.is_empty() {
            rest
        } else {
            rest.strip_suffix(self.suffix.as_str())?.trim_end()
        };
        let mid = alloc::format!(" {} ", self.mid);
        let pos = rest.find(&mid)?;
        let subject = rest[..pos].trim();
        let object = rest[pos + mid.len()..].trim();
        if subject.is_empty() || object.is_empty() {
            return None;
        }
        Some((subject.to_string(), object.to_string()))
    }
}

impl Critic for SyntheticCritic {
    fn yes_probability(&mut self, query: &CriticQuery) -> Result<f64, GatewayError> {
        let clean = self.clean_verdict(&query.statement);
        if self.noise > 0.0 {
            let mut roll = Rng::new(hash_str(&normalize(&query.statement)) ^ self.seed);
            if roll.next_f64() < self.noise {
                return Ok(1.0 - clean);
            }
        }
        Ok(clean)
    }

    fn identity(&self) -> String {
        alloc::format!("synthetic-critic(noise={}, seed={})", self.noise, self.seed)
    }
}

// ---------------------------------------------------------------------------
// Scorer
// ---------------------------------------------------------------------------

/// Per non-value word contribution, shared by statements rendered from
/// the same template.
const TEMPLATE_WORD_LOGPROB: f64 = -0.1;

/// Frequency-based likelihood scorer: greedy longest-match scan for
/// world values, each contributing `ln(freq / total)`; remaining words
/// contribute a fixed constant.
pub struct SyntheticScorer {
    world: Arc<SyntheticWorld>,
    /// Value word sequences, longest first, so the greedy scan prefers
    /// whole spans.
    by_length: Vec<(Vec<String>, String)>,
}

impl SyntheticScorer {
    pub fn new(world: Arc<SyntheticWorld>) -> Self {
        let mut by_length: Vec<(Vec<String>, String)> = world
            .freq
            .keys()
            .map(|value| {
                (
                    value.split_whitespace().map(str::to_string).collect(),
                    value.clone(),
                )
            })
            .collect();
        by_length.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.1.cmp(&b.1)));
        SyntheticScorer { world, by_length }
    }
}

impl Scorer for SyntheticScorer {
    fn score(&mut self, statement: &str) -> Result<ScoreResult, GatewayError> {
        if statement.trim().is_empty() {
            return Err(GatewayError::bad_request("statement must be non-empty"));
        }
        let text = normalize(&statement.replace(['.', ',', '!', '?'], " "));
        let words: Vec<&str> = text.split_whitespace().collect();

        let mut total = 0.0;
        let mut i = 0;
        while i < words.len() {
            let mut matched = 0;
            for (parts, value) in &self.by_length {
                if parts.is_empty() || i + parts.len() > words.len() {
                    continue;
                }
                if words[i..i + parts.len()].iter().zip(parts).all(|(w, p)| w == p) {
                    total += self.world.log_rel_frequency(value);
                    matched = parts.len();
                    break;
                }
            }
            if matched == 0 {
                total += TEMPLATE_WORD_LOGPROB;
                i += 1;
            } else {
                i += matched;
            }
        }
        Ok(ScoreResult {
            total_logprob: total,
            token_count: words.len().max(1),
        })
    }

    fn identity(&self) -> String {
        "synthetic-scorer".to_string()
    }
}
