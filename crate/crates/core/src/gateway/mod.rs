//! Uniform access to the four model roles the pipeline needs: a
//! knowledge generator sampling candidate values, a critic judging
//! statements yes/no, a likelihood scorer, and a free-text responder for
//! the probe. Backends implement the role traits; HTTP implementations
//! live in the companion crate, while [`synthetic`] provides a
//! deterministic world-backed set for offline runs and [`scripted`]
//! holds table-driven test doubles.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod scripted;
pub mod synthetic;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GatewayError {
    /// Connection-level failure. Retryable; backends should retry before
    /// surfacing it.
    #[error("transport error: {message}")]
    Transport { message: String },
    /// The backend cannot serve this request at all (e.g. no token
    /// probabilities for a scorer role).
    #[error("unsupported capability: {message}")]
    Unsupported { message: String },
    /// The request violates a precondition.
    #[error("bad request: {message}")]
    BadRequest { message: String },
    /// The backend answered with something unusable.
    #[error("malformed backend reply: {message}")]
    Malformed { message: String },
}

impl GatewayError {
    pub fn transport(message: impl core::fmt::Display) -> Self {
        GatewayError::Transport {
            message: message.to_string(),
        }
    }

    pub fn bad_request(message: impl core::fmt::Display) -> Self {
        GatewayError::BadRequest {
            message: message.to_string(),
        }
    }

    pub fn is_transport(&self) -> bool {
        matches!(self, GatewayError::Transport { .. })
    }
}

/// A request for candidate values of one variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub n_values: usize,
    pub temperature: f64,
    /// Values rejected earlier. Discouraged at decode time where the
    /// backend supports per-token bias, and always post-filtered.
    pub banned_values: BTreeSet<String>,
    /// Values already verified correct, excluded via instruction and
    /// post-filtered.
    pub already_accepted: BTreeSet<String>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            n_values: 50,
            temperature: 0.7,
            banned_values: BTreeSet::new(),
            already_accepted: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.trim().is_empty() {
            return Err(GatewayError::bad_request("prompt must be non-empty"));
        }
        if self.n_values < 1 {
            return Err(GatewayError::bad_request("n_values must be at least 1"));
        }
        if self.temperature < 0.0 {
            return Err(GatewayError::bad_request("temperature must be non-negative"));
        }
        Ok(())
    }
}

/// A declarative statement for the critic to judge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticQuery {
    pub statement: String,
}

impl CriticQuery {
    /// Build a query, appending the terminal period if missing.
    pub fn new(statement: impl Into<String>) -> Self {
        let mut statement: String = statement.into();
        if !statement.ends_with('.') {
            statement.push('.');
        }
        CriticQuery { statement }
    }
}

/// Token-level log-likelihood of a statement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    /// Sum of token log-probabilities.
    pub total_logprob: f64,
    pub token_count: usize,
}

impl ScoreResult {
    pub fn mean_per_token(&self) -> f64 {
        if self.token_count == 0 {
            0.0
        } else {
            self.total_logprob / self.token_count as f64
        }
    }

    pub fn statistic(&self, statistic: ScoreStatistic) -> f64 {
        match statistic {
            ScoreStatistic::Sum => self.total_logprob,
            ScoreStatistic::MeanPerToken => self.mean_per_token(),
        }
    }
}

/// Which scalar of a [`ScoreResult`] ranks statements. The sum is the
/// default; the per-token mean exists because reranked candidates can
/// differ in value length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreStatistic {
    #[default]
    Sum,
    MeanPerToken,
}

impl ScoreStatistic {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreStatistic::Sum => "sum",
            ScoreStatistic::MeanPerToken => "mean_per_token",
        }
    }
}

/// Knowledge-generator role: completes a value-generation prompt with
/// enumerated candidates ("1. value.\n2. ...").
pub trait KnowledgeSource {
    fn complete(&mut self, request: &GenerationRequest) -> Result<String, GatewayError>;
    /// Stable identity string recorded in run manifests.
    fn identity(&self) -> String;
}

/// Critic role: probability mass of the affirmative answer for a binary
/// correctness question about the statement.
pub trait Critic {
    fn yes_probability(&mut self, query: &CriticQuery) -> Result<f64, GatewayError>;
    fn identity(&self) -> String;
}

/// Likelihood-scorer role.
pub trait Scorer {
    fn score(&mut self, statement: &str) -> Result<ScoreResult, GatewayError>;
    fn identity(&self) -> String;
}

/// Free-text chat role used by the probe.
pub trait Responder {
    fn chat(
        &mut self,
        system: &str,
        shots: &[(String, String)],
        question: &str,
    ) -> Result<String, GatewayError>;
    fn identity(&self) -> String;
}

/// Case-fold and collapse whitespace. Idempotent; used everywhere two
/// candidate values are compared.
pub fn normalize(value: &str) -> String {
    let lowered = value.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Values recovered from an enumerated reply, plus the lines that did
/// not parse and the untouched reply text for traces.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratedValues {
    pub values: Vec<String>,
    pub residue: Vec<String>,
    pub raw: String,
}

/// Parse enumerated output lines of the form `1. value`, trimming the
/// numbering, surrounding whitespace, and trailing punctuation.
pub fn parse_enumerated(reply: &str) -> GeneratedValues {
    let mut out = GeneratedValues::default();
    for raw in reply.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match strip_enumeration(line) {
            Some(body) => {
                let value = body
                    .trim()
                    .trim_end_matches(['.', ',', ';'])
                    .trim()
                    .trim_matches('"')
                    .trim();
                if value.is_empty() {
                    out.residue.push(line.to_string());
                } else {
                    out.values.push(value.to_string());
                }
            }
            None => out.residue.push(line.to_string()),
        }
    }
    out
}

fn strip_enumeration(line: &str) -> Option<&str> {
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))
}

/// Run one generation call: complete the prompt, parse the enumerated
/// reply, and drop entries that normalize equal to a banned or already
/// accepted value (or to an earlier entry in the same reply).
pub fn generate_values(
    backend: &mut dyn KnowledgeSource,
    request: &GenerationRequest,
) -> Result<GeneratedValues, GatewayError> {
    request.validate()?;
    let raw = backend.complete(request)?;
    let parsed = parse_enumerated(&raw);
    let mut excluded: BTreeSet<String> = request.banned_values.iter().map(|v| normalize(v)).collect();
    excluded.extend(request.already_accepted.iter().map(|v| normalize(v)));
    let mut values = Vec::with_capacity(parsed.values.len());
    for value in parsed.values {
        let key = normalize(&value);
        if excluded.insert(key) {
            values.push(value);
        }
    }
    Ok(GeneratedValues {
        values,
        residue: parsed.residue,
        raw,
    })
}

/// Ask the critic for the affirmative probability of a statement.
pub fn yes_probability(backend: &mut dyn Critic, query: &CriticQuery) -> Result<f64, GatewayError> {
    if query.statement.trim().is_empty() {
        return Err(GatewayError::bad_request("statement must be non-empty"));
    }
    let p = backend.yes_probability(query)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(GatewayError::Malformed {
            message: alloc::format!("affirmative probability {p} outside [0, 1]"),
        });
    }
    Ok(p)
}

/// Score a statement's log-likelihood.
pub fn score_loglik(backend: &mut dyn Scorer, statement: &str) -> Result<ScoreResult, GatewayError> {
    if statement.trim().is_empty() {
        return Err(GatewayError::bad_request("statement must be non-empty"));
    }
    backend.score(statement)
}

/// Ask the responder for a free-text answer.
pub fn chat_answer(
    backend: &mut dyn Responder,
    system: &str,
    shots: &[(String, String)],
    question: &str,
) -> Result<String, GatewayError> {
    backend.chat(system, shots, question)
}

/// The canonical prompt text for chat-style queries when a backend only
/// exposes plain completion. Also the reference for prompt-shape tests.
pub fn build_chat_prompt(system: &str, shots: &[(String, String)], question: &str) -> String {
    let mut out = String::new();
    if !system.is_empty() {
        out.push_str(system);
        out.push_str("\n\n");
    }
    for (q, a) in shots {
        out.push_str("Q: ");
        out.push_str(q);
        out.push_str("\nA: ");
        out.push_str(a);
        out.push_str("\n\n");
    }
    out.push_str("Q: ");
    out.push_str(question);
    out.push_str("\nA:");
    out
}
