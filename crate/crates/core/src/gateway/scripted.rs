//! Table-driven backends for tests and dry runs: fixed reply sequences
//! for the knowledge role, statement-keyed probabilities for the critic,
//! and a question-keyed answer table for the probe responder.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Critic, CriticQuery, GatewayError, GenerationRequest, KnowledgeSource, Responder, ScoreResult, Scorer};

/// Replays a fixed sequence of raw replies, one per call; exhausted
/// calls return an empty reply.
#[derive(Clone, Debug, Default)]
pub struct ScriptedKnowledge {
    replies: Vec<String>,
    cursor: usize,
    pub calls: usize,
}

impl ScriptedKnowledge {
    pub fn new(replies: Vec<String>) -> Self {
        ScriptedKnowledge {
            replies,
            cursor: 0,
            calls: 0,
        }
    }
}

impl KnowledgeSource for ScriptedKnowledge {
    fn complete(&mut self, _request: &GenerationRequest) -> Result<String, GatewayError> {
        self.calls += 1;
        let reply = self.replies.get(self.cursor).cloned().unwrap_or_default();
        self.cursor += 1;
        Ok(reply)
    }

    fn identity(&self) -> String {
        "scripted-knowledge".to_string()
    }
}

/// Statement-keyed affirmative probabilities with a default for
/// anything unlisted.
#[derive(Clone, Debug)]
pub struct ScriptedCritic {
    by_statement: BTreeMap<String, f64>,
    default: f64,
}

impl ScriptedCritic {
    pub fn new(default: f64) -> Self {
        ScriptedCritic {
            by_statement: BTreeMap::new(),
            default,
        }
    }

    pub fn set(&mut self, statement: &str, prob: f64) -> &mut Self {
        self.by_statement.insert(statement.to_string(), prob);
        self
    }
}

impl Critic for ScriptedCritic {
    fn yes_probability(&mut self, query: &CriticQuery) -> Result<f64, GatewayError> {
        Ok(self
            .by_statement
            .get(&query.statement)
            .copied()
            .unwrap_or(self.default))
    }

    fn identity(&self) -> String {
        "scripted-critic".to_string()
    }
}

/// Statement-keyed scores; anything unlisted scores its negated
/// character count, so longer statements rank as rarer.
#[derive(Clone, Debug, Default)]
pub struct ScriptedScorer {
    by_statement: BTreeMap<String, f64>,
}

impl ScriptedScorer {
    pub fn new() -> Self {
        ScriptedScorer::default()
    }

    pub fn set(&mut self, statement: &str, total_logprob: f64) -> &mut Self {
        self.by_statement.insert(statement.to_string(), total_logprob);
        self
    }
}

impl Scorer for ScriptedScorer {
    fn score(&mut self, statement: &str) -> Result<ScoreResult, GatewayError> {
        let total = self
            .by_statement
            .get(statement)
            .copied()
            .unwrap_or_else(|| -(statement.len() as f64));
        Ok(ScoreResult {
            total_logprob: total,
            token_count: statement.split_whitespace().count().max(1),
        })
    }

    fn identity(&self) -> String {
        "scripted-scorer".to_string()
    }
}

/// Question-keyed answers with a configurable default.
#[derive(Clone, Debug)]
pub struct ScriptedResponder {
    by_question: BTreeMap<String, String>,
    default: String,
    pub calls: usize,
    /// When set, fail every call with a transport error instead.
    pub always_fail: bool,
}

impl ScriptedResponder {
    pub fn new(default_answer: &str) -> Self {
        ScriptedResponder {
            by_question: BTreeMap::new(),
            default: default_answer.to_string(),
            calls: 0,
            always_fail: false,
        }
    }

    pub fn set(&mut self, question: &str, answer: &str) -> &mut Self {
        self.by_question.insert(question.to_string(), answer.to_string());
        self
    }
}

impl Responder for ScriptedResponder {
    fn chat(
        &mut self,
        _system: &str,
        _shots: &[(String, String)],
        question: &str,
    ) -> Result<String, GatewayError> {
        self.calls += 1;
        if self.always_fail {
            return Err(GatewayError::transport("scripted failure"));
        }
        Ok(self
            .by_question
            .get(question)
            .cloned()
            .unwrap_or_else(|| self.default.clone()))
    }

    fn identity(&self) -> String {
        "scripted-responder".to_string()
    }
}
