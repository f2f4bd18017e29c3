//! Backend construction and the HTTP completion protocol.
//!
//! The HTTP backend speaks an OpenAI-style surface: `POST
//! {base_url}/completions` with `{model, prompt, temperature,
//! max_tokens, logprobs, logit_bias, echo}` and `POST
//! {base_url}/chat/completions` with `messages`. Scorer and critic roles
//! require per-token log-probabilities in the response. Transport
//! errors retry three times with exponential backoff; requests share a
//! per-backend in-flight cap.

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::json;

use longtail_core::gateway::synthetic::{
    SyntheticCritic, SyntheticGenerator, SyntheticScorer, SyntheticWorld,
};
use longtail_core::gateway::{
    build_chat_prompt, Critic, CriticQuery, GatewayError, GenerationRequest, KnowledgeSource,
    Responder, ScoreResult, Scorer,
};
use longtail_core::rule::{Rule, TemplateSet};

use crate::config::{BackendSpec, RunConfig, DEFAULT_API_KEY_ENV};

const RETRY_ATTEMPTS: u32 = 3;
const RETRY_BASE_DELAY: Duration = Duration::from_millis(200);

/// Counting semaphore bounding concurrent requests per backend.
#[derive(Debug)]
pub struct InFlightCap {
    state: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl InFlightCap {
    pub fn new(limit: usize) -> Arc<Self> {
        Arc::new(InFlightCap {
            state: Mutex::new(0),
            freed: Condvar::new(),
            limit: limit.max(1),
        })
    }

    fn acquire(self: &Arc<Self>) -> CapGuard {
        let mut in_flight = self.state.lock().expect("cap lock");
        while *in_flight >= self.limit {
            in_flight = self.freed.wait(in_flight).expect("cap wait");
        }
        *in_flight += 1;
        CapGuard {
            cap: Arc::clone(self),
        }
    }
}

pub struct CapGuard {
    cap: Arc<InFlightCap>,
}

impl Drop for CapGuard {
    fn drop(&mut self) {
        let mut in_flight = self.cap.state.lock().expect("cap lock");
        *in_flight -= 1;
        self.cap.freed.notify_one();
    }
}

#[derive(Clone)]
pub struct HttpBackend {
    agent: ureq::Agent,
    base_url: String,
    model: String,
    api_key: Option<String>,
    max_tokens: u32,
    affirmative: Vec<String>,
    cap: Arc<InFlightCap>,
}

impl HttpBackend {
    pub fn new(
        base_url: &str,
        model: &str,
        api_key_env: Option<&str>,
        max_tokens: u32,
        affirmative_tokens: Option<Vec<String>>,
        max_in_flight: usize,
    ) -> Self {
        let api_key = std::env::var(api_key_env.unwrap_or(DEFAULT_API_KEY_ENV)).ok();
        HttpBackend {
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(120))
                .build(),
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key,
            max_tokens,
            affirmative: affirmative_tokens.unwrap_or_else(|| {
                vec!["yes".into(), "Yes".into(), " yes".into(), " Yes".into(), "YES".into()]
            }),
            cap: InFlightCap::new(max_in_flight),
        }
    }

    fn post(&self, path: &str, body: serde_json::Value) -> Result<serde_json::Value, GatewayError> {
        let url = format!("{}{path}", self.base_url);
        let mut last = GatewayError::transport("no attempts made");
        for attempt in 0..RETRY_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(RETRY_BASE_DELAY * 2u32.pow(attempt - 1));
            }
            let _guard = self.cap.acquire();
            let mut request = self
                .agent
                .post(&url)
                .set("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                request = request.set("Authorization", &format!("Bearer {key}"));
            }
            match request.send_json(body.clone()) {
                Ok(response) => {
                    return response.into_json().map_err(|e| GatewayError::Malformed {
                        message: format!("invalid JSON from {url}: {e}"),
                    });
                }
                Err(ureq::Error::Status(code, response)) if code >= 500 => {
                    last = GatewayError::transport(format!(
                        "{url} returned {code}: {}",
                        response.into_string().unwrap_or_default()
                    ));
                }
                Err(ureq::Error::Status(code, response)) => {
                    return Err(GatewayError::bad_request(format!(
                        "{url} returned {code}: {}",
                        response.into_string().unwrap_or_default()
                    )));
                }
                Err(ureq::Error::Transport(err)) => {
                    last = GatewayError::transport(format!("{url}: {err}"));
                }
            }
        }
        Err(last)
    }

    fn completion_body(&self, prompt: &str, temperature: f64, max_tokens: u32) -> serde_json::Value {
        json!({
            "model": self.model,
            "prompt": prompt,
            "temperature": temperature,
            "max_tokens": max_tokens,
        })
    }
}

#[derive(Deserialize)]
struct CompletionReply {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    #[serde(default)]
    text: String,
    #[serde(default)]
    logprobs: Option<LogProbs>,
}

#[derive(Deserialize)]
struct LogProbs {
    #[serde(default)]
    token_logprobs: Vec<Option<f64>>,
    #[serde(default)]
    top_logprobs: Vec<BTreeMap<String, f64>>,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

fn first_choice(value: serde_json::Value) -> Result<CompletionChoice, GatewayError> {
    let reply: CompletionReply = serde_json::from_value(value).map_err(|e| GatewayError::Malformed {
        message: format!("completion reply: {e}"),
    })?;
    reply
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| GatewayError::Malformed {
            message: "completion reply has no choices".to_string(),
        })
}

impl KnowledgeSource for HttpBackend {
    fn complete(&mut self, request: &GenerationRequest) -> Result<String, GatewayError> {
        let mut body = self.completion_body(&request.prompt, request.temperature, self.max_tokens);
        if !request.banned_values.is_empty() {
            // Best-effort decode-time discouragement; exact token ids
            // are vendor-specific, so the post-filter remains in force.
            let bias: BTreeMap<&str, i32> = request
                .banned_values
                .iter()
                .map(|v| (v.as_str(), -100))
                .collect();
            body["logit_bias"] = json!(bias);
        }
        let choice = first_choice(self.post("/completions", body)?)?;
        Ok(choice.text)
    }

    fn identity(&self) -> String {
        format!("http:{}:{}", self.base_url, self.model)
    }
}

impl Critic for HttpBackend {
    fn yes_probability(&mut self, query: &CriticQuery) -> Result<f64, GatewayError> {
        let prompt = format!(
            "{}\nIs the statement above correct? Answer yes or no.\nAnswer:",
            query.statement
        );
        let mut body = self.completion_body(&prompt, 0.0, 1);
        body["logprobs"] = json!(5);
        let choice = first_choice(self.post("/completions", body)?)?;
        let logprobs = choice.logprobs.ok_or_else(|| GatewayError::Unsupported {
            message: "critic backend returned no token log-probabilities".to_string(),
        })?;
        let top = logprobs.top_logprobs.first().ok_or_else(|| GatewayError::Malformed {
            message: "critic reply has no first-token distribution".to_string(),
        })?;
        let best = self
            .affirmative
            .iter()
            .filter_map(|token| top.get(token))
            .fold(f64::NEG_INFINITY, |acc, lp| acc.max(*lp));
        if best == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(best.exp().clamp(0.0, 1.0))
    }

    fn identity(&self) -> String {
        format!("http:{}:{}", self.base_url, self.model)
    }
}

impl Scorer for HttpBackend {
    fn score(&mut self, statement: &str) -> Result<ScoreResult, GatewayError> {
        let mut body = self.completion_body(statement, 0.0, 0);
        body["logprobs"] = json!(0);
        body["echo"] = json!(true);
        let choice = first_choice(self.post("/completions", body)?)?;
        let logprobs = choice.logprobs.ok_or_else(|| GatewayError::Unsupported {
            message: "scorer backend returned no token log-probabilities".to_string(),
        })?;
        let mut total = 0.0;
        let mut count = 0usize;
        for lp in logprobs.token_logprobs.iter().flatten() {
            total += lp;
            count += 1;
        }
        if count == 0 {
            return Err(GatewayError::Malformed {
                message: "scorer reply carried no scored tokens".to_string(),
            });
        }
        Ok(ScoreResult {
            total_logprob: total,
            token_count: count,
        })
    }

    fn identity(&self) -> String {
        format!("http:{}:{}", self.base_url, self.model)
    }
}

impl Responder for HttpBackend {
    fn chat(
        &mut self,
        system: &str,
        shots: &[(String, String)],
        question: &str,
    ) -> Result<String, GatewayError> {
        let mut messages = vec![json!({"role": "system", "content": system})];
        for (q, a) in shots {
            messages.push(json!({"role": "user", "content": q}));
            messages.push(json!({"role": "assistant", "content": a}));
        }
        messages.push(json!({"role": "user", "content": question}));
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": 0.0,
            "max_tokens": self.max_tokens,
        });
        match self.post("/chat/completions", body) {
            Ok(value) => {
                let reply: ChatReply =
                    serde_json::from_value(value).map_err(|e| GatewayError::Malformed {
                        message: format!("chat reply: {e}"),
                    })?;
                reply
                    .choices
                    .into_iter()
                    .next()
                    .map(|c| c.message.content)
                    .ok_or_else(|| GatewayError::Malformed {
                        message: "chat reply has no choices".to_string(),
                    })
            }
            // Fall back to plain completion for backends without a chat
            // route.
            Err(GatewayError::BadRequest { .. }) => {
                let prompt = build_chat_prompt(system, shots, question);
                let body = self.completion_body(&prompt, 0.0, self.max_tokens);
                let choice = first_choice(self.post("/completions", body)?)?;
                Ok(choice.text)
            }
            Err(other) => Err(other),
        }
    }

    fn identity(&self) -> String {
        format!("http:{}:{}", self.base_url, self.model)
    }
}

/// Fixed-answer responder for dry runs.
pub struct FixedResponder {
    pub answer: String,
}

impl Responder for FixedResponder {
    fn chat(&mut self, _: &str, _: &[(String, String)], _: &str) -> Result<String, GatewayError> {
        Ok(self.answer.clone())
    }

    fn identity(&self) -> String {
        format!("scripted:{}", self.answer)
    }
}

/// Everything a run needs, resolved from config.
pub struct BackendSet {
    pub knowledge: Box<dyn KnowledgeSource>,
    pub critic: Box<dyn Critic>,
    pub scorer: Box<dyn Scorer>,
    pub responder: Box<dyn Responder>,
    pub identities: BTreeMap<String, String>,
    worlds: BTreeMap<std::path::PathBuf, Arc<SyntheticWorld>>,
}

impl BackendSet {
    /// The synthetic world backing the given role, when there is one.
    /// Used for oracle labels.
    pub fn world_for(&self, config: &RunConfig, role: &str) -> Option<Arc<SyntheticWorld>> {
        match config.backends.get(role)? {
            BackendSpec::Synthetic { world, .. } => self.worlds.get(world).cloned(),
            _ => None,
        }
    }
}

fn load_world(
    cache: &mut BTreeMap<std::path::PathBuf, Arc<SyntheticWorld>>,
    path: &std::path::Path,
) -> Result<Arc<SyntheticWorld>> {
    if let Some(world) = cache.get(path) {
        return Ok(world.clone());
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading world {}", path.display()))?;
    let world = Arc::new(
        SyntheticWorld::from_json(&text)
            .map_err(|e| anyhow::anyhow!("world {}: {e}", path.display()))?,
    );
    cache.insert(path.to_path_buf(), world.clone());
    Ok(world)
}

/// Union of template registries across the corpus, for the synthetic
/// critic's inverse matcher.
pub fn merged_templates(rules: &[Rule]) -> TemplateSet {
    let mut merged = TemplateSet::new();
    for rule in rules {
        for pred in rule.premise.iter().chain(std::iter::once(&rule.conclusion)) {
            if let Some(entry) = rule.templates.get(&pred.name) {
                if let Some(text) = &entry.positive {
                    merged.set_positive(&pred.name, text);
                }
            }
        }
    }
    merged
}

/// Instantiate the four roles from config. `rules` feeds template
/// knowledge to the synthetic critic.
pub fn build_backends(config: &RunConfig, rules: &[Rule], seed: u64) -> Result<BackendSet> {
    let templates = merged_templates(rules);
    let mut worlds = BTreeMap::new();
    let mut identities = BTreeMap::new();

    let http = |base_url: &str,
                model: &str,
                api_key_env: &Option<String>,
                max_tokens: u32,
                affirmative: &Option<Vec<String>>,
                max_in_flight: usize| {
        HttpBackend::new(
            base_url,
            model,
            api_key_env.as_deref(),
            max_tokens,
            affirmative.clone(),
            max_in_flight,
        )
    };

    let knowledge: Box<dyn KnowledgeSource> = match spec(config, "knowledge")? {
        BackendSpec::Http {
            base_url,
            model,
            api_key_env,
            max_tokens,
            affirmative_tokens,
            max_in_flight,
        } => Box::new(http(base_url, model, api_key_env, *max_tokens, affirmative_tokens, *max_in_flight)),
        BackendSpec::Synthetic {
            world,
            distractor_rate,
            ..
        } => Box::new(SyntheticGenerator::new(
            load_world(&mut worlds, world)?,
            seed,
            *distractor_rate,
        )),
        BackendSpec::Scripted { .. } => bail!("knowledge role cannot be scripted"),
    };
    let critic: Box<dyn Critic> = match spec(config, "critic")? {
        BackendSpec::Http {
            base_url,
            model,
            api_key_env,
            max_tokens,
            affirmative_tokens,
            max_in_flight,
        } => Box::new(http(base_url, model, api_key_env, *max_tokens, affirmative_tokens, *max_in_flight)),
        BackendSpec::Synthetic { world, noise, .. } => Box::new(SyntheticCritic::new(
            load_world(&mut worlds, world)?,
            &templates,
            *noise,
            seed,
        )),
        BackendSpec::Scripted { .. } => bail!("critic role cannot be scripted"),
    };
    let scorer: Box<dyn Scorer> = match spec(config, "scorer")? {
        BackendSpec::Http {
            base_url,
            model,
            api_key_env,
            max_tokens,
            affirmative_tokens,
            max_in_flight,
        } => Box::new(http(base_url, model, api_key_env, *max_tokens, affirmative_tokens, *max_in_flight)),
        BackendSpec::Synthetic { world, .. } => {
            Box::new(SyntheticScorer::new(load_world(&mut worlds, world)?))
        }
        BackendSpec::Scripted { .. } => bail!("scorer role cannot be scripted"),
    };
    let responder: Box<dyn Responder> = match config.backends.get("responder") {
        Some(BackendSpec::Http {
            base_url,
            model,
            api_key_env,
            max_tokens,
            affirmative_tokens,
            max_in_flight,
        }) => Box::new(http(base_url, model, api_key_env, *max_tokens, affirmative_tokens, *max_in_flight)),
        Some(BackendSpec::Scripted { default_answer }) => Box::new(FixedResponder {
            answer: default_answer.clone(),
        }),
        Some(BackendSpec::Synthetic { .. }) => bail!("responder role cannot be synthetic"),
        None => Box::new(FixedResponder {
            answer: "Yes".to_string(),
        }),
    };

    identities.insert("knowledge".to_string(), knowledge.identity());
    identities.insert("critic".to_string(), critic.identity());
    identities.insert("scorer".to_string(), scorer.identity());
    identities.insert("responder".to_string(), responder.identity());

    Ok(BackendSet {
        knowledge,
        critic,
        scorer,
        responder,
        identities,
        worlds,
    })
}

/// Build a standalone scorer for a named role (`scorer`, `scorer_b`).
pub fn build_scorer(config: &RunConfig, role: &str) -> Result<Box<dyn Scorer>> {
    let mut worlds = BTreeMap::new();
    match config
        .backends
        .get(role)
        .with_context(|| format!("config has no backend for role {role}"))?
    {
        BackendSpec::Http {
            base_url,
            model,
            api_key_env,
            max_tokens,
            affirmative_tokens,
            max_in_flight,
        } => Ok(Box::new(HttpBackend::new(
            base_url,
            model,
            api_key_env.as_deref(),
            *max_tokens,
            affirmative_tokens.clone(),
            *max_in_flight,
        ))),
        BackendSpec::Synthetic { world, .. } => {
            Ok(Box::new(SyntheticScorer::new(load_world(&mut worlds, world)?)))
        }
        BackendSpec::Scripted { .. } => bail!("role {role} cannot be scripted"),
    }
}

fn spec<'a>(config: &'a RunConfig, role: &str) -> Result<&'a BackendSpec> {
    config
        .backends
        .get(role)
        .with_context(|| format!("config has no backend for role {role}"))
}
