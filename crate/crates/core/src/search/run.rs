//! The knowledge beam search: per-variable generation, verification,
//! early stop, and variable-wise likelihood reranking.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::dataset::Distribution;
use crate::gateway::{
    generate_values, normalize, Critic, CriticQuery, GatewayError, GenerationRequest,
    KnowledgeSource, ScoreResult, ScoreStatistic, Scorer,
};
use crate::rng::Rng;
use crate::rule::{
    plan_search_order, type_check_statement, verbalize_predicate, PlanDirection, PlanError,
    PlanStep, Rule, VerbalizeError,
};

use super::critic::{
    verify_values, CandidateChecks, CheckKey, CriticState, RetroRejection, ThresholdKeying,
    ValueCheck, VerificationOutcome,
};
use super::prompt::build_variable_prompt;
use super::trace::{TraceEvent, TraceSink};

/// How the per-step truncation picks survivors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankMode {
    /// Sort by partial-statement likelihood toward the configured
    /// distribution end.
    #[default]
    Likelihood,
    /// Ablation: seeded uniform sample of the same kept count.
    UniformSample,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchConfig {
    pub calls_per_variable: usize,
    pub values_per_call: usize,
    pub temperature: f64,
    pub keep_fraction: f64,
    pub keep_cap: usize,
    pub early_stop_misses: usize,
    pub direction: Distribution,
    pub max_beams_per_step: usize,
    pub statistic: ScoreStatistic,
    pub keying: ThresholdKeying,
    pub critic_enabled: bool,
    pub rerank_mode: RerankMode,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            calls_per_variable: 4,
            values_per_call: 50,
            temperature: 0.7,
            keep_fraction: 0.75,
            keep_cap: 200,
            early_stop_misses: 2,
            direction: Distribution::Tail,
            max_beams_per_step: 200,
            statistic: ScoreStatistic::Sum,
            keying: ThresholdKeying::PredicateInstance,
            critic_enabled: true,
            rerank_mode: RerankMode::Likelihood,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(SearchError::Config(
                "keep_fraction must be in (0, 1]".to_string(),
            ));
        }
        if self.keep_cap < 1 {
            return Err(SearchError::Config("keep_cap must be at least 1".to_string()));
        }
        if self.calls_per_variable < 1 || self.values_per_call < 1 {
            return Err(SearchError::Config(
                "calls_per_variable and values_per_call must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// A partial variable assignment under search.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Beam {
    pub bindings: BTreeMap<String, String>,
    /// Verbalized fully-bound premise predicates joined by " and ";
    /// regenerable from the bindings.
    pub partial_statement: String,
    pub score: Option<ScoreResult>,
    /// `(check key, accepted value)` along this beam's ancestry, used to
    /// prune descendants of retroactively rejected values.
    pub lineage: Vec<(CheckKey, String)>,
}

impl Beam {
    pub fn empty() -> Self {
        Beam {
            bindings: BTreeMap::new(),
            partial_statement: String::new(),
            score: None,
            lineage: Vec::new(),
        }
    }

    pub fn with_bindings(bindings: BTreeMap<String, String>) -> Self {
        Beam {
            bindings,
            partial_statement: String::new(),
            score: None,
            lineage: Vec::new(),
        }
    }

    /// Short stable description for traces.
    pub fn fingerprint(&self) -> String {
        let parts: Vec<String> = self
            .bindings
            .iter()
            .map(|(k, v)| alloc::format!("{k}={v}"))
            .collect();
        parts.join(", ")
    }
}

/// Verbalize every fully bound premise predicate and join with " and ".
pub fn partial_statement(rule: &Rule, bindings: &BTreeMap<String, String>) -> Result<String, VerbalizeError> {
    let mut parts: Vec<String> = Vec::new();
    for pred in &rule.premise {
        let bound = pred.vars().all(|v| bindings.contains_key(v));
        if bound {
            parts.push(verbalize_predicate(pred, bindings, &rule.templates)?);
        }
    }
    Ok(parts.join(" and "))
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Verbalize(#[from] VerbalizeError),
    #[error("every beam failed at step {step}: {last_error}")]
    AllBeamsFailed { step: String, last_error: String },
}

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub beams: Vec<Beam>,
    pub failed_beams: usize,
    pub diagnostics: Vec<String>,
}

/// The model roles a search needs.
pub struct SearchGateway<'a> {
    pub knowledge: &'a mut dyn KnowledgeSource,
    pub critic: &'a mut dyn Critic,
    pub scorer: &'a mut dyn Scorer,
}

/// Children and failures produced by one step expansion.
#[derive(Clone, Debug, Default)]
pub struct StepResult {
    pub children: Vec<Beam>,
    pub failed: usize,
    pub last_error: Option<String>,
}

/// Search one variable across all beams: up to `calls_per_variable`
/// generation calls per beam with verification after each call, early
/// stop after `early_stop_misses` consecutive empty calls, and a child
/// beam per accepted value. Transport failures kill the beam, not the
/// run. Descendants of retroactively rejected values are pruned before
/// returning.
#[allow(clippy::too_many_arguments)]
pub fn search_variable(
    beams: &[Beam],
    step: &PlanStep,
    step_index: usize,
    rule: &Rule,
    cfg: &SearchConfig,
    gateway: &mut SearchGateway<'_>,
    state: &mut CriticState,
    trace: &mut dyn TraceSink,
) -> Result<StepResult, SearchError> {
    let mut children = Vec::new();
    let mut failed = 0;
    let mut last_error: Option<String> = None;
    let mut step_retro: BTreeSet<(CheckKey, String)> = BTreeSet::new();

    for parent in beams {
        let mut accepted: Vec<(String, Vec<CheckKey>)> = Vec::new();
        let mut rejected: BTreeSet<String> = BTreeSet::new();
        let mut misses = 0usize;
        let mut beam_error: Option<GatewayError> = None;

        for call_index in 0..cfg.calls_per_variable {
            if misses >= cfg.early_stop_misses {
                trace.record(TraceEvent::EarlyStop {
                    step: step_index,
                    variable: step.variable.clone(),
                    parent: parent.fingerprint(),
                    calls_made: call_index,
                });
                break;
            }
            let accepted_names: Vec<String> = accepted.iter().map(|(v, _)| v.clone()).collect();
            let prompt = match build_variable_prompt(step, parent, cfg.values_per_call, &accepted_names) {
                Ok(p) => p,
                Err(err) => {
                    beam_error = Some(GatewayError::bad_request(err));
                    break;
                }
            };
            let mut request = GenerationRequest::new(prompt.clone());
            request.n_values = cfg.values_per_call;
            request.temperature = cfg.temperature;
            request.banned_values = rejected.clone();
            request.already_accepted = accepted_names.iter().cloned().collect();

            let generated = match generate_values(gateway.knowledge, &request) {
                Ok(g) => g,
                Err(err) => {
                    beam_error = Some(err);
                    break;
                }
            };
            trace.record(TraceEvent::GenerationCall {
                step: step_index,
                variable: step.variable.clone(),
                parent: parent.fingerprint(),
                call_index,
                prompt,
                raw_reply: generated.raw.clone(),
                parsed: generated.values.clone(),
                residue: generated.residue.clone(),
            });

            let outcome = if cfg.critic_enabled {
                let batch = match resolve_checks(
                    &generated.values,
                    step,
                    parent,
                    rule,
                    cfg.keying,
                    gateway.critic,
                ) {
                    Ok(batch) => batch,
                    Err(err) => {
                        beam_error = Some(err);
                        break;
                    }
                };
                verify_values(&batch, state)
            } else {
                accept_everything(&generated.values)
            };
            trace.record(TraceEvent::Verification {
                step: step_index,
                variable: step.variable.clone(),
                parent: parent.fingerprint(),
                call_index,
                outcome: outcome.clone(),
            });

            for retro in &outcome.retro_rejected {
                step_retro.insert((retro.key.clone(), retro.value.clone()));
            }
            for (value, _) in &outcome.rejected {
                rejected.insert(normalize(value));
            }
            if outcome.accepted.is_empty() {
                misses += 1;
            } else {
                misses = 0;
                for (value, _) in outcome.accepted {
                    let keys = check_keys(step, parent, cfg.keying);
                    accepted.push((value, keys));
                }
            }
        }

        if let Some(err) = beam_error {
            trace.record(TraceEvent::BeamFailed {
                step: step_index,
                variable: step.variable.clone(),
                parent: parent.fingerprint(),
                error: err.to_string(),
            });
            last_error = Some(err.to_string());
            failed += 1;
            continue;
        }

        let mut seen: BTreeSet<String> = BTreeSet::new();
        for (value, keys) in accepted {
            if !seen.insert(normalize(&value)) {
                continue;
            }
            let mut child = parent.clone();
            child.bindings.insert(step.variable.clone(), value.clone());
            child.score = None;
            for key in keys {
                child.lineage.push((key, value.clone()));
            }
            child.partial_statement = partial_statement(rule, &child.bindings)?;
            children.push(child);
        }
    }

    children.retain(|child| {
        child
            .lineage
            .iter()
            .all(|(key, value)| !step_retro.contains(&(key.clone(), value.clone())))
    });

    Ok(StepResult {
        children,
        failed,
        last_error,
    })
}

fn accept_everything(values: &[String]) -> VerificationOutcome {
    VerificationOutcome {
        accepted: values.iter().map(|v| (v.clone(), 1.0)).collect(),
        rejected: Vec::new(),
        threshold_after: 0.0,
        retro_rejected: Vec::<RetroRejection>::new(),
    }
}

fn check_keys(step: &PlanStep, parent: &Beam, keying: ThresholdKeying) -> Vec<CheckKey> {
    let mut keys = Vec::with_capacity(step.active.len() + 1);
    keys.push(CheckKey::TypeConformity {
        data_type: step.data_type.clone(),
    });
    for pred in &step.active {
        keys.push(fact_key(pred, parent, keying));
    }
    keys
}

fn fact_key(pred: &crate::rule::Predicate, parent: &Beam, keying: ThresholdKeying) -> CheckKey {
    CheckKey::Fact {
        predicate: pred.name.clone(),
        context: match keying {
            ThresholdKeying::PredicateInstance => pred.symbolic_with(&parent.bindings),
            ThresholdKeying::PredicateName => String::new(),
        },
    }
}

fn resolve_checks(
    values: &[String],
    step: &PlanStep,
    parent: &Beam,
    rule: &Rule,
    keying: ThresholdKeying,
    critic: &mut dyn Critic,
) -> Result<Vec<CandidateChecks>, GatewayError> {
    let mut batch = Vec::with_capacity(values.len());
    for value in values {
        let mut bindings = parent.bindings.clone();
        bindings.insert(step.variable.clone(), value.clone());
        let mut checks = Vec::with_capacity(step.active.len() + 1);

        let type_query = CriticQuery::new(type_check_statement(value, &step.data_type));
        let prob = crate::gateway::yes_probability(critic, &type_query)?;
        checks.push(ValueCheck {
            key: CheckKey::TypeConformity {
                data_type: step.data_type.clone(),
            },
            statement: type_query.statement,
            yes_prob: prob,
        });

        for pred in &step.active {
            let text = verbalize_predicate(pred, &bindings, &rule.templates)
                .map_err(GatewayError::bad_request)?;
            let query = CriticQuery::new(text);
            let prob = crate::gateway::yes_probability(critic, &query)?;
            checks.push(ValueCheck {
                key: fact_key(pred, parent, keying),
                statement: query.statement,
                yes_prob: prob,
            });
        }
        batch.push(CandidateChecks {
            value: value.clone(),
            checks,
        });
    }
    Ok(batch)
}

/// Sort scored beams toward the configured distribution end and keep
/// `min(ceil(keep_fraction * n), keep_cap)`, ties broken by original
/// order. Tail keeps the lowest-likelihood beams, head the highest.
pub fn rerank_beams(beams: Vec<Beam>, cfg: &SearchConfig) -> Vec<Beam> {
    let n = beams.len();
    if n == 0 {
        return beams;
    }
    let mut ranked = beams;
    let key = |b: &Beam| b.score.map(|s| s.statistic(cfg.statistic)).unwrap_or(0.0);
    match cfg.direction {
        Distribution::Tail => {
            ranked.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap_or(core::cmp::Ordering::Equal))
        }
        Distribution::Head => {
            ranked.sort_by(|a, b| key(b).partial_cmp(&key(a)).unwrap_or(core::cmp::Ordering::Equal))
        }
    }
    ranked.truncate(kept_count(n, cfg.keep_fraction, cfg.keep_cap));
    ranked
}

/// `min(ceil(fraction * n), cap)`.
pub fn kept_count(n: usize, fraction: f64, cap: usize) -> usize {
    let kept = libm::ceil(fraction * n as f64) as usize;
    kept.min(cap)
}

fn sample_rerank(beams: Vec<Beam>, cfg: &SearchConfig, rng: &mut Rng) -> Vec<Beam> {
    let n = beams.len();
    let keep = kept_count(n, cfg.keep_fraction, cfg.keep_cap);
    let chosen: BTreeSet<usize> = rng.sample_indices(n, keep).into_iter().collect();
    beams
        .into_iter()
        .enumerate()
        .filter_map(|(i, beam)| chosen.contains(&i).then_some(beam))
        .collect()
}

/// Run the full search for one rule: plan the order, then per step
/// generate, verify, score partial statements, rerank, and cap the
/// frontier. Returns every completed beam; an empty result with a
/// diagnostic when the search dies out; an error only when every beam
/// failed outright.
pub fn run_search(
    rule: &Rule,
    cfg: &SearchConfig,
    gateway: &mut SearchGateway<'_>,
    trace: &mut dyn TraceSink,
) -> Result<RunOutcome, SearchError> {
    cfg.validate()?;
    let direction = if rule.reverse_search {
        PlanDirection::ReverseFromConclusion
    } else {
        PlanDirection::ForwardFromSubject
    };
    let plan = plan_search_order(rule, direction)?;

    let mut outcome = RunOutcome::default();
    let mut state = CriticState::new(cfg.keying);
    let mut score_cache: BTreeMap<String, ScoreResult> = BTreeMap::new();
    let mut rerank_rng = Rng::new(cfg.seed).fork("rerank-sample");
    let mut beams = alloc::vec![Beam::empty()];

    for (step_index, step) in plan.steps.iter().enumerate() {
        let step_result = if step.variable == rule.subject_symbol {
            bind_placeholder(&beams, step, step_index, rule, cfg, gateway, &mut state, trace)?
        } else {
            search_variable(&beams, step, step_index, rule, cfg, gateway, &mut state, trace)?
        };
        outcome.failed_beams += step_result.failed;
        if step_result.children.is_empty() {
            if step_result.failed > 0 && step_result.failed == beams.len() {
                return Err(SearchError::AllBeamsFailed {
                    step: step.variable.clone(),
                    last_error: step_result.last_error.unwrap_or_default(),
                });
            }
            outcome.diagnostics.push(alloc::format!(
                "no beams survived step {} ({})",
                step_index,
                step.variable
            ));
            return Ok(outcome);
        }
        beams = step_result.children;

        if beams.iter().all(|b| !b.partial_statement.is_empty()) {
            let mut scored = Vec::with_capacity(beams.len());
            let mut scorer_error: Option<String> = None;
            for mut beam in beams {
                let result = match score_cache.get(&beam.partial_statement) {
                    Some(cached) => Ok(*cached),
                    None => gateway.scorer.score(&beam.partial_statement).inspect(|score| {
                        score_cache.insert(beam.partial_statement.clone(), *score);
                    }),
                };
                match result {
                    Ok(score) => {
                        beam.score = Some(score);
                        scored.push(beam);
                    }
                    Err(err) => {
                        trace.record(TraceEvent::BeamFailed {
                            step: step_index,
                            variable: step.variable.clone(),
                            parent: beam.fingerprint(),
                            error: err.to_string(),
                        });
                        scorer_error = Some(err.to_string());
                        outcome.failed_beams += 1;
                    }
                }
            }
            if scored.is_empty() {
                return Err(SearchError::AllBeamsFailed {
                    step: step.variable.clone(),
                    last_error: scorer_error.unwrap_or_default(),
                });
            }
            let candidates = scored.len();
            beams = match cfg.rerank_mode {
                RerankMode::Likelihood => rerank_beams(scored, cfg),
                RerankMode::UniformSample => sample_rerank(scored, cfg, &mut rerank_rng),
            };
            trace.record(TraceEvent::Rerank {
                step: step_index,
                variable: step.variable.clone(),
                candidates,
                kept: beams.len(),
            });
        }
        beams.truncate(cfg.max_beams_per_step);
    }

    outcome.beams = beams;
    Ok(outcome)
}

/// The subject variable stays a generic placeholder: bind it without
/// generation, but still run its activated premise predicates through
/// the critic (reverse plans close over the subject last).
#[allow(clippy::too_many_arguments)]
fn bind_placeholder(
    beams: &[Beam],
    step: &PlanStep,
    step_index: usize,
    rule: &Rule,
    cfg: &SearchConfig,
    gateway: &mut SearchGateway<'_>,
    state: &mut CriticState,
    trace: &mut dyn TraceSink,
) -> Result<StepResult, SearchError> {
    let placeholder = rule.subject_placeholder();
    let mut children = Vec::new();
    let mut failed = 0;
    let mut last_error = None;

    for parent in beams {
        let mut child = parent.clone();
        child
            .bindings
            .insert(step.variable.clone(), placeholder.clone());
        child.score = None;

        if cfg.critic_enabled && !step.active.is_empty() {
            let mut checks = Vec::with_capacity(step.active.len());
            let mut query_error: Option<GatewayError> = None;
            for pred in &step.active {
                let text = verbalize_predicate(pred, &child.bindings, &rule.templates)?;
                let query = CriticQuery::new(text);
                match crate::gateway::yes_probability(gateway.critic, &query) {
                    Ok(prob) => checks.push(ValueCheck {
                        key: fact_key(pred, parent, cfg.keying),
                        statement: query.statement,
                        yes_prob: prob,
                    }),
                    Err(err) => {
                        query_error = Some(err);
                        break;
                    }
                }
            }
            if let Some(err) = query_error {
                trace.record(TraceEvent::BeamFailed {
                    step: step_index,
                    variable: step.variable.clone(),
                    parent: parent.fingerprint(),
                    error: err.to_string(),
                });
                last_error = Some(err.to_string());
                failed += 1;
                continue;
            }
            let batch = alloc::vec![CandidateChecks {
                value: placeholder.clone(),
                checks,
            }];
            let outcome = verify_values(&batch, state);
            trace.record(TraceEvent::Verification {
                step: step_index,
                variable: step.variable.clone(),
                parent: parent.fingerprint(),
                call_index: 0,
                outcome: outcome.clone(),
            });
            if outcome.accepted.is_empty() {
                continue;
            }
        }

        child.partial_statement = partial_statement(rule, &child.bindings)?;
        children.push(child);
    }
    Ok(StepResult {
        children,
        failed,
        last_error,
    })
}
