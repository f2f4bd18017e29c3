//! Shared fixtures and pipeline plumbing for integration tests.
#![allow(dead_code)] // each test binary uses a different subset

use std::collections::BTreeMap;
use std::sync::Arc;

use longtail_core::dataset::{emit_records, Distribution, EmitContext, StatementRecord};
use longtail_core::gateway::synthetic::{
    SyntheticCritic, SyntheticGenerator, SyntheticScorer, SyntheticWorld,
};
use longtail_core::rule::{parse_rule_file, Rule, TemplateSet};
use longtail_core::search::{run_search, NullSink, RunOutcome, SearchConfig, SearchGateway};

pub const WORLD_JSON: &str = include_str!("../../../../fixtures/world.json");
pub const RULES_TXT: &str = include_str!("../../../../fixtures/rules.txt");
pub const NEGATIVE_RULES_TXT: &str = include_str!("../../../../fixtures/rules_negative.txt");

pub fn world() -> Arc<SyntheticWorld> {
    Arc::new(SyntheticWorld::from_json(WORLD_JSON).expect("world fixture parses"))
}

pub fn rules() -> Vec<Rule> {
    parse_rule_file(RULES_TXT).expect("rule corpus parses")
}

pub fn rule(id: &str) -> Rule {
    rules()
        .into_iter()
        .find(|r| r.id == id)
        .unwrap_or_else(|| panic!("missing rule {id}"))
}

/// Union of every rule's templates, for the critic's inverse matcher.
pub fn all_templates(rules: &[Rule]) -> TemplateSet {
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

#[derive(Clone, Copy, Debug)]
pub struct BackendTuning {
    pub seed: u64,
    pub distractor_rate: f64,
    pub critic_noise: f64,
}

impl Default for BackendTuning {
    fn default() -> Self {
        BackendTuning {
            seed: 7,
            distractor_rate: 0.3,
            critic_noise: 0.0,
        }
    }
}

/// Run one rule end to end and emit its records.
pub fn run_rule(
    rule: &Rule,
    cfg: &SearchConfig,
    tuning: BackendTuning,
) -> (RunOutcome, Vec<StatementRecord>) {
    let world = world();
    let templates = all_templates(&rules());
    let mut knowledge = SyntheticGenerator::new(world.clone(), tuning.seed, tuning.distractor_rate);
    let mut critic = SyntheticCritic::new(world.clone(), &templates, tuning.critic_noise, tuning.seed);
    let mut scorer = SyntheticScorer::new(world.clone());
    let mut gateway = SearchGateway {
        knowledge: &mut knowledge,
        critic: &mut critic,
        scorer: &mut scorer,
    };
    let outcome = run_search(rule, cfg, &mut gateway, &mut NullSink).expect("search runs");
    let mut emit_scorer = SyntheticScorer::new(world);
    let ctx = EmitContext {
        seed: cfg.seed,
        backends: BTreeMap::from([
            ("knowledge".to_string(), "synthetic-generator".to_string()),
            ("critic".to_string(), "synthetic-critic".to_string()),
            ("scorer".to_string(), "synthetic-scorer".to_string()),
        ]),
        statistic: cfg.statistic,
        ..EmitContext::default()
    };
    let records = emit_records(rule, &outcome.beams, cfg.direction, &mut emit_scorer, &ctx)
        .expect("emission succeeds");
    (outcome, records)
}

pub fn head_tail_configs(seed: u64) -> (SearchConfig, SearchConfig) {
    let tail = SearchConfig {
        direction: Distribution::Tail,
        seed,
        ..SearchConfig::default()
    };
    let head = SearchConfig {
        direction: Distribution::Head,
        ..tail.clone()
    };
    (head, tail)
}

pub fn mean_score(records: &[StatementRecord]) -> f64 {
    let scores: Vec<f64> = records.iter().filter_map(|r| r.score_value()).collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}
