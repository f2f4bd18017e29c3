//! Knowledge beam search over variable bindings.
//!
//! The "beam" here is a partial assignment of the rule's variables, not
//! a token sequence. Each plan step expands every live beam with
//! candidate values from the knowledge model, gates them through the
//! critic's dynamic thresholds, scores the verbalized partial statement,
//! and reranks toward the head or tail of the likelihood distribution
//! before moving to the next variable.

mod critic;
mod prompt;
mod run;
mod trace;

pub use critic::{
    verify_values, CandidateChecks, CheckKey, CriticState, RetroRejection, ThresholdKeying,
    ValueCheck, VerificationOutcome,
};
pub use prompt::{build_variable_prompt, PromptError};
pub use run::{
    kept_count, partial_statement, rerank_beams, run_search, search_variable, Beam, RerankMode,
    RunOutcome, SearchConfig, SearchError, SearchGateway, StepResult,
};
pub use trace::{NullSink, TraceEvent, TraceSink, VecSink};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Distribution;
    use crate::gateway::scripted::{ScriptedCritic, ScriptedKnowledge, ScriptedScorer};
    use crate::gateway::ScoreResult;
    use crate::rule::{parse_rule, plan_search_order, PlanDirection};
    use alloc::string::{String, ToString};
    use alloc::vec::Vec;

    fn scored_beams(scores: &[f64]) -> Vec<Beam> {
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut beam = Beam::empty();
                beam.partial_statement = alloc::format!("statement {i}");
                beam.score = Some(ScoreResult {
                    total_logprob: *s,
                    token_count: 3,
                });
                beam
            })
            .collect()
    }

    #[test]
    fn rerank_keeps_75_percent() {
        let cfg = SearchConfig::default();
        let beams = scored_beams(&(0..100).map(|i| -(i as f64)).collect::<Vec<_>>());
        assert_eq!(rerank_beams(beams, &cfg).len(), 75);
    }

    #[test]
    fn rerank_caps_at_200() {
        let cfg = SearchConfig::default();
        let beams = scored_beams(&(0..300).map(|i| -(i as f64)).collect::<Vec<_>>());
        assert_eq!(rerank_beams(beams, &cfg).len(), 200);
    }

    #[test]
    fn rerank_single_beam_survives() {
        let cfg = SearchConfig::default();
        let beams = scored_beams(&[-1.0]);
        assert_eq!(rerank_beams(beams, &cfg).len(), 1);
    }

    #[test]
    fn tail_keeps_lowest_head_keeps_highest() {
        let mut cfg = SearchConfig {
            keep_fraction: 0.5,
            ..SearchConfig::default()
        };
        let beams = scored_beams(&[-1.0, -4.0, -2.0, -3.0]);
        cfg.direction = Distribution::Tail;
        let tail = rerank_beams(beams.clone(), &cfg);
        let tail_scores: Vec<f64> = tail.iter().map(|b| b.score.unwrap().total_logprob).collect();
        assert_eq!(tail_scores, [-4.0, -3.0]);
        cfg.direction = Distribution::Head;
        let head = rerank_beams(beams, &cfg);
        let head_scores: Vec<f64> = head.iter().map(|b| b.score.unwrap().total_logprob).collect();
        assert_eq!(head_scores, [-1.0, -2.0]);
    }

    #[test]
    fn direction_antisymmetry_when_everything_is_kept() {
        let cfg_tail = SearchConfig {
            keep_fraction: 1.0,
            direction: Distribution::Tail,
            ..SearchConfig::default()
        };
        let cfg_head = SearchConfig {
            keep_fraction: 1.0,
            direction: Distribution::Head,
            ..SearchConfig::default()
        };
        let beams = scored_beams(&[-5.0, -1.0, -3.0]);
        let mut tail: Vec<String> = rerank_beams(beams.clone(), &cfg_tail)
            .iter()
            .map(|b| b.partial_statement.clone())
            .collect();
        let mut head: Vec<String> = rerank_beams(beams, &cfg_head)
            .iter()
            .map(|b| b.partial_statement.clone())
            .collect();
        head.reverse();
        assert_eq!(tail, head);
        tail.sort_unstable();
        assert_eq!(tail.len(), 3);
    }

    fn two_step_rule() -> crate::rule::Rule {
        parse_rule("likes(Person X, Color A) -> prefers(Person X, Color A)").unwrap()
    }

    #[test]
    fn early_stop_terminates_after_two_empty_calls() {
        let rule = two_step_rule();
        let plan = plan_search_order(&rule, PlanDirection::ForwardFromSubject).unwrap();
        let step = plan.steps[1].clone();

        // Four scripted calls available, all empty; the search must stop
        // after the second.
        let mut knowledge = ScriptedKnowledge::new(alloc::vec![
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        let mut critic = ScriptedCritic::new(1.0);
        let mut scorer = ScriptedScorer::new();
        let mut gateway = SearchGateway {
            knowledge: &mut knowledge,
            critic: &mut critic,
            scorer: &mut scorer,
        };
        let mut state = CriticState::default();
        let mut sink = VecSink::default();
        let root = {
            let mut beam = Beam::empty();
            beam.bindings.insert("X".to_string(), "Person X".to_string());
            beam
        };
        let result = search_variable(
            &[root],
            &step,
            1,
            &rule,
            &SearchConfig::default(),
            &mut gateway,
            &mut state,
            &mut sink,
        )
        .unwrap();
        assert!(result.children.is_empty());
        assert_eq!(knowledge.calls, 2);
        assert!(sink
            .events
            .iter()
            .any(|e| matches!(e, TraceEvent::EarlyStop { calls_made: 2, .. })));
    }

    #[test]
    fn accepted_values_fan_out_into_child_beams() {
        let rule = two_step_rule();
        let plan = plan_search_order(&rule, PlanDirection::ForwardFromSubject).unwrap();
        let step = plan.steps[1].clone();
        let mut knowledge =
            ScriptedKnowledge::new(alloc::vec!["1. red\n2. green\n3. blue".to_string()]);
        let mut critic = ScriptedCritic::new(0.9);
        let mut scorer = ScriptedScorer::new();
        let mut gateway = SearchGateway {
            knowledge: &mut knowledge,
            critic: &mut critic,
            scorer: &mut scorer,
        };
        let mut state = CriticState::default();
        let mut sink = NullSink;
        let cfg = SearchConfig {
            calls_per_variable: 1,
            ..SearchConfig::default()
        };
        let root = {
            let mut beam = Beam::empty();
            beam.bindings.insert("X".to_string(), "Person X".to_string());
            beam
        };
        let result =
            search_variable(&[root], &step, 1, &rule, &cfg, &mut gateway, &mut state, &mut sink)
                .unwrap();
        assert_eq!(result.children.len(), 3);
        for child in &result.children {
            assert!(child.bindings.contains_key("A"));
            assert!(child.partial_statement.starts_with("Person X likes"));
        }
    }

    #[test]
    fn transport_failure_kills_the_beam_not_the_step() {
        struct FailingKnowledge;
        impl crate::gateway::KnowledgeSource for FailingKnowledge {
            fn complete(
                &mut self,
                _req: &crate::gateway::GenerationRequest,
            ) -> Result<String, crate::gateway::GatewayError> {
                Err(crate::gateway::GatewayError::transport("connection reset"))
            }
            fn identity(&self) -> String {
                "failing".into()
            }
        }
        let rule = two_step_rule();
        let plan = plan_search_order(&rule, PlanDirection::ForwardFromSubject).unwrap();
        let step = plan.steps[1].clone();
        let mut knowledge = FailingKnowledge;
        let mut critic = ScriptedCritic::new(1.0);
        let mut scorer = ScriptedScorer::new();
        let mut gateway = SearchGateway {
            knowledge: &mut knowledge,
            critic: &mut critic,
            scorer: &mut scorer,
        };
        let mut state = CriticState::default();
        let root = {
            let mut beam = Beam::empty();
            beam.bindings.insert("X".to_string(), "Person X".to_string());
            beam
        };
        let result = search_variable(
            &[root],
            &step,
            1,
            &rule,
            &SearchConfig::default(),
            &mut gateway,
            &mut state,
            &mut NullSink,
        )
        .unwrap();
        assert_eq!(result.failed, 1);
        assert!(result.children.is_empty());
        assert!(result.last_error.unwrap().contains("connection reset"));
    }

    #[test]
    fn kept_count_formula() {
        assert_eq!(kept_count(1, 0.75, 200), 1);
        assert_eq!(kept_count(4, 0.75, 200), 3);
        assert_eq!(kept_count(100, 0.75, 200), 75);
        assert_eq!(kept_count(300, 0.75, 200), 200);
    }

    #[test]
    fn retro_rejection_prunes_children_within_the_step() {
        // Two parents share a name-keyed fact stream. The first parent's
        // accepted value (0.7) is displaced when the second parent's
        // call raises the locked threshold to 0.85.
        let rule = two_step_rule();
        let plan = plan_search_order(&rule, PlanDirection::ForwardFromSubject).unwrap();
        let step = plan.steps[1].clone();
        let mut knowledge =
            ScriptedKnowledge::new(alloc::vec!["1. beige".to_string(), "1. crimson".to_string()]);
        let mut critic = ScriptedCritic::new(1.0);
        critic.set("Person X likes beige.", 0.7);
        critic.set("Person X likes crimson.", 0.86);
        // Type conformity stays high for both.
        critic.set("beige is a Color.", 0.95);
        critic.set("crimson is a Color.", 0.95);
        let mut scorer = ScriptedScorer::new();
        let mut gateway = SearchGateway {
            knowledge: &mut knowledge,
            critic: &mut critic,
            scorer: &mut scorer,
        };
        let mut state = CriticState::default();
        let cfg = SearchConfig {
            calls_per_variable: 1,
            keying: ThresholdKeying::PredicateName,
            ..SearchConfig::default()
        };
        let parent_a = {
            let mut beam = Beam::empty();
            beam.bindings.insert("X".to_string(), "Person X".to_string());
            beam
        };
        let parent_b = parent_a.clone();
        let result = search_variable(
            &[parent_a, parent_b],
            &step,
            1,
            &rule,
            &cfg,
            &mut gateway,
            &mut state,
            &mut NullSink,
        )
        .unwrap();
        let values: Vec<&str> = result
            .children
            .iter()
            .map(|c| c.bindings["A"].as_str())
            .collect();
        assert_eq!(values, ["crimson"], "beige must be pruned retroactively");
    }
}
