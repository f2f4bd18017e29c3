//! Instruction-only generation baselines and post-hoc reranking.
//!
//! The baseline asks a model to fill every variable of a rule at once
//! from a single instruction, optionally pushed toward rare values by
//! one of ten registered long-tail suffixes. Output tuples run through
//! the same rendering path as search output, so downstream analysis is
//! format-identical.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Distribution, StatementRecord};
use crate::gateway::normalize;
use crate::rule::{verbalize_predicate_plain, Rule};

/// The canonical long-tail instruction suffixes, for rules whose free
/// variables are A, B, and Z. Indexed by `suffix_id - 1`.
pub const LONGTAIL_SUFFIXES: [&str; 10] = [
    "Use less frequent terms of A and B and Z.",
    "Use terms of A and B and Z that are less common.",
    "Use terms with lower frequency for A and B and Z.",
    "Use terms of A and B and Z that have lower probability in language model distribution.",
    "Use less frequent words of A and B and Z.",
    "Use words of A and B and Z that are less common.",
    "Use words with lower frequency for A and B and Z.",
    "Use less frequent entities of A and B and Z.",
    "Use entities of A and B and Z that are less common.",
    "Use entities with lower frequency for A and B and Z.",
];

const SUFFIX_PATTERNS: [(&str, &str); 10] = [
    ("Use less frequent terms of ", "."),
    ("Use terms of ", " that are less common."),
    ("Use terms with lower frequency for ", "."),
    ("Use terms of ", " that have lower probability in language model distribution."),
    ("Use less frequent words of ", "."),
    ("Use words of ", " that are less common."),
    ("Use words with lower frequency for ", "."),
    ("Use less frequent entities of ", "."),
    ("Use entities of ", " that are less common."),
    ("Use entities with lower frequency for ", "."),
];

/// Canonical registry entry for `suffix_id` in 1..=10.
pub fn longtail_suffix(suffix_id: u8) -> Option<&'static str> {
    LONGTAIL_SUFFIXES.get(usize::from(suffix_id).checked_sub(1)?).copied()
}

/// Suffix with the variable enumeration adapted to this rule's free
/// variables. For rules over A, B, Z this reproduces the registry entry
/// byte for byte.
pub fn suffix_for_rule(rule: &Rule, suffix_id: u8) -> Option<String> {
    let (prefix, tail) = SUFFIX_PATTERNS.get(usize::from(suffix_id).checked_sub(1)?)?;
    let vars = rule.free_variables().join(" and ");
    Some(alloc::format!("{prefix}{vars}{tail}"))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("unknown long-tail suffix id {0} (valid: 1..=10)")]
    UnknownSuffix(u8),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselinePrompt {
    pub rule_id: String,
    pub body: String,
    pub longtail_suffix_id: Option<u8>,
}

/// Render the instruction-only prompt: data-type declarations, the rule
/// as one bracketed-variable sentence, and the tuple reply format,
/// generalized to the rule's variables.
pub fn build_instruction_prompt(
    rule: &Rule,
    n: usize,
    suffix_id: Option<u8>,
) -> Result<BaselinePrompt, BaselineError> {
    if let Some(id) = suffix_id {
        if longtail_suffix(id).is_none() {
            return Err(BaselineError::UnknownSuffix(id));
        }
    }
    let free = rule.free_variables();
    let declarations: Vec<String> = free
        .iter()
        .map(|sym| alloc::format!("{sym} is a {}", rule.data_type(sym).unwrap_or_default()))
        .collect();
    let var_list = free.join(", ");
    let format_list: Vec<String> = free.iter().map(|sym| alloc::format!("{sym}=")).collect();

    // Bracket the searched variables, keep the subject as its
    // placeholder surface form.
    let mut bracket_bindings: BTreeMap<String, String> = BTreeMap::new();
    for symbol in rule.variables.keys() {
        if *symbol == rule.subject_symbol {
            bracket_bindings.insert(symbol.clone(), rule.subject_placeholder());
        } else {
            bracket_bindings.insert(symbol.clone(), alloc::format!("[{symbol}]"));
        }
    }
    let premise: Vec<String> = rule
        .premise
        .iter()
        .map(|p| verbalize_predicate_plain(p, &bracket_bindings, &rule.templates))
        .collect::<Result<_, _>>()
        .unwrap_or_default();
    let conclusion = verbalize_predicate_plain(&rule.conclusion, &bracket_bindings, &rule.templates)
        .unwrap_or_default();

    let mut body = alloc::format!(
        "In the following sentence, {decls}. Find values of {var_list} to fill in the blank \
         in the sentence 'If {premise}, then {conclusion}.' and make it a grammatical and \
         correct sentence. Give me {n} values in the format '1. {format}'.",
        decls = declarations.join(", "),
        premise = premise.join(" and "),
        format = format_list.join(", "),
    );
    if let Some(id) = suffix_id {
        body.push(' ');
        body.push_str(&suffix_for_rule(rule, id).expect("suffix id validated"));
    }
    Ok(BaselinePrompt {
        rule_id: rule.id.clone(),
        body,
        longtail_suffix_id: suffix_id,
    })
}

/// Bindings parsed from a tuple reply, with unparseable lines kept as
/// residue.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TupleReply {
    pub bindings: Vec<BTreeMap<String, String>>,
    pub residue: Vec<String>,
}

/// Parse numbered `A=v1, B=v2, ...` lines. Lines missing a variable are
/// skipped into the residue; duplicate bindings are dropped after
/// normalization.
pub fn parse_tuple_reply(reply: &str, rule: &Rule) -> TupleReply {
    let free: Vec<&str> = rule.free_variables();
    let mut out = TupleReply::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for raw in reply.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let body = match line
            .char_indices()
            .take_while(|(_, c)| c.is_ascii_digit())
            .count()
        {
            0 => line,
            digits => line[digits..]
                .strip_prefix('.')
                .or_else(|| line[digits..].strip_prefix(')'))
                .map(str::trim)
                .unwrap_or(line),
        };
        let mut binding: BTreeMap<String, String> = BTreeMap::new();
        for part in body.split(',') {
            if let Some((sym, value)) = part.split_once('=') {
                let sym = sym.trim();
                let value = value.trim().trim_end_matches('.').trim();
                if free.contains(&sym) && !value.is_empty() {
                    binding.insert(sym.to_string(), value.to_string());
                }
            }
        }
        if free.iter().all(|sym| binding.contains_key(*sym)) {
            let fingerprint: Vec<String> = free
                .iter()
                .map(|sym| normalize(&binding[*sym]))
                .collect();
            if seen.insert(fingerprint.join("\u{1f}")) {
                out.bindings.push(binding);
            }
        } else {
            out.residue.push(line.to_string());
        }
    }
    out
}

/// Post-hoc reranking over finished records: one global sort by score
/// toward the distribution end, truncated to `ceil(keep_fraction * n)`.
/// No per-variable structure.
pub fn posthoc_rerank(
    records: &[StatementRecord],
    direction: Distribution,
    keep_fraction: f64,
) -> Vec<StatementRecord> {
    let mut scored: Vec<&StatementRecord> =
        records.iter().filter(|r| r.score.is_some()).collect();
    match direction {
        Distribution::Tail => scored.sort_by(|a, b| {
            a.score_value()
                .partial_cmp(&b.score_value())
                .unwrap_or(core::cmp::Ordering::Equal)
        }),
        Distribution::Head => scored.sort_by(|a, b| {
            b.score_value()
                .partial_cmp(&a.score_value())
                .unwrap_or(core::cmp::Ordering::Equal)
        }),
    }
    let keep = libm::ceil(keep_fraction * scored.len() as f64) as usize;
    scored.truncate(keep);
    scored.into_iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{emit_records, Distribution, EmitContext};
    use crate::gateway::scripted::ScriptedScorer;
    use crate::rule::parse_rule;
    use crate::search::Beam;

    fn allergen_rule() -> Rule {
        let mut rule = parse_rule(
            "is_allergic_to(Person X, Food allergen A) \
             & is_ingredient_in(Ingredient Z, Name of a dish or food B) \
             & is_one_type_of(Ingredient Z, Food allergen A) \
             -> is_not_able_to_eat(Person X, Name of a dish or food B)",
        )
        .unwrap();
        rule.id = "allergen".into();
        rule.templates
            .set_positive("is_ingredient_in", "{subject} is a ingredient in {object}");
        rule
    }

    #[test]
    fn prompt_matches_instruction_shape() {
        let rule = allergen_rule();
        let prompt = build_instruction_prompt(&rule, 50, None).unwrap();
        assert!(prompt.body.starts_with(
            "In the following sentence, A is a Food allergen, B is a Name of a dish or food, Z is a Ingredient."
        ));
        assert!(prompt.body.contains("Find values of A, B, Z"));
        assert!(prompt.body.contains("'If Person X is allergic to [A]"));
        assert!(prompt.body.contains("then Person X is not able to eat [B].'"));
        assert!(prompt.body.contains("make it a grammatical and correct sentence"));
        assert!(prompt.body.contains("Give me 50 values in the format '1. A=, B=, Z='."));
        assert_eq!(prompt.longtail_suffix_id, None);
    }

    #[test]
    fn suffix_one_is_appended_verbatim() {
        let rule = allergen_rule();
        let prompt = build_instruction_prompt(&rule, 50, Some(1)).unwrap();
        assert!(prompt.body.ends_with("Use less frequent terms of A and B and Z."));
        assert_eq!(prompt.longtail_suffix_id, Some(1));
    }

    #[test]
    fn unknown_suffix_is_rejected() {
        let rule = allergen_rule();
        assert_eq!(
            build_instruction_prompt(&rule, 50, Some(11)).unwrap_err(),
            BaselineError::UnknownSuffix(11)
        );
        assert_eq!(
            build_instruction_prompt(&rule, 50, Some(0)).unwrap_err(),
            BaselineError::UnknownSuffix(0)
        );
    }

    #[test]
    fn format_clause_projects_the_rule_variables() {
        let rule = parse_rule("p(T X, T A) & q(T A, T B) -> r(T X, T B)").unwrap();
        let prompt = build_instruction_prompt(&rule, 10, None).unwrap();
        assert!(prompt.body.contains("'1. A=, B='."));
        assert!(!prompt.body.contains("Z="));
    }

    #[test]
    fn registry_and_per_rule_rendering_agree_on_abz() {
        let rule = allergen_rule();
        for id in 1..=10u8 {
            assert_eq!(
                suffix_for_rule(&rule, id).unwrap(),
                longtail_suffix(id).unwrap(),
                "suffix {id} must reproduce the registry for A/B/Z rules"
            );
        }
    }

    #[test]
    fn tuple_reply_round_trip() {
        let rule = allergen_rule();
        let reply = "1. A=milk, B=latte, Z=milk\n2. A=peanut, B=satay, Z=peanut butter";
        let parsed = parse_tuple_reply(reply, &rule);
        assert_eq!(parsed.bindings.len(), 2);
        assert_eq!(parsed.bindings[0]["A"], "milk");
        assert_eq!(parsed.bindings[1]["Z"], "peanut butter");
        assert!(parsed.residue.is_empty());

        // Format a binding back into a line and reparse it.
        let free = rule.free_variables();
        let fields: Vec<String> = free
            .iter()
            .map(|sym| alloc::format!("{sym}={}", parsed.bindings[0][*sym]))
            .collect();
        let line = alloc::format!("1. {}", fields.join(", "));
        let again = parse_tuple_reply(&line, &rule);
        assert_eq!(again.bindings, alloc::vec![parsed.bindings[0].clone()]);
    }

    #[test]
    fn incomplete_and_duplicate_lines_are_handled() {
        let rule = allergen_rule();
        let reply = "1. A=milk, B=latte\n2. A=milk, B=latte, Z=milk\n3. A=MILK, B=Latte, Z=milk";
        let parsed = parse_tuple_reply(reply, &rule);
        assert_eq!(parsed.bindings.len(), 1);
        assert_eq!(parsed.residue.len(), 1);
    }

    fn records_with_scores(scores: &[f64]) -> Vec<StatementRecord> {
        let mut rule = parse_rule(
            "is_allergic_to(Person X, Ingredient A) & ingredient_in(Ingredient A, Dish B) \
             -> is_not_able_to_eat(Person X, Dish B)",
        )
        .unwrap();
        rule.id = "posthoc".into();
        rule.templates
            .set_negated("is_not_able_to_eat", "{subject} is able to eat {object}");
        rule.templates
            .set_question("is_not_able_to_eat", "can {subject} eat {object}");
        let beams: Vec<Beam> = scores
            .iter()
            .enumerate()
            .map(|(i, _)| {
                Beam::with_bindings(
                    [
                        ("X".to_string(), "Person X".to_string()),
                        ("A".to_string(), alloc::format!("ing{i}")),
                        ("B".to_string(), alloc::format!("dish{i}")),
                    ]
                    .into(),
                )
            })
            .collect();
        let mut scorer = ScriptedScorer::new();
        let mut records = emit_records(
            &rule,
            &beams,
            Distribution::Tail,
            &mut scorer,
            &EmitContext::default(),
        )
        .unwrap();
        for (record, score) in records.iter_mut().zip(scores) {
            record.score = Some(crate::gateway::ScoreResult {
                total_logprob: *score,
                token_count: 5,
            });
        }
        records
    }

    #[test]
    fn posthoc_keeps_the_right_ends() {
        let records = records_with_scores(&[-1.0, -4.0, -2.0, -3.0]);
        let tail = posthoc_rerank(&records, Distribution::Tail, 0.75);
        assert_eq!(tail.len(), 3);
        assert!(tail.iter().all(|r| r.score_value().unwrap() <= -2.0));
        let head = posthoc_rerank(&records, Distribution::Head, 0.75);
        assert_eq!(head.len(), 3);
        assert!(head.iter().all(|r| r.score_value().unwrap() >= -3.0));
    }

    #[test]
    fn posthoc_is_deterministic() {
        let records = records_with_scores(&[-5.0, -1.0, -1.0, -9.0]);
        let a = posthoc_rerank(&records, Distribution::Tail, 0.5);
        let b = posthoc_rerank(&records, Distribution::Tail, 0.5);
        assert_eq!(a, b);
    }
}
