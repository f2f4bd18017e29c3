//! Prompts for widening a rule template into a family of rules: expand a
//! generic Object/Person variable into concrete subtypes, then ask for a
//! sharper verb for the specialized conclusion. Sending the prompts and
//! returning replies is the model gateway's job; this module only builds
//! prompt text and parses replies.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::{Rule, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("rule {rule_id} has no generic Object or Person variable")]
    NoGenericVariable { rule_id: String },
    #[error("reply \"{reply}\" is not a predicate name ([a-z][a-z0-9_]*)")]
    BadPredicateName { reply: String },
}

fn generic_variable(rule: &Rule) -> Option<(&str, &str)> {
    let mut candidates: Vec<(&str, &str)> = rule
        .variables
        .iter()
        .filter(|(_, ty)| {
            let lower = ty.to_lowercase();
            lower == "object" || lower == "person"
        })
        .map(|(sym, ty)| (sym.as_str(), ty.as_str()))
        .collect();
    // The expansion targets the interactee: Object over Person, and an
    // argument of the conclusion over a premise-only variable.
    candidates.sort_by_key(|(sym, ty)| {
        (
            ty.to_lowercase() != "object",
            !rule.conclusion.mentions(sym),
            sym.to_string(),
        )
    });
    candidates.into_iter().next()
}

fn rule_context(rule: &Rule, symbol: &str) -> String {
    let mut parts: Vec<String> = Vec::new();
    for pred in rule.premise.iter().chain(core::iter::once(&rule.conclusion)) {
        if pred.mentions(symbol) {
            parts.push(rule_pred_decl(rule, pred));
        }
    }
    parts.join(" & ")
}

fn rule_pred_decl(rule: &Rule, pred: &super::Predicate) -> String {
    let arg = |t: &Term| match t {
        Term::Var(sym) => match rule.data_type(sym) {
            Some(ty) => alloc::format!("{ty} {sym}"),
            None => sym.clone(),
        },
        Term::Literal(text) => alloc::format!("\"{text}\""),
    };
    alloc::format!("{}({}, {})", pred.name, arg(&pred.subject), arg(&pred.object))
}

fn article(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// Prompt asking for `k` concrete subtypes of the rule's generic
/// variable that keep the rule true.
pub fn expand_data_types(rule: &Rule, k: usize) -> Result<String, ExpandError> {
    let (symbol, ty) = generic_variable(rule).ok_or_else(|| ExpandError::NoGenericVariable {
        rule_id: rule.id.clone(),
    })?;
    let generic = ty.to_lowercase();
    let noun = if k == 1 { "subcategory" } else { "subcategories" };
    Ok(alloc::format!(
        "In rule \"{context}\", {symbol} is a variable representing {art} {generic}. \
         List {k} {noun} of {generic} that {symbol} could be that also make the rule true.",
        context = rule_context(rule, symbol),
        art = article(&generic),
    ))
}

/// Prompt asking for the best verb once the generic variable has been
/// specialized to a concrete subtype.
pub fn optimize_verb_prompt(rule: &Rule, specialized_type: &str) -> Result<String, ExpandError> {
    let (symbol, _) = generic_variable(rule).ok_or_else(|| ExpandError::NoGenericVariable {
        rule_id: rule.id.clone(),
    })?;
    let original = rule_pred_decl(rule, &rule.conclusion);
    let masked_arg = |t: &Term| match t {
        Term::Var(sym) if sym == symbol => alloc::format!("{specialized_type} {sym}"),
        Term::Var(sym) => match rule.data_type(sym) {
            Some(ty) => alloc::format!("{ty} {sym}"),
            None => sym.clone(),
        },
        Term::Literal(text) => alloc::format!("\"{text}\""),
    };
    Ok(alloc::format!(
        "{original} is equal to [mask]({}, {}). Write the best predicate that could fit in [mask] token.",
        masked_arg(&rule.conclusion.subject),
        masked_arg(&rule.conclusion.object),
    ))
}

/// Parse an expansion reply into subtype labels (comma-separated).
pub fn parse_expansion_reply(reply: &str) -> Vec<String> {
    reply
        .split(',')
        .map(|part| part.trim().trim_end_matches('.').trim().to_string())
        .filter(|part| !part.is_empty())
        .collect()
}

/// The specialized conclusion after a verb-optimization reply: the new
/// predicate name over the conclusion's arguments with the generic
/// variable's type swapped for the subtype.
pub fn specialized_conclusion(
    rule: &Rule,
    new_name: &str,
    specialized_type: &str,
) -> Result<String, ExpandError> {
    let (symbol, _) = generic_variable(rule).ok_or_else(|| ExpandError::NoGenericVariable {
        rule_id: rule.id.clone(),
    })?;
    let arg = |t: &Term| match t {
        Term::Var(sym) if sym == symbol => alloc::format!("{specialized_type} {sym}"),
        Term::Var(sym) => match rule.data_type(sym) {
            Some(ty) => alloc::format!("{ty} {sym}"),
            None => sym.clone(),
        },
        Term::Literal(text) => alloc::format!("\"{text}\""),
    };
    Ok(alloc::format!(
        "{new_name}({}, {})",
        arg(&rule.conclusion.subject),
        arg(&rule.conclusion.object),
    ))
}

/// Parse a verb-optimization reply into a predicate name.
pub fn parse_verb_reply(reply: &str) -> Result<String, ExpandError> {
    let cleaned = reply
        .trim()
        .trim_matches(|c| c == '"' || c == '`' || c == '\'')
        .trim_end_matches('.')
        .trim();
    let valid = cleaned
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_lowercase())
        && cleaned
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if valid {
        Ok(cleaned.to_string())
    } else {
        Err(ExpandError::BadPredicateName {
            reply: reply.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::parse_rule;

    const OPERATE: &str = "is_of_age(Person A, Age X) \
        & requires_a_minimal_age_of(Object B, Age Y) \
        & is_smaller_than(Age X, Age Y) \
        -> cannot_operate(Person A, Object B)";

    #[test]
    fn expansion_prompt_matches_expected_shape() {
        let mut rule = parse_rule(OPERATE).unwrap();
        rule.subject_symbol = "A".into();
        let prompt = expand_data_types(&rule, 10).unwrap();
        assert!(prompt.contains(
            "List 10 subcategories of object that B could be that also make the rule true."
        ));
        assert!(prompt.contains("requires_a_minimal_age_of(Object B, Age Y)"));
        assert!(prompt.contains("cannot_operate(Person A, Object B)"));
        assert!(prompt.contains("B is a variable representing an object."));
    }

    #[test]
    fn singular_subcategory_for_k_one() {
        let rule = parse_rule(OPERATE).unwrap();
        let prompt = expand_data_types(&rule, 1).unwrap();
        assert!(prompt.contains("List 1 subcategory of object"));
    }

    #[test]
    fn expansion_reply_splits_on_commas() {
        let labels = parse_expansion_reply(
            "Vehicle, Machinery, Alcohol, Firearm, Tattoo Equipment, Tobacco Product",
        );
        assert_eq!(labels.len(), 6);
        assert_eq!(labels[0], "Vehicle");
        assert_eq!(labels[5], "Tobacco Product");
    }

    #[test]
    fn verb_prompt_masks_the_conclusion() {
        let rule = parse_rule(OPERATE).unwrap();
        let prompt = optimize_verb_prompt(&rule, "Vehicle").unwrap();
        assert!(prompt.contains("[mask](Person A, Vehicle B)"));
        assert!(prompt.starts_with("cannot_operate(Person A, Object B) is equal to"));
    }

    #[test]
    fn identity_specialization_is_well_formed() {
        let rule = parse_rule(OPERATE).unwrap();
        let prompt = optimize_verb_prompt(&rule, "Object").unwrap();
        assert!(prompt.contains("[mask](Person A, Object B)"));
    }

    #[test]
    fn verb_reply_parses_and_validates() {
        assert_eq!(parse_verb_reply("cannot_drive").unwrap(), "cannot_drive");
        assert_eq!(parse_verb_reply(" cannot_drive.\n").unwrap(), "cannot_drive");
        assert!(parse_verb_reply("Cannot Drive").is_err());
    }

    #[test]
    fn verb_reply_renames_the_specialized_conclusion() {
        let rule = parse_rule(OPERATE).unwrap();
        let name = parse_verb_reply("cannot_drive").unwrap();
        assert_eq!(
            specialized_conclusion(&rule, &name, "Vehicle").unwrap(),
            "cannot_drive(Person A, Vehicle B)"
        );
    }

    #[test]
    fn missing_generic_variable_is_an_error() {
        let rule = parse_rule("p(Food A, Tool B) & q(Tool B, Food C) -> r(Food A, Food C)").unwrap();
        assert!(matches!(
            expand_data_types(&rule, 10),
            Err(ExpandError::NoGenericVariable { .. })
        ));
    }
}
