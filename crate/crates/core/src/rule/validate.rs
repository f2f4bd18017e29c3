//! Structural validity checks for authored rules.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{infer_principle, Rule};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: String,
    pub check: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Authoring lints that do not invalidate the rule.
    pub warnings: Vec<Violation>,
}

/// Run every check. Violations are data, not failures; `ok` holds
/// exactly when there are none.
pub fn validate_rule(rule: &Rule) -> ValidationReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let push = |list: &mut Vec<Violation>, check: &str, message: String| {
        list.push(Violation {
            rule_id: rule.id.clone(),
            check: check.to_string(),
            message,
        });
    };

    if rule.variables.len() < 3 {
        push(
            &mut violations,
            "min_variables",
            alloc::format!("rule has {} variables, need at least 3", rule.variables.len()),
        );
    }

    if let Err(reason) = premise_chain_is_path(rule) {
        push(&mut violations, "linear_chain", reason);
    }

    let premise_vars: BTreeSet<&str> = rule.premise.iter().flat_map(|p| p.vars()).collect();
    for sym in rule.conclusion.vars() {
        if !premise_vars.contains(sym) {
            push(
                &mut violations,
                "conclusion_args_in_premise",
                alloc::format!("conclusion variable {sym} never appears in the premise"),
            );
        }
    }

    if rule.premise.contains(&rule.conclusion) {
        push(
            &mut violations,
            "tautology",
            "a premise predicate is identical to the conclusion".to_string(),
        );
    }

    for pred in rule.premise.iter().chain(core::iter::once(&rule.conclusion)) {
        if !rule.templates.has_positive(&pred.name) {
            push(
                &mut violations,
                "templates_present",
                alloc::format!("predicate {} has no verbalization template", pred.name),
            );
        }
    }
    let conclusion_templates = rule.templates.get(&rule.conclusion.name);
    if conclusion_templates.and_then(|t| t.negated.as_ref()).is_none() {
        push(
            &mut violations,
            "templates_present",
            alloc::format!("conclusion {} has no negated template", rule.conclusion.name),
        );
    }
    if conclusion_templates.and_then(|t| t.question.as_ref()).is_none() {
        push(
            &mut violations,
            "templates_present",
            alloc::format!("conclusion {} has no question template", rule.conclusion.name),
        );
    }

    // Authoring lint: the conclusion verb should agree with the declared
    // principle. Semantic near-tautologies need world knowledge and are
    // out of reach here.
    if infer_principle(&rule.conclusion) != rule.principle {
        push(
            &mut warnings,
            "principle_heuristic",
            alloc::format!(
                "conclusion verb {} reads as {}, but the rule declares {}",
                rule.conclusion.name,
                infer_principle(&rule.conclusion),
                rule.principle
            ),
        );
    }

    ValidationReport {
        ok: violations.is_empty(),
        violations,
        warnings,
    }
}

/// The premise co-occurrence graph (variables as nodes, predicates as
/// edges) must form a simple path so the variables can be searched one
/// by one without repetition.
fn premise_chain_is_path(rule: &Rule) -> Result<(), String> {
    let nodes: BTreeSet<&str> = rule.variables.keys().map(String::as_str).collect();
    let mut edges: BTreeSet<(&str, &str)> = BTreeSet::new();
    for pred in &rule.premise {
        let vars: Vec<&str> = pred.vars().collect();
        if let [a, b] = vars.as_slice() {
            if a != b {
                let edge = if a < b { (*a, *b) } else { (*b, *a) };
                edges.insert(edge);
            }
        }
    }

    if nodes.len() <= 1 {
        return Ok(());
    }
    if edges.len() != nodes.len() - 1 {
        return Err(alloc::format!(
            "premise graph has {} edges over {} variables; a chain needs exactly {}",
            edges.len(),
            nodes.len(),
            nodes.len() - 1
        ));
    }

    let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, b) in &edges {
        *degree.entry(a).or_default() += 1;
        *degree.entry(b).or_default() += 1;
    }
    if let Some((sym, d)) = degree.iter().find(|(_, d)| **d > 2) {
        return Err(alloc::format!("variable {sym} co-occurs with {d} neighbors; a chain allows 2"));
    }

    // Edge count and degree bound rule out cycles-with-orphans only if
    // the graph is connected; walk it.
    let start = nodes.iter().next().expect("nonempty");
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut stack = alloc::vec![*start];
    while let Some(cur) = stack.pop() {
        if !seen.insert(cur) {
            continue;
        }
        for (a, b) in &edges {
            if *a == cur && !seen.contains(b) {
                stack.push(b);
            } else if *b == cur && !seen.contains(a) {
                stack.push(a);
            }
        }
    }
    if seen.len() != nodes.len() {
        let stray: Vec<&str> = nodes.difference(&seen).copied().collect();
        return Err(alloc::format!("variables {} are disconnected from the chain", stray.join(", ")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{parse_rule, parse_rule_with, RuleMeta};

    fn with_conclusion_templates(src: &str) -> Rule {
        let mut rule = parse_rule(src).unwrap();
        let name = rule.conclusion.name.clone();
        rule.templates.set_negated(&name, "{subject} negation {object}");
        rule.templates.set_question(&name, "question {subject} {object}");
        rule
    }

    #[test]
    fn allergen_rule_is_valid() {
        let rule = with_conclusion_templates(
            "is_allergic_to(Person X, Food allergen A) \
             & is_ingredient_in(Ingredient Z, Name of a dish or food B) \
             & is_one_type_of(Ingredient Z, Food allergen A) \
             -> is_not_able_to_eat(Person X, Name of a dish or food B)",
        );
        let report = validate_rule(&rule);
        assert!(report.ok, "unexpected violations: {:?}", report.violations);
    }

    #[test]
    fn two_variable_rule_flagged() {
        let rule = with_conclusion_templates("p(T A, T B) -> q(T A, T B)");
        let report = validate_rule(&rule);
        assert!(report.violations.iter().any(|v| v.check == "min_variables"));
    }

    #[test]
    fn star_graph_flagged_as_nonlinear() {
        let rule = with_conclusion_templates(
            "p(T X, T A) & q(T X, T B) & r(T X, T C) -> s(T X, T A)",
        );
        let report = validate_rule(&rule);
        assert!(report.violations.iter().any(|v| v.check == "linear_chain"));
    }

    #[test]
    fn tautology_flagged() {
        let rule = with_conclusion_templates("p(T A, T B) & q(T B, T C) -> p(T A, T B)");
        let report = validate_rule(&rule);
        assert!(report.violations.iter().any(|v| v.check == "tautology"));
    }

    #[test]
    fn conclusion_only_variable_flagged() {
        let rule = with_conclusion_templates("p(T A, T B) & q(T B, T C) -> r(T A, T D)");
        let report = validate_rule(&rule);
        assert!(report
            .violations
            .iter()
            .any(|v| v.check == "conclusion_args_in_premise" && v.message.contains('D')));
    }

    #[test]
    fn missing_conclusion_variants_flagged() {
        let rule = parse_rule("p(T A, T B) & q(T B, T C) -> r(T A, T C)").unwrap();
        let report = validate_rule(&rule);
        let count = report
            .violations
            .iter()
            .filter(|v| v.check == "templates_present")
            .count();
        assert_eq!(count, 2); // negated and question forms
    }

    #[test]
    fn principle_mismatch_is_a_warning_not_a_violation() {
        let mut rule = with_conclusion_templates("p(T A, T B) & q(T B, T C) -> cannot_use(T A, T C)");
        rule.principle = crate::rule::Principle::Compatibility;
        let report = validate_rule(&rule);
        assert!(report.ok);
        assert!(report.warnings.iter().any(|w| w.check == "principle_heuristic"));
    }

    #[test]
    fn disconnected_variable_flagged() {
        // D only co-occurs with E; both sit apart from the A-B-C chain.
        // Edge count alone cannot catch this shape (cycle + stray edge).
        let rule = with_conclusion_templates(
            "p(T A, T B) & q(T B, T C) & r(T C, T A) & s(T D, T E) -> t(T A, T B)",
        );
        let report = validate_rule(&rule);
        assert!(report.violations.iter().any(|v| v.check == "linear_chain"));
    }

    /// Brute-force oracle: a graph on <= 6 nodes is a simple path iff
    /// some permutation of the nodes has exactly the consecutive pairs
    /// as its edge set.
    fn is_path_by_enumeration(nodes: &[&str], edges: &BTreeSet<(String, String)>) -> bool {
        fn permutations(items: &[&str]) -> Vec<Vec<String>> {
            if items.len() <= 1 {
                return alloc::vec![items.iter().map(|s| s.to_string()).collect()];
            }
            let mut out = Vec::new();
            for (i, head) in items.iter().enumerate() {
                let rest: Vec<&str> = items
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, s)| *s)
                    .collect();
                for mut tail in permutations(&rest) {
                    tail.insert(0, head.to_string());
                    out.push(tail);
                }
            }
            out
        }
        permutations(nodes).into_iter().any(|order| {
            let expected: BTreeSet<(String, String)> = order
                .windows(2)
                .map(|w| {
                    if w[0] < w[1] {
                        (w[0].clone(), w[1].clone())
                    } else {
                        (w[1].clone(), w[0].clone())
                    }
                })
                .collect();
            expected == *edges
        })
    }

    #[test]
    fn chain_check_agrees_with_permutation_oracle() {
        let cases = [
            ("p(T A, T B) & q(T B, T C) -> r(T A, T C)", true),
            ("p(T X, T A) & q(T X, T B) & r(T X, T C) -> s(T X, T A)", false),
            ("p(T A, T B) & q(T B, T C) & r(T C, T A) -> s(T A, T B)", false),
            (
                "p(T A, T B) & q(T B, T C) & r(T C, T D) & s(T D, T E) -> t(T A, T E)",
                true,
            ),
        ];
        for (src, _expected) in cases {
            let rule = parse_rule_with(src, RuleMeta::default()).unwrap();
            let nodes: Vec<&str> = rule.variables.keys().map(String::as_str).collect();
            let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
            for pred in &rule.premise {
                let vars: Vec<&str> = pred.vars().collect();
                if let [a, b] = vars.as_slice() {
                    if a != b {
                        let (x, y) = if a < b { (*a, *b) } else { (*b, *a) };
                        edges.insert((x.to_string(), y.to_string()));
                    }
                }
            }
            let oracle = is_path_by_enumeration(&nodes, &edges);
            let checked = premise_chain_is_path(&rule).is_ok();
            assert_eq!(checked, oracle, "disagreement on {src}");
        }
    }
}
