//! `rules lint|plan|expand` — authoring utilities over a rule corpus.

use std::path::Path;

use anyhow::{bail, Context, Result};

use longtail_core::rule::{
    expand_data_types, optimize_verb_prompt, parse_expansion_reply, plan_search_order,
    validate_rule, PlanDirection, Rule,
};

use crate::io::load_rules;

pub fn lint(path: &Path) -> Result<()> {
    let rules = load_rules(path)?;
    let mut invalid = 0usize;
    for rule in &rules {
        let report = validate_rule(rule);
        if report.ok {
            println!("{}: ok", rule.id);
        } else {
            invalid += 1;
            println!("{}: INVALID", rule.id);
            for violation in &report.violations {
                println!("  - {}: {}", violation.check, violation.message);
            }
        }
        for warning in &report.warnings {
            println!("  ~ warning {}: {}", warning.check, warning.message);
        }
    }
    println!("{} rules, {} invalid", rules.len(), invalid);
    if invalid > 0 {
        bail!("{invalid} invalid rules");
    }
    Ok(())
}

fn find_rule(path: &Path, id: &str) -> Result<Rule> {
    load_rules(path)?
        .into_iter()
        .find(|r| r.id == id)
        .with_context(|| format!("no rule {id} in {}", path.display()))
}

pub fn plan(path: &Path, id: &str, direction: PlanDirection) -> Result<()> {
    let rule = find_rule(path, id)?;
    let plan = plan_search_order(&rule, direction)?;
    println!("plan for {} ({:?}):", rule.id, plan.direction);
    for (i, step) in plan.steps.iter().enumerate() {
        let active = if step.active.is_empty() {
            "no active predicates".to_string()
        } else {
            step.active
                .iter()
                .map(|p| rule.predicate_decl(p))
                .collect::<Vec<_>>()
                .join(" & ")
        };
        println!("  {}. {} ({}) -- {}", i + 1, step.variable, step.data_type, active);
    }
    Ok(())
}

pub fn expand(
    path: &Path,
    id: &str,
    k: usize,
    specialize: Option<&str>,
    reply: Option<&str>,
) -> Result<()> {
    let rule = find_rule(path, id)?;
    if let Some(specialized_type) = specialize {
        println!("{}", optimize_verb_prompt(&rule, specialized_type)?);
        return Ok(());
    }
    println!("{}", expand_data_types(&rule, k)?);
    if let Some(reply) = reply {
        let labels = parse_expansion_reply(reply);
        println!("-- parsed {} labels:", labels.len());
        for label in labels {
            println!("   {label}");
        }
    }
    Ok(())
}
