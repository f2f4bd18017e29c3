//! Search-order planning over the rule's variable graph.
//!
//! Forward planning starts at the grammatical subject and walks the
//! premise chain outward; reverse planning starts at the conclusion's
//! non-subject variable and walks back toward the subject. Either way,
//! each step activates exactly the premise predicates whose variables
//! are covered once the step variable binds, so a step is always
//! conditioned only on earlier steps.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Predicate, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanDirection {
    ForwardFromSubject,
    ReverseFromConclusion,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("variable {symbol} cannot be reached from the search root through the premise")]
    Unreachable { symbol: String },
    #[error("reverse planning needs a conclusion variable other than the subject")]
    NoReverseRoot,
    #[error("rule has no variables to plan")]
    Empty,
}

/// One search step: the variable to bind and the premise predicates that
/// become fully bound (and therefore promptable and checkable) at this
/// step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub variable: String,
    pub data_type: String,
    pub active: Vec<Predicate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPlan {
    pub steps: Vec<PlanStep>,
    pub direction: PlanDirection,
}

impl SearchPlan {
    pub fn order(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.variable.as_str()).collect()
    }

    /// Check the step-dependency invariant: every active predicate of
    /// step `i` mentions only the step-`i` variable and variables from
    /// earlier steps.
    pub fn dependencies_hold(&self) -> bool {
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        for step in &self.steps {
            bound.insert(&step.variable);
            for pred in &step.active {
                if !pred.mentions(&step.variable) {
                    return false;
                }
                if pred.vars().any(|v| !bound.contains(v)) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn plan_search_order(rule: &Rule, direction: PlanDirection) -> Result<SearchPlan, PlanError> {
    if rule.variables.is_empty() {
        return Err(PlanError::Empty);
    }
    let root = match direction {
        PlanDirection::ForwardFromSubject => rule.subject_symbol.clone(),
        PlanDirection::ReverseFromConclusion => rule
            .conclusion
            .vars()
            .find(|v| *v != rule.subject_symbol)
            .map(str::to_string)
            .ok_or(PlanError::NoReverseRoot)?,
    };

    let mut bound: BTreeSet<String> = BTreeSet::new();
    let mut order: Vec<String> = Vec::new();
    let mut pending: BTreeSet<String> = rule.variables.keys().cloned().collect();

    bound.insert(root.clone());
    pending.remove(&root);
    order.push(root);

    while !pending.is_empty() {
        let next = next_variable(rule, &bound, &pending)
            .ok_or_else(|| PlanError::Unreachable {
                symbol: pending.iter().next().expect("nonempty").clone(),
            })?;
        bound.insert(next.clone());
        pending.remove(&next);
        order.push(next);
    }

    let mut steps = Vec::with_capacity(order.len());
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for variable in &order {
        seen.insert(variable);
        let active: Vec<Predicate> = rule
            .premise
            .iter()
            .filter(|p| p.mentions(variable) && p.vars().all(|v| seen.contains(v)))
            .cloned()
            .collect();
        steps.push(PlanStep {
            variable: variable.clone(),
            data_type: rule.data_type(variable).unwrap_or_default().to_string(),
            active,
        });
    }
    Ok(SearchPlan { steps, direction })
}

/// Pick the next variable adjacent to the bound set. On a chain there is
/// only one choice; on denser graphs, prefer the variable whose
/// connecting predicate appears earliest in the premise, breaking ties
/// by symbol order so planning stays deterministic.
fn next_variable(
    rule: &Rule,
    bound: &BTreeSet<String>,
    pending: &BTreeSet<String>,
) -> Option<String> {
    let mut best: Option<(usize, &String)> = None;
    for candidate in pending {
        let first_link = rule.premise.iter().position(|p| {
            p.mentions(candidate) && p.vars().any(|v| bound.contains(v))
        });
        if let Some(idx) = first_link {
            let better = match best {
                None => true,
                Some((best_idx, best_sym)) => idx < best_idx || (idx == best_idx && candidate < best_sym),
            };
            if better {
                best = Some((idx, candidate));
            }
        }
    }
    best.map(|(_, sym)| sym.clone())
}
