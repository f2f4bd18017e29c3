//! Prompt construction for per-variable candidate generation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::rule::PlanStep;

use super::Beam;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("variable {symbol} required by an active predicate is unbound")]
    UnboundDependency { symbol: String },
}

/// Build the generation prompt for one step of one beam: every active
/// predicate with bound values substituted, the requested reply format,
/// the variable's data type, and an instruction not to repeat values
/// already verified correct.
///
/// ```text
/// Give me 50 values of B to fill in the sentence "ingredient_in(butter, B)"
/// in the format "1. value.", where B is a Dish.
/// ```
pub fn build_variable_prompt(
    step: &PlanStep,
    beam: &Beam,
    n_values: usize,
    already_accepted: &[String],
) -> Result<String, PromptError> {
    for pred in &step.active {
        for symbol in pred.vars() {
            if symbol != step.variable && !beam.bindings.contains_key(symbol) {
                return Err(PromptError::UnboundDependency {
                    symbol: symbol.to_string(),
                });
            }
        }
    }
    let rendered: Vec<String> = step
        .active
        .iter()
        .map(|p| p.symbolic_with(&beam.bindings))
        .collect();

    let mut prompt = if rendered.is_empty() {
        alloc::format!(
            "Give me {n_values} values of {sym} in the format \"1. value.\", where {sym} is a {ty}.",
            sym = step.variable,
            ty = step.data_type,
        )
    } else {
        alloc::format!(
            "Give me {n_values} values of {sym} to fill in the sentence \"{sentence}\" in the format \"1. value.\", where {sym} is a {ty}.",
            sym = step.variable,
            sentence = rendered.join(" & "),
            ty = step.data_type,
        )
    };
    if !already_accepted.is_empty() {
        prompt.push_str(&alloc::format!(
            " Do not generate these values: {}.",
            already_accepted.join(", ")
        ));
    }
    Ok(prompt)
}
