//! Turning symbolic predicates into natural-language statements.
//!
//! Templates are registered per predicate name with `{subject}` and
//! `{object}` slots (`ingredient_in` with Z=butter, B=saag chicken
//! becomes "Butter is an ingredient in saag chicken"). When no template
//! is registered the fallback swaps underscores for spaces:
//! `{subject} is allergic to {object}`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Predicate, Rule, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VerbalizeError {
    #[error("no template registered for predicate {name} and the fallback is disabled")]
    MissingTemplate { name: String },
    #[error("predicate {name} has no {kind} template")]
    MissingVariant { name: String, kind: &'static str },
    #[error("variable {symbol} is unbound")]
    UnboundVariable { symbol: String },
}

/// Templates for one predicate. Only the conclusion needs the negated
/// and question forms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateTemplates {
    pub positive: Option<String>,
    pub negated: Option<String>,
    pub question: Option<String>,
}

/// Per-predicate template registry with an automatic snake_case
/// fallback for the positive form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    entries: BTreeMap<String, PredicateTemplates>,
    #[serde(default = "default_true")]
    fallback_enabled: bool,
}

fn default_true() -> bool {
    true
}

impl TemplateSet {
    pub fn new() -> Self {
        TemplateSet {
            entries: BTreeMap::new(),
            fallback_enabled: true,
        }
    }

    pub fn without_fallback(mut self) -> Self {
        self.fallback_enabled = false;
        self
    }

    pub fn set_positive(&mut self, name: &str, template: &str) {
        self.entries.entry(name.to_string()).or_default().positive = Some(template.to_string());
    }

    pub fn set_negated(&mut self, name: &str, template: &str) {
        self.entries.entry(name.to_string()).or_default().negated = Some(template.to_string());
    }

    pub fn set_question(&mut self, name: &str, template: &str) {
        self.entries.entry(name.to_string()).or_default().question = Some(template.to_string());
    }

    pub fn get(&self, name: &str) -> Option<&PredicateTemplates> {
        self.entries.get(name)
    }

    pub fn has_positive(&self, name: &str) -> bool {
        self.fallback_enabled
            || self
                .entries
                .get(name)
                .is_some_and(|t| t.positive.is_some())
    }

    fn positive(&self, name: &str) -> Result<String, VerbalizeError> {
        if let Some(tpl) = self.entries.get(name).and_then(|t| t.positive.clone()) {
            return Ok(tpl);
        }
        if self.fallback_enabled {
            Ok(alloc::format!("{{subject}} {} {{object}}", name.replace('_', " ")))
        } else {
            Err(VerbalizeError::MissingTemplate {
                name: name.to_string(),
            })
        }
    }

    fn variant(&self, name: &str, kind: &'static str) -> Result<String, VerbalizeError> {
        let entry = self.entries.get(name);
        let tpl = match kind {
            "negated" => entry.and_then(|t| t.negated.clone()),
            "question" => entry.and_then(|t| t.question.clone()),
            _ => None,
        };
        tpl.ok_or(VerbalizeError::MissingVariant {
            name: name.to_string(),
            kind,
        })
    }
}

/// Render a predicate with bound variables replaced by values and
/// unbound ones left as bare symbols. The first letter is capitalized.
pub fn verbalize_predicate(
    pred: &Predicate,
    bindings: &BTreeMap<String, String>,
    templates: &TemplateSet,
) -> Result<String, VerbalizeError> {
    let template = templates.positive(&pred.name)?;
    Ok(capitalize(&fill(&template, pred, bindings)))
}

/// Same, without forcing a leading capital — used when the predicate is
/// embedded mid-sentence (instruction prompts, probe questions).
pub fn verbalize_predicate_plain(
    pred: &Predicate,
    bindings: &BTreeMap<String, String>,
    templates: &TemplateSet,
) -> Result<String, VerbalizeError> {
    let template = templates.positive(&pred.name)?;
    Ok(fill(&template, pred, bindings))
}

pub(crate) fn verbalize_variant(
    pred: &Predicate,
    bindings: &BTreeMap<String, String>,
    templates: &TemplateSet,
    kind: &'static str,
    capitalized: bool,
) -> Result<String, VerbalizeError> {
    let template = templates.variant(&pred.name, kind)?;
    let text = fill(&template, pred, bindings);
    Ok(if capitalized { capitalize(&text) } else { text })
}

fn fill(template: &str, pred: &Predicate, bindings: &BTreeMap<String, String>) -> String {
    let slot = |term: &Term| -> String {
        match term {
            Term::Var(sym) => bindings.get(sym).cloned().unwrap_or_else(|| sym.clone()),
            Term::Literal(text) => text.clone(),
        }
    };
    template
        .replace("{subject}", &slot(&pred.subject))
        .replace("{object}", &slot(&pred.object))
}

pub(crate) fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Data-type conformity statement fed to the critic: `{value} is a
/// {data type}.`
pub fn type_check_statement(value: &str, data_type: &str) -> String {
    alloc::format!("{value} is a {data_type}.")
}

/// Render the finished statement pair for a fully bound rule. Only
/// premise predicates containing the subject appear in the premise text
/// (joined by " and "); the remaining predicates hold background
/// knowledge that stays off the surface form.
pub fn render_statement(
    rule: &Rule,
    bindings: &BTreeMap<String, String>,
) -> Result<(String, String), VerbalizeError> {
    for symbol in rule.variables.keys() {
        if !bindings.contains_key(symbol) {
            return Err(VerbalizeError::UnboundVariable {
                symbol: symbol.clone(),
            });
        }
    }
    let mut premise = String::new();
    for pred in rule.premise.iter().filter(|p| p.mentions(&rule.subject_symbol)) {
        if !premise.is_empty() {
            premise.push_str(" and ");
        }
        premise.push_str(&verbalize_predicate(pred, bindings, &rule.templates)?);
    }
    premise.push('.');
    let mut conclusion = verbalize_predicate(&rule.conclusion, bindings, &rule.templates)?;
    conclusion.push('.');
    Ok((premise, conclusion))
}

/// Negated form of the conclusion, period-terminated.
pub fn render_conclusion_negated(
    rule: &Rule,
    bindings: &BTreeMap<String, String>,
) -> Result<String, VerbalizeError> {
    let mut text = verbalize_variant(&rule.conclusion, bindings, &rule.templates, "negated", true)?;
    text.push('.');
    Ok(text)
}

/// Interrogative form of the conclusion, without terminal punctuation
/// (the probe template supplies the question mark).
pub fn render_conclusion_question(
    rule: &Rule,
    bindings: &BTreeMap<String, String>,
) -> Result<String, VerbalizeError> {
    verbalize_variant(&rule.conclusion, bindings, &rule.templates, "question", false)
}
