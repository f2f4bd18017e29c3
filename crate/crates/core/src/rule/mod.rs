//! The symbolic rule DSL: parsing, validation, search planning, and
//! verbalization.
//!
//! A rule is a conjunction of premise predicates implying a single
//! conclusion predicate, written as
//!
//! ```text
//! is_allergic_to(Person X, Food allergen A)
//!   & is_ingredient_in(Ingredient Z, Name of a dish or food B)
//!   & is_one_type_of(Ingredient Z, Food allergen A)
//!   -> is_not_able_to_eat(Person X, Name of a dish or food B)
//! ```
//!
//! Every predicate is a verb phrase with exactly two argument slots, and
//! every variable carries a data type declared inline. Variables must be
//! chained so they can be searched one at a time, each step conditioned
//! only on variables bound at earlier steps.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

mod expand;
mod file;
mod parse;
mod plan;
mod validate;
mod verbalize;

pub use expand::{
    expand_data_types, optimize_verb_prompt, parse_expansion_reply, parse_verb_reply,
    specialized_conclusion, ExpandError,
};
pub use file::{parse_rule_file, parse_rule_file_json, RuleDoc, RuleFileError};
pub use parse::{parse_rule, parse_rule_with, RuleMeta, RuleParseError};
pub use plan::{plan_search_order, PlanDirection, PlanError, PlanStep, SearchPlan};
pub use validate::{validate_rule, ValidationReport, Violation};
pub use verbalize::{
    render_conclusion_negated, render_conclusion_question, render_statement, type_check_statement,
    verbalize_predicate, verbalize_predicate_plain, PredicateTemplates, TemplateSet, VerbalizeError,
};

/// Constraint domain a rule belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Temporal,
    Locational,
    OutcomeEffect,
    NaturalProperties,
}

impl Domain {
    pub const ALL: [Domain; 4] = [
        Domain::Temporal,
        Domain::Locational,
        Domain::OutcomeEffect,
        Domain::NaturalProperties,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Temporal => "temporal",
            Domain::Locational => "locational",
            Domain::OutcomeEffect => "outcome_effect",
            Domain::NaturalProperties => "natural_properties",
        }
    }

    /// Human-readable label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            Domain::Temporal => "Temporal",
            Domain::Locational => "Locational",
            Domain::OutcomeEffect => "Outcomes and Effects",
            Domain::NaturalProperties => "Natural Properties",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<Domain> {
        match s.trim() {
            "temporal" => Some(Domain::Temporal),
            "locational" => Some(Domain::Locational),
            "outcome_effect" => Some(Domain::OutcomeEffect),
            "natural_properties" => Some(Domain::NaturalProperties),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Design principle relating premise truth to the conclusion event:
/// under compatibility the conclusion can occur, under mutual
/// exclusivity it cannot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Principle {
    Compatibility,
    MutualExclusivity,
}

impl Principle {
    pub fn as_str(self) -> &'static str {
        match self {
            Principle::Compatibility => "compatibility",
            Principle::MutualExclusivity => "mutual_exclusivity",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<Principle> {
        match s.trim() {
            "compatibility" => Some(Principle::Compatibility),
            "mutual_exclusivity" => Some(Principle::MutualExclusivity),
            _ => None,
        }
    }

    /// Whether the conclusion reads as a positive event. Mutual
    /// exclusivity rules carry a negated conclusion.
    pub fn conclusion_is_positive(self) -> bool {
        matches!(self, Principle::Compatibility)
    }
}

impl fmt::Display for Principle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One argument slot of a predicate: a variable reference or literal text.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Literal(String),
}

impl Term {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(s) => Some(s),
            Term::Literal(_) => None,
        }
    }
}

/// A verb phrase with subject and object slots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub subject: Term,
    pub object: Term,
}

impl Predicate {
    /// Variable symbols referenced by this predicate, in slot order.
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.subject.as_var().into_iter().chain(self.object.as_var())
    }

    pub fn mentions(&self, symbol: &str) -> bool {
        self.vars().any(|v| v == symbol)
    }

    /// Render in symbolic form with values substituted for bound
    /// variables and bare symbols kept for unbound ones, e.g.
    /// `ingredient_in(butter, B)`.
    pub fn symbolic_with(&self, bindings: &BTreeMap<String, String>) -> String {
        let arg = |t: &Term| match t {
            Term::Var(sym) => bindings.get(sym).cloned().unwrap_or_else(|| sym.clone()),
            Term::Literal(text) => text.clone(),
        };
        alloc::format!("{}({}, {})", self.name, arg(&self.subject), arg(&self.object))
    }
}

/// A parsed symbolic rule with its authoring metadata and verbalization
/// templates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub domain: Domain,
    pub principle: Principle,
    pub premise: Vec<Predicate>,
    pub conclusion: Predicate,
    /// Variable symbol to data type label, deduplicated across the rule.
    pub variables: BTreeMap<String, String>,
    pub templates: TemplateSet,
    /// The rule's grammatical subject variable (the generic "X" entity
    /// that stays a placeholder during search).
    pub subject_symbol: String,
    /// Search the chain from the conclusion side. Used for rules whose
    /// factual slots have a single correct answer (age, year, ...).
    pub reverse_search: bool,
}

impl Rule {
    pub fn data_type(&self, symbol: &str) -> Option<&str> {
        self.variables.get(symbol).map(String::as_str)
    }

    /// Clause part of the rule in DSL syntax. Parsing the printed form
    /// yields a structurally equal clause.
    pub fn clause_text(&self) -> String {
        let mut out = String::new();
        for (i, pred) in self.premise.iter().enumerate() {
            if i > 0 {
                out.push_str(" & ");
            }
            out.push_str(&self.predicate_decl(pred));
        }
        out.push_str(" -> ");
        out.push_str(&self.predicate_decl(&self.conclusion));
        out
    }

    /// One predicate in declaration syntax, types inline.
    pub fn predicate_decl(&self, pred: &Predicate) -> String {
        let arg = |t: &Term| match t {
            Term::Var(sym) => match self.variables.get(sym) {
                Some(ty) => alloc::format!("{ty} {sym}"),
                None => sym.clone(),
            },
            Term::Literal(text) => alloc::format!("\"{text}\""),
        };
        alloc::format!("{}({}, {})", pred.name, arg(&pred.subject), arg(&pred.object))
    }

    /// Surface form of the placeholder subject, e.g. `Person X` or
    /// `Organization X`. The placeholder is always rendered with the
    /// symbol `X` unless another variable already uses it.
    pub fn subject_placeholder(&self) -> String {
        let ty = self.data_type(&self.subject_symbol).unwrap_or("Entity");
        let collides = self.subject_symbol != "X" && self.variables.contains_key("X");
        if collides {
            alloc::format!("{ty} {}", self.subject_symbol)
        } else {
            alloc::format!("{ty} X")
        }
    }

    /// Variables other than the subject, sorted by symbol. These are the
    /// slots an instruction-only prompt asks a model to fill.
    pub fn free_variables(&self) -> Vec<&str> {
        self.variables
            .keys()
            .map(String::as_str)
            .filter(|s| *s != self.subject_symbol)
            .collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.clause_text())
    }
}

/// Heuristic used by authoring lint: conclusions whose verb starts with
/// a negation prefix read as mutual exclusivity.
pub fn infer_principle(conclusion: &Predicate) -> Principle {
    let name = conclusion.name.as_str();
    let negated = name.starts_with("cannot_")
        || name.starts_with("is_not_")
        || name.starts_with("does_not_")
        || name.starts_with("should_not_");
    if negated {
        Principle::MutualExclusivity
    } else {
        Principle::Compatibility
    }
}
