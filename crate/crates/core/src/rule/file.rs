//! Rule file formats.
//!
//! The text form holds one rule per block:
//!
//! ```text
//! id: allergen_dish
//! domain: outcome_effect
//! principle: mutual_exclusivity
//! subject: X
//! rule: is_allergic_to(Person X, Food allergen A) & ... -> is_not_able_to_eat(...)
//! templates:
//!   is_allergic_to: {subject} is allergic to {object}
//!   is_not_able_to_eat: {subject} is not able to eat {object}
//!   is_not_able_to_eat.negated: {subject} is able to eat {object}
//!   is_not_able_to_eat.question: can {subject} eat {object}
//! ```
//!
//! Blocks start at a top-level `id:` line; `#` starts a comment. The
//! same fields are accepted as JSON: `{"rules": [{"id": ..., "rule":
//! ..., "templates": {"name": ..., "name.negated": ...}}]}`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_rule_with, Domain, Principle, Rule, RuleMeta, RuleParseError, TemplateSet};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RuleFileError {
    #[error("rule block {block}: missing key \"{key}\"")]
    MissingKey { block: String, key: &'static str },
    #[error("rule block {block}: unknown {what} \"{value}\"")]
    BadValue {
        block: String,
        what: &'static str,
        value: String,
    },
    #[error("rule block {block}: {source}")]
    Clause {
        block: String,
        source: RuleParseError,
    },
    #[error("line {line}: {message}")]
    Layout { line: usize, message: String },
    #[error("invalid JSON rule document: {message}")]
    Json { message: String },
}

/// Flat per-rule document shared by the text and JSON forms.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RuleDoc {
    pub id: String,
    pub domain: String,
    pub principle: String,
    pub rule: String,
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub reverse: bool,
    /// Template name -> text; `name.negated` and `name.question` select
    /// the conclusion variants.
    #[serde(default)]
    pub templates: BTreeMap<String, String>,
}

impl RuleDoc {
    pub fn into_rule(self) -> Result<Rule, RuleFileError> {
        let block = self.id.clone();
        for (key, value) in [
            ("domain", &self.domain),
            ("principle", &self.principle),
            ("rule", &self.rule),
        ] {
            if value.trim().is_empty() {
                return Err(RuleFileError::MissingKey { block, key });
            }
        }
        let domain = Domain::from_str_opt(&self.domain).ok_or_else(|| RuleFileError::BadValue {
            block: block.clone(),
            what: "domain",
            value: self.domain.clone(),
        })?;
        let principle =
            Principle::from_str_opt(&self.principle).ok_or_else(|| RuleFileError::BadValue {
                block: block.clone(),
                what: "principle",
                value: self.principle.clone(),
            })?;
        let mut templates = TemplateSet::new();
        for (key, text) in &self.templates {
            if let Some(name) = key.strip_suffix(".negated") {
                templates.set_negated(name, text);
            } else if let Some(name) = key.strip_suffix(".question") {
                templates.set_question(name, text);
            } else {
                templates.set_positive(key, text);
            }
        }
        let meta = RuleMeta {
            id: self.id,
            domain,
            principle: Some(principle),
            subject: self.subject,
            reverse_search: self.reverse,
            templates,
        };
        parse_rule_with(&self.rule, meta).map_err(|source| RuleFileError::Clause { block, source })
    }
}

/// Parse the block text form into rules, in file order.
pub fn parse_rule_file(text: &str) -> Result<Vec<Rule>, RuleFileError> {
    let mut rules = Vec::new();
    let mut current: Option<RuleDoc> = None;
    let mut in_templates = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indented = line.len() != trimmed.len();

        if !indented {
            in_templates = false;
            let (key, value) = split_key(trimmed, line_no)?;
            if key == "id" {
                if let Some(doc) = current.take() {
                    rules.push(doc.into_rule()?);
                }
                current = Some(RuleDoc {
                    id: value.to_string(),
                    ..RuleDoc::default()
                });
                continue;
            }
            let doc = current.as_mut().ok_or_else(|| RuleFileError::Layout {
                line: line_no,
                message: alloc::format!("key \"{key}\" appears before any id:"),
            })?;
            match key {
                "domain" => doc.domain = value.to_string(),
                "principle" => doc.principle = value.to_string(),
                "rule" => doc.rule = value.to_string(),
                "subject" => doc.subject = Some(value.to_string()),
                "reverse" => {
                    doc.reverse = match value {
                        "true" => true,
                        "false" => false,
                        other => {
                            return Err(RuleFileError::BadValue {
                                block: doc.id.clone(),
                                what: "reverse",
                                value: other.to_string(),
                            })
                        }
                    }
                }
                "templates" => in_templates = true,
                other => {
                    return Err(RuleFileError::Layout {
                        line: line_no,
                        message: alloc::format!("unknown key \"{other}\""),
                    })
                }
            }
        } else {
            if !in_templates {
                return Err(RuleFileError::Layout {
                    line: line_no,
                    message: "indented line outside a templates: section".to_string(),
                });
            }
            let doc = current.as_mut().expect("templates require a block");
            let (key, value) = split_key(trimmed, line_no)?;
            doc.templates.insert(key.to_string(), value.to_string());
        }
    }
    if let Some(doc) = current.take() {
        rules.push(doc.into_rule()?);
    }
    Ok(rules)
}

/// Parse the JSON document form. Accepts either `{"rules": [...]}` or a
/// bare array.
pub fn parse_rule_file_json(text: &str) -> Result<Vec<Rule>, RuleFileError> {
    #[derive(Deserialize)]
    struct Doc {
        rules: Vec<RuleDoc>,
    }
    let docs: Vec<RuleDoc> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| RuleFileError::Json {
            message: e.to_string(),
        })?
    } else {
        serde_json::from_str::<Doc>(text)
            .map_err(|e| RuleFileError::Json {
                message: e.to_string(),
            })?
            .rules
    };
    let mut rules = Vec::with_capacity(docs.len());
    for doc in docs {
        rules.push(doc.into_rule()?);
    }
    Ok(rules)
}

fn split_key(line: &str, line_no: usize) -> Result<(&str, &str), RuleFileError> {
    let (key, value) = line.split_once(':').ok_or_else(|| RuleFileError::Layout {
        line: line_no,
        message: "expected key: value".to_string(),
    })?;
    Ok((key.trim(), value.trim()))
}
