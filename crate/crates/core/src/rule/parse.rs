//! Recursive-descent parser for the rule clause syntax.
//!
//! ```text
//! clause     := predicate ("&" predicate)* "->" predicate
//! predicate  := name "(" arg "," arg ")"
//! arg        := '"' literal '"' | data-type words symbol
//! ```
//!
//! Data types are declared inline on every occurrence (`Person X`), with
//! the symbol as the final token; repeated symbols must agree on the
//! declared type.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::{infer_principle, Domain, Predicate, Principle, Rule, TemplateSet, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuleParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("conflicting data type for variable {symbol}: \"{first}\" vs \"{second}\"")]
    ConflictingType {
        symbol: String,
        first: String,
        second: String,
    },
    #[error("conclusion must be a single predicate (found '&' at byte {offset})")]
    CompoundConclusion { offset: usize },
    #[error("variable {symbol} is used without a data type declaration")]
    UndeclaredVariable { symbol: String },
}

/// Metadata for assembling a full [`Rule`] around a parsed clause.
#[derive(Clone, Debug)]
pub struct RuleMeta {
    pub id: String,
    pub domain: Domain,
    pub principle: Option<Principle>,
    pub subject: Option<String>,
    pub reverse_search: bool,
    pub templates: TemplateSet,
}

impl Default for RuleMeta {
    fn default() -> Self {
        RuleMeta {
            id: "anonymous".to_string(),
            domain: Domain::NaturalProperties,
            principle: None,
            subject: None,
            reverse_search: false,
            templates: TemplateSet::new(),
        }
    }
}

/// Parse a bare clause. The principle is inferred from the conclusion
/// verb and the subject defaults to the variable `X` (falling back to
/// the first premise subject); rule files are the usual source of fully
/// described rules.
pub fn parse_rule(source: &str) -> Result<Rule, RuleParseError> {
    parse_rule_with(source, RuleMeta::default())
}

/// Parse a clause and attach explicit metadata.
pub fn parse_rule_with(source: &str, meta: RuleMeta) -> Result<Rule, RuleParseError> {
    let mut parser = Parser::new(source);
    let (premise, conclusion, variables) = parser.clause()?;

    let subject_symbol = match meta.subject {
        Some(sym) => sym,
        None => default_subject(&premise, &variables),
    };
    let principle = meta
        .principle
        .unwrap_or_else(|| infer_principle(&conclusion));

    Ok(Rule {
        id: meta.id,
        domain: meta.domain,
        principle,
        premise,
        conclusion,
        variables,
        templates: meta.templates,
        subject_symbol,
        reverse_search: meta.reverse_search,
    })
}

fn default_subject(premise: &[Predicate], variables: &BTreeMap<String, String>) -> String {
    if variables.contains_key("X") {
        return "X".to_string();
    }
    premise
        .iter()
        .find_map(|p| p.subject.as_var())
        .map(str::to_string)
        .unwrap_or_else(|| variables.keys().next().cloned().unwrap_or_default())
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    types: BTreeMap<String, String>,
}

type Clause = (Vec<Predicate>, Predicate, BTreeMap<String, String>);

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            types: BTreeMap::new(),
        }
    }

    fn clause(&mut self) -> Result<Clause, RuleParseError> {
        let mut premise = Vec::new();
        premise.push(self.predicate()?);
        loop {
            self.skip_ws();
            if self.eat("&") {
                premise.push(self.predicate()?);
            } else if self.eat("->") {
                break;
            } else {
                return Err(self.syntax("expected '&' or '->'"));
            }
        }
        let conclusion = self.predicate()?;
        self.skip_ws();
        if self.peek_str("&") {
            return Err(RuleParseError::CompoundConclusion { offset: self.pos });
        }
        if self.pos != self.src.len() {
            return Err(self.syntax("unexpected trailing input"));
        }
        // Every bare variable reference must be declared somewhere.
        for pred in premise.iter().chain(core::iter::once(&conclusion)) {
            for sym in pred.vars() {
                if !self.types.contains_key(sym) {
                    return Err(RuleParseError::UndeclaredVariable {
                        symbol: sym.to_string(),
                    });
                }
            }
        }
        Ok((premise, conclusion, core::mem::take(&mut self.types)))
    }

    fn predicate(&mut self) -> Result<Predicate, RuleParseError> {
        self.skip_ws();
        let name = self.predicate_name()?;
        self.skip_ws();
        if !self.eat("(") {
            return Err(self.syntax("expected '(' after predicate name"));
        }
        let subject = self.argument()?;
        self.skip_ws();
        if !self.eat(",") {
            return Err(self.syntax("expected ',' between predicate arguments"));
        }
        let object = self.argument()?;
        self.skip_ws();
        if !self.eat(")") {
            return Err(self.syntax("expected ')' closing predicate (predicates take exactly two arguments)"));
        }
        Ok(Predicate {
            name,
            subject,
            object,
        })
    }

    fn predicate_name(&mut self) -> Result<String, RuleParseError> {
        let start = self.pos;
        let rest = &self.src[self.pos..];
        let mut len = 0;
        for (i, ch) in rest.char_indices() {
            let ok = if i == 0 {
                ch.is_ascii_lowercase()
            } else {
                ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_'
            };
            if ok {
                len = i + ch.len_utf8();
            } else {
                break;
            }
        }
        if len == 0 {
            self.pos = start;
            return Err(self.syntax("expected predicate name ([a-z][a-z0-9_]*)"));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn argument(&mut self) -> Result<Term, RuleParseError> {
        self.skip_ws();
        if self.peek_str("\"") {
            return self.quoted_literal();
        }
        let start = self.pos;
        let end = self.src[self.pos..]
            .find([',', ')'])
            .map(|i| self.pos + i)
            .ok_or_else(|| self.syntax("unterminated predicate argument"))?;
        let raw = self.src[start..end].trim();
        if raw.is_empty() {
            return Err(self.syntax("empty predicate argument"));
        }
        self.pos = end;

        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.len() == 1 {
            let tok = tokens[0];
            if is_symbol(tok) {
                // Bare reference; the type must be declared elsewhere.
                return Ok(Term::Var(tok.to_string()));
            }
            return Ok(Term::Literal(tok.to_string()));
        }
        let symbol = *tokens.last().expect("len >= 2");
        if !is_symbol(symbol) {
            return Err(RuleParseError::Syntax {
                offset: start,
                message: alloc::format!(
                    "argument \"{raw}\" must end with a variable symbol ([A-Z][A-Za-z0-9_]*)"
                ),
            });
        }
        let data_type = tokens[..tokens.len() - 1].join(" ");
        self.declare(symbol, &data_type)?;
        Ok(Term::Var(symbol.to_string()))
    }

    fn quoted_literal(&mut self) -> Result<Term, RuleParseError> {
        debug_assert!(self.peek_str("\""));
        self.pos += 1;
        let rest = &self.src[self.pos..];
        let close = rest
            .find('"')
            .ok_or_else(|| self.syntax("unterminated string literal"))?;
        let text = rest[..close].to_string();
        self.pos += close + 1;
        Ok(Term::Literal(text))
    }

    fn declare(&mut self, symbol: &str, data_type: &str) -> Result<(), RuleParseError> {
        match self.types.get(symbol) {
            Some(existing) if existing != data_type => Err(RuleParseError::ConflictingType {
                symbol: symbol.to_string(),
                first: existing.clone(),
                second: data_type.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.types.insert(symbol.to_string(), data_type.to_string());
                Ok(())
            }
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn peek_str(&self, token: &str) -> bool {
        self.src[self.pos..].starts_with(token)
    }

    fn syntax(&self, message: &str) -> RuleParseError {
        RuleParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }
}

fn is_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALLERGEN: &str = "is_allergic_to(Person X, Food allergen A) & is_ingredient_in(Ingredient Z, Name of a dish or food B) & is_one_type_of(Ingredient Z, Food allergen A) -> is_not_able_to_eat(Person X, Name of a dish or food B)";

    #[test]
    fn parses_allergen_rule() {
        let rule = parse_rule(ALLERGEN).unwrap();
        assert_eq!(rule.premise.len(), 3);
        assert_eq!(rule.variables.len(), 4);
        let symbols: Vec<&str> = rule.variables.keys().map(String::as_str).collect();
        assert_eq!(symbols, ["A", "B", "X", "Z"]);
        assert_eq!(rule.data_type("B"), Some("Name of a dish or food"));
        assert_eq!(rule.conclusion.name, "is_not_able_to_eat");
        assert_eq!(rule.principle, Principle::MutualExclusivity);
        assert_eq!(rule.subject_symbol, "X");
    }

    #[test]
    fn identity_clause_parses() {
        // Tautology is a validation concern, not a parse error.
        let rule = parse_rule("p(T A, T B) -> p(T A, T B)").unwrap();
        assert_eq!(rule.premise.len(), 1);
        assert_eq!(rule.premise[0], rule.conclusion);
    }

    #[test]
    fn infers_mutual_exclusivity_from_negated_verb() {
        let src = "exists(Person X, Time Period A) & exists(Plant Y, Time Period B) & is_much_later_than(Time Period A, Time Period B) -> cannot_plant(Person X, Plant Y)";
        let rule = parse_rule(src).unwrap();
        assert_eq!(rule.variables.len(), 4);
        assert_eq!(rule.principle, Principle::MutualExclusivity);
    }

    #[test]
    fn conflicting_type_reported() {
        let err = parse_rule("p(Food A, Tool B) -> q(Drink A, Tool B)").unwrap_err();
        assert_eq!(
            err,
            RuleParseError::ConflictingType {
                symbol: "A".into(),
                first: "Food".into(),
                second: "Drink".into(),
            }
        );
    }

    #[test]
    fn compound_conclusion_rejected() {
        let err = parse_rule("p(T A, T B) -> q(T A, T B) & r(T A, T B)").unwrap_err();
        assert!(matches!(err, RuleParseError::CompoundConclusion { .. }));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_rule("p(T A, T B) q(T A, T B)").unwrap_err();
        match err {
            RuleParseError::Syntax { offset, .. } => assert_eq!(offset, 12),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn quoted_literal_argument() {
        let rule = parse_rule("contains(Dish B, \"butter\") -> uses_butter(Dish B, Dish B)").unwrap();
        assert_eq!(rule.premise[0].object, Term::Literal("butter".into()));
    }

    #[test]
    fn bare_reference_requires_declaration_elsewhere() {
        let ok = parse_rule("p(T A, T B) -> q(A, T B)").unwrap();
        assert_eq!(ok.conclusion.subject, Term::Var("A".into()));
        let err = parse_rule("p(T A, T B) -> q(C, T B)").unwrap_err();
        assert!(matches!(err, RuleParseError::UndeclaredVariable { .. }));
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            ALLERGEN,
            "has_branch_in(Organization X, Region A) & is_part_of(Region A, Continent B) -> has_office_in(Organization X, Continent B)",
        ] {
            let rule = parse_rule(src).unwrap();
            let reparsed = parse_rule(&rule.clause_text()).unwrap();
            assert_eq!(rule.premise, reparsed.premise);
            assert_eq!(rule.conclusion, reparsed.conclusion);
            assert_eq!(rule.variables, reparsed.variables);
        }
    }
}
