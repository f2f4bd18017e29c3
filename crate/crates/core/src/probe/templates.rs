//! The thirteen entailment question templates.
//!
//! Each template pairs a question shape with a positive/negative answer
//! token pair. Twelve templates have a fixed gold label; template 7 asks
//! the conclusion as a direct question, so its gold follows the rule's
//! conclusion polarity.

use serde::{Deserialize, Serialize};

/// Answer-token pair a template scores against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenPair {
    YesNo,
    TrueFalse,
    RightWrong,
}

impl TokenPair {
    pub fn positive(self) -> &'static str {
        match self {
            TokenPair::YesNo => "Yes",
            TokenPair::TrueFalse => "True",
            TokenPair::RightWrong => "Right",
        }
    }

    pub fn negative(self) -> &'static str {
        match self {
            TokenPair::YesNo => "No",
            TokenPair::TrueFalse => "False",
            TokenPair::RightWrong => "Wrong",
        }
    }
}

/// Gold label before any contradiction flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseGold {
    Positive,
    Negative,
    /// Positive iff the rule's conclusion is a positive event.
    ConclusionPolarity,
}

#[derive(Clone, Copy, Debug)]
pub struct TemplateSpec {
    pub id: u8,
    /// Slots: `{premise}`, `{conclusion}`, `{conclusion_negation}`,
    /// `{conclusion_question}`, inserted without their terminal period.
    pub text: &'static str,
    pub pair: TokenPair,
    pub base_gold: BaseGold,
}

pub const TEMPLATES: [TemplateSpec; 13] = [
    TemplateSpec {
        id: 1,
        text: "Is it true that if {premise}, {conclusion}.",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Positive,
    },
    TemplateSpec {
        id: 2,
        text: "Yes or no: if {premise}, {conclusion}.",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Positive,
    },
    TemplateSpec {
        id: 3,
        text: "True or false: if {premise}, {conclusion}.",
        pair: TokenPair::TrueFalse,
        base_gold: BaseGold::Positive,
    },
    TemplateSpec {
        id: 4,
        text: "Right or Wrong: if {premise}, {conclusion}.",
        pair: TokenPair::RightWrong,
        base_gold: BaseGold::Positive,
    },
    TemplateSpec {
        id: 5,
        text: "Premise: {premise}. Conclusion: {conclusion}. Does premise entail conclusion?",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Positive,
    },
    TemplateSpec {
        id: 6,
        text: "Premise: {premise}. Conclusion: {conclusion_negation}. Does premise contradict the conclusion?",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Positive,
    },
    TemplateSpec {
        id: 7,
        text: "Answer the question with yes or no: if {premise}, {conclusion_question}?",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::ConclusionPolarity,
    },
    TemplateSpec {
        id: 8,
        text: "Is it true that if {premise}, {conclusion_negation}.",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Negative,
    },
    TemplateSpec {
        id: 9,
        text: "Yes or no: if {premise}, {conclusion_negation}.",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Negative,
    },
    TemplateSpec {
        id: 10,
        text: "True or false: if {premise}, {conclusion_negation}.",
        pair: TokenPair::TrueFalse,
        base_gold: BaseGold::Negative,
    },
    TemplateSpec {
        id: 11,
        text: "Right or Wrong: if {premise}, {conclusion_negation}.",
        pair: TokenPair::RightWrong,
        base_gold: BaseGold::Negative,
    },
    TemplateSpec {
        id: 12,
        text: "Premise: {premise}. Conclusion: {conclusion_negation}. Does premise entail conclusion?",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Negative,
    },
    TemplateSpec {
        id: 13,
        text: "Premise: {premise}. Conclusion: {conclusion}. Does premise contradict the conclusion?",
        pair: TokenPair::YesNo,
        base_gold: BaseGold::Negative,
    },
];
