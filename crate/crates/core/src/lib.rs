//! Rule-grounded search for long-tail knowledge statements, plus the
//! evaluation harness that probes models on the generated data.
//!
//! The pipeline, end to end:
//!
//! 1. [`rule`] — parse and validate symbolic rules of the form
//!    `pred(Type A, Type B) & ... -> pred(...)`, plan a per-variable
//!    search order over the rule's variable chain, and verbalize
//!    predicates into natural-language statements.
//! 2. [`gateway`] — uniform access to the four model roles (knowledge
//!    generator, critic, likelihood scorer, probe responder) behind
//!    traits, with a deterministic synthetic-world backend for offline
//!    runs.
//! 3. [`search`] — the knowledge beam search: per-variable candidate
//!    generation, dynamic-threshold critic verification, dedup, early
//!    stop, and variable-wise likelihood reranking toward the head or
//!    tail of the distribution.
//! 4. [`baseline`] — instruction-only generation baselines and post-hoc
//!    reranking for comparison runs.
//! 5. [`dataset`] — statement records and corpus statistics.
//! 6. [`analysis`] — distribution separation (per-rule delta between
//!    head and tail mean log-likelihood), histograms, and cross-scorer
//!    rank agreement.
//! 7. [`probe`] — the 13-template entailment probe with strict
//!    all-templates scoring and head-to-tail relative drop.
//!
//! The crate is `no_std` + `alloc`; everything here is pure computation
//! over strings and numbers. IO, HTTP backends, file formats, and the
//! CLI live in the companion `longtail-cli` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod baseline;
pub mod dataset;
pub mod gateway;
pub mod probe;
pub mod rng;
pub mod rule;
pub mod search;

pub use gateway::{CriticQuery, GenerationRequest, ScoreResult};
pub use rule::{Domain, Predicate, Principle, Rule, SearchPlan, ValidationReport};
pub use search::{Beam, CriticState, SearchConfig, VerificationOutcome};
