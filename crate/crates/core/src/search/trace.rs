//! Step-level trace events. Runs record every prompt, raw reply, and
//! verification outcome so ablation analyses can replay decisions.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::critic::VerificationOutcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    GenerationCall {
        step: usize,
        variable: String,
        parent: String,
        call_index: usize,
        prompt: String,
        raw_reply: String,
        parsed: Vec<String>,
        residue: Vec<String>,
    },
    Verification {
        step: usize,
        variable: String,
        parent: String,
        call_index: usize,
        outcome: VerificationOutcome,
    },
    EarlyStop {
        step: usize,
        variable: String,
        parent: String,
        calls_made: usize,
    },
    BeamFailed {
        step: usize,
        variable: String,
        parent: String,
        error: String,
    },
    Rerank {
        step: usize,
        variable: String,
        candidates: usize,
        kept: usize,
    },
}

pub trait TraceSink {
    fn record(&mut self, event: TraceEvent);
}

/// Discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _event: TraceEvent) {}
}

/// Collects events in memory; handy in tests and small runs.
#[derive(Clone, Debug, Default)]
pub struct VecSink {
    pub events: Vec<TraceEvent>,
}

impl TraceSink for VecSink {
    fn record(&mut self, event: TraceEvent) {
        self.events.push(event);
    }
}
