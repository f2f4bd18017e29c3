//! Dynamic acceptance thresholds for critic verdicts.
//!
//! Each check key (one per predicate instance, plus one per data type)
//! carries its own threshold on a 0.05 grid:
//!
//! 1. the threshold starts at 0.85;
//! 2. while a batch yields no passing probability, it decrements by
//!    0.05 (data-type keys stop at 0.65, factual keys at 0);
//! 3. the first batch with a passing probability locks the key;
//! 4. once locked, a later value exceeding the threshold by at least one
//!    0.05 increment raises it to the highest grid step at or below that
//!    probability, retroactively rejecting previously accepted values
//!    that fall under the new bar;
//! 5. a value is accepted only when every one of its checks passes its
//!    key's threshold.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Grid step in hundredths of probability.
const STEP: i32 = 5;
const START: i32 = 85;
const TYPE_FLOOR: i32 = 65;
const FACT_FLOOR: i32 = 0;

/// Identity of one threshold stream.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckKey {
    /// `{value} is a {data type}` conformity checks, keyed by type.
    TypeConformity { data_type: String },
    /// Factual checks for one predicate. Under instance keying the
    /// context pins the bound arguments (`ingredient_in(butter, B)`);
    /// under name keying it is empty.
    Fact { predicate: String, context: String },
}

impl CheckKey {
    fn floor(&self) -> i32 {
        match self {
            CheckKey::TypeConformity { .. } => TYPE_FLOOR,
            CheckKey::Fact { .. } => FACT_FLOOR,
        }
    }
}

/// Threshold granularity for factual checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKeying {
    /// One threshold per (predicate, bound-argument) instance.
    #[default]
    PredicateInstance,
    /// One threshold per predicate name.
    PredicateName,
}

#[derive(Clone, Debug, Default)]
struct KeyState {
    grid: Option<i32>,
    locked: bool,
    accepted: Vec<(String, f64)>,
}

impl KeyState {
    fn grid(&self) -> i32 {
        self.grid.unwrap_or(START)
    }
}

/// All threshold streams of one run.
#[derive(Clone, Debug, Default)]
pub struct CriticState {
    keying: ThresholdKeying,
    entries: BTreeMap<CheckKey, KeyState>,
}

impl CriticState {
    pub fn new(keying: ThresholdKeying) -> Self {
        CriticState {
            keying,
            entries: BTreeMap::new(),
        }
    }

    pub fn keying(&self) -> ThresholdKeying {
        self.keying
    }

    pub fn threshold(&self, key: &CheckKey) -> f64 {
        grid_to_prob(self.entries.get(key).map(KeyState::grid).unwrap_or(START))
    }

    pub fn is_locked(&self, key: &CheckKey) -> bool {
        self.entries.get(key).is_some_and(|e| e.locked)
    }

    /// Snapshot of every threshold, for traces and manifests.
    pub fn thresholds(&self) -> BTreeMap<CheckKey, f64> {
        self.entries
            .iter()
            .map(|(k, v)| (k.clone(), grid_to_prob(v.grid())))
            .collect()
    }
}

fn grid_to_prob(grid: i32) -> f64 {
    f64::from(grid) / 100.0
}

/// Largest grid value at or below `p`.
fn grid_floor(p: f64) -> i32 {
    let hundredths = libm::floor(p * 100.0 + 1e-9) as i32;
    (hundredths - hundredths.rem_euclid(STEP)).clamp(0, 100)
}

/// One critic verdict for one candidate value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueCheck {
    pub key: CheckKey,
    pub statement: String,
    pub yes_prob: f64,
}

/// A candidate value with all of its checks resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateChecks {
    pub value: String,
    pub checks: Vec<ValueCheck>,
}

/// A previously accepted value displaced by a threshold raise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetroRejection {
    pub key: CheckKey,
    pub value: String,
}

/// Outcome of one verification batch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    /// `(value, min yes-probability over its checks)`.
    pub accepted: Vec<(String, f64)>,
    pub rejected: Vec<(String, f64)>,
    /// Minimum threshold over the keys this batch touched.
    pub threshold_after: f64,
    pub retro_rejected: Vec<RetroRejection>,
}

impl VerificationOutcome {
    pub fn retro_values(&self) -> Vec<&str> {
        self.retro_rejected.iter().map(|r| r.value.as_str()).collect()
    }
}

/// Apply one batch of resolved critic checks to the threshold state.
///
/// Per key: a locked threshold may ratchet up (with retroactive
/// rejection); an unlocked one decrements until something in the batch
/// passes or the floor is reached, locking on the first acceptance.
/// Values are then admitted only if all their checks clear the final
/// thresholds. An empty batch changes nothing.
pub fn verify_values(batch: &[CandidateChecks], state: &mut CriticState) -> VerificationOutcome {
    let mut outcome = VerificationOutcome {
        threshold_after: 1.0,
        ..VerificationOutcome::default()
    };
    if batch.is_empty() {
        outcome.threshold_after = 0.0;
        return outcome;
    }

    // Group this batch's probabilities per key, in first-seen order.
    let mut keys: Vec<CheckKey> = Vec::new();
    let mut probs: BTreeMap<CheckKey, Vec<f64>> = BTreeMap::new();
    for cand in batch {
        for check in &cand.checks {
            let entry = probs.entry(check.key.clone()).or_default();
            if entry.is_empty() {
                keys.push(check.key.clone());
            }
            entry.push(check.yes_prob);
        }
    }

    for key in &keys {
        let key_probs = &probs[key];
        let entry = state.entries.entry(key.clone()).or_default();
        if entry.locked {
            let best = key_probs.iter().copied().fold(f64::MIN, f64::max);
            let target = grid_floor(best);
            if target > entry.grid() {
                entry.grid = Some(target);
                let bar = grid_to_prob(target);
                let mut kept = Vec::with_capacity(entry.accepted.len());
                for (value, prob) in entry.accepted.drain(..) {
                    if prob < bar {
                        outcome.retro_rejected.push(RetroRejection {
                            key: key.clone(),
                            value,
                        });
                    } else {
                        kept.push((value, prob));
                    }
                }
                entry.accepted = kept;
            }
        } else {
            let floor = key.floor();
            let mut grid = entry.grid();
            while grid > floor && !key_probs.iter().any(|p| *p >= grid_to_prob(grid)) {
                grid -= STEP;
            }
            entry.grid = Some(grid);
            if key_probs.iter().any(|p| *p >= grid_to_prob(grid)) {
                entry.locked = true;
            }
        }
    }

    // Admit candidates against the settled thresholds.
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for cand in batch {
        let min_prob = cand
            .checks
            .iter()
            .map(|c| c.yes_prob)
            .fold(f64::INFINITY, f64::min);
        let pass = cand
            .checks
            .iter()
            .all(|c| c.yes_prob >= state.threshold(&c.key));
        if pass && seen.insert(cand.value.clone()) {
            outcome.accepted.push((cand.value.clone(), min_prob));
            for check in &cand.checks {
                let entry = state.entries.entry(check.key.clone()).or_default();
                entry.accepted.push((cand.value.clone(), check.yes_prob));
            }
        } else if !pass {
            outcome.rejected.push((cand.value.clone(), min_prob));
        }
    }

    outcome.threshold_after = keys
        .iter()
        .map(|k| state.threshold(k))
        .fold(f64::INFINITY, f64::min);
    outcome
}
