pub mod analyze;
pub mod baseline;
pub mod probe;
pub mod rules;
pub mod search;
pub mod stats;

use std::fmt;

/// Marker wrapped into the error chain when a model backend (not the
/// user) is at fault; the process exits 2 instead of 1.
#[derive(Debug)]
pub struct BackendFailure(pub String);

impl fmt::Display for BackendFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "backend failure: {}", self.0)
    }
}

impl std::error::Error for BackendFailure {}
