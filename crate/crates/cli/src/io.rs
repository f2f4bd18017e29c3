//! File formats: rule corpora, statement JSONL, run manifests, and the
//! streaming trace sink.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use longtail_core::dataset::{parse_jsonl, StatementLabel, StatementRecord};
use longtail_core::rule::{parse_rule_file, parse_rule_file_json, Rule};
use longtail_core::search::{SearchConfig, TraceEvent, TraceSink};

/// Load a rule corpus; JSON documents are detected by extension or a
/// leading bracket.
pub fn load_rules(path: &Path) -> Result<Vec<Rule>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading rules {}", path.display()))?;
    let looks_json = path.extension().is_some_and(|e| e == "json")
        || text.trim_start().starts_with('{')
        || text.trim_start().starts_with('[');
    let rules = if looks_json {
        parse_rule_file_json(&text)
    } else {
        parse_rule_file(&text)
    };
    rules.map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

pub fn load_records(paths: &[PathBuf]) -> Result<Vec<StatementRecord>> {
    let mut records = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading records {}", path.display()))?;
        records.extend(parse_jsonl(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?);
    }
    Ok(records)
}

pub fn load_labels(path: &Path) -> Result<BTreeMap<String, StatementLabel>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading labels {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing labels {}", path.display()))
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// Run provenance written next to every output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub rule_ids: Vec<String>,
    pub seed: u64,
    pub search: Option<SearchConfig>,
    pub backends: BTreeMap<String, String>,
    pub completed: bool,
    pub diagnostics: Vec<String>,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    write_text(path, &format!("{}\n", serde_json::to_string_pretty(manifest)?))
}

/// Streams trace events to a JSONL file as they arrive.
pub struct JsonlTraceSink {
    writer: BufWriter<fs::File>,
}

impl JsonlTraceSink {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(JsonlTraceSink {
            writer: BufWriter::new(file),
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

impl TraceSink for JsonlTraceSink {
    fn record(&mut self, event: TraceEvent) {
        if let Ok(line) = serde_json::to_string(&event) {
            let _ = self.writer.write_all(line.as_bytes());
            let _ = self.writer.write_all(b"\n");
        }
    }
}
