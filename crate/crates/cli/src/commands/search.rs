//! `search` and the `ablate no-critic|no-reranker` variants: run the
//! beam search over the corpus and write records, manifest, and trace.

use anyhow::{Context, Result};

use longtail_core::dataset::{emit_records, to_jsonl, Distribution, EmitContext, GenerationMethod};
use longtail_core::search::{run_search, RerankMode, SearchError, SearchGateway};

use crate::backends::build_backends;
use crate::commands::BackendFailure;
use crate::config::RunConfig;
use crate::io::{load_rules, write_manifest, write_text, JsonlTraceSink, RunManifest};

#[derive(Clone, Copy, Debug, Default)]
pub struct Ablation {
    pub disable_critic: bool,
    pub random_rerank: bool,
}

pub fn run(
    config: &RunConfig,
    direction: Distribution,
    rule_filter: Option<&str>,
    ablation: Ablation,
) -> Result<()> {
    let mut rules = load_rules(&config.rules)?;
    if let Some(filter) = rule_filter {
        rules.retain(|r| r.id == filter);
        if rules.is_empty() {
            anyhow::bail!("no rule matches filter {filter}");
        }
    }
    let mut backends = build_backends(config, &rules, config.seed)?;

    let out_dir = &config.out;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut trace = JsonlTraceSink::create(&out_dir.join("trace.jsonl"))?;

    let mut search_cfg = config.search.build(direction, config.seed);
    search_cfg.critic_enabled = !ablation.disable_critic;
    if ablation.random_rerank {
        search_cfg.rerank_mode = RerankMode::UniformSample;
    }

    let mut all_records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut completed = true;
    let mut backend_error: Option<String> = None;

    for rule in &rules {
        let mut gateway = SearchGateway {
            knowledge: &mut *backends.knowledge,
            critic: &mut *backends.critic,
            scorer: &mut *backends.scorer,
        };
        match run_search(rule, &search_cfg, &mut gateway, &mut trace) {
            Ok(outcome) => {
                diagnostics.extend(
                    outcome
                        .diagnostics
                        .iter()
                        .map(|d| format!("{}: {d}", rule.id)),
                );
                if outcome.failed_beams > 0 {
                    diagnostics.push(format!("{}: {} beams failed", rule.id, outcome.failed_beams));
                }
                let ctx = EmitContext {
                    method: Some(GenerationMethod::BeamSearch),
                    suffix_id: None,
                    seed: config.seed,
                    backends: backends.identities.clone(),
                    statistic: search_cfg.statistic,
                    created_at: None,
                };
                let records =
                    emit_records(rule, &outcome.beams, direction, &mut *backends.scorer, &ctx)?;
                eprintln!("{}: {} statements", rule.id, records.len());
                all_records.extend(records);
            }
            Err(SearchError::AllBeamsFailed { step, last_error }) => {
                completed = false;
                let message = format!("{}: every beam failed at step {step}: {last_error}", rule.id);
                diagnostics.push(message.clone());
                backend_error = Some(message);
            }
            Err(other) => return Err(other.into()),
        }
    }

    write_text(&out_dir.join("lint.jsonl"), &to_jsonl(&all_records))?;
    write_manifest(
        &out_dir.join("manifest.json"),
        &RunManifest {
            command: format!(
                "search --direction {}{}{}",
                direction.as_str(),
                if ablation.disable_critic { " (no-critic)" } else { "" },
                if ablation.random_rerank { " (no-reranker)" } else { "" },
            ),
            rule_ids: rules.iter().map(|r| r.id.clone()).collect(),
            seed: config.seed,
            search: Some(search_cfg),
            backends: backends.identities.clone(),
            completed,
            diagnostics,
        },
    )?;
    trace.finish()?;
    eprintln!(
        "wrote {} records to {}",
        all_records.len(),
        out_dir.join("lint.jsonl").display()
    );

    if let Some(message) = backend_error {
        return Err(anyhow::Error::new(BackendFailure(message)));
    }
    Ok(())
}
