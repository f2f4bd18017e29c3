//! `baseline` — instruction-only generation: one prompt fills every
//! variable at once, optionally pushed toward rare values by a numbered
//! long-tail suffix. Output flows through the same record path as
//! search output.

use anyhow::{bail, Context, Result};

use longtail_core::baseline::{build_instruction_prompt, parse_tuple_reply};
use longtail_core::dataset::{emit_records, to_jsonl, Distribution, EmitContext, GenerationMethod};
use longtail_core::gateway::synthetic::SyntheticTupleGenerator;
use longtail_core::gateway::{GatewayError, GenerationRequest, KnowledgeSource};
use longtail_core::rule::Rule;
use longtail_core::search::Beam;

use crate::backends::{build_backends, HttpBackend};
use crate::commands::BackendFailure;
use crate::config::{BackendSpec, RunConfig};
use crate::io::{load_rules, write_manifest, write_text, RunManifest};

/// Instruction prompts need a rule-aware synthetic source; HTTP
/// backends handle any prompt as-is.
fn tuple_source(config: &RunConfig, rule: &Rule, seed: u64) -> Result<Box<dyn KnowledgeSource>> {
    match config
        .backends
        .get("knowledge")
        .context("config has no backend for role knowledge")?
    {
        BackendSpec::Synthetic { world, .. } => {
            let text = std::fs::read_to_string(world)
                .with_context(|| format!("reading world {}", world.display()))?;
            let world = std::sync::Arc::new(
                longtail_core::gateway::synthetic::SyntheticWorld::from_json(&text)
                    .map_err(|e| anyhow::anyhow!("{e}"))?,
            );
            Ok(Box::new(SyntheticTupleGenerator::new(world, rule.clone(), seed)))
        }
        BackendSpec::Http {
            base_url,
            model,
            api_key_env,
            max_tokens,
            affirmative_tokens,
            max_in_flight,
        } => Ok(Box::new(HttpBackend::new(
            base_url,
            model,
            api_key_env.as_deref(),
            *max_tokens,
            affirmative_tokens.clone(),
            *max_in_flight,
        ))),
        BackendSpec::Scripted { .. } => bail!("knowledge role cannot be scripted"),
    }
}

pub fn run(
    config: &RunConfig,
    suffix_id: Option<u8>,
    n_values: usize,
    rule_filter: Option<&str>,
) -> Result<()> {
    let mut rules = load_rules(&config.rules)?;
    if let Some(filter) = rule_filter {
        rules.retain(|r| r.id == filter);
        if rules.is_empty() {
            bail!("no rule matches filter {filter}");
        }
    }
    let mut backends = build_backends(config, &rules, config.seed)?;
    // A long-tail suffix marks the intended distribution; the plain
    // instruction is the head baseline.
    let distribution = if suffix_id.is_some() {
        Distribution::Tail
    } else {
        Distribution::Head
    };

    let mut all_records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut completed = true;
    let mut backend_error = None;

    for rule in &rules {
        let prompt = build_instruction_prompt(rule, n_values, suffix_id)?;
        let mut source = tuple_source(config, rule, config.seed)?;
        let mut request = GenerationRequest::new(prompt.body.clone());
        request.n_values = n_values;
        let reply = match source.complete(&request) {
            Ok(reply) => reply,
            Err(err @ GatewayError::Transport { .. }) => {
                completed = false;
                let message = format!("{}: {err}", rule.id);
                diagnostics.push(message.clone());
                backend_error = Some(message);
                continue;
            }
            Err(other) => return Err(other.into()),
        };
        let parsed = parse_tuple_reply(&reply, rule);
        if !parsed.residue.is_empty() {
            diagnostics.push(format!(
                "{}: {} unparseable reply lines",
                rule.id,
                parsed.residue.len()
            ));
        }
        let beams: Vec<Beam> = parsed
            .bindings
            .into_iter()
            .map(|mut binding| {
                binding.insert(rule.subject_symbol.clone(), rule.subject_placeholder());
                Beam::with_bindings(binding)
            })
            .collect();
        let ctx = EmitContext {
            method: Some(GenerationMethod::InstructionOnly),
            suffix_id,
            seed: config.seed,
            backends: backends.identities.clone(),
            statistic: config
                .search
                .build(distribution, config.seed)
                .statistic,
            created_at: None,
        };
        let records = emit_records(rule, &beams, distribution, &mut *backends.scorer, &ctx)?;
        eprintln!("{}: {} statements", rule.id, records.len());
        all_records.extend(records);
    }

    let out_dir = &config.out;
    write_text(&out_dir.join("lint.jsonl"), &to_jsonl(&all_records))?;
    write_manifest(
        &out_dir.join("manifest.json"),
        &RunManifest {
            command: match suffix_id {
                Some(id) => format!("baseline --suffix {id}"),
                None => "baseline".to_string(),
            },
            rule_ids: rules.iter().map(|r| r.id.clone()).collect(),
            seed: config.seed,
            search: None,
            backends: backends.identities.clone(),
            completed,
            diagnostics,
        },
    )?;
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
