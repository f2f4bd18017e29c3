//! Batch entry points for the long-tail statement pipeline.
//!
//! Exit codes: 0 success, 1 user error, 2 backend failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use longtail_core::dataset::Distribution;
use longtail_core::probe::ShotShuffle;
use longtail_core::rule::PlanDirection;

use longtail_cli::commands::{self, BackendFailure};
use longtail_cli::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "longtail",
    version,
    about = "Generate factually grounded long-tail knowledge statements by rule-guided \
             beam search, and probe models on them."
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Run config file (JSON). Without it, offline synthetic defaults
    /// over the repo fixtures apply.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Rule corpus path override.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Backend override, repeatable: `role=url,model`.
    #[arg(long = "backend-role", global = true, value_name = "ROLE=URL,MODEL")]
    backend_roles: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Lint, plan, or expand symbolic rules.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// Run the knowledge beam search and emit statement records.
    Search {
        /// Rerank toward this end of the likelihood distribution.
        #[arg(long, value_enum)]
        direction: DirectionArg,
        /// Only run the rule with this id.
        #[arg(long)]
        rule_filter: Option<String>,
    },
    /// Instruction-only generation baseline.
    Baseline {
        /// Long-tail suffix id (1..=10); tags output as tail.
        #[arg(long)]
        suffix: Option<u8>,
        /// Values requested per rule.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        rule_filter: Option<String>,
    },
    /// Distribution reports over emitted records.
    Analyze {
        #[command(subcommand)]
        action: AnalyzeAction,
    },
    /// 13-template entailment probe with strict scoring.
    Probe {
        /// Record JSONL files.
        #[arg(long, required = true, num_args = 1..)]
        records: Vec<PathBuf>,
        /// JSON labels (record_id -> {correct, data_type_ok}); without
        /// it the synthetic critic world labels records.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// CSV `domain,accuracy` human baseline to merge into the report.
        #[arg(long)]
        human: Option<PathBuf>,
        /// Reshuffle shot order per query or once per run.
        #[arg(long, value_enum, default_value_t = ShuffleArg::PerQuery)]
        shuffle: ShuffleArg,
    },
    /// Rerun the search with a component disabled, or post-hoc rerank.
    Ablate {
        #[command(subcommand)]
        variant: AblateVariant,
    },
    /// Per-domain rule and statement counts.
    Stats {
        #[arg(long, required = true, num_args = 1..)]
        records: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RulesAction {
    /// Parse and validate a corpus; non-zero exit on any invalid rule.
    Lint { path: PathBuf },
    /// Print the per-variable search order for one rule.
    Plan {
        id: String,
        #[arg(long, value_enum, default_value_t = PlanDirectionArg::Forward)]
        direction: PlanDirectionArg,
    },
    /// Print the data-type expansion prompt (or, with --specialize, the
    /// verb-optimization prompt) for one rule.
    Expand {
        id: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Print the verb prompt for this specialized type instead.
        #[arg(long)]
        specialize: Option<String>,
        /// Parse a backend reply into subtype labels.
        #[arg(long)]
        reply: Option<String>,
    },
}

#[derive(Subcommand)]
enum AnalyzeAction {
    /// Per-rule head/tail separation from two record sets.
    Delta {
        #[arg(long, required = true, num_args = 1..)]
        head: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        tail: Vec<PathBuf>,
        /// Annotation threshold for a "decent" likelihood drop.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Equal-width score histogram.
    Hist {
        #[arg(long, required = true, num_args = 1..)]
        records: Vec<PathBuf>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value = "scores")]
        tag: String,
    },
    /// Paired scores and rank correlation between the `scorer` and
    /// `scorer_b` backends.
    Compare {
        #[arg(long, required = true, num_args = 1..)]
        records: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AblateVariant {
    /// Accept every generated value (critic bypassed).
    NoCritic {
        #[arg(long, value_enum)]
        direction: DirectionArg,
        #[arg(long)]
        rule_filter: Option<String>,
    },
    /// Replace likelihood reranking with a seeded uniform sample of the
    /// same kept count.
    NoReranker {
        #[arg(long, value_enum)]
        direction: DirectionArg,
        #[arg(long)]
        rule_filter: Option<String>,
    },
    /// One global sort over finished records instead of per-variable
    /// reranking.
    Posthoc {
        #[arg(long, required = true, num_args = 1..)]
        records: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.75)]
        keep_fraction: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum DirectionArg {
    Head,
    Tail,
}

impl From<DirectionArg> for Distribution {
    fn from(value: DirectionArg) -> Self {
        match value {
            DirectionArg::Head => Distribution::Head,
            DirectionArg::Tail => Distribution::Tail,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PlanDirectionArg {
    Forward,
    Reverse,
}

impl From<PlanDirectionArg> for PlanDirection {
    fn from(value: PlanDirectionArg) -> Self {
        match value {
            PlanDirectionArg::Forward => PlanDirection::ForwardFromSubject,
            PlanDirectionArg::Reverse => PlanDirection::ReverseFromConclusion,
        }
    }
}

#[derive(Clone, Copy, PartialEq, clap::ValueEnum)]
enum ShuffleArg {
    PerQuery,
    PerRun,
}

impl From<ShuffleArg> for ShotShuffle {
    fn from(value: ShuffleArg) -> Self {
        match value {
            ShuffleArg::PerQuery => ShotShuffle::PerQuery,
            ShuffleArg::PerRun => ShotShuffle::PerRun,
        }
    }
}

fn resolve_config(overrides: &Overrides) -> Result<RunConfig> {
    let mut config = match &overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::offline_defaults(),
    };
    if let Some(rules) = &overrides.rules {
        config.rules = rules.clone();
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.out = out.clone();
    }
    for assignment in &overrides.backend_roles {
        config.override_backend(assignment)?;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rules { action } => match action {
            RulesAction::Lint { path } => commands::rules::lint(&path),
            RulesAction::Plan { id, direction } => {
                let config = resolve_config(&cli.overrides)?;
                commands::rules::plan(&config.rules, &id, direction.into())
            }
            RulesAction::Expand {
                id,
                k,
                specialize,
                reply,
            } => {
                let config = resolve_config(&cli.overrides)?;
                commands::rules::expand(&config.rules, &id, k, specialize.as_deref(), reply.as_deref())
            }
        },
        Command::Search {
            direction,
            rule_filter,
        } => {
            let config = resolve_config(&cli.overrides)?;
            commands::search::run(
                &config,
                direction.into(),
                rule_filter.as_deref(),
                commands::search::Ablation::default(),
            )
        }
        Command::Baseline {
            suffix,
            n,
            rule_filter,
        } => {
            let config = resolve_config(&cli.overrides)?;
            commands::baseline::run(&config, suffix, n, rule_filter.as_deref())
        }
        Command::Analyze { action } => {
            let config = resolve_config(&cli.overrides)?;
            match action {
                AnalyzeAction::Delta {
                    head,
                    tail,
                    threshold,
                } => commands::analyze::delta(&head, &tail, threshold, &config.out),
                AnalyzeAction::Hist { records, bins, tag } => {
                    commands::analyze::hist(&records, bins, &tag, &config.out)
                }
                AnalyzeAction::Compare { records } => {
                    commands::analyze::compare(&config, &records, &config.out)
                }
            }
        }
        Command::Probe {
            records,
            labels,
            human,
            shuffle,
        } => {
            let config = resolve_config(&cli.overrides)?;
            commands::probe::run(
                &config,
                &commands::probe::ProbeArgs {
                    records,
                    labels,
                    human,
                    shuffle: shuffle.into(),
                },
            )
        }
        Command::Ablate { variant } => match variant {
            AblateVariant::NoCritic {
                direction,
                rule_filter,
            } => {
                let config = resolve_config(&cli.overrides)?;
                commands::search::run(
                    &config,
                    direction.into(),
                    rule_filter.as_deref(),
                    commands::search::Ablation {
                        disable_critic: true,
                        random_rerank: false,
                    },
                )
            }
            AblateVariant::NoReranker {
                direction,
                rule_filter,
            } => {
                let config = resolve_config(&cli.overrides)?;
                commands::search::run(
                    &config,
                    direction.into(),
                    rule_filter.as_deref(),
                    commands::search::Ablation {
                        disable_critic: false,
                        random_rerank: true,
                    },
                )
            }
            AblateVariant::Posthoc {
                records,
                keep_fraction,
            } => {
                let config = resolve_config(&cli.overrides)?;
                commands::analyze::posthoc(&records, keep_fraction, &config.out)
            }
        },
        Command::Stats { records } => {
            let config = resolve_config(&cli.overrides)?;
            commands::stats::run(&records, Some(&config.out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            if error.chain().any(|e| e.is::<BackendFailure>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
