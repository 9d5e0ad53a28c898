//! Command-line runner for `titlerank`: indexing, candidate retrieval,
//! reranking, evaluation, toy training and cost benchmarking, all driven by a
//! single JSON [`config::RunConfig`] with flag overrides.

pub mod args;
pub mod artifact;
pub mod commands;
pub mod config;

use args::{Cli, Command};

/// Resolves the configuration and runs one subcommand, printing a summary.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = cli.resolve_config()?;
    let paths = &cfg.paths;
    match &cli.command {
        Command::Index(_) => {
            let s = commands::cmd_index(&cfg)?;
            println!(
                "indexed {} documents, avg length {:.2} tokens -> {}",
                s.doc_count,
                s.avg_doc_length,
                paths.index.display()
            );
        }
        Command::Retrieve(_) => {
            let s = commands::cmd_retrieve(&cfg)?;
            println!(
                "retrieved candidates for {} queries ({} without generative candidates) -> {}",
                s.queries,
                s.missing_genre_field,
                paths.candidates.display()
            );
            if cfg.retrieval.sample_negatives {
                println!("sampled negatives for {} queries", s.with_negatives);
            }
        }
        Command::InitModel(_) => {
            let checksum = commands::cmd_init_model(&cfg)?;
            println!("wrote model {checksum} -> {}", paths.checkpoint.display());
        }
        Command::Rerank(_) => {
            let s = commands::cmd_rerank(&cfg)?;
            println!(
                "reranked {} queries with {} ({} skipped) -> {}",
                s.queries,
                cfg.variant,
                s.skipped_empty,
                paths.run.display()
            );
        }
        Command::Eval(_) => {
            let m = commands::cmd_eval(&cfg)?;
            for (name, value) in &m.recall {
                println!("{name}\t{value:.4}");
            }
            println!(
                "evaluated {} queries -> {}",
                m.evaluated_queries,
                paths.metrics.display()
            );
        }
        Command::TrainToy(_) => {
            let t = commands::cmd_train_toy(&cfg)?;
            println!(
                "{}: {} steps, {} non-finite, max grad norm {:.4e}, final accuracy {} -> {}",
                t.loss_kind.name(),
                t.steps.len(),
                t.non_finite_steps,
                t.max_grad_norm,
                t.final_accuracy()
                    .map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}")),
                paths.trace.display()
            );
        }
        Command::Bench(_) => {
            let out = commands::cmd_bench(&cfg)?;
            let t = &out.cost.tokens;
            println!(
                "{} k={}: vanilla passage {:.2} tokens, vanilla title {:.2}, BQE {:.2}",
                out.cost.stats.name,
                t.k,
                t.vanilla_passage_tokens,
                t.vanilla_title_tokens,
                t.bqe_tokens
            );
            println!(
                "token ratio vs passage {:.2}x, vs title {:.2}x",
                t.speedup_ratio_tokens, t.title_ratio_tokens
            );
            for m in &out.cost.measured_latency {
                println!(
                    "{}: {:.3} ms/query (median of {})",
                    m.variant,
                    m.median_seconds_per_query * 1e3,
                    m.repetitions
                );
            }
            println!("-> {}", paths.report.display());
        }
    }
    Ok(())
}
