use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use titlerank_core::bqe::CrossScope;
use titlerank_core::losses::LossKind;
use titlerank_core::model::ScoreVariant;
use titlerank_core::pipeline::RerankVariant;
use titlerank_core::retrieval::IndexField;

use crate::config::{RetrievalConfig, RunConfig};

/// Title reranking with packed query encoding.
#[derive(Debug, Parser)]
#[command(name = "titlerank", version)]
pub struct Cli {
    /// JSON run configuration. Flags override values from this file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-query reranking.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 index from a JSONL corpus.
    Index(IndexArgs),
    /// Merge generative-retriever and BM25 candidates per query.
    Retrieve(RetrieveArgs),
    /// Write a freshly initialized model checkpoint.
    InitModel(InitModelArgs),
    /// Rerank candidates and write a run file.
    Rerank(RerankArgs),
    /// Compute recall@k of a run file against gold ids.
    Eval(EvalArgs),
    /// Train the toy scorer and write its trace.
    TrainToy(TrainToyArgs),
    /// Report token and memory costs, optionally with measured latency.
    Bench(BenchArgs),
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    let name = s.trim().replace('-', "_").to_uppercase();
    serde_json::from_value(serde_json::Value::String(name))
        .map_err(|_| format!("unknown value {s:?}"))
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index file to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// TITLE or TITLE_PLUS_TEXT.
    #[arg(long, value_parser = parse_enum::<IndexField>)]
    pub field: Option<IndexField>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Corpus, needed only with --sample-negatives.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Candidates file to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Use entity-linking depths (50 generative + 1000 BM25) before other depth flags.
    #[arg(long)]
    pub entity_linking: bool,
    #[arg(long)]
    pub n_genre: Option<usize>,
    #[arg(long)]
    pub n_bm25: Option<usize>,
    #[arg(long)]
    pub sample_negatives: bool,
}

#[derive(Debug, Args)]
pub struct InitModelArgs {
    /// Checkpoint file to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Run file to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub n_docs: Option<usize>,
    /// BQE, VANILLA_TITLE or VANILLA_PASSAGE.
    #[arg(long)]
    pub variant: Option<RerankVariant>,
    /// Per-pair encoder visibility: FULL_MONO or QUERY_BLIND.
    #[arg(long, value_parser = parse_enum::<ScoreVariant>)]
    pub pair_variant: Option<ScoreVariant>,
    /// Packed decoder scope: QUERY_AND_TITLE or TITLE_ONLY.
    #[arg(long, value_parser = parse_enum::<CrossScope>)]
    pub cross_scope: Option<CrossScope>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Metrics JSON to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Cutoffs, e.g. `--k 1,5,10`.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    /// log_contrastive, sigmoid_contrastive, sep_sigmoid or combined_sigmoid.
    #[arg(long)]
    pub loss: Option<LossKind>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Trace JSON to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// fever, triviaqa, wow or aidayago2.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Candidates per query.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub passage_tokens: Option<f64>,
    /// Also time every variant on a synthetic workload (needs a checkpoint).
    #[arg(long)]
    pub measure_latency: bool,
    #[arg(long)]
    pub latency_queries: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Report JSON to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Cli {
    /// The configuration file (or defaults) with every given flag applied.
    pub fn resolve_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.workers, self.workers);
        let p = &mut cfg.paths;
        match &self.command {
            Command::Index(a) => {
                set(&mut p.corpus, a.corpus.clone());
                set(&mut p.index, a.output.clone());
                set(&mut cfg.retrieval.index_field, a.field);
            }
            Command::Retrieve(a) => {
                set(&mut p.index, a.index.clone());
                set(&mut p.queries, a.queries.clone());
                set(&mut p.corpus, a.corpus.clone());
                set(&mut p.candidates, a.output.clone());
                let r = &mut cfg.retrieval;
                if a.entity_linking {
                    let preset = RetrievalConfig::entity_linking();
                    r.n_genre = preset.n_genre;
                    r.n_bm25 = preset.n_bm25;
                }
                set(&mut r.n_genre, a.n_genre);
                set(&mut r.n_bm25, a.n_bm25);
                r.sample_negatives |= a.sample_negatives;
            }
            Command::InitModel(a) => set(&mut p.checkpoint, a.output.clone()),
            Command::Rerank(a) => {
                set(&mut p.corpus, a.corpus.clone());
                set(&mut p.candidates, a.candidates.clone());
                set(&mut p.checkpoint, a.checkpoint.clone());
                set(&mut p.run, a.output.clone());
                set(&mut cfg.n_docs, a.n_docs);
                set(&mut cfg.variant, a.variant);
                set(&mut cfg.pair_variant, a.pair_variant);
                set(&mut cfg.cross_scope, a.cross_scope);
            }
            Command::Eval(a) => {
                set(&mut p.run, a.run.clone());
                set(&mut p.queries, a.queries.clone());
                set(&mut p.metrics, a.output.clone());
                if !a.k.is_empty() {
                    cfg.eval_ks = a.k.clone();
                }
            }
            Command::TrainToy(a) => {
                set(&mut p.trace, a.output.clone());
                set(&mut cfg.train_loss, a.loss);
                set(&mut cfg.train.steps, a.steps);
                set(&mut cfg.train.learning_rate, a.learning_rate);
            }
            Command::Bench(a) => {
                set(&mut p.checkpoint, a.checkpoint.clone());
                set(&mut p.report, a.output.clone());
                let b = &mut cfg.bench;
                set(&mut b.dataset, a.dataset.clone());
                set(&mut b.k, a.k);
                set(&mut b.avg_passage_tokens, a.passage_tokens);
                set(&mut b.latency_queries, a.latency_queries);
                set(&mut b.repetitions, a.repetitions);
                b.measure_latency |= a.measure_latency;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(args: &[&str]) -> RunConfig {
        Cli::try_parse_from(args).unwrap().resolve_config().unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let c = resolve(&[
            "titlerank",
            "--seed",
            "5",
            "rerank",
            "--n-docs",
            "15",
            "--variant",
            "vanilla_title",
            "--pair-variant",
            "full-mono",
            "--cross-scope",
            "title_only",
        ]);
        assert_eq!(c.seed, 5);
        assert_eq!(c.n_docs, 15);
        assert_eq!(c.variant, RerankVariant::VanillaTitle);
        assert_eq!(c.pair_variant, ScoreVariant::FullMono);
        assert_eq!(c.cross_scope, CrossScope::TitleOnly);
    }

    #[test]
    fn flags_win_over_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"seed": 3, "eval_ks": [2], "n_docs": 9}"#).unwrap();
        let p = path.to_str().unwrap();
        let c = resolve(&["titlerank", "--config", p, "eval", "--k", "1,5"]);
        assert_eq!(c.seed, 3);
        assert_eq!(c.eval_ks, vec![1, 5]);
        assert_eq!(c.n_docs, 9);
        let c = resolve(&["titlerank", "eval", "--config", p, "--seed", "4"]);
        assert_eq!(c.seed, 4);
        assert_eq!(c.eval_ks, vec![2]);
    }

    #[test]
    fn entity_linking_preset_then_explicit_depth() {
        let c = resolve(&["titlerank", "retrieve", "--entity-linking"]);
        assert_eq!((c.retrieval.n_genre, c.retrieval.n_bm25), (50, 1000));
        let c = resolve(&[
            "titlerank",
            "retrieve",
            "--entity-linking",
            "--n-bm25",
            "200",
        ]);
        assert_eq!((c.retrieval.n_genre, c.retrieval.n_bm25), (50, 200));
        let c = resolve(&["titlerank", "retrieve"]);
        assert_eq!((c.retrieval.n_genre, c.retrieval.n_bm25), (5, 1000));
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(Cli::try_parse_from(["titlerank", "rerank", "--variant", "dense"]).is_err());
        assert!(Cli::try_parse_from(["titlerank", "train-toy", "--loss", "hinge"]).is_err());
        let cli = Cli::try_parse_from(["titlerank", "rerank", "--n-docs", "0"]).unwrap();
        assert!(cli.resolve_config().is_err());
    }
}
