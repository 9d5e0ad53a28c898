//! The run configuration shared by every command.
//!
//! A run is described by one JSON document. Every field has a default, so `{}`
//! is a valid configuration; command-line flags are applied on top of the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use titlerank_core::bqe::CrossScope;
use titlerank_core::losses::{LossConfig, LossKind};
use titlerank_core::model::{ModelConfig, ScoreVariant};
use titlerank_core::pipeline::{RerankOptions, RerankVariant, ToyTrainConfig, MIN_REPETITIONS};
use titlerank_core::retrieval::{
    IndexField, DEFAULT_N_GENRE_NEGATIVES, DEFAULT_N_RANDOM_NEGATIVES,
};

/// Rerank depths above this are accepted with a warning.
pub const MAX_RECOMMENDED_N_DOCS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub queries: PathBuf,
    pub index: PathBuf,
    pub checkpoint: PathBuf,
    pub candidates: PathBuf,
    pub run: PathBuf,
    pub metrics: PathBuf,
    pub trace: PathBuf,
    pub report: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: "corpus.jsonl".into(),
            queries: "queries.jsonl".into(),
            index: "index.bm25".into(),
            checkpoint: "model.json".into(),
            candidates: "candidates.jsonl".into(),
            run: "run.tsv".into(),
            metrics: "metrics.json".into(),
            trace: "trace.json".into(),
            report: "report.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    /// Generative-retriever candidates kept per query.
    pub n_genre: usize,
    /// BM25 candidates retrieved per query.
    pub n_bm25: usize,
    pub index_field: IndexField,
    /// Also draw training negatives per query with gold ids.
    pub sample_negatives: bool,
    pub n_genre_negatives: usize,
    pub n_random_negatives: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            n_genre: 5,
            n_bm25: 1000,
            index_field: IndexField::TitlePlusText,
            sample_negatives: false,
            n_genre_negatives: DEFAULT_N_GENRE_NEGATIVES,
            n_random_negatives: DEFAULT_N_RANDOM_NEGATIVES,
        }
    }
}

impl RetrievalConfig {
    /// Entity-linking depths: 50 generative-retriever and 1000 BM25 candidates.
    pub fn entity_linking() -> Self {
        Self {
            n_genre: 50,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Dataset statistics preset: fever, triviaqa, wow or aidayago2.
    pub dataset: String,
    pub k: usize,
    pub avg_passage_tokens: f64,
    pub measure_latency: bool,
    pub latency_queries: usize,
    pub repetitions: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dataset: "fever".into(),
            k: 40,
            avg_passage_tokens: titlerank_core::pipeline::DEFAULT_PASSAGE_TOKENS,
            measure_latency: false,
            latency_queries: 4,
            repetitions: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub retrieval: RetrievalConfig,
    pub n_docs: usize,
    pub variant: RerankVariant,
    /// Encoder visibility for the per-pair variants.
    pub pair_variant: ScoreVariant,
    pub cross_scope: CrossScope,
    pub eval_ks: Vec<usize>,
    pub train_loss: LossKind,
    /// Toy trainer settings. Its `seed` and `loss` fields are replaced at run
    /// time by the toy-training sub-seed and [`RunConfig::loss`].
    pub train: ToyTrainConfig,
    pub bench: BenchConfig,
    pub seed: u64,
    /// Threads used for per-query reranking.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            model: ModelConfig::default(),
            loss: LossConfig::default(),
            retrieval: RetrievalConfig::default(),
            n_docs: 100,
            variant: RerankVariant::Bqe,
            pair_variant: ScoreVariant::QueryBlind,
            cross_scope: CrossScope::QueryAndTitle,
            eval_ks: vec![1, 5, 10],
            train_loss: LossKind::CombinedSigmoid,
            train: ToyTrainConfig::default(),
            bench: BenchConfig::default(),
            seed: 0,
            workers: 1,
        }
    }
}

/// Independent random streams derived from [`RunConfig::seed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubSeed {
    ModelInit,
    NegativeSampling,
    ToyTraining,
    BenchWorkload,
}

impl SubSeed {
    fn stream(self) -> u64 {
        match self {
            SubSeed::ModelInit => 1,
            SubSeed::NegativeSampling => 2,
            SubSeed::ToyTraining => 3,
            SubSeed::BenchWorkload => 4,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.model.validate()?;
        self.loss.validate()?;
        if self.n_docs == 0 {
            bail!("n_docs must be >= 1");
        }
        if self.workers == 0 {
            bail!("workers must be >= 1");
        }
        if self.eval_ks.is_empty() || self.eval_ks.contains(&0) {
            bail!("eval_ks must be a non-empty list of positive integers");
        }
        if self.retrieval.n_genre + self.retrieval.n_bm25 == 0 {
            bail!("retrieval depths are both zero");
        }
        if self.bench.repetitions < MIN_REPETITIONS {
            bail!("bench.repetitions must be >= {MIN_REPETITIONS}");
        }
        if self.bench.latency_queries == 0 {
            bail!("bench.latency_queries must be >= 1");
        }
        Ok(())
    }

    pub fn sub_seed(&self, which: SubSeed) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(which.stream());
        rng.next_u64()
    }

    pub fn rerank_options(&self) -> RerankOptions {
        RerankOptions {
            variant: self.variant,
            pair_variant: self.pair_variant,
            cross_scope: self.cross_scope,
        }
    }

    pub fn toy_train_config(&self) -> ToyTrainConfig {
        ToyTrainConfig {
            seed: self.sub_seed(SubSeed::ToyTraining),
            loss: self.loss,
            ..self.train.clone()
        }
    }
}
