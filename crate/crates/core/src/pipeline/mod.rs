//! End-to-end reranking over retrieved candidates, recall@k, run files, cost
//! models, latency benchmarking and the toy training loop.

mod bench;
mod cost;
mod run_file;
mod train;

pub use bench::{
    bench_latency, fever_workload, score_bench_query, synthetic_workload, BenchCandidate,
    BenchQuery, LatencyMeasurement, MIN_REPETITIONS,
};
pub use cost::{
    cost_report, memory_model, token_cost, CostReport, DatasetStats, MemoryCost, ModeMemory,
    TokenCost, DEFAULT_PASSAGE_TOKENS, WIKIPEDIA_TITLE_TOKENS,
};
pub use run_file::{read_run, write_run, RunLine};
pub use train::{train_toy, EvalPoint, ToyTrainConfig, TrainStep, TrainTrace};

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bqe::{bqe_score, CrossScope};
use crate::error::{Error, Result};
use crate::model::{mono_score_pair, ModelConfig, ModelParams, ScoreVariant, TokenId};
use crate::retrieval::{tokenize, Candidate, Corpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RerankVariant {
    /// All titles in one packed pass.
    Bqe,
    /// One pass per `(query, title)` pair.
    VanillaTitle,
    /// One pass per `(query, title ⧺ text)` pair.
    VanillaPassage,
}

impl RerankVariant {
    pub const ALL: [RerankVariant; 3] = [
        RerankVariant::Bqe,
        RerankVariant::VanillaTitle,
        RerankVariant::VanillaPassage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RerankVariant::Bqe => "BQE",
            RerankVariant::VanillaTitle => "VANILLA_TITLE",
            RerankVariant::VanillaPassage => "VANILLA_PASSAGE",
        }
    }
}

impl std::fmt::Display for RerankVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RerankVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RerankVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown rerank variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankOptions {
    pub variant: RerankVariant,
    /// Encoder visibility used by the per-pair variants.
    pub pair_variant: ScoreVariant,
    /// Decoder cross-attention scope used by the packed variant.
    pub cross_scope: CrossScope,
}

impl Default for RerankOptions {
    fn default() -> Self {
        Self {
            variant: RerankVariant::Bqe,
            pair_variant: ScoreVariant::QueryBlind,
            cross_scope: CrossScope::QueryAndTitle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub qid: String,
    /// Scores nonincreasing, doc ids unique.
    pub entries: Vec<RankedEntry>,
    pub provenance: RerankVariant,
}

/// Maps text to model token ids: each analyzer token is hashed (FNV-1a) into
/// the vocabulary range above the reserved ids. Text with no tokens maps to a
/// single pad token so that every title is non-empty.
pub fn text_to_token_ids(text: &str, config: &ModelConfig) -> Vec<TokenId> {
    let base = config
        .yes_id
        .max(config.no_id)
        .max(config.decoder_start_id)
        .max(config.pad_id) as u64
        + 1;
    let span = (config.vocab_size as u64).saturating_sub(base).max(1);
    let ids: Vec<TokenId> = tokenize(text)
        .iter()
        .map(|tok| (base + fnv1a(tok.as_bytes()) % span) as TokenId)
        .collect();
    if ids.is_empty() {
        vec![config.pad_id]
    } else {
        ids
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Scores the first `n_docs` candidates (duplicates dropped) and sorts them by
/// score descending, keeping first-stage order among ties.
pub fn rerank(
    params: &ModelParams,
    qid: &str,
    query_text: &str,
    candidates: &[Candidate],
    n_docs: usize,
    corpus: &Corpus,
    options: &RerankOptions,
) -> Result<RankedList> {
    if n_docs == 0 {
        return Err(Error::InvalidArgument("n_docs must be >= 1".into()));
    }
    let cfg = &params.config;
    let query = text_to_token_ids(query_text, cfg);

    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for c in candidates {
        if docs.len() == n_docs {
            break;
        }
        if seen.insert(c.doc_id.as_str()) {
            docs.push(corpus.resolve(&c.doc_id)?);
        }
    }
    if docs.is_empty() {
        return Ok(RankedList {
            qid: qid.to_string(),
            entries: Vec::new(),
            provenance: options.variant,
        });
    }

    let scores: Vec<f64> = match options.variant {
        RerankVariant::Bqe => {
            let titles: Vec<(&str, Vec<TokenId>)> = docs
                .iter()
                .map(|d| (d.doc_id.as_str(), text_to_token_ids(&d.title, cfg)))
                .collect();
            bqe_score(params, &query, &titles, options.cross_scope)?
                .scores
                .into_iter()
                .map(|s| s.value())
                .collect()
        }
        RerankVariant::VanillaTitle | RerankVariant::VanillaPassage => docs
            .iter()
            .map(|d| {
                let text = if options.variant == RerankVariant::VanillaPassage {
                    format!("{} {}", d.title, d.text)
                } else {
                    d.title.clone()
                };
                let title = text_to_token_ids(&text, cfg);
                mono_score_pair(&query, &title, options.pair_variant, params).map(|s| s.value())
            })
            .collect::<Result<_>>()?,
    };

    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(RankedList {
        qid: qid.to_string(),
        entries: order
            .into_iter()
            .map(|i| RankedEntry {
                doc_id: docs[i].doc_id.clone(),
                score: scores[i],
            })
            .collect(),
        provenance: options.variant,
    })
}

/// 1.0 when any of the top `k` doc ids is gold, else 0.0.
pub fn recall_at_k(ranked: &RankedList, gold_ids: &HashSet<String>, k: usize) -> Result<f64> {
    hit_at_k(
        ranked.entries.iter().map(|e| e.doc_id.as_str()),
        gold_ids,
        k,
    )
}

pub fn hit_at_k<'a>(
    ranked_ids: impl IntoIterator<Item = &'a str>,
    gold_ids: &HashSet<String>,
    k: usize,
) -> Result<f64> {
    if gold_ids.is_empty() {
        return Err(Error::EmptyGold);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let hit = ranked_ids
        .into_iter()
        .take(k)
        .any(|id| gold_ids.contains(id));
    Ok(if hit { 1.0 } else { 0.0 })
}

/// Mean of per-query hits. Queries in `gold` with no ranked list count as
/// misses; queries with an empty gold set are skipped.
pub fn mean_recall_at_k(
    ranked: &HashMap<String, Vec<String>>,
    gold: &[(String, HashSet<String>)],
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for (qid, gold_ids) in gold {
        if gold_ids.is_empty() {
            continue;
        }
        n += 1;
        if let Some(list) = ranked.get(qid) {
            total += hit_at_k(list.iter().map(String::as_str), gold_ids, k)?;
        }
    }
    if n == 0 {
        return Err(Error::EmptyGold);
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_model;
    use crate::retrieval::{CandidateSource, Document};

    fn list(ids: &[&str]) -> RankedList {
        RankedList {
            qid: "q".into(),
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, id)| RankedEntry {
                    doc_id: id.to_string(),
                    score: 1.0 - i as f64 * 0.01,
                })
                .collect(),
            provenance: RerankVariant::Bqe,
        }
    }

    fn gold(ids: &[&str]) -> HashSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn recall_examples() {
        let g = gold(&["x"]);
        assert_eq!(recall_at_k(&list(&["x", "a", "b"]), &g, 5).unwrap(), 1.0);
        assert_eq!(
            recall_at_k(&list(&["a", "b", "c", "d", "e", "x"]), &g, 5).unwrap(),
            0.0
        );
        assert!(matches!(
            recall_at_k(&list(&["a"]), &HashSet::new(), 1),
            Err(Error::EmptyGold)
        ));
    }

    #[test]
    fn mean_recall_over_four_queries() {
        let mut ranked = HashMap::new();
        let mut golds = Vec::new();
        for (i, hit) in [true, false, true, true].into_iter().enumerate() {
            let qid = format!("q{i}");
            let top = if hit { "g" } else { "n" };
            ranked.insert(qid.clone(), vec![top.to_string()]);
            golds.push((qid, gold(&["g"])));
        }
        assert_eq!(mean_recall_at_k(&ranked, &golds, 1).unwrap(), 0.75);
        golds.push(("missing".into(), gold(&["g"])));
        assert_eq!(mean_recall_at_k(&ranked, &golds, 1).unwrap(), 0.6);
    }

    #[test]
    fn token_ids_are_stable_and_in_range() {
        let cfg = ModelConfig::default();
        let a = text_to_token_ids("Benny Hill", &cfg);
        assert_eq!(a, text_to_token_ids("benny  HILL!", &cfg));
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|&t| t >= 4 && (t as usize) < cfg.vocab_size));
        assert_eq!(text_to_token_ids("...", &cfg), vec![cfg.pad_id]);
    }

    fn toy_corpus() -> Corpus {
        Corpus::new(
            (0..6)
                .map(|i| Document {
                    doc_id: format!("d{i}"),
                    title: format!("title number {i} word{}", i * 7),
                    text: format!("body text for document {i} with extra words"),
                })
                .collect(),
        )
        .unwrap()
    }

    fn cands(ids: &[&str]) -> Vec<Candidate> {
        ids.iter()
            .map(|id| Candidate {
                doc_id: id.to_string(),
                source: CandidateSource::Bm25,
                first_stage_score: 1.0,
            })
            .collect()
    }

    #[test]
    fn rerank_single_doc_any_variant() {
        let p = init_model(&ModelConfig::default(), 5).unwrap();
        let corpus = toy_corpus();
        for variant in RerankVariant::ALL {
            let opts = RerankOptions {
                variant,
                ..Default::default()
            };
            let r = rerank(
                &p,
                "q",
                "some query",
                &cands(&["d3", "d1"]),
                1,
                &corpus,
                &opts,
            )
            .unwrap();
            assert_eq!(r.entries.len(), 1);
            assert_eq!(r.entries[0].doc_id, "d3");
        }
    }

    #[test]
    fn rerank_bqe_matches_pairwise_titles() {
        let p = init_model(&ModelConfig::default(), 5).unwrap();
        let corpus = toy_corpus();
        let c = cands(&["d0", "d1", "d2", "d3", "d4", "d5", "d2"]);
        let bqe = rerank(
            &p,
            "q",
            "which title",
            &c,
            10,
            &corpus,
            &RerankOptions::default(),
        )
        .unwrap();
        let pair = rerank(
            &p,
            "q",
            "which title",
            &c,
            10,
            &corpus,
            &RerankOptions {
                variant: RerankVariant::VanillaTitle,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(bqe.entries.len(), 6);
        for (a, b) in bqe.entries.iter().zip(&pair.entries) {
            assert_eq!(a.doc_id, b.doc_id);
            assert!((a.score - b.score).abs() <= 1e-9);
        }
        assert!(bqe.entries.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn rerank_names_unknown_doc() {
        let p = init_model(&ModelConfig::default(), 5).unwrap();
        let err = rerank(
            &p,
            "q",
            "x",
            &cands(&["d0", "ghost"]),
            5,
            &toy_corpus(),
            &RerankOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn variant_names_parse() {
        for v in RerankVariant::ALL {
            assert_eq!(v.name().parse::<RerankVariant>().unwrap(), v);
        }
        assert_eq!("bqe".parse::<RerankVariant>().unwrap(), RerankVariant::Bqe);
    }
}
