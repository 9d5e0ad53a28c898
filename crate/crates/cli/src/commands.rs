//! One function per subcommand. Each reads its inputs from the paths in the
//! [`RunConfig`], writes its artifact atomically and returns a summary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use anyhow::{bail, Context};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use titlerank_core::model::{init_model, load_checkpoint, write_checkpoint, ModelParams};
use titlerank_core::pipeline::{
    bench_latency, cost_report, mean_recall_at_k, read_run, rerank, synthetic_workload, train_toy,
    write_run, CostReport, DatasetStats, RankedList, RerankVariant, TrainTrace,
};
use titlerank_core::retrieval::{
    bm25_search, build_bm25_index, merge_candidates, read_corpus, read_jsonl, sample_negatives,
    Bm25Index, Candidate, IndexField, NegativeSample, QueryRecord,
};

use crate::artifact::{write_atomic, write_report, write_sidecar};
use crate::config::{RunConfig, SubSeed, MAX_RECOMMENDED_N_DOCS};

/// One line of the candidates file produced by `retrieve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub qid: String,
    pub query: String,
    #[serde(default)]
    pub gold_ids: Vec<String>,
    pub candidates: Vec<Candidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negatives: Option<NegativeSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSummary {
    pub doc_count: usize,
    pub avg_doc_length: f64,
}

pub fn cmd_index(cfg: &RunConfig) -> anyhow::Result<IndexSummary> {
    let corpus = read_corpus(&cfg.paths.corpus)
        .with_context(|| format!("reading corpus {}", cfg.paths.corpus.display()))?;
    let index = build_bm25_index(&corpus, cfg.retrieval.index_field)?;
    let bytes = index.to_bytes();
    write_atomic(&cfg.paths.index, |w| Ok(w.write_all(&bytes)?))?;
    write_sidecar(&cfg.paths.index, "bm25_index", cfg)?;
    Ok(IndexSummary {
        doc_count: index.doc_count(),
        avg_doc_length: index.avg_doc_length,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrieveSummary {
    pub queries: usize,
    pub missing_genre_field: usize,
    pub with_negatives: usize,
}

pub fn cmd_retrieve(cfg: &RunConfig) -> anyhow::Result<RetrieveSummary> {
    let index = Bm25Index::load(&cfg.paths.index)
        .with_context(|| format!("loading index {}", cfg.paths.index.display()))?;
    let queries: Vec<QueryRecord> = read_jsonl(&cfg.paths.queries)
        .with_context(|| format!("reading queries {}", cfg.paths.queries.display()))?;
    let known: HashSet<&str> = index.doc_ids.iter().map(String::as_str).collect();
    let r = &cfg.retrieval;

    // Negatives come from a title-only index over the same corpus.
    let negative_index = if r.sample_negatives {
        let corpus = read_corpus(&cfg.paths.corpus)
            .with_context(|| format!("reading corpus {}", cfg.paths.corpus.display()))?;
        Some(build_bm25_index(&corpus, IndexField::Title)?)
    } else {
        None
    };
    let negative_seed = cfg.sub_seed(SubSeed::NegativeSampling);

    let mut summary = RetrieveSummary {
        queries: queries.len(),
        missing_genre_field: 0,
        with_negatives: 0,
    };
    let mut records = Vec::with_capacity(queries.len());
    for (qi, q) in queries.iter().enumerate() {
        let genre_ids: Vec<String> = match &q.genre_candidates {
            Some(ids) => ids
                .iter()
                .filter(|id| {
                    let ok = known.contains(id.as_str());
                    if !ok {
                        warn!(
                            "query {}: dropping unknown generative candidate {id:?}",
                            q.qid
                        );
                    }
                    ok
                })
                .cloned()
                .collect(),
            None => {
                warn!(
                    "query {}: no genre_candidates field, using BM25 only",
                    q.qid
                );
                summary.missing_genre_field += 1;
                Vec::new()
            }
        };
        let genre: Vec<Candidate> = genre_ids
            .iter()
            .take(r.n_genre)
            .enumerate()
            .map(|(rank, id)| Candidate::from_genre(id.clone(), rank))
            .collect();
        let bm25 = if r.n_bm25 > 0 {
            bm25_search(&index, &q.query, r.n_bm25)?
        } else {
            Vec::new()
        };
        let candidates = merge_candidates(&genre, &bm25, r.n_genre + r.n_bm25);

        let negatives = match (&negative_index, q.gold_ids.first()) {
            (Some(title_index), Some(gold)) => {
                let pool: Vec<String> = if r.n_bm25 > 0 {
                    bm25_search(title_index, &q.query, r.n_bm25)?
                        .into_iter()
                        .map(|c| c.doc_id)
                        .collect()
                } else {
                    Vec::new()
                };
                match sample_negatives(
                    gold,
                    &genre_ids,
                    &pool,
                    r.n_genre_negatives,
                    r.n_random_negatives,
                    negative_seed.wrapping_add(qi as u64),
                ) {
                    Ok(sample) => {
                        if sample.shortfall > 0 {
                            warn!("query {}: {} negatives short", q.qid, sample.shortfall);
                        }
                        summary.with_negatives += 1;
                        Some(sample)
                    }
                    Err(e) => {
                        warn!("query {}: {e}", q.qid);
                        None
                    }
                }
            }
            _ => None,
        };

        records.push(CandidateRecord {
            qid: q.qid.clone(),
            query: q.query.clone(),
            gold_ids: q.gold_ids.clone(),
            candidates,
            negatives,
        });
    }

    write_atomic(&cfg.paths.candidates, |w| {
        for rec in &records {
            serde_json::to_writer(&mut *w, rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    write_sidecar(&cfg.paths.candidates, "candidates", cfg)?;
    Ok(summary)
}

/// Writes a freshly initialized model seeded from the model-init sub-seed.
pub fn cmd_init_model(cfg: &RunConfig) -> anyhow::Result<String> {
    let params = init_model(&cfg.model, cfg.sub_seed(SubSeed::ModelInit))?;
    write_atomic(&cfg.paths.checkpoint, |w| Ok(write_checkpoint(&params, w)?))?;
    write_sidecar(&cfg.paths.checkpoint, "model_checkpoint", cfg)?;
    Ok(params.checksum())
}

pub fn load_model(path: &Path) -> anyhow::Result<ModelParams> {
    if !path.exists() {
        bail!(
            "model checkpoint {} does not exist; create one with `titlerank init-model`",
            path.display()
        );
    }
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerankSummary {
    pub queries: usize,
    pub skipped_empty: usize,
}

pub fn cmd_rerank(cfg: &RunConfig) -> anyhow::Result<RerankSummary> {
    if cfg.n_docs > MAX_RECOMMENDED_N_DOCS {
        warn!(
            "n_docs {} exceeds the recommended maximum of {MAX_RECOMMENDED_N_DOCS}",
            cfg.n_docs
        );
    }
    let corpus = read_corpus(&cfg.paths.corpus)
        .with_context(|| format!("reading corpus {}", cfg.paths.corpus.display()))?;
    let records: Vec<CandidateRecord> = read_jsonl(&cfg.paths.candidates)
        .with_context(|| format!("reading candidates {}", cfg.paths.candidates.display()))?;
    let params = load_model(&cfg.paths.checkpoint)?;
    if params.config != cfg.model {
        warn!("checkpoint model config differs from the run config; using the checkpoint's");
    }
    let opts = cfg.rerank_options();

    let score = |rec: &CandidateRecord| -> anyhow::Result<Option<RankedList>> {
        if rec.candidates.is_empty() {
            warn!("query {}: empty candidate list, skipped", rec.qid);
            return Ok(None);
        }
        let list = rerank(
            &params,
            &rec.qid,
            &rec.query,
            &rec.candidates,
            cfg.n_docs,
            &corpus,
            &opts,
        )
        .with_context(|| format!("reranking query {}", rec.qid))?;
        Ok(Some(list))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()?;
    let results: Vec<anyhow::Result<Option<RankedList>>> =
        pool.install(|| records.par_iter().map(score).collect());

    let mut lists = Vec::with_capacity(records.len());
    for r in results {
        if let Some(list) = r? {
            lists.push(list);
        }
    }
    let summary = RerankSummary {
        queries: lists.len(),
        skipped_empty: records.len() - lists.len(),
    };
    write_atomic(&cfg.paths.run, |w| Ok(write_run(&lists, w)?))?;
    write_sidecar(&cfg.paths.run, "run", cfg)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// `"recall@k"` to the mean per-query hit rate.
    pub recall: BTreeMap<String, f64>,
    /// Queries with a non-empty gold set.
    pub evaluated_queries: usize,
    pub skipped_empty_gold: usize,
    /// Evaluated queries absent from the run; each counts as a miss.
    pub missing_from_run: usize,
}

pub fn cmd_eval(cfg: &RunConfig) -> anyhow::Result<EvalMetrics> {
    let file = std::fs::File::open(&cfg.paths.run)
        .with_context(|| format!("opening run {}", cfg.paths.run.display()))?;
    let lines = read_run(std::io::BufReader::new(file))
        .with_context(|| format!("reading run {}", cfg.paths.run.display()))?;
    let queries: Vec<QueryRecord> = read_jsonl(&cfg.paths.queries)
        .with_context(|| format!("reading queries {}", cfg.paths.queries.display()))?;

    let mut by_query: HashMap<String, Vec<(usize, String)>> = HashMap::new();
    for l in lines {
        by_query.entry(l.qid).or_default().push((l.rank, l.doc_id));
    }
    let ranked: HashMap<String, Vec<String>> = by_query
        .into_iter()
        .map(|(qid, mut v)| {
            v.sort();
            (qid, v.into_iter().map(|(_, d)| d).collect())
        })
        .collect();

    let mut skipped_empty_gold = 0;
    let mut missing_from_run = 0;
    let mut gold = Vec::new();
    for q in &queries {
        if q.gold_ids.is_empty() {
            warn!("query {}: no gold ids, not evaluated", q.qid);
            skipped_empty_gold += 1;
            continue;
        }
        if !ranked.contains_key(&q.qid) {
            missing_from_run += 1;
        }
        gold.push((
            q.qid.clone(),
            q.gold_ids.iter().cloned().collect::<HashSet<_>>(),
        ));
    }
    if missing_from_run > 0 {
        warn!("{missing_from_run} evaluated queries have no ranked list and count as misses");
    }

    let mut ks = cfg.eval_ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut recall = BTreeMap::new();
    for k in ks {
        recall.insert(format!("recall@{k}"), mean_recall_at_k(&ranked, &gold, k)?);
    }
    let metrics = EvalMetrics {
        recall,
        evaluated_queries: gold.len(),
        skipped_empty_gold,
        missing_from_run,
    };
    write_report(&cfg.paths.metrics, "metrics", cfg, &metrics)?;
    Ok(metrics)
}

pub fn cmd_train_toy(cfg: &RunConfig) -> anyhow::Result<TrainTrace> {
    let trace = train_toy(cfg.train_loss, &cfg.toy_train_config());
    write_report(&cfg.paths.trace, "train_trace", cfg, &trace)?;
    Ok(trace)
}

/// Where a latency measurement was taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub available_parallelism: usize,
    pub debug_assertions: bool,
    pub threads_used: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            debug_assertions: cfg!(debug_assertions),
            threads_used: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub cost: CostReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<Environment>,
}

pub fn cmd_bench(cfg: &RunConfig) -> anyhow::Result<BenchOutput> {
    let b = &cfg.bench;
    let mut stats = DatasetStats::preset(&b.dataset)?;
    stats.avg_passage_tokens = b.avg_passage_tokens;
    let d_attn = (cfg.model.n_heads * cfg.model.d_head) as f64;
    let mut cost = cost_report(&stats, b.k, d_attn, cfg.model.d_ff as f64)?;

    let environment = if b.measure_latency {
        let params = load_model(&cfg.paths.checkpoint)?;
        let workload = synthetic_workload(
            &params.config,
            b.latency_queries,
            stats.avg_query_tokens.round().max(1.0) as usize,
            stats.avg_title_tokens.round().max(1.0) as usize,
            stats.avg_passage_tokens.round().max(1.0) as usize,
            b.k,
            cfg.sub_seed(SubSeed::BenchWorkload),
        );
        for variant in RerankVariant::ALL {
            info!("timing {variant}");
            cost.measured_latency
                .push(bench_latency(&params, &workload, variant, b.repetitions)?);
        }
        Some(Environment::current())
    } else {
        None
    };

    let out = BenchOutput { cost, environment };
    write_report(&cfg.paths.report, "cost_report", cfg, &out)?;
    Ok(out)
}
