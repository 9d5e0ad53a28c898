use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RerankVariant;
use crate::bqe::{bqe_score, CrossScope};
use crate::error::{Error, Result};
use crate::model::{mono_score_pair, ModelConfig, ModelParams, ScoreVariant, TokenId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchCandidate {
    pub title: Vec<TokenId>,
    pub passage: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchQuery {
    pub query: Vec<TokenId>,
    pub candidates: Vec<BenchCandidate>,
}

impl BenchQuery {
    pub fn encoded_tokens(&self, variant: RerankVariant) -> usize {
        let q = self.query.len();
        match variant {
            RerankVariant::Bqe => q + self.candidates.iter().map(|c| c.title.len()).sum::<usize>(),
            RerankVariant::VanillaTitle => self.candidates.iter().map(|c| q + c.title.len()).sum(),
            RerankVariant::VanillaPassage => {
                self.candidates.iter().map(|c| q + c.passage.len()).sum()
            }
        }
    }
}

/// Random token sequences of fixed lengths drawn above the reserved ids.
pub fn synthetic_workload(
    config: &ModelConfig,
    n_queries: usize,
    query_len: usize,
    title_len: usize,
    passage_len: usize,
    k: usize,
    seed: u64,
) -> Vec<BenchQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 4.min(config.vocab_size as u32 - 1);
    let hi = config.vocab_size as u32;
    let mut seq = |n: usize| -> Vec<TokenId> { (0..n).map(|_| rng.random_range(lo..hi)).collect() };
    (0..n_queries)
        .map(|_| BenchQuery {
            query: seq(query_len),
            candidates: (0..k)
                .map(|_| BenchCandidate {
                    title: seq(title_len),
                    passage: seq(passage_len),
                })
                .collect(),
        })
        .collect()
}

/// FEVER-shaped workload: query 14, title 4, passage 110 tokens, 40 candidates.
pub fn fever_workload(config: &ModelConfig, n_queries: usize, seed: u64) -> Vec<BenchQuery> {
    synthetic_workload(config, n_queries, 14, 4, 110, 40, seed)
}

pub fn score_bench_query(
    params: &ModelParams,
    item: &BenchQuery,
    variant: RerankVariant,
) -> Result<Vec<f64>> {
    match variant {
        RerankVariant::Bqe => {
            let titles: Vec<(String, Vec<TokenId>)> = item
                .candidates
                .iter()
                .enumerate()
                .map(|(i, c)| (i.to_string(), c.title.clone()))
                .collect();
            Ok(
                bqe_score(params, &item.query, &titles, CrossScope::QueryAndTitle)?
                    .scores
                    .into_iter()
                    .map(|s| s.value())
                    .collect(),
            )
        }
        RerankVariant::VanillaTitle | RerankVariant::VanillaPassage => item
            .candidates
            .iter()
            .map(|c| {
                let doc = if variant == RerankVariant::VanillaTitle {
                    &c.title
                } else {
                    &c.passage
                };
                mono_score_pair(&item.query, doc, ScoreVariant::FullMono, params).map(|s| s.value())
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyMeasurement {
    pub variant: RerankVariant,
    pub repetitions: usize,
    pub queries: usize,
    pub median_seconds_per_query: f64,
    pub samples_seconds_per_query: Vec<f64>,
    pub encoded_tokens_per_query: f64,
}

/// Fewest timed sweeps [`bench_latency`] accepts.
pub const MIN_REPETITIONS: usize = 3;

/// Median wall-clock seconds per query over `repetitions` timed sweeps of the
/// workload, after one untimed warmup sweep. Runs on the calling thread.
pub fn bench_latency(
    params: &ModelParams,
    workload: &[BenchQuery],
    variant: RerankVariant,
    repetitions: usize,
) -> Result<LatencyMeasurement> {
    if repetitions < MIN_REPETITIONS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_REPETITIONS} repetitions, got {repetitions}"
        )));
    }
    if workload.is_empty() {
        return Err(Error::EmptyInput("benchmark workload"));
    }
    for item in workload {
        std::hint::black_box(score_bench_query(params, item, variant)?);
    }
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        for item in workload {
            std::hint::black_box(score_bench_query(params, item, variant)?);
        }
        samples.push(start.elapsed().as_secs_f64() / workload.len() as f64);
    }
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    let tokens = workload
        .iter()
        .map(|q| q.encoded_tokens(variant) as f64)
        .sum::<f64>()
        / workload.len() as f64;
    Ok(LatencyMeasurement {
        variant,
        repetitions,
        queries: workload.len(),
        median_seconds_per_query: median,
        samples_seconds_per_query: samples,
        encoded_tokens_per_query: tokens,
    })
}
