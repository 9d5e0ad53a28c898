use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_N_GENRE_NEGATIVES: usize = 5;
pub const DEFAULT_N_RANDOM_NEGATIVES: usize = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CandidateSource {
    GenreFile,
    Bm25,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub doc_id: String,
    pub source: CandidateSource,
    pub first_stage_score: f64,
}

impl Candidate {
    /// A generative-retriever candidate at 0-based `rank`, scored `1 / (rank + 1)`.
    pub fn from_genre(doc_id: impl Into<String>, rank: usize) -> Self {
        Self {
            doc_id: doc_id.into(),
            source: CandidateSource::GenreFile,
            first_stage_score: 1.0 / (rank as f64 + 1.0),
        }
    }
}

/// Generative-retriever candidates first, then BM25 candidates, keeping the
/// first occurrence of every doc id and truncating to `n`.
pub fn merge_candidates(genre: &[Candidate], bm25: &[Candidate], n: usize) -> Vec<Candidate> {
    let mut seen = HashSet::new();
    genre
        .iter()
        .chain(bm25)
        .filter(|c| seen.insert(c.doc_id.as_str()))
        .take(n)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSample {
    pub ids: Vec<String>,
    /// How many negatives short of `n_genre + n_rand` the pools left us.
    pub shortfall: usize,
}

/// The first `n_genre` generative-retriever ids other than the gold, then
/// `n_rand` ids drawn uniformly without replacement from the rest of the
/// BM25 pool.
pub fn sample_negatives(
    gold_id: &str,
    genre_list: &[String],
    bm25_pool: &[String],
    n_genre: usize,
    n_rand: usize,
    seed: u64,
) -> Result<NegativeSample> {
    let mut chosen: HashSet<&str> = HashSet::new();
    let mut ids = Vec::with_capacity(n_genre + n_rand);
    for id in genre_list {
        if ids.len() == n_genre {
            break;
        }
        if id != gold_id && chosen.insert(id.as_str()) {
            ids.push(id.clone());
        }
    }
    let genre_taken = ids.len();

    let mut pool_seen = HashSet::new();
    let pool: Vec<&String> = bm25_pool
        .iter()
        .filter(|id| {
            id.as_str() != gold_id && !chosen.contains(id.as_str()) && pool_seen.insert(id.as_str())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = n_rand.min(pool.len());
    for i in rand::seq::index::sample(&mut rng, pool.len(), draw) {
        ids.push(pool[i].clone());
    }

    if ids.is_empty() && n_genre + n_rand > 0 {
        return Err(Error::NoNegatives(gold_id.to_string()));
    }
    Ok(NegativeSample {
        shortfall: (n_genre - genre_taken) + (n_rand - draw),
        ids,
    })
}
