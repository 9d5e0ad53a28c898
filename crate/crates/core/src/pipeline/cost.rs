//! Token-count and memory cost models for the three reranking modes.
//!
//! Per query with `k` candidates, average query length `Q`, title length `T`
//! and passage length `P`:
//!
//! | mode            | encoded tokens | passes |
//! |-----------------|----------------|--------|
//! | vanilla passage | `k (Q + P)`    | `k`    |
//! | vanilla title   | `k (Q + T)`    | `k`    |
//! | packed (BQE)    | `Q + k T`      | 1      |

use serde::{Deserialize, Serialize};

use super::LatencyMeasurement;
use crate::error::{Error, Result};

/// Average T5-tokenized Wikipedia title length.
pub const WIKIPEDIA_TITLE_TOKENS: f64 = 4.0;
/// Assumed average passage length.
pub const DEFAULT_PASSAGE_TOKENS: f64 = 110.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub avg_query_tokens: f64,
    pub avg_title_tokens: f64,
    pub avg_passage_tokens: f64,
}

impl DatasetStats {
    pub fn new(name: &str, avg_query_tokens: f64) -> Self {
        Self {
            name: name.to_string(),
            avg_query_tokens,
            avg_title_tokens: WIKIPEDIA_TITLE_TOKENS,
            avg_passage_tokens: DEFAULT_PASSAGE_TOKENS,
        }
    }

    pub fn fever() -> Self {
        Self::new("fever", 13.88)
    }

    pub fn triviaqa() -> Self {
        Self::new("triviaqa", 21.25)
    }

    pub fn wow() -> Self {
        Self::new("wow", 93.63)
    }

    pub fn aidayago2() -> Self {
        Self::new("aidayago2", 624.47)
    }

    pub fn presets() -> Vec<Self> {
        vec![
            Self::fever(),
            Self::triviaqa(),
            Self::wow(),
            Self::aidayago2(),
        ]
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::presets()
            .into_iter()
            .find(|s| s.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset preset {name:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.avg_query_tokens > 0.0
            && self.avg_title_tokens > 0.0
            && self.avg_passage_tokens > 0.0
        {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "dataset stats must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenCost {
    pub k: usize,
    pub vanilla_passage_tokens: f64,
    pub vanilla_title_tokens: f64,
    pub bqe_tokens: f64,
    /// `vanilla_passage / bqe`
    pub speedup_ratio_tokens: f64,
    /// `vanilla_title / bqe`
    pub title_ratio_tokens: f64,
}

pub fn token_cost(stats: &DatasetStats, k: usize) -> Result<TokenCost> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    stats.validate()?;
    let kf = k as f64;
    let q = stats.avg_query_tokens;
    let vanilla_passage_tokens = kf * (q + stats.avg_passage_tokens);
    let vanilla_title_tokens = kf * (q + stats.avg_title_tokens);
    let bqe_tokens = q + kf * stats.avg_title_tokens;
    Ok(TokenCost {
        k,
        vanilla_passage_tokens,
        vanilla_title_tokens,
        bqe_tokens,
        speedup_ratio_tokens: vanilla_passage_tokens / bqe_tokens,
        title_ratio_tokens: vanilla_title_tokens / bqe_tokens,
    })
}

/// Attention and feed-forward activation terms `n² d_attn` and `n d_ff d_attn`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryCost {
    pub attn_term: f64,
    pub ff_term: f64,
    pub total: f64,
}

impl MemoryCost {
    pub fn ff_dominates(&self) -> bool {
        self.ff_term > self.attn_term
    }
}

pub fn memory_model(n: f64, d_attn: f64, d_ff: f64) -> MemoryCost {
    let attn_term = n * n * d_attn;
    let ff_term = n * d_ff * d_attn;
    MemoryCost {
        attn_term,
        ff_term,
        total: attn_term + ff_term,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMemory {
    pub sequence_length: f64,
    pub passes: usize,
    pub per_pass: MemoryCost,
    /// `passes * per_pass.total`: the cost if all passes are batched together.
    pub batched_total: f64,
}

impl ModeMemory {
    fn new(sequence_length: f64, passes: usize, d_attn: f64, d_ff: f64) -> Self {
        let per_pass = memory_model(sequence_length, d_attn, d_ff);
        Self {
            sequence_length,
            passes,
            per_pass,
            batched_total: passes as f64 * per_pass.total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub stats: DatasetStats,
    pub tokens: TokenCost,
    pub d_attn: f64,
    pub d_ff: f64,
    pub memory_vanilla_passage: ModeMemory,
    pub memory_vanilla_title: ModeMemory,
    pub memory_bqe: ModeMemory,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measured_latency: Vec<LatencyMeasurement>,
}

pub fn cost_report(stats: &DatasetStats, k: usize, d_attn: f64, d_ff: f64) -> Result<CostReport> {
    let tokens = token_cost(stats, k)?;
    let q = stats.avg_query_tokens;
    Ok(CostReport {
        stats: stats.clone(),
        tokens,
        d_attn,
        d_ff,
        memory_vanilla_passage: ModeMemory::new(q + stats.avg_passage_tokens, k, d_attn, d_ff),
        memory_vanilla_title: ModeMemory::new(q + stats.avg_title_tokens, k, d_attn, d_ff),
        memory_bqe: ModeMemory::new(tokens.bqe_tokens, 1, d_attn, d_ff),
        measured_latency: Vec::new(),
    })
}
