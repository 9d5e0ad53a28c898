//! Broadcast query encoding: one query and `k` titles packed into a single
//! sequence, scored with one encoder pass and one `k`-row decoder pass.
//!
//! Visibility inside the encoder:
//!
//! ```text
//!            query  title1  title2
//!   query      x
//!   title1     x      x
//!   title2     x              x
//! ```
//!
//! Every title's effective positions start right after the query, so each
//! title sees exactly the relative offsets it would see in a per-pair pass
//! with the query blocked from the title.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{decode_scores, encode, ModelParams, TitleScore, TokenId};
use crate::tensor::AdditiveMask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBatch {
    pub tokens: Vec<TokenId>,
    /// 0 for query positions, `t` for title `t` (1-based).
    pub segment_ids: Vec<usize>,
    pub query_len: usize,
    pub title_lens: Vec<usize>,
    pub title_ids: Vec<String>,
}

impl PackedBatch {
    pub fn num_titles(&self) -> usize {
        self.title_lens.len()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectivePositions(pub Vec<i64>);

#[derive(Debug, Clone, PartialEq)]
pub struct BqeScores {
    pub title_ids: Vec<String>,
    pub scores: Vec<TitleScore>,
}

/// What each decoder start token may read from the packed encoder output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CrossScope {
    /// The query positions and the token's own title.
    #[default]
    QueryAndTitle,
    /// Only the token's own title.
    TitleOnly,
}

pub fn pack_batch<S: AsRef<str>>(
    query: &[TokenId],
    titles: &[(S, Vec<TokenId>)],
) -> Result<PackedBatch> {
    if query.is_empty() {
        return Err(Error::EmptyInput("query"));
    }
    if titles.is_empty() {
        return Err(Error::EmptyInput("title list"));
    }
    if titles.iter().any(|(_, t)| t.is_empty()) {
        return Err(Error::EmptyInput("title"));
    }
    let total = query.len() + titles.iter().map(|(_, t)| t.len()).sum::<usize>();
    let mut tokens = Vec::with_capacity(total);
    let mut segment_ids = Vec::with_capacity(total);
    tokens.extend_from_slice(query);
    segment_ids.resize(query.len(), 0);
    for (t, (_, title)) in titles.iter().enumerate() {
        tokens.extend_from_slice(title);
        segment_ids.extend(std::iter::repeat_n(t + 1, title.len()));
    }
    Ok(PackedBatch {
        tokens,
        segment_ids,
        query_len: query.len(),
        title_lens: titles.iter().map(|(_, t)| t.len()).collect(),
        title_ids: titles
            .iter()
            .map(|(id, _)| id.as_ref().to_string())
            .collect(),
    })
}

/// `visible(i, j)` iff `seg_i == seg_j` or (`seg_i > 0` and `seg_j == 0`).
pub fn encoder_visible(seg_i: usize, seg_j: usize) -> bool {
    seg_i == seg_j || (seg_i > 0 && seg_j == 0)
}

pub fn build_encoder_mask(batch: &PackedBatch) -> Result<AdditiveMask> {
    let seg = &batch.segment_ids;
    AdditiveMask::from_visibility(seg.len(), seg.len(), |i, j| encoder_visible(seg[i], seg[j]))
}

pub fn effective_positions(batch: &PackedBatch) -> EffectivePositions {
    let q = batch.query_len as i64;
    let mut positions: Vec<i64> = (0..q).collect();
    for &len in &batch.title_lens {
        positions.extend(q..q + len as i64);
    }
    EffectivePositions(positions)
}

/// Decoder self mask (`k x k`, each start token sees only itself) and cross
/// mask (`k x len`).
pub fn build_decoder_masks(
    batch: &PackedBatch,
    cross_scope: CrossScope,
) -> Result<(AdditiveMask, AdditiveMask)> {
    let k = batch.num_titles();
    let self_mask = AdditiveMask::from_visibility(k, k, |i, j| i == j)?;
    let seg = &batch.segment_ids;
    let cross = AdditiveMask::from_visibility(k, seg.len(), |row, j| {
        seg[j] == row + 1 || (cross_scope == CrossScope::QueryAndTitle && seg[j] == 0)
    })?;
    Ok((self_mask, cross))
}

/// Scores every title against the query in a single packed forward pass.
pub fn bqe_score<S: AsRef<str>>(
    params: &ModelParams,
    query: &[TokenId],
    titles: &[(S, Vec<TokenId>)],
    cross_scope: CrossScope,
) -> Result<BqeScores> {
    let batch = pack_batch(query, titles)?;
    let enc_mask = build_encoder_mask(&batch)?;
    let positions = effective_positions(&batch);
    let states = encode(&batch.tokens, &enc_mask, &positions.0, params)?;
    let (self_mask, cross_mask) = build_decoder_masks(&batch, cross_scope)?;
    let scores = decode_scores(&states, &self_mask, &cross_mask, params)?;
    Ok(BqeScores {
        title_ids: batch.title_ids,
        scores,
    })
}
