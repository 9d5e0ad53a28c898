//! Title reranking with a broadcast query encoder.
//!
//! A query is encoded once together with `k` candidate titles in a single
//! packed sequence; a block-structured attention mask keeps titles from
//! seeing each other and the query from seeing any title, and every title's
//! relative positions restart right after the query. One decoder start token
//! per title then reads the YES/NO logits. The result equals scoring each
//! `(query, title)` pair separately with query-to-title attention blocked.
//!
//! Modules:
//! - [`tensor`]: dense f64 kernel (softmax, RMS norm, masked attention)
//! - [`model`]: toy T5-style encoder-decoder and per-pair scoring
//! - [`bqe`]: packing, masks, effective positions and packed scoring
//! - [`losses`]: log contrastive and sigmoid-wrapped losses with gradients
//! - [`retrieval`]: BM25, candidate merging, negative sampling
//! - [`pipeline`]: reranking, recall@k, cost models, benchmarks, toy training

pub mod bqe;
pub mod error;
pub mod losses;
pub mod model;
pub mod pipeline;
pub mod retrieval;
pub mod tensor;

pub use error::{Error, Result};
