//! A small T5-style encoder-decoder with bidirectional relative position
//! buckets and a two-token (YES/NO) scoring head.
//!
//! The encoder is pre-norm: `x += Attn(rms(x))`, `x += FF(rms(x))`, followed by
//! a final RMS norm. The position-bias table is shared by every encoder
//! self-attention layer; decoder attention carries no position bias because
//! each decoder row is a single start token. The output projection is tied to
//! the token embedding.

mod checkpoint;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::{masked_attention, rms_norm_rows, stable_softmax, AdditiveMask, Tensor};

pub type TokenId = u32;

/// Standard deviation of the normal used for every weight matrix.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_head: usize,
    pub d_ff: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub n_buckets: usize,
    pub max_distance: usize,
    pub yes_id: TokenId,
    pub no_id: TokenId,
    pub decoder_start_id: TokenId,
    pub pad_id: TokenId,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 512,
            d_model: 64,
            n_heads: 8,
            d_head: 8,
            d_ff: 256,
            n_enc_layers: 2,
            n_dec_layers: 2,
            n_buckets: 32,
            max_distance: 128,
            yes_id: 1,
            no_id: 2,
            decoder_start_id: 3,
            pad_id: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.d_model == 0 || self.n_heads == 0 || self.d_head == 0 || self.d_ff == 0 {
            return fail("dimensions must be positive".into());
        }
        if self.d_model != self.n_heads * self.d_head {
            return fail(format!(
                "d_model {} != n_heads {} * d_head {}",
                self.d_model, self.n_heads, self.d_head
            ));
        }
        if self.yes_id == self.no_id {
            return fail("yes_id and no_id must differ".into());
        }
        for (name, id) in [
            ("yes_id", self.yes_id),
            ("no_id", self.no_id),
            ("decoder_start_id", self.decoder_start_id),
            ("pad_id", self.pad_id),
        ] {
            if id as usize >= self.vocab_size {
                return fail(format!("{name} {id} >= vocab_size {}", self.vocab_size));
            }
        }
        if self.n_buckets < 4 || !self.n_buckets.is_multiple_of(2) {
            return fail(format!(
                "n_buckets {} must be even and >= 4",
                self.n_buckets
            ));
        }
        if self.max_distance <= self.n_buckets / 4 {
            return fail(format!(
                "max_distance {} must exceed n_buckets/4 = {}",
                self.max_distance,
                self.n_buckets / 4
            ));
        }
        Ok(())
    }
}

/// Query, key, value and output projections, each `d_model x d_model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionWeights {
    pub q: Tensor,
    pub k: Tensor,
    pub v: Tensor,
    pub o: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedForward {
    /// `d_model x d_ff`
    pub wi: Tensor,
    /// `d_ff x d_model`
    pub wo: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderLayer {
    pub attn_norm: Vec<f64>,
    pub attn: AttentionWeights,
    pub ff_norm: Vec<f64>,
    pub ff: FeedForward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderLayer {
    pub self_norm: Vec<f64>,
    pub self_attn: AttentionWeights,
    pub cross_norm: Vec<f64>,
    pub cross_attn: AttentionWeights,
    pub ff_norm: Vec<f64>,
    pub ff: FeedForward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub seed: u64,
    /// `vocab_size x d_model`, also the output projection.
    pub embedding: Tensor,
    /// `n_buckets x n_heads`
    pub position_bias: Tensor,
    pub encoder: Vec<EncoderLayer>,
    pub encoder_norm: Vec<f64>,
    pub decoder: Vec<DecoderLayer>,
    pub decoder_norm: Vec<f64>,
}

/// Probability of relevance, `softmax([yes, no])[0]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TitleScore(pub f64);

impl TitleScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Encoder visibility for per-pair scoring of `[query ⧺ title]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScoreVariant {
    /// Every position attends every position.
    FullMono,
    /// Query positions cannot attend title positions.
    QueryBlind,
}

struct Sampler {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl Sampler {
    fn matrix(&mut self, rows: usize, cols: usize) -> Tensor {
        let data = (0..rows * cols)
            .map(|_| self.normal.sample(&mut self.rng))
            .collect();
        Tensor::new(vec![rows, cols], data).expect("shape matches by construction")
    }

    fn attention(&mut self, d: usize) -> AttentionWeights {
        AttentionWeights {
            q: self.matrix(d, d),
            k: self.matrix(d, d),
            v: self.matrix(d, d),
            o: self.matrix(d, d),
        }
    }

    fn feed_forward(&mut self, d: usize, d_ff: usize) -> FeedForward {
        FeedForward {
            wi: self.matrix(d, d_ff),
            wo: self.matrix(d_ff, d),
        }
    }
}

/// Deterministic initialization: weights from `N(0, INIT_STD)` drawn from a
/// ChaCha8 stream seeded with `seed`; normalization gains start at 1.
pub fn init_model(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(seed),
        normal: Normal::new(0.0, INIT_STD).expect("valid std"),
    };
    let d = config.d_model;
    let ones = || vec![1.0; d];

    let embedding = s.matrix(config.vocab_size, d);
    let position_bias = s.matrix(config.n_buckets, config.n_heads);
    let encoder = (0..config.n_enc_layers)
        .map(|_| EncoderLayer {
            attn_norm: ones(),
            attn: s.attention(d),
            ff_norm: ones(),
            ff: s.feed_forward(d, config.d_ff),
        })
        .collect();
    let decoder = (0..config.n_dec_layers)
        .map(|_| DecoderLayer {
            self_norm: ones(),
            self_attn: s.attention(d),
            cross_norm: ones(),
            cross_attn: s.attention(d),
            ff_norm: ones(),
            ff: s.feed_forward(d, config.d_ff),
        })
        .collect();

    Ok(ModelParams {
        config: config.clone(),
        seed,
        embedding,
        position_bias,
        encoder,
        encoder_norm: ones(),
        decoder,
        decoder_norm: ones(),
    })
}

impl ModelParams {
    /// Every parameter array in a fixed order, with its name.
    pub fn named_arrays(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("embedding".into(), self.embedding.data()),
            ("position_bias".into(), self.position_bias.data()),
        ];
        fn attn<'a>(out: &mut Vec<(String, &'a [f64])>, p: &str, a: &'a AttentionWeights) {
            out.push((format!("{p}.q"), a.q.data()));
            out.push((format!("{p}.k"), a.k.data()));
            out.push((format!("{p}.v"), a.v.data()));
            out.push((format!("{p}.o"), a.o.data()));
        }
        for (l, layer) in self.encoder.iter().enumerate() {
            let p = format!("encoder.{l}");
            out.push((format!("{p}.attn_norm"), &layer.attn_norm));
            attn(&mut out, &format!("{p}.attn"), &layer.attn);
            out.push((format!("{p}.ff_norm"), &layer.ff_norm));
            out.push((format!("{p}.ff.wi"), layer.ff.wi.data()));
            out.push((format!("{p}.ff.wo"), layer.ff.wo.data()));
        }
        out.push(("encoder_norm".into(), &self.encoder_norm));
        for (l, layer) in self.decoder.iter().enumerate() {
            let p = format!("decoder.{l}");
            out.push((format!("{p}.self_norm"), &layer.self_norm));
            attn(&mut out, &format!("{p}.self_attn"), &layer.self_attn);
            out.push((format!("{p}.cross_norm"), &layer.cross_norm));
            attn(&mut out, &format!("{p}.cross_attn"), &layer.cross_attn);
            out.push((format!("{p}.ff_norm"), &layer.ff_norm));
            out.push((format!("{p}.ff.wi"), layer.ff.wi.data()));
            out.push((format!("{p}.ff.wo"), layer.ff.wo.data()));
        }
        out.push(("decoder_norm".into(), &self.decoder_norm));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.named_arrays().iter().map(|(_, a)| a.len()).sum()
    }

    /// SHA-256 over the little-endian bytes of every parameter, hex encoded.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (_, arr) in self.named_arrays() {
            for x in arr {
                hasher.update(x.to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn check_tokens(&self, tokens: &[TokenId]) -> Result<()> {
        if let Some(&bad) = tokens
            .iter()
            .find(|&&t| t as usize >= self.config.vocab_size)
        {
            return Err(Error::ShapeMismatch(format!(
                "token {bad} outside vocabulary of {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }
}

/// Bidirectional T5 bucketing of `relative_position = key_pos - query_pos`.
///
/// Half the buckets hold non-positive offsets and half positive ones. Within
/// each half the first `n_buckets / 4` offsets get their own bucket and the
/// rest are log-spaced up to `max_distance`, beyond which they share the last
/// bucket.
pub fn relative_bucket(relative_position: i64, n_buckets: usize, max_distance: usize) -> usize {
    let half = n_buckets / 2;
    let mut bucket = if relative_position > 0 { half } else { 0 };
    let n = relative_position.unsigned_abs() as usize;
    let max_exact = half / 2;
    if n < max_exact {
        bucket += n;
    } else {
        let log_ratio =
            (n as f64 / max_exact as f64).ln() / (max_distance as f64 / max_exact as f64).ln();
        let large = max_exact + (log_ratio * (half - max_exact) as f64) as usize;
        bucket += large.min(half - 1);
    }
    bucket
}

/// Position bias `[n_heads, n, n]` with entry `(h, i, j)` taken from the
/// shared table at `relative_bucket(positions[j] - positions[i])`.
pub fn position_bias(params: &ModelParams, positions: &[i64]) -> Tensor {
    let cfg = &params.config;
    let n = positions.len();
    let mut data = vec![0.0; cfg.n_heads * n * n];
    for i in 0..n {
        for j in 0..n {
            let b = relative_bucket(positions[j] - positions[i], cfg.n_buckets, cfg.max_distance);
            let row = params.position_bias.row(b);
            for (h, &v) in row.iter().enumerate() {
                data[(h * n + i) * n + j] = v;
            }
        }
    }
    Tensor::new(vec![cfg.n_heads, n, n], data).expect("shape matches by construction")
}

fn attention_block(
    x_norm: &Tensor,
    memory: &Tensor,
    w: &AttentionWeights,
    mask: &AdditiveMask,
    bias: Option<&Tensor>,
    n_heads: usize,
) -> Result<Tensor> {
    let q = x_norm.matmul(&w.q)?;
    let k = memory.matmul(&w.k)?;
    let v = memory.matmul(&w.v)?;
    masked_attention(&q, &k, &v, mask, bias, n_heads)?.matmul(&w.o)
}

fn feed_forward(x_norm: &Tensor, ff: &FeedForward) -> Result<Tensor> {
    let mut hidden = x_norm.matmul(&ff.wi)?;
    for h in hidden.data_mut() {
        *h = h.max(0.0);
    }
    hidden.matmul(&ff.wo)
}

/// Runs the encoder over `tokens` with the given visibility and effective
/// positions, returning `[seq_len, d_model]` hidden states.
pub fn encode(
    tokens: &[TokenId],
    mask: &AdditiveMask,
    positions: &[i64],
    params: &ModelParams,
) -> Result<Tensor> {
    let n = tokens.len();
    if n == 0 {
        return Err(Error::EmptyInput("encoder tokens"));
    }
    if mask.rows() != n || mask.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "encoder mask {}x{} for {n} tokens",
            mask.rows(),
            mask.cols()
        )));
    }
    if positions.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} positions for {n} tokens",
            positions.len()
        )));
    }
    params.check_tokens(tokens)?;

    let heads = params.config.n_heads;
    let ids: Vec<usize> = tokens.iter().map(|&t| t as usize).collect();
    let mut x = params.embedding.gather_rows(&ids)?;
    let bias = position_bias(params, positions);
    for layer in &params.encoder {
        let h = rms_norm_rows(&x, &layer.attn_norm)?;
        x = x.add(&attention_block(
            &h,
            &h,
            &layer.attn,
            mask,
            Some(&bias),
            heads,
        )?)?;
        let h = rms_norm_rows(&x, &layer.ff_norm)?;
        x = x.add(&feed_forward(&h, &layer.ff)?)?;
    }
    rms_norm_rows(&x, &params.encoder_norm)
}

/// Decodes one start token per row of `cross_mask` and returns the YES/NO
/// logits for each row.
pub fn decode_logits(
    encoder_states: &Tensor,
    self_mask: &AdditiveMask,
    cross_mask: &AdditiveMask,
    params: &ModelParams,
) -> Result<Vec<(f64, f64)>> {
    let cfg = &params.config;
    let rows = cross_mask.rows();
    if rows == 0 {
        return Err(Error::EmptyInput("decoder rows"));
    }
    if cross_mask.cols() != encoder_states.rows() {
        return Err(Error::ShapeMismatch(format!(
            "cross mask has {} cols for {} encoder states",
            cross_mask.cols(),
            encoder_states.rows()
        )));
    }
    if self_mask.rows() != rows || self_mask.cols() != rows {
        return Err(Error::ShapeMismatch(format!(
            "decoder self mask {}x{} for {rows} rows",
            self_mask.rows(),
            self_mask.cols()
        )));
    }

    let mut x = params
        .embedding
        .gather_rows(&vec![cfg.decoder_start_id as usize; rows])?;
    for layer in &params.decoder {
        let h = rms_norm_rows(&x, &layer.self_norm)?;
        x = x.add(&attention_block(
            &h,
            &h,
            &layer.self_attn,
            self_mask,
            None,
            cfg.n_heads,
        )?)?;
        let h = rms_norm_rows(&x, &layer.cross_norm)?;
        x = x.add(&attention_block(
            &h,
            encoder_states,
            &layer.cross_attn,
            cross_mask,
            None,
            cfg.n_heads,
        )?)?;
        let h = rms_norm_rows(&x, &layer.ff_norm)?;
        x = x.add(&feed_forward(&h, &layer.ff)?)?;
    }
    let x = rms_norm_rows(&x, &params.decoder_norm)?;

    let yes = params.embedding.row(cfg.yes_id as usize);
    let no = params.embedding.row(cfg.no_id as usize);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    Ok((0..rows)
        .map(|r| (dot(x.row(r), yes), dot(x.row(r), no)))
        .collect())
}

/// Multi-row scoring: row `t` of `cross_mask` selects what start token `t`
/// may read from the encoder output.
pub fn decode_scores(
    encoder_states: &Tensor,
    self_mask: &AdditiveMask,
    cross_mask: &AdditiveMask,
    params: &ModelParams,
) -> Result<Vec<TitleScore>> {
    decode_logits(encoder_states, self_mask, cross_mask, params)?
        .into_iter()
        .map(|(yes, no)| Ok(TitleScore(stable_softmax(&[yes, no])?[0])))
        .collect()
}

/// Single-row scoring with one start token.
pub fn decode_score(
    encoder_states: &Tensor,
    cross_mask: &AdditiveMask,
    params: &ModelParams,
) -> Result<TitleScore> {
    if cross_mask.rows() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "single-row decode needs a 1-row cross mask, got {}",
            cross_mask.rows()
        )));
    }
    let self_mask = AdditiveMask::all_visible(1, 1)?;
    Ok(decode_scores(encoder_states, &self_mask, cross_mask, params)?[0])
}

/// Scores one `(query, title)` pair with a dedicated forward pass over
/// `[query ⧺ title]` at sequential positions. The decoder reads the whole
/// encoder output.
pub fn mono_score_pair(
    query: &[TokenId],
    title: &[TokenId],
    variant: ScoreVariant,
    params: &ModelParams,
) -> Result<TitleScore> {
    if query.is_empty() {
        return Err(Error::EmptyInput("query"));
    }
    if title.is_empty() {
        return Err(Error::EmptyInput("title"));
    }
    let q_len = query.len();
    let n = q_len + title.len();
    let tokens: Vec<TokenId> = query.iter().chain(title).copied().collect();
    let positions: Vec<i64> = (0..n as i64).collect();
    let mask = match variant {
        ScoreVariant::FullMono => AdditiveMask::all_visible(n, n)?,
        ScoreVariant::QueryBlind => {
            AdditiveMask::from_visibility(n, n, |i, j| i >= q_len || j < q_len)?
        }
    };
    let states = encode(&tokens, &mask, &positions, params)?;
    let cross = AdditiveMask::all_visible(1, n)?;
    decode_score(&states, &cross, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        init_model(&ModelConfig::default(), 7).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let a = params();
        let b = params();
        assert_eq!(a.checksum(), b.checksum());
        assert_eq!(a, b);
        let c = init_model(&ModelConfig::default(), 8).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn init_draws_have_configured_spread() {
        let p = params();
        let data = p.embedding.data();
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / data.len() as f64;
        assert!(mean.abs() < 1e-3);
        assert!((var.sqrt() - INIT_STD).abs() < 1e-3);
    }

    #[test]
    fn parameter_count_matches_shape_walk() {
        // Documented shapes, enumerated independently of named_arrays().
        let (v, d, ff, h, nb) = (512usize, 64usize, 256usize, 8usize, 32usize);
        let attn = 4 * d * d;
        let ffn = d * ff + ff * d;
        let enc_layer = d + attn + d + ffn;
        let dec_layer = d + attn + d + attn + d + ffn;
        let expected = v * d + nb * h + 2 * enc_layer + d + 2 * dec_layer + d;
        assert_eq!(expected, 263_168);
        assert_eq!(params().parameter_count(), expected);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            ModelConfig {
                d_head: 7,
                ..Default::default()
            },
            ModelConfig {
                no_id: 1,
                ..Default::default()
            },
            ModelConfig {
                yes_id: 600,
                ..Default::default()
            },
            ModelConfig {
                n_buckets: 31,
                ..Default::default()
            },
            ModelConfig {
                max_distance: 8,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(init_model(&cfg, 1), Err(Error::InvalidConfig(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn bucket_basics() {
        assert_eq!(relative_bucket(0, 32, 128), 0);
        assert_ne!(relative_bucket(1, 32, 128), relative_bucket(-1, 32, 128));
        for r in -500..500 {
            assert!(relative_bucket(r, 32, 128) < 32);
        }
    }

    /// Enumerated with an independent Python evaluation of the bidirectional
    /// T5 bucket formula for offsets -140..=140 (n_buckets 32, max_distance 128).
    const BUCKETS_NEG140_TO_140: [usize; 281] = [
        15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15,
        15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15, 15,
        15, 15, 15, 15, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14,
        14, 14, 14, 14, 14, 14, 14, 14, 13, 13, 13, 13, 13, 13, 13, 13, 13, 13, 13, 13, 13, 13, 13,
        13, 13, 13, 12, 12, 12, 12, 12, 12, 12, 12, 12, 12, 12, 12, 12, 12, 11, 11, 11, 11, 11, 11,
        11, 11, 11, 10, 10, 10, 10, 10, 10, 10, 9, 9, 9, 9, 8, 8, 8, 8, 7, 6, 5, 4, 3, 2, 1, 0, 17,
        18, 19, 20, 21, 22, 23, 24, 24, 24, 24, 25, 25, 25, 25, 26, 26, 26, 26, 26, 26, 26, 27, 27,
        27, 27, 27, 27, 27, 27, 27, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 29, 29,
        29, 29, 29, 29, 29, 29, 29, 29, 29, 29, 29, 29, 29, 29, 29, 29, 30, 30, 30, 30, 30, 30, 30,
        30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 31, 31, 31,
        31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31,
        31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31, 31,
        31,
    ];

    #[test]
    fn bucket_table_matches_enumeration() {
        for (idx, &expected) in BUCKETS_NEG140_TO_140.iter().enumerate() {
            let rel = idx as i64 - 140;
            assert_eq!(relative_bucket(rel, 32, 128), expected, "offset {rel}");
        }
    }

    #[test]
    fn encode_single_token() {
        let p = params();
        let mask = AdditiveMask::all_visible(1, 1).unwrap();
        let h = encode(&[42], &mask, &[0], &p).unwrap();
        assert_eq!(h.shape(), &[1, 64]);
        assert!(h.all_finite());
    }

    #[test]
    fn encode_rejects_bad_shapes() {
        let p = params();
        let mask = AdditiveMask::all_visible(2, 2).unwrap();
        assert!(encode(&[5, 6, 7], &mask, &[0, 1, 2], &p).is_err());
        assert!(encode(&[5, 6], &mask, &[0], &p).is_err());
        assert!(encode(&[5, 9999], &mask, &[0, 1], &p).is_err());
        assert!(encode(&[], &AdditiveMask::all_visible(0, 0).unwrap(), &[], &p).is_err());
    }

    #[test]
    fn equal_tokens_equal_positions_equal_states() {
        // Two copies of the same token at the same effective position that
        // each see only the shared prefix and themselves.
        let p = params();
        let tokens = [10, 11, 50, 50];
        let positions = [0, 1, 2, 2];
        let mask = AdditiveMask::from_visibility(4, 4, |i, j| j < 2 || i == j).unwrap();
        let h = encode(&tokens, &mask, &positions, &p).unwrap();
        assert_eq!(h.row(2), h.row(3));
    }

    #[test]
    fn symmetric_head_scores_one_half() {
        let mut p = params();
        let yes = p.config.yes_id as usize;
        let no = p.config.no_id as usize;
        let yes_row = p.embedding.row(yes).to_vec();
        p.embedding.row_mut(no).copy_from_slice(&yes_row);
        let s = mono_score_pair(&[10, 11], &[20], ScoreVariant::FullMono, &p).unwrap();
        assert_eq!(s.value(), 0.5);
    }

    #[test]
    fn decode_rejects_blocked_row_and_bad_shapes() {
        let p = params();
        let states = encode(
            &[4, 5],
            &AdditiveMask::all_visible(2, 2).unwrap(),
            &[0, 1],
            &p,
        )
        .unwrap();
        let err = AdditiveMask::from_visibility(1, 2, |_, _| false).unwrap_err();
        assert!(matches!(err, Error::DegenerateSoftmaxRow));
        let wide = AdditiveMask::all_visible(1, 3).unwrap();
        assert!(decode_score(&states, &wide, &p).is_err());
        let two = AdditiveMask::all_visible(2, 2).unwrap();
        assert!(decode_score(&states, &two, &p).is_err());
    }

    #[test]
    fn mono_score_basics() {
        let p = params();
        let a = mono_score_pair(&[9, 10, 11], &[40, 41], ScoreVariant::QueryBlind, &p).unwrap();
        let b = mono_score_pair(&[9, 10, 11], &[40, 41], ScoreVariant::QueryBlind, &p).unwrap();
        assert_eq!(a.value().to_bits(), b.value().to_bits());
        assert!(a.value() > 0.0 && a.value() < 1.0);
        assert!(mono_score_pair(&[], &[1], ScoreVariant::FullMono, &p).is_err());
        assert!(mono_score_pair(&[1], &[], ScoreVariant::FullMono, &p).is_err());
    }

    #[test]
    fn variants_differ_when_query_would_see_title() {
        let p = params();
        let full = mono_score_pair(&[100], &[200], ScoreVariant::FullMono, &p).unwrap();
        let blind = mono_score_pair(&[100], &[200], ScoreVariant::QueryBlind, &p).unwrap();
        assert_ne!(full.value(), blind.value());
    }
}
