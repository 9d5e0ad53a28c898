//! Dense f64 kernel: row-major tensors, stable softmax, RMS normalization and
//! multi-head attention with an additive mask and an additive position bias.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additive value for a blocked attention entry. Finite so that the
/// subtract-max step of softmax never sees `inf - inf`.
pub const NEG_LARGE: f64 = -1e9;

/// Epsilon inside the RMS normalization square root.
pub const RMS_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        Tensor::new(raw.shape, raw.data)
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} needs {} elements, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(vec![rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn require_matrix(&self, what: &str) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(Error::ShapeMismatch(format!(
                "{what} must be a matrix, got shape {other:?}"
            ))),
        }
    }

    /// Row count of a matrix (first dimension for any rank).
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Column count of a matrix.
    pub fn cols(&self) -> usize {
        if self.shape.len() == 2 {
            self.shape[1]
        } else {
            0
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn get2(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    /// `self · other` for matrices.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k) = self.require_matrix("lhs")?;
        let (k2, n) = other.require_matrix("rhs")?;
        if k != k2 {
            return Err(Error::ShapeMismatch(format!(
                "matmul inner dims {k} vs {k2}"
            )));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let out_row = &mut out[i * n..(i + 1) * n];
            for (p, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Tensor::new(vec![m, n], out)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "add {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Tensor::new(self.shape.clone(), data)
    }

    /// Selects rows of a matrix by index (embedding lookup).
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Tensor> {
        let (r, c) = self.require_matrix("gather source")?;
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            if i >= r {
                return Err(Error::ShapeMismatch(format!("row {i} out of range {r}")));
            }
            data.extend_from_slice(self.row(i));
        }
        Tensor::new(vec![indices.len(), c], data)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Attention visibility as an additive matrix of `0.0` (visible) and
/// [`NEG_LARGE`] (blocked). Every row has at least one visible entry.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveMask {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl AdditiveMask {
    pub fn from_visibility(
        rows: usize,
        cols: usize,
        visible: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(if visible(i, j) { 0.0 } else { NEG_LARGE });
            }
        }
        Self::from_entries(rows, cols, entries)
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "mask {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|&&e| e != 0.0 && e != NEG_LARGE) {
            return Err(Error::ShapeMismatch(format!(
                "mask entry {bad} is neither 0 nor NEG_LARGE"
            )));
        }
        if cols == 0 && rows > 0 {
            return Err(Error::DegenerateSoftmaxRow);
        }
        for row in entries.chunks(cols.max(1)) {
            if row.iter().all(|&e| e == NEG_LARGE) {
                return Err(Error::DegenerateSoftmaxRow);
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn all_visible(rows: usize, cols: usize) -> Result<Self> {
        Self::from_visibility(rows, cols, |_, _| true)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn is_visible(&self, i: usize, j: usize) -> bool {
        self.entry(i, j) == 0.0
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Subtract-max softmax. Entries at [`NEG_LARGE`] come out as exact zeros.
pub fn stable_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if logits.is_empty() || max <= NEG_LARGE {
        return Err(Error::DegenerateSoftmaxRow);
    }
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    Ok(out)
}

/// `gain[i] * x[i] / sqrt(mean(x^2) + RMS_EPS)`
pub fn rms_norm(x: &[f64], gain: &[f64]) -> Result<Vec<f64>> {
    if x.len() != gain.len() {
        return Err(Error::ShapeMismatch(format!(
            "rms_norm x has {} entries, gain has {}",
            x.len(),
            gain.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("rms_norm input"));
    }
    let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let inv = 1.0 / (mean_sq + RMS_EPS).sqrt();
    Ok(x.iter().zip(gain).map(|(v, g)| g * v * inv).collect())
}

/// Row-wise [`rms_norm`] over a matrix.
pub fn rms_norm_rows(x: &Tensor, gain: &[f64]) -> Result<Tensor> {
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.rows() {
        out.extend(rms_norm(x.row(i), gain)?);
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// Multi-head scaled dot-product attention.
///
/// `q` is `[n_q, n_heads * d_head]`, `k` and `v` are `[n_k, n_heads * d_head]`,
/// `bias` (when present) is `[n_heads, n_q, n_k]`. Each head computes
/// `softmax(q_h k_h^T / sqrt(d_head) + bias_h + mask) v_h`; head outputs are
/// concatenated along the feature axis.
pub fn masked_attention(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    mask: &AdditiveMask,
    bias: Option<&Tensor>,
    n_heads: usize,
) -> Result<Tensor> {
    let (n_q, width) = q.require_matrix("Q")?;
    let (n_k, k_width) = k.require_matrix("K")?;
    let (n_v, v_width) = v.require_matrix("V")?;
    if n_heads == 0 || width % n_heads != 0 {
        return Err(Error::ShapeMismatch(format!(
            "width {width} not divisible into {n_heads} heads"
        )));
    }
    if k_width != width || v_width != width {
        return Err(Error::ShapeMismatch(format!(
            "Q/K/V widths {width}/{k_width}/{v_width}"
        )));
    }
    if n_v != n_k {
        return Err(Error::ShapeMismatch(format!(
            "K rows {n_k} vs V rows {n_v}"
        )));
    }
    if mask.rows() != n_q || mask.cols() != n_k {
        return Err(Error::ShapeMismatch(format!(
            "mask {}x{} vs attention {n_q}x{n_k}",
            mask.rows(),
            mask.cols()
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [n_heads, n_q, n_k] {
            return Err(Error::ShapeMismatch(format!(
                "bias shape {:?}, expected {:?}",
                b.shape(),
                [n_heads, n_q, n_k]
            )));
        }
    }

    let d_head = width / n_heads;
    let scale = 1.0 / (d_head as f64).sqrt();
    let mut out = vec![0.0; n_q * width];
    let mut logits = vec![0.0; n_k];

    for h in 0..n_heads {
        let off = h * d_head;
        for i in 0..n_q {
            let q_row = &q.row(i)[off..off + d_head];
            for (j, logit) in logits.iter_mut().enumerate() {
                let k_row = &k.row(j)[off..off + d_head];
                let dot: f64 = q_row.iter().zip(k_row).map(|(a, b)| a * b).sum();
                let b = bias.map_or(0.0, |b| b.data()[(h * n_q + i) * n_k + j]);
                *logit = dot * scale + b + mask.entry(i, j);
            }
            let probs = stable_softmax(&logits)?;
            let out_row = &mut out[i * width + off..i * width + off + d_head];
            for (j, &p) in probs.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let v_row = &v.row(j)[off..off + d_head];
                for (o, &x) in out_row.iter_mut().zip(v_row) {
                    *o += p * x;
                }
            }
        }
    }
    Tensor::new(vec![n_q, width], out)
}
