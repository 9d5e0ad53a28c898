//! Training losses over relevance scores in `(0, 1)`: the unguarded log
//! contrastive baseline and three sigmoid-wrapped variants, with closed-form
//! gradients and a central-difference checker.
//!
//! Wrapping a loss `F` as `S(F)` scales its gradient by `S'(F)`, which peaks at
//! the sigmoid's center and decays on both sides. Scores that are already
//! extreme (trivially easy positives near 1, or unlearnable positives near 0)
//! therefore receive smaller updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub epsilon: f64,
    pub lambda: f64,
    pub lambda_gt: f64,
    pub lambda_neg: f64,
    pub gamma: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            epsilon: 5.0,
            lambda: 0.5,
            lambda_gt: 0.5,
            lambda_neg: 0.5,
            gamma: 1.0,
        }
    }
}

impl LossConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// One positive score and `k >= 1` negative scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBundle {
    pub y_pos: f64,
    pub y_negs: Vec<f64>,
}

impl ScoreBundle {
    pub fn new(y_pos: f64, y_negs: Vec<f64>) -> Result<Self> {
        if y_negs.is_empty() {
            return Err(Error::EmptyInput("negative scores"));
        }
        Ok(Self { y_pos, y_negs })
    }

    pub fn k(&self) -> usize {
        self.y_negs.len()
    }

    pub fn mean_neg(&self) -> f64 {
        self.y_negs.iter().sum::<f64>() / self.k() as f64
    }

    /// `[y_pos, y_neg_1, ..., y_neg_k]`
    pub fn coordinates(&self) -> Vec<f64> {
        std::iter::once(self.y_pos)
            .chain(self.y_negs.iter().copied())
            .collect()
    }

    fn from_coordinates(c: &[f64]) -> Self {
        Self {
            y_pos: c[0],
            y_negs: c[1..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    LogContrastive,
    SigmoidContrastive,
    SepSigmoid,
    CombinedSigmoid,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::LogContrastive,
        LossKind::SigmoidContrastive,
        LossKind::SepSigmoid,
        LossKind::CombinedSigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::LogContrastive => "log_contrastive",
            LossKind::SigmoidContrastive => "sigmoid_contrastive",
            LossKind::SepSigmoid => "sep_sigmoid",
            LossKind::CombinedSigmoid => "combined_sigmoid",
        }
    }

    pub fn is_sigmoid_trick(self) -> bool {
        self != LossKind::LogContrastive
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss kind {s:?}")))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `S'(x) = S(x) (1 - S(x))`
pub fn sigmoid_derivative(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// `-log(y_pos) - Σ log(1 - y_neg)`. Deliberately unguarded: a positive at 0
/// or a negative at 1 yields a non-finite value.
pub fn log_contrastive_loss(bundle: &ScoreBundle) -> f64 {
    -bundle.y_pos.ln() - bundle.y_negs.iter().map(|y| (1.0 - y).ln()).sum::<f64>()
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn contrastive_ratio(bundle: &ScoreBundle) -> Result<(f64, f64)> {
    let mean = bundle.mean_neg();
    let denom = bundle.y_pos + mean;
    if !(denom > 0.0) {
        return Err(Error::DegenerateBundle);
    }
    Ok((bundle.y_pos / denom, denom))
}

/// `-S(ε (y_pos / (y_pos + mean(y_neg)) - λ))`
pub fn sigmoid_contrastive_loss(bundle: &ScoreBundle, cfg: &LossConfig) -> Result<f64> {
    let (ratio, _) = contrastive_ratio(bundle)?;
    Ok(-sigmoid(cfg.epsilon * (ratio - cfg.lambda)))
}

/// The two terms of [`sep_sigmoid_loss`]: `(-S(ε (y_pos - λ_gt)), -S(ε (λ_neg - mean(y_neg))))`.
pub fn sep_sigmoid_terms(bundle: &ScoreBundle, cfg: &LossConfig) -> (f64, f64) {
    (
        -sigmoid(cfg.epsilon * (bundle.y_pos - cfg.lambda_gt)),
        -sigmoid(cfg.epsilon * (cfg.lambda_neg - bundle.mean_neg())),
    )
}

pub fn sep_sigmoid_loss(bundle: &ScoreBundle, cfg: &LossConfig) -> f64 {
    let (pos, neg) = sep_sigmoid_terms(bundle, cfg);
    pos + neg
}

/// `sep_sigmoid + γ · sigmoid_contrastive`
pub fn combined_sigmoid_loss(bundle: &ScoreBundle, cfg: &LossConfig) -> Result<f64> {
    Ok(sep_sigmoid_loss(bundle, cfg) + cfg.gamma * sigmoid_contrastive_loss(bundle, cfg)?)
}

/// Sigmoid cross-entropy style terms `(-S(ε y_pos), -S(ε (1 - mean(y_neg))))`:
/// positives pushed toward 1, negatives toward 0, with no centering.
pub fn sigmoid_cross_entropy_terms(bundle: &ScoreBundle, epsilon: f64) -> (f64, f64) {
    (
        -sigmoid(epsilon * bundle.y_pos),
        -sigmoid(epsilon * (1.0 - bundle.mean_neg())),
    )
}

pub fn loss_value(kind: LossKind, bundle: &ScoreBundle, cfg: &LossConfig) -> Result<f64> {
    match kind {
        LossKind::LogContrastive => Ok(log_contrastive_loss(bundle)),
        LossKind::SigmoidContrastive => sigmoid_contrastive_loss(bundle, cfg),
        LossKind::SepSigmoid => Ok(sep_sigmoid_loss(bundle, cfg)),
        LossKind::CombinedSigmoid => combined_sigmoid_loss(bundle, cfg),
    }
}

fn sigmoid_contrastive_gradient(bundle: &ScoreBundle, cfg: &LossConfig) -> Result<Vec<f64>> {
    let (ratio, denom) = contrastive_ratio(bundle)?;
    let outer = -cfg.epsilon * sigmoid_derivative(cfg.epsilon * (ratio - cfg.lambda));
    let k = bundle.k() as f64;
    let d_pos = bundle.mean_neg() / (denom * denom);
    let d_neg = -bundle.y_pos / (denom * denom) / k;
    let mut g = vec![outer * d_pos];
    g.extend(std::iter::repeat_n(outer * d_neg, bundle.k()));
    Ok(g)
}

fn sep_sigmoid_gradient(bundle: &ScoreBundle, cfg: &LossConfig) -> Vec<f64> {
    let eps = cfg.epsilon;
    let d_pos = -eps * sigmoid_derivative(eps * (bundle.y_pos - cfg.lambda_gt));
    let d_neg =
        eps * sigmoid_derivative(eps * (cfg.lambda_neg - bundle.mean_neg())) / bundle.k() as f64;
    let mut g = vec![d_pos];
    g.extend(std::iter::repeat_n(d_neg, bundle.k()));
    g
}

/// Analytic gradient `[∂L/∂y_pos, ∂L/∂y_neg_1, ..., ∂L/∂y_neg_k]`.
pub fn loss_gradient(kind: LossKind, bundle: &ScoreBundle, cfg: &LossConfig) -> Result<Vec<f64>> {
    match kind {
        LossKind::LogContrastive => Ok(std::iter::once(-1.0 / bundle.y_pos)
            .chain(bundle.y_negs.iter().map(|y| 1.0 / (1.0 - y)))
            .collect()),
        LossKind::SigmoidContrastive => sigmoid_contrastive_gradient(bundle, cfg),
        LossKind::SepSigmoid => Ok(sep_sigmoid_gradient(bundle, cfg)),
        LossKind::CombinedSigmoid => {
            let sep = sep_sigmoid_gradient(bundle, cfg);
            let con = sigmoid_contrastive_gradient(bundle, cfg)?;
            Ok(sep
                .iter()
                .zip(&con)
                .map(|(a, b)| a + cfg.gamma * b)
                .collect())
        }
    }
}

/// Maximum relative error between [`loss_gradient`] and central differences
/// `(L(x + h) - L(x - h)) / 2h`, with denominator `max(|analytic|, 1e-8)`.
pub fn finite_diff_check(
    kind: LossKind,
    bundle: &ScoreBundle,
    cfg: &LossConfig,
    h: f64,
) -> Result<f64> {
    let margin = 10.0 * h;
    let coords = bundle.coordinates();
    for (index, &value) in coords.iter().enumerate() {
        if !(value >= margin && value <= 1.0 - margin) {
            return Err(Error::NearBoundary {
                index,
                value,
                margin,
            });
        }
    }
    let analytic = loss_gradient(kind, bundle, cfg)?;
    let mut worst: f64 = 0.0;
    for i in 0..coords.len() {
        let mut plus = coords.clone();
        let mut minus = coords.clone();
        plus[i] += h;
        minus[i] -= h;
        let lp = loss_value(kind, &ScoreBundle::from_coordinates(&plus), cfg)?;
        let lm = loss_value(kind, &ScoreBundle::from_coordinates(&minus), cfg)?;
        let numeric = (lp - lm) / (2.0 * h);
        let rel = (numeric - analytic[i]).abs() / analytic[i].abs().max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
