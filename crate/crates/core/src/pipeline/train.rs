//! Toy training loop comparing loss stability.
//!
//! The scorer is `s(q, t) = sigmoid(x_q^T W z_t)` over fixed query features
//! `x_q` and title features `z_t`, with `W` learned by plain SGD using the
//! closed-form loss gradients chained through the sigmoid. The training set
//! mixes three kinds of items:
//!
//! * clean: the query is a noisy copy of its gold title's features;
//! * trivial: the query is a large multiple of the gold features, so the gold
//!   score saturates toward 1;
//! * noisy: the gold label is an unrelated random title.
//!
//! Held-out evaluation uses clean items only and reports pairwise accuracy
//! (gold scored above a negative).

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::losses::{loss_gradient, loss_value, LossConfig, LossKind, ScoreBundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyTrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub eval_every: usize,
    pub dim: usize,
    pub n_titles: usize,
    pub n_train: usize,
    pub n_eval: usize,
    pub n_negatives: usize,
    pub trivial_fraction: f64,
    pub noisy_fraction: f64,
    /// Feature multiplier for trivial queries.
    pub trivial_scale: f64,
    /// Per-coordinate std of the noise added to clean queries.
    pub query_noise: f64,
    pub seed: u64,
    pub loss: LossConfig,
}

impl Default for ToyTrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            learning_rate: 0.05,
            eval_every: 100,
            dim: 16,
            n_titles: 400,
            n_train: 600,
            n_eval: 200,
            n_negatives: 40,
            trivial_fraction: 0.3,
            noisy_fraction: 0.2,
            trivial_scale: 8.0,
            query_noise: 0.1,
            seed: 0,
            loss: LossConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStep {
    pub step: usize,
    pub loss: f64,
    /// Loss and gradient both finite; non-finite steps apply no update.
    pub finite: bool,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: usize,
    pub pairwise_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub loss_kind: LossKind,
    pub config: ToyTrainConfig,
    pub steps: Vec<TrainStep>,
    pub evals: Vec<EvalPoint>,
    pub non_finite_steps: usize,
    /// Largest finite gradient norm, or infinity when any step was non-finite.
    pub max_grad_norm: f64,
}

impl TrainTrace {
    pub fn all_finite(&self) -> bool {
        self.non_finite_steps == 0
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.evals.last().map(|e| e.pairwise_accuracy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ItemKind {
    Clean,
    Trivial,
    Noisy,
}

struct Item {
    query: Vec<f64>,
    gold: usize,
    negatives: Vec<usize>,
}

struct Dataset {
    titles: Vec<Vec<f64>>,
    train: Vec<Item>,
    eval: Vec<Item>,
}

fn build_dataset(cfg: &ToyTrainConfig, rng: &mut ChaCha8Rng) -> Dataset {
    let d = cfg.dim;
    let unit = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid std");
    let noise = Normal::new(0.0, cfg.query_noise.max(0.0)).expect("valid std");
    let titles: Vec<Vec<f64>> = (0..cfg.n_titles)
        .map(|_| (0..d).map(|_| unit.sample(rng)).collect())
        .collect();

    let n_neg = cfg.n_negatives.min(cfg.n_titles.saturating_sub(1)).max(1);
    let make = |kind: ItemKind, rng: &mut ChaCha8Rng| -> Item {
        let anchor = rng.random_range(0..cfg.n_titles);
        let query: Vec<f64> = match kind {
            ItemKind::Trivial => titles[anchor]
                .iter()
                .map(|z| cfg.trivial_scale * z)
                .collect(),
            _ => titles[anchor]
                .iter()
                .map(|z| z + noise.sample(rng))
                .collect(),
        };
        let gold = if kind == ItemKind::Noisy {
            let mut g = rng.random_range(0..cfg.n_titles - 1);
            if g >= anchor {
                g += 1;
            }
            g
        } else {
            anchor
        };
        let negatives = sample(rng, cfg.n_titles - 1, n_neg)
            .into_iter()
            .map(|i| if i >= gold { i + 1 } else { i })
            .collect();
        Item {
            query,
            gold,
            negatives,
        }
    };

    let n_trivial = (cfg.n_train as f64 * cfg.trivial_fraction).round() as usize;
    let n_noisy = (cfg.n_train as f64 * cfg.noisy_fraction).round() as usize;
    let mut train: Vec<Item> = (0..cfg.n_train)
        .map(|i| {
            let kind = if i < n_trivial {
                ItemKind::Trivial
            } else if i < n_trivial + n_noisy {
                ItemKind::Noisy
            } else {
                ItemKind::Clean
            };
            make(kind, rng)
        })
        .collect();
    train.shuffle(rng);
    let eval = (0..cfg.n_eval)
        .map(|_| make(ItemKind::Clean, rng))
        .collect();
    Dataset {
        titles,
        train,
        eval,
    }
}

struct BilinearScorer {
    dim: usize,
    w: Vec<f64>,
}

impl BilinearScorer {
    fn logit(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.w[i * self.dim..(i + 1) * self.dim];
            s += xi * row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
        s
    }

    fn score(&self, x: &[f64], z: &[f64]) -> f64 {
        crate::losses::sigmoid(self.logit(x, z))
    }
}

fn pairwise_accuracy(model: &BilinearScorer, data: &Dataset) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for item in &data.eval {
        let gold = model.score(&item.query, &data.titles[item.gold]);
        for &n in &item.negatives {
            total += 1;
            if gold > model.score(&item.query, &data.titles[n]) {
                correct += 1;
            }
        }
    }
    correct as f64 / total.max(1) as f64
}

/// Trains the toy scorer with `kind` for `config.steps` single-item SGD steps.
/// Non-finite losses or gradients are recorded and their update skipped.
pub fn train_toy(kind: LossKind, config: &ToyTrainConfig) -> TrainTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let data = build_dataset(config, &mut rng);
    let d = config.dim;
    let init = Normal::new(0.0, 0.02).expect("valid std");
    let mut model = BilinearScorer {
        dim: d,
        w: (0..d * d).map(|_| init.sample(&mut rng)).collect(),
    };
    for i in 0..d {
        model.w[i * d + i] += 1.0;
    }

    let mut steps = Vec::with_capacity(config.steps);
    let mut evals = Vec::new();
    let mut non_finite_steps = 0;
    let mut max_grad_norm: f64 = 0.0;
    let mut grad = vec![0.0; d * d];

    for step in 0..config.steps {
        let item = &data.train[step % data.train.len()];
        let docs: Vec<usize> = std::iter::once(item.gold)
            .chain(item.negatives.iter().copied())
            .collect();
        let scores: Vec<f64> = docs
            .iter()
            .map(|&t| model.score(&item.query, &data.titles[t]))
            .collect();
        let bundle = ScoreBundle {
            y_pos: scores[0],
            y_negs: scores[1..].to_vec(),
        };
        let loss = loss_value(kind, &bundle, &config.loss).unwrap_or(f64::NAN);
        let d_scores = loss_gradient(kind, &bundle, &config.loss)
            .unwrap_or_else(|_| vec![f64::NAN; docs.len()]);

        grad.iter_mut().for_each(|g| *g = 0.0);
        for ((&t, &s), &ds) in docs.iter().zip(&scores).zip(&d_scores) {
            let d_logit = ds * s * (1.0 - s);
            let z = &data.titles[t];
            for (i, &xi) in item.query.iter().enumerate() {
                let c = d_logit * xi;
                for (g, &zj) in grad[i * d..(i + 1) * d].iter_mut().zip(z) {
                    *g += c * zj;
                }
            }
        }
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let finite = loss.is_finite() && grad_norm.is_finite();
        if finite {
            max_grad_norm = max_grad_norm.max(grad_norm);
            for (w, g) in model.w.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        } else {
            non_finite_steps += 1;
        }
        steps.push(TrainStep {
            step: step + 1,
            loss,
            finite,
            grad_norm,
        });

        if config.eval_every > 0 && (step + 1) % config.eval_every == 0 {
            evals.push(EvalPoint {
                step: step + 1,
                pairwise_accuracy: pairwise_accuracy(&model, &data),
            });
        }
    }

    TrainTrace {
        loss_kind: kind,
        config: config.clone(),
        steps,
        evals,
        non_finite_steps,
        max_grad_norm: if non_finite_steps > 0 {
            f64::INFINITY
        } else {
            max_grad_norm
        },
    }
}
