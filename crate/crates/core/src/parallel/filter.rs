//! Misalignment filter: synthetic noise injection, pair features and a
//! logistic-regression classifier trained by deterministic mini-batch
//! gradient descent.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SentencePair;
use crate::error::{Error, Result};
use crate::io::{create_writer, open_reader};
use crate::lexicon::Lexicon;
use crate::relevance::SparseVector;
use crate::rng::SplitMix64;

pub const FEATURE_NAMES: [&str; 9] = [
    "abs_log_length_ratio",
    "src_coverage",
    "tgt_coverage",
    "identical_token_fraction",
    "len_diff_0",
    "len_diff_1_2",
    "len_diff_3_5",
    "len_diff_6_10",
    "len_diff_over_10",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthBucket {
    Zero,
    UpToTwo,
    UpToFive,
    UpToTen,
    Over,
}

impl LengthBucket {
    pub fn of(diff: usize) -> Self {
        match diff {
            0 => LengthBucket::Zero,
            1..=2 => LengthBucket::UpToTwo,
            3..=5 => LengthBucket::UpToFive,
            6..=10 => LengthBucket::UpToTen,
            _ => LengthBucket::Over,
        }
    }

    fn feature_id(self) -> u32 {
        4 + self as u32
    }
}

/// Marks `⌊swap_rate·N⌋` disjoint neighboring pairs as misaligned by
/// exchanging their target sides. Label 1 means parallel, 0 misaligned.
pub fn make_noisy_training(
    pairs: &[SentencePair],
    swap_rate: f64,
    seed: u64,
) -> Result<Vec<(SentencePair, u8)>> {
    if pairs.len() < 2 {
        return Err(Error::TooFewPairs(pairs.len()));
    }
    if !(0.0..=0.5).contains(&swap_rate) {
        return Err(Error::InvalidArgument(format!(
            "swap_rate {swap_rate} outside [0, 0.5]"
        )));
    }
    let n = pairs.len();
    let k = ((swap_rate * n as f64) + 1e-9).floor() as usize;
    let k = k.min(n / 2);

    // Choosing k disjoint neighbor pairs among n items is the same as
    // choosing k of n-k slots: slot p (sorted, j-th) becomes pair p+j.
    let mut slots = SplitMix64::new(seed).sample_distinct(n - k, k);
    slots.sort_unstable();

    let mut out: Vec<(SentencePair, u8)> = pairs.iter().map(|p| (p.clone(), 1)).collect();
    for (j, p) in slots.into_iter().enumerate() {
        let i = p + j;
        let (left, right) = out.split_at_mut(i + 1);
        std::mem::swap(&mut left[i].0.tgt, &mut right[0].0.tgt);
        left[i].1 = 0;
        right[0].1 = 0;
    }
    Ok(out)
}

fn lower_set(tokens: &[String]) -> HashSet<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

fn coverage(from: &[String], to: &HashSet<String>, lexicon: &Lexicon) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    let covered = from
        .iter()
        .filter(|tok| {
            let key = tok.to_lowercase();
            lexicon
                .translations(&key)
                .iter()
                .chain(lexicon.translations(tok))
                .any(|(t, _)| to.contains(&t.to_lowercase()))
        })
        .count();
    covered as f64 / from.len() as f64
}

/// Alignment-free features of a sentence pair. `inverse` is the
/// target→source lexicon used for reverse coverage.
fn features_with(pair: &SentencePair, lexicon: &Lexicon, inverse: &Lexicon) -> SparseVector {
    let (ls, lt) = (pair.src.len(), pair.tgt.len());
    let ratio = ((ls.max(1) as f64) / (lt.max(1) as f64)).ln().abs();
    let src_set = lower_set(&pair.src);
    let tgt_set = lower_set(&pair.tgt);
    let shared = src_set.intersection(&tgt_set).count();
    let identical = shared as f64 / src_set.len().max(tgt_set.len()).max(1) as f64;
    let values = [
        (0, ratio),
        (1, coverage(&pair.src, &tgt_set, lexicon)),
        (2, coverage(&pair.tgt, &src_set, inverse)),
        (3, identical),
        (LengthBucket::of(ls.abs_diff(lt)).feature_id(), 1.0),
    ];
    SparseVector::from_pairs(values).expect("features are finite and non-negative")
}

pub fn pair_features(pair: &SentencePair, lexicon: &Lexicon) -> SparseVector {
    features_with(pair, lexicon, &lexicon.inverted())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl FilterModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() != FEATURE_NAMES.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                FEATURE_NAMES.len(),
                weights.len()
            )));
        }
        Ok(FilterModel {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            weights,
            bias,
        })
    }

    pub fn score(&self, features: &SparseVector) -> f64 {
        self.bias
            + features
                .iter()
                .map(|(id, v)| self.weights.get(id as usize).copied().unwrap_or(0.0) * v)
                .sum::<f64>()
    }

    /// Probability that the pair is parallel.
    pub fn prob_parallel(&self, features: &SparseVector) -> f64 {
        sigmoid(self.score(features))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: FilterModel = serde_json::from_reader(open_reader(path)?)?;
        if model.feature_names.len() != model.weights.len() {
            return Err(Error::parse(
                path.display().to_string(),
                1,
                "feature_names and weights differ in length",
            ));
        }
        if model
            .weights
            .iter()
            .chain([&model.bias])
            .any(|w| !w.is_finite())
        {
            return Err(Error::parse(
                path.display().to_string(),
                1,
                "non-finite weight",
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create_writer(path)?;
        serde_json::to_writer_pretty(&mut w, self)?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `l2/2·|w|²` (bias unregularized), with its gradient
/// as (weights gradient, bias gradient).
pub fn log_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    data: &[(SparseVector, u8)],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (x, y) in data {
        let z = bias
            + x.iter()
                .map(|(id, v)| weights[id as usize] * v)
                .sum::<f64>();
        // -[y log σ(z) + (1-y) log(1-σ(z))] = softplus(z) - y·z
        loss += softplus(z) - f64::from(*y) * z;
        let r = sigmoid(z) - f64::from(*y);
        for (id, v) in x.iter() {
            grad[id as usize] += r * v;
        }
        grad_b += r;
    }
    let n = data.len().max(1) as f64;
    loss /= n;
    grad_b /= n;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad, grad_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2: 1e-4,
            epochs: 300,
            learning_rate: 0.5,
            batch_size: 32,
            seed: 13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: FilterModel,
    /// Full-data loss after each accepted epoch, starting with the initial loss.
    pub losses: Vec<f64>,
}

/// Fits the filter by mini-batch gradient descent. An epoch that raises
/// the full-data loss is rolled back and the learning rate halved, so the
/// recorded losses never increase.
pub fn train_filter(labeled: &[(SparseVector, u8)], config: &TrainConfig) -> Result<TrainReport> {
    let positives = labeled.iter().filter(|(_, y)| *y == 1).count();
    if positives == 0 {
        return Err(Error::DegenerateLabels(0));
    }
    if positives == labeled.len() {
        return Err(Error::DegenerateLabels(1));
    }
    if let Some((_, bad)) = labeled.iter().find(|(_, y)| *y > 1) {
        return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
    }
    let dim = FEATURE_NAMES.len();
    if let Some(id) = labeled
        .iter()
        .flat_map(|(x, _)| x.iter())
        .map(|(id, _)| id)
        .find(|&id| id as usize >= dim)
    {
        return Err(Error::InvalidArgument(format!(
            "feature id {id} out of range"
        )));
    }

    let mut rng = SplitMix64::new(config.seed);
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut lr = config.learning_rate;
    let batch = config.batch_size.max(1);
    let (mut best_loss, _, _) = log_loss_and_gradient(&weights, bias, labeled, config.l2);
    let mut losses = vec![best_loss];
    let mut order: Vec<usize> = (0..labeled.len()).collect();

    for _ in 0..config.epochs {
        let (saved_w, saved_b) = (weights.clone(), bias);
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            let mut grad = vec![0.0; dim];
            let mut grad_b = 0.0;
            for &i in chunk {
                let (x, y) = &labeled[i];
                let z = bias
                    + x.iter()
                        .map(|(id, v)| weights[id as usize] * v)
                        .sum::<f64>();
                let r = sigmoid(z) - f64::from(*y);
                for (id, v) in x.iter() {
                    grad[id as usize] += r * v;
                }
                grad_b += r;
            }
            let m = chunk.len() as f64;
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= lr * (g / m + config.l2 * *w);
            }
            bias -= lr * grad_b / m;
        }
        let (loss, _, _) = log_loss_and_gradient(&weights, bias, labeled, config.l2);
        if loss <= best_loss {
            best_loss = loss;
            losses.push(loss);
        } else {
            weights = saved_w;
            bias = saved_b;
            lr *= 0.5;
            if lr < 1e-10 {
                break;
            }
        }
    }
    Ok(TrainReport {
        model: FilterModel::new(weights, bias)?,
        losses,
    })
}

/// Splits pairs into (kept, removed); a pair is removed when its predicted
/// probability of being misaligned exceeds `threshold`.
pub fn filter_parallel(
    pairs: &[SentencePair],
    model: &FilterModel,
    lexicon: &Lexicon,
    threshold: f64,
) -> (Vec<SentencePair>, Vec<SentencePair>) {
    let inverse = lexicon.inverted();
    let noisy: Vec<bool> = pairs
        .par_iter()
        .map(|p| 1.0 - model.prob_parallel(&features_with(p, lexicon, &inverse)) > threshold)
        .collect();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (pair, is_noisy) in pairs.iter().zip(noisy) {
        if is_noisy {
            removed.push(pair.clone());
        } else {
            kept.push(pair.clone());
        }
    }
    (kept, removed)
}

/// Feature vectors for labeled pairs, computed in parallel.
pub fn featurize(labeled: &[(SentencePair, u8)], lexicon: &Lexicon) -> Vec<(SparseVector, u8)> {
    let inverse = lexicon.inverted();
    labeled
        .par_iter()
        .map(|(p, y)| (features_with(p, lexicon, &inverse), *y))
        .collect()
}
