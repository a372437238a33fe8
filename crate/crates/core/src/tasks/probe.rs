use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::heads::search_similarity;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            seed: 0,
        }
    }
}

/// Static word vectors from skip-gram with negative sampling.
pub struct WordVectors {
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl WordVectors {
    pub fn train(streams: &[Vec<String>], cfg: &ProbeConfig) -> Result<Self> {
        if cfg.dim == 0 || cfg.window == 0 {
            return Err(Error::arg("probe dimension and window must be positive"));
        }
        let mut index = HashMap::new();
        let mut counts: Vec<f64> = Vec::new();
        let encoded: Vec<Vec<usize>> = streams
            .iter()
            .map(|s| {
                s.iter()
                    .map(|w| {
                        let next = index.len();
                        let i = *index.entry(w.clone()).or_insert(next);
                        if i == counts.len() {
                            counts.push(0.0);
                        }
                        counts[i] += 1.0;
                        i
                    })
                    .collect()
            })
            .collect();
        if index.is_empty() {
            return Err(Error::arg("no words to train on"));
        }
        let mut rng = seed::rng(cfg.seed, "tasks.probe.word_vectors");
        let d = cfg.dim;
        let n = index.len();
        let mut input: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| (rng.random::<f64>() - 0.5) / d as f64).collect())
            .collect();
        let mut output = vec![vec![0.0; d]; n];
        let noise = WeightedIndex::new(counts.iter().map(|c| c.powf(0.75)))
            .map_err(|e| Error::arg(format!("noise distribution: {e}")))?;
        let total = encoded.iter().map(Vec::len).sum::<usize>() * cfg.epochs;
        let mut seen = 0usize;
        let mut grad = vec![0.0; d];
        for _ in 0..cfg.epochs {
            for s in &encoded {
                for (pos, &w) in s.iter().enumerate() {
                    let lr = (cfg.lr * (1.0 - seen as f64 / total.max(1) as f64)).max(cfg.lr * 1e-4);
                    seen += 1;
                    let lo = pos.saturating_sub(cfg.window);
                    let hi = (pos + cfg.window + 1).min(s.len());
                    for (cpos, &c) in s.iter().enumerate().take(hi).skip(lo) {
                        if cpos == pos {
                            continue;
                        }
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        let targets = std::iter::once((c, 1.0))
                            .chain((0..cfg.negatives).map(|_| (noise.sample(&mut rng), 0.0)));
                        for (t, label) in targets {
                            if label == 0.0 && t == c {
                                continue;
                            }
                            let dot: f64 = input[w].iter().zip(&output[t]).map(|(a, b)| a * b).sum();
                            let g = (label - sigmoid(dot)) * lr;
                            for k in 0..d {
                                grad[k] += g * output[t][k];
                                output[t][k] += g * input[w][k];
                            }
                        }
                        for k in 0..d {
                            input[w][k] += grad[k];
                        }
                    }
                }
            }
        }
        Ok(WordVectors { index, vectors: input })
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    /// Mean vector of the known words; `None` when no word is known.
    pub fn mean(&self, words: &[String]) -> Option<Vec<f64>> {
        let known: Vec<&[f64]> = words.iter().filter_map(|w| self.get(w)).collect();
        let first = known.first()?;
        let mut out = vec![0.0; first.len()];
        for v in &known {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += x;
            }
        }
        out.iter_mut().for_each(|o| *o /= known.len() as f64);
        Some(out)
    }
}

/// Mean cosine between the mean word vectors of each pair's two sides. A
/// side without known words scores 0.
pub fn textual_similarity(vectors: &WordVectors, pairs: &[(&[String], &[String])]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::arg("textual similarity needs at least one pair"));
    }
    let mut total = 0.0;
    for (a, b) in pairs {
        if let (Some(va), Some(vb)) = (vectors.mean(a), vectors.mean(b)) {
            total += search_similarity(&va, &vb)?.value;
        }
    }
    Ok(total / pairs.len() as f64)
}
