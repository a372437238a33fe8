use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Clone,
    Search,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Classification, TaskKind::Clone, TaskKind::Search];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Classification => "classification",
            TaskKind::Clone => "clone",
            TaskKind::Search => "search",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::arg(format!("unknown task `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    /// Counts at decision threshold 0.5 (`p >= 0.5` predicts a clone).
    pub fn from_probabilities(probs: &[f64], labels: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &y) in probs.iter().zip(labels) {
            match (p >= 0.5, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Share of predictions equal to their gold label.
pub fn accuracy(predicted: &[usize], gold: &[usize]) -> f64 {
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    ratio(hits, gold.len())
}

/// 1-based rank of candidate `target` given `scores` (higher is better); a
/// tie is resolved in favour of the smaller candidate id.
pub fn rank_of(scores: &[f64], ids: &[usize], target: usize) -> usize {
    let (s, id) = (scores[target], ids[target]);
    1 + scores
        .iter()
        .zip(ids)
        .filter(|&(&o, &oid)| o > s || (o == s && oid < id))
        .count()
}

/// SuccessRate@k and mean reciprocal rank over 1-based ranks.
pub fn rank_metrics(ranks: &[usize], k: usize) -> (f64, f64) {
    if ranks.is_empty() {
        return (0.0, 0.0);
    }
    let n = ranks.len() as f64;
    let hits = ranks.iter().filter(|&&r| r <= k).count() as f64;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    (hits / n, mrr)
}

/// Candidate pool for query `q`: its paired candidate followed by
/// `pool − 1` others drawn without replacement from `0..corpus`.
pub fn candidate_pool(q: usize, paired: usize, corpus: usize, pool: usize, seed: u64) -> Result<Vec<usize>> {
    if pool == 0 || pool > corpus {
        return Err(Error::arg(format!("pool of {pool} does not fit a corpus of {corpus}")));
    }
    if paired >= corpus {
        return Err(Error::arg(format!("paired candidate {paired} outside the corpus")));
    }
    let mut rng = seed::rng(seed, &format!("tasks.pool/{q}"));
    let mut out = Vec::with_capacity(pool);
    out.push(paired);
    for i in sample(&mut rng, corpus - 1, pool - 1).into_iter() {
        out.push(if i >= paired { i + 1 } else { i });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum MetricsReport {
    Classification {
        accuracy: f64,
        correct: usize,
        total: usize,
    },
    Clone {
        precision: f64,
        recall: f64,
        f1: f64,
        #[serde(flatten)]
        counts: Confusion,
    },
    Search {
        success_rate: f64,
        mrr: f64,
        k: usize,
        pool: usize,
        queries: usize,
    },
}

impl MetricsReport {
    pub fn task(&self) -> TaskKind {
        match self {
            MetricsReport::Classification { .. } => TaskKind::Classification,
            MetricsReport::Clone { .. } => TaskKind::Clone,
            MetricsReport::Search { .. } => TaskKind::Search,
        }
    }

    pub fn classification(predicted: &[usize], gold: &[usize]) -> Self {
        let correct = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
        MetricsReport::Classification {
            accuracy: accuracy(predicted, gold),
            correct,
            total: gold.len(),
        }
    }

    pub fn clone_detection(counts: Confusion) -> Self {
        MetricsReport::Clone {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
        }
    }

    pub fn search(ranks: &[usize], k: usize, pool: usize) -> Self {
        let (success_rate, mrr) = rank_metrics(ranks, k);
        MetricsReport::Search {
            success_rate,
            mrr,
            k,
            pool,
            queries: ranks.len(),
        }
    }

    /// The figure used for model selection.
    pub fn headline(&self) -> f64 {
        match self {
            MetricsReport::Classification { accuracy, .. } => *accuracy,
            MetricsReport::Clone { f1, .. } => *f1,
            MetricsReport::Search { mrr, .. } => *mrr,
        }
    }

    /// CSV header and one row.
    pub fn csv(&self) -> (Vec<&'static str>, Vec<String>) {
        match self {
            MetricsReport::Classification {
                accuracy,
                correct,
                total,
            } => (
                vec!["accuracy", "correct", "total"],
                vec![accuracy.to_string(), correct.to_string(), total.to_string()],
            ),
            MetricsReport::Clone {
                precision,
                recall,
                f1,
                counts,
            } => (
                vec!["precision", "recall", "f1", "tp", "fp", "tn", "fn"],
                vec![
                    precision.to_string(),
                    recall.to_string(),
                    f1.to_string(),
                    counts.tp.to_string(),
                    counts.fp.to_string(),
                    counts.tn.to_string(),
                    counts.fn_.to_string(),
                ],
            ),
            MetricsReport::Search {
                success_rate,
                mrr,
                k,
                pool,
                queries,
            } => (
                vec!["success_rate", "mrr", "k", "pool", "queries"],
                vec![
                    success_rate.to_string(),
                    mrr.to_string(),
                    k.to_string(),
                    pool.to_string(),
                    queries.to_string(),
                ],
            ),
        }
    }
}
