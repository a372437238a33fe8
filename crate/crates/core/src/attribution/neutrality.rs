use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::make_baseline;
use crate::encoders::{Encoder, EncoderInput, ModelKind};
use crate::error::{Error, Result};
use crate::tasks::{cosine_rows, ClassifierHead, CloneHead, PairRef, QueryRef, SearchModel, TaskKind};

/// Goodness of fit of a mean class distribution to the uniform one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    /// The test on the mean distribution itself (observed and expected
    /// frequencies sum to one).
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
    /// The same test on expected counts, i.e. the mean distribution scaled
    /// by the number of evaluated programs. Far more sensitive: the
    /// unscaled statistic can never exceed `classes - 1`.
    pub count_statistic: f64,
    pub count_p_value: f64,
}

impl ChiSquare {
    pub fn against_uniform(mean: &[f64], items: usize) -> Result<Self> {
        let n = mean.len();
        if n < 2 {
            return Err(Error::arg("a chi-square test needs at least two classes"));
        }
        let expected = 1.0 / n as f64;
        let statistic: f64 = mean.iter().map(|p| (p - expected).powi(2) / expected).sum();
        let dist = ChiSquared::new((n - 1) as f64).map_err(|e| Error::arg(e.to_string()))?;
        let count_statistic = statistic * items as f64;
        Ok(ChiSquare {
            statistic,
            p_value: dist.sf(statistic),
            dof: n - 1,
            count_statistic,
            count_p_value: dist.sf(count_statistic),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeutralityReport {
    pub task: TaskKind,
    pub model: ModelKind,
    pub items: usize,
    /// Classification: mean baseline class distribution and its test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_square: Option<ChiSquare>,
    /// Clone probability or cosine over baseline pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

/// What to measure the baseline's outputs on.
pub enum NeutralitySet<'a> {
    /// Every program replaced by its baseline.
    Classification {
        encoder: &'a Encoder,
        head: &'a ClassifierHead,
        inputs: &'a [&'a EncoderInput],
    },
    /// The second program of each pair replaced by its baseline.
    Clone {
        encoder: &'a Encoder,
        head: &'a CloneHead,
        pairs: &'a [PairRef<'a>],
    },
    /// Each query against its program's baseline.
    Search { model: &'a SearchModel, pairs: &'a [QueryRef<'a>] },
}

const CHUNK: usize = 32;

/// Program vectors `[n, out]` of the baselines of `inputs`.
fn baseline_vectors(encoder: &Encoder, inputs: &[&EncoderInput]) -> Result<Tensor> {
    let mut parts = Vec::new();
    for chunk in inputs.chunks(CHUNK) {
        let bases = chunk.iter().map(|i| make_baseline(encoder, i)).collect::<Result<Vec<_>>>()?;
        let items: Vec<_> = bases.iter().map(|b| (&b.input, b.embeddings.clone())).collect();
        parts.push(encoder.forward(&items)?.detach());
    }
    Ok(Tensor::cat(&parts, 0)?)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn to_vec(t: &Tensor) -> Result<Vec<f64>> {
    Ok(t.to_dtype(DType::F64)?.to_vec1::<f64>()?)
}

/// Measures how neutral the all-zero baseline is for a trained model.
pub fn verify_neutrality(set: NeutralitySet<'_>) -> Result<NeutralityReport> {
    let items = match &set {
        NeutralitySet::Classification { inputs, .. } => inputs.len(),
        NeutralitySet::Clone { pairs, .. } => pairs.len(),
        NeutralitySet::Search { pairs, .. } => pairs.len(),
    };
    if items < 2 {
        return Err(Error::arg(format!("neutrality needs at least 2 evaluation items, got {items}")));
    }
    match set {
        NeutralitySet::Classification { encoder, head, inputs } => {
            let probs = head.probabilities(&baseline_vectors(encoder, inputs)?)?;
            let mean = to_vec(&probs.to_dtype(DType::F64)?.mean(0)?)?;
            Ok(NeutralityReport {
                task: TaskKind::Classification,
                model: encoder.kind(),
                items,
                chi_square: Some(ChiSquare::against_uniform(&mean, items)?),
                mean_distribution: Some(mean),
                mean: None,
                std: None,
            })
        }
        NeutralitySet::Clone { encoder, head, pairs } => {
            let firsts: Vec<&EncoderInput> = pairs.iter().map(|p| p.0).collect();
            let seconds: Vec<&EncoderInput> = pairs.iter().map(|p| p.1).collect();
            let a = crate::tasks::encode_all(encoder, &firsts, CHUNK)?;
            let b = baseline_vectors(encoder, &seconds)?;
            let (mean, std) = mean_std(&to_vec(&head.probability(&a, &b)?)?);
            Ok(NeutralityReport {
                task: TaskKind::Clone,
                model: encoder.kind(),
                items,
                mean_distribution: None,
                chi_square: None,
                mean: Some(mean),
                std: Some(std),
            })
        }
        NeutralitySet::Search { model, pairs } => {
            let codes: Vec<&EncoderInput> = pairs.iter().map(|p| p.1).collect();
            let b = baseline_vectors(&model.encoder, &codes)?;
            let mut q = Vec::new();
            for chunk in pairs.chunks(CHUNK) {
                let tokens: Vec<&[u32]> = chunk.iter().map(|p| p.0).collect();
                q.push(model.query.encode(&tokens)?.detach());
            }
            let (mean, std) = mean_std(&to_vec(&cosine_rows(&Tensor::cat(&q, 0)?, &b)?)?);
            Ok(NeutralityReport {
                task: TaskKind::Search,
                model: model.encoder.kind(),
                items,
                mean_distribution: None,
                chi_square: None,
                mean: Some(mean),
                std: Some(std),
            })
        }
    }
}
