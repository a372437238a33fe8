use candle_core::{DType, Tensor, D};

use crate::encoders::{Encoder, EncoderInput};
use crate::error::{Error, Result};
use crate::nn::{constant, index_tensor, segment_layout, sigmoid, softmax_last, Init, Lstm, ParamStore, Precision};
use crate::seed;

/// Softmax classifier over program vectors.
pub struct ClassifierHead {
    pub store: ParamStore,
    pub weight: Tensor,
    pub bias: Tensor,
}

impl ClassifierHead {
    pub fn new(input: usize, classes: usize, precision: Precision, seed: u64) -> Result<Self> {
        if classes < 2 || input == 0 {
            return Err(Error::arg("a classifier needs an input width and at least two classes"));
        }
        let mut store = ParamStore::new(precision, seed::derive_seed(seed, "tasks.classifier_head"));
        let weight = store.add("classifier.weight", &[input, classes], Init::FanIn(input))?;
        let bias = store.add("classifier.bias", &[classes], Init::FanIn(input))?;
        Ok(ClassifierHead { store, weight, bias })
    }

    pub fn classes(&self) -> usize {
        self.bias.dim(0).unwrap_or(0)
    }

    /// Pre-softmax scores `[B, classes]`.
    pub fn logits(&self, emb: &Tensor) -> Result<Tensor> {
        Ok(emb.matmul(&self.weight)?.broadcast_add(&self.bias)?)
    }

    pub fn probabilities(&self, emb: &Tensor) -> Result<Tensor> {
        softmax_last(&self.logits(emb)?)
    }

    /// Class distribution for one program vector.
    pub fn classify(&self, emb: &[f64]) -> Result<Vec<f64>> {
        let x = constant(emb.to_vec(), &[1, emb.len()], self.store.dtype())?;
        let p = self.probabilities(&x)?.to_dtype(DType::F64)?;
        Ok(p.squeeze(0)?.to_vec1::<f64>()?)
    }

    /// Mean cross-entropy of `emb` against `labels`.
    pub fn loss(&self, emb: &Tensor, labels: &[usize]) -> Result<Tensor> {
        let logits = self.logits(emb)?;
        let m = logits.max_keepdim(D::Minus1)?.detach();
        let shifted = logits.broadcast_sub(&m)?;
        let log_z = shifted.exp()?.sum_keepdim(D::Minus1)?.log()?;
        let log_p = shifted.broadcast_sub(&log_z)?;
        let idx: Vec<u32> = labels.iter().map(|&l| l as u32).collect();
        let picked = log_p.gather(&Tensor::from_slice(&idx, (idx.len(), 1), emb.device())?, 1)?;
        Ok(picked.mean_all()?.neg()?)
    }
}

/// Clone probability `sigmoid(w · |a − b| + bias)` over the element-wise
/// distance of the two program vectors, so the pair order does not matter.
pub struct CloneHead {
    pub store: ParamStore,
    pub weight: Tensor,
    pub bias: Tensor,
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: &Tensor) -> Result<Tensor> {
    Ok((z.relu()? + (z.abs()?.neg()?.exp()? + 1.0)?.log()?)?)
}

impl CloneHead {
    pub fn new(input: usize, precision: Precision, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new(precision, seed::derive_seed(seed, "tasks.clone_head"));
        let weight = store.add("clone.weight", &[input], Init::FanIn(input))?;
        let bias = store.add("clone.bias", &[1], Init::Zeros)?;
        Ok(CloneHead { store, weight, bias })
    }

    /// Pre-sigmoid score `[B]` for vector pairs `[B, w]`.
    pub fn logit(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if a.dims() != b.dims() {
            return Err(Error::arg(format!("embedding shapes differ: {:?} vs {:?}", a.dims(), b.dims())));
        }
        let dist = (a - b)?.abs()?;
        Ok(dist.broadcast_mul(&self.weight)?.sum(D::Minus1)?.broadcast_add(&self.bias)?)
    }

    pub fn probability(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        sigmoid(&self.logit(a, b)?)
    }

    pub fn clone_probability(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::arg(format!("embedding lengths differ: {} vs {}", a.len(), b.len())));
        }
        let t = |v: &[f64]| constant(v.to_vec(), &[1, v.len()], self.store.dtype());
        let p = self.probability(&t(a)?, &t(b)?)?.to_dtype(DType::F64)?;
        Ok(p.squeeze(0)?.to_scalar::<f64>()?)
    }

    /// Mean binary cross-entropy; `pos_weight` scales the positive term.
    pub fn loss(&self, a: &Tensor, b: &Tensor, labels: &[bool], pos_weight: f64) -> Result<Tensor> {
        let z = self.logit(a, b)?;
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let y = constant(y, &[labels.len()], z.dtype())?;
        let pos = (softplus(&z.neg()?)? * &y)?.affine(pos_weight, 0.0)?;
        let neg = (softplus(&z)? * (y.affine(-1.0, 1.0))?)?;
        Ok((pos + neg)?.mean_all()?)
    }
}

/// Cosine similarity per row of `[B, w]` pairs, with a small floor on the
/// norms so a zero vector scores 0 instead of NaN.
pub fn cosine_rows(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let dot = (a * b)?.sum(D::Minus1)?;
    let na = (a.sqr()?.sum(D::Minus1)? + 1e-12)?.sqrt()?;
    let nb = (b.sqr()?.sum(D::Minus1)? + 1e-12)?.sqrt()?;
    Ok((dot / (na * nb)?)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub value: f64,
    /// Set when either vector is zero; `value` is then 0.
    pub degenerate: bool,
}

pub fn search_similarity(q: &[f64], c: &[f64]) -> Result<Similarity> {
    if q.len() != c.len() {
        return Err(Error::arg(format!("vector lengths differ: {} vs {}", q.len(), c.len())));
    }
    let nq = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nc = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nq == 0.0 || nc == 0.0 {
        return Ok(Similarity {
            value: 0.0,
            degenerate: true,
        });
    }
    let dot: f64 = q.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(Similarity {
        value: (dot / (nq * nc)).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Single-layer LSTM over query subtokens; the last hidden state is the
/// query vector, sized to the program encoder's output.
pub struct QueryEncoder {
    pub store: ParamStore,
    table: Tensor,
    lstm: Lstm,
}

impl QueryEncoder {
    pub fn new(vocab_rows: usize, d: usize, out: usize, precision: Precision, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new(precision, seed::derive_seed(seed, "tasks.query_encoder"));
        let table = store.add("query.embed.tokens", &[vocab_rows, d], Init::Normal(1.0))?;
        let lstm = Lstm::new(&mut store, "query.lstm", d, out, 1)?;
        Ok(QueryEncoder { store, table, lstm })
    }

    /// Query vectors `[B, out]` for token-id sequences.
    pub fn encode(&self, queries: &[&[u32]]) -> Result<Tensor> {
        let rows = self.table.dim(0)?;
        let mut flat = Vec::new();
        let mut groups = Vec::with_capacity(queries.len());
        for q in queries {
            if let Some(bad) = q.iter().find(|&&s| s as usize >= rows) {
                return Err(Error::arg(format!("query token {bad} outside the table of {rows} rows")));
            }
            let start = flat.len() as u32;
            flat.extend_from_slice(q);
            groups.push((start..flat.len() as u32).collect::<Vec<_>>());
        }
        let x = self.table.index_select(&index_tensor(&flat)?, 0)?;
        let (seq, _) = segment_layout(&x, &groups, 0.0)?;
        let lengths: Vec<usize> = queries.iter().map(|q| q.len()).collect();
        let (_, last) = self.lstm.forward(&seq, &lengths)?;
        Ok(last)
    }
}

/// Encodes `inputs` in chunks and concatenates the program vectors.
pub fn encode_all(encoder: &Encoder, inputs: &[&EncoderInput], batch: usize) -> Result<Tensor> {
    let parts = inputs
        .chunks(batch.max(1))
        .map(|c| Ok(encoder.encode(c)?.detach()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Tensor::cat(&parts, 0)?)
}
