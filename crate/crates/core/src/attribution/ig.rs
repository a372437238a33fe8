use candle_core::{DType, Tensor, Var, D};
use serde::{Deserialize, Serialize};

use super::make_baseline;
use crate::encoders::{Encoder, EncoderInput};
use crate::error::{Error, Result};
use crate::nn::constant;
use crate::tasks::{cosine_rows, ClassifierHead, CloneHead, TaskKind};

/// The scalar a prediction is explained through, as a function of the
/// program vector.
pub enum Target<'a> {
    /// Sum of the class logits. Softmax outputs always sum to one, so their
    /// summed difference would be identically zero.
    LogitSum(&'a ClassifierHead),
    Logit(&'a ClassifierHead, usize),
    /// Clone probability of the pair `(reference, x)`: the first program's
    /// vector `[out]` stays fixed and the second is attributed.
    Clone { head: &'a CloneHead, reference: Tensor },
    /// Cosine similarity with a fixed query vector `[out]`.
    Search { query: Tensor },
}

impl Target<'_> {
    /// Whether the target has no finite slope at program vector `e0`
    /// (`[out]`): cosine is undefined at the zero vector, and its floored
    /// form jumps from 0 to full value within a sliver of the path.
    pub fn singular_at(&self, e0: &Tensor) -> Result<bool> {
        match self {
            Target::Search { .. } => {
                let norm = e0.to_dtype(DType::F64)?.sqr()?.sum_all()?.sqrt()?.to_scalar::<f64>()?;
                Ok(norm < 1e-6)
            }
            _ => Ok(false),
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            Target::LogitSum(_) | Target::Logit(..) => TaskKind::Classification,
            Target::Clone { .. } => TaskKind::Clone,
            Target::Search { .. } => TaskKind::Search,
        }
    }

    /// Target values `[B]` for program vectors `[B, out]`.
    pub fn evaluate(&self, emb: &Tensor) -> Result<Tensor> {
        match self {
            Target::LogitSum(head) => Ok(head.logits(emb)?.sum(D::Minus1)?),
            Target::Logit(head, class) => {
                if *class >= head.classes() {
                    return Err(Error::arg(format!("class {class} outside {} classes", head.classes())));
                }
                Ok(head.logits(emb)?.narrow(D::Minus1, *class, 1)?.squeeze(D::Minus1)?)
            }
            Target::Clone { head, reference } => {
                let a = reference.detach().unsqueeze(0)?.broadcast_as(emb.shape())?;
                head.probability(&a, emb)
            }
            Target::Search { query } => {
                let q = query.detach().unsqueeze(0)?.broadcast_as(emb.shape())?;
                cosine_rows(&q, emb)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IgConfig {
    /// Intervals of the initial path partition.
    pub steps: usize,
    /// Refinement stops at this many intervals even if the residual is
    /// still above tolerance.
    pub max_steps: usize,
    /// Relative completeness residual accepted as converged.
    pub tolerance: f64,
    /// Path points evaluated per backward pass.
    pub chunk: usize,
    /// Partition exponent `p` (points at `(k/m)^p`) used when the target is
    /// singular at the baseline's program vector.
    pub graded_exponent: f64,
}

impl Default for IgConfig {
    fn default() -> Self {
        IgConfig {
            steps: 50,
            max_steps: 300,
            tolerance: 0.01,
            chunk: 16,
            graded_exponent: 4.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IgResult {
    /// Per-coordinate attributions, shaped like the input, in f64.
    pub scores: Tensor,
    pub value: f64,
    pub baseline_value: f64,
    pub total: f64,
    /// Intervals of the final partition, one gradient point each.
    pub steps: usize,
    /// Exponent of the initial partition; 1 for uniform.
    pub exponent: f64,
    /// Intervals bisected after the initial partition.
    pub refinements: usize,
}

impl IgResult {
    pub fn delta(&self) -> f64 {
        self.value - self.baseline_value
    }

    /// `|total - delta| / |delta|`; infinite when the prediction does not
    /// move but the scores do not cancel.
    pub fn residual(&self) -> f64 {
        let err = (self.total - self.delta()).abs();
        if err == 0.0 {
            0.0
        } else {
            err / self.delta().abs()
        }
    }

    /// Scores summed over the embedding dimension, one per input row.
    pub fn row_scores(&self) -> Result<Vec<f64>> {
        match self.scores.rank() {
            1 => Ok(self.scores.to_vec1::<f64>()?),
            _ => Ok(self.scores.flatten_from(1)?.sum(1)?.to_vec1::<f64>()?),
        }
    }
}

/// One interval of the path partition with its midpoint-rule term.
struct Piece {
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
    f_mid: f64,
    /// `(hi - lo) * grad F(mid) * (x - x0)`, in f64.
    contrib: Tensor,
    sum: f64,
}

impl Piece {
    /// Midpoint estimate minus the exact change of `F` over the interval.
    fn error(&self) -> f64 {
        self.sum - (self.f_hi - self.f_lo)
    }
}

/// The straight path `x0 + t (x - x0)` through a batched scalar function.
struct Line<'a, F> {
    f: &'a F,
    x0: Tensor,
    diff: Tensor,
    diff64: Tensor,
    value: f64,
    baseline_value: f64,
}

impl<'a, F> Line<'a, F>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    fn new(f: &'a F, x: &Tensor, x0: &Tensor) -> Result<Self> {
        if x.shape() != x0.shape() {
            return Err(Error::arg(format!("input {:?} and baseline {:?} differ in shape", x.dims(), x0.dims())));
        }
        let (x, x0) = (x.detach(), x0.detach());
        let diff = (&x - &x0)?;
        let ends = f(&Tensor::stack(&[&x, &x0], 0)?)?.to_dtype(DType::F64)?.to_vec1::<f64>()?;
        let [value, baseline_value] = ends[..] else {
            return Err(Error::arg(format!("target returned {} values for 2 points", ends.len())));
        };
        if !value.is_finite() || !baseline_value.is_finite() {
            return Err(Error::arg("target is not finite at the input or the baseline"));
        }
        Ok(Line {
            f,
            x0,
            diff64: diff.to_dtype(DType::F64)?,
            diff,
            value,
            baseline_value,
        })
    }

    fn points(&self, ts: &[f64]) -> Result<Tensor> {
        let mut shape = vec![ts.len()];
        shape.extend(std::iter::repeat_n(1, self.x0.rank()));
        let ts = constant(ts.to_vec(), &shape, self.x0.dtype())?;
        Ok(ts.broadcast_mul(&self.diff.unsqueeze(0)?)?.broadcast_add(&self.x0.unsqueeze(0)?)?)
    }

    /// `F` at path positions, forward passes only.
    fn values(&self, ts: &[f64], chunk: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ts.len());
        for c in ts.chunks(chunk.max(1)) {
            out.extend((self.f)(&self.points(c)?)?.detach().to_dtype(DType::F64)?.to_vec1::<f64>()?);
        }
        Ok(out)
    }

    /// Midpoint terms of `spans`; `first` numbers the points in errors.
    fn pieces(&self, spans: &[(f64, f64)], chunk: usize, first: usize) -> Result<Vec<Piece>> {
        let mut out = Vec::with_capacity(spans.len());
        for (n, c) in spans.chunks(chunk.max(1)).enumerate() {
            let mids: Vec<f64> = c.iter().map(|(lo, hi)| (lo + hi) / 2.0).collect();
            let var = Var::from_tensor(&self.points(&mids)?)?;
            let out_values = (self.f)(var.as_tensor())?;
            let f_mid = out_values.detach().to_dtype(DType::F64)?.to_vec1::<f64>()?;
            let grads = out_values.sum_all()?.backward()?;
            // A target that ignores its input has zero gradient everywhere.
            let g = match grads.get(var.as_tensor()) {
                Some(g) => g.detach().to_dtype(DType::F64)?,
                None => var.as_tensor().zeros_like()?.to_dtype(DType::F64)?,
            };
            for (j, &(lo, hi)) in c.iter().enumerate() {
                let contrib = ((g.get(j)? * (hi - lo))? * &self.diff64)?;
                let sum = contrib.sum_all()?.to_scalar::<f64>()?;
                if !sum.is_finite() || !g.get(j)?.abs()?.sum_all()?.to_scalar::<f64>()?.is_finite() {
                    return Err(Error::NonFiniteGradient {
                        step: first + n * chunk.max(1) + j,
                    });
                }
                out.push(Piece {
                    lo,
                    hi,
                    f_lo: f64::NAN,
                    f_hi: f64::NAN,
                    f_mid: f_mid[j],
                    contrib,
                    sum,
                });
            }
        }
        Ok(out)
    }

    fn finish(&self, pieces: &[Piece], exponent: f64, refinements: usize) -> Result<IgResult> {
        let mut scores = self.diff64.zeros_like()?;
        for p in pieces {
            scores = (scores + &p.contrib)?;
        }
        let total = scores.sum_all()?.to_scalar::<f64>()?;
        Ok(IgResult {
            scores,
            value: self.value,
            baseline_value: self.baseline_value,
            total,
            steps: pieces.len(),
            exponent,
            refinements,
        })
    }
}

/// Boundaries `(k/m)^exponent` for `k = 0..=m`.
fn partition(steps: usize, exponent: f64) -> Vec<(f64, f64)> {
    let t = |k: usize| {
        if exponent == 1.0 {
            k as f64 / steps as f64
        } else {
            (k as f64 / steps as f64).powf(exponent)
        }
    };
    (0..steps).map(|k| (t(k), t(k + 1))).collect()
}

fn check_partition(steps: usize, exponent: f64) -> Result<()> {
    if exponent.is_nan() || exponent < 1.0 {
        return Err(Error::arg(format!("partition exponent {exponent} below 1")));
    }
    if steps == 0 {
        return Err(Error::arg("integrated gradients needs at least one step"));
    }
    Ok(())
}

/// Integrated gradients of a batched scalar function `f` (points `[c, ..]`
/// to values `[c]`) from `x0` to `x`, with the midpoint rule over `steps`
/// points, `chunk` points per backward pass.
pub fn integrated_gradients<F>(f: F, x: &Tensor, x0: &Tensor, steps: usize, chunk: usize) -> Result<IgResult>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    integrated_gradients_graded(f, x, x0, steps, chunk, 1.0)
}

/// As [`integrated_gradients`], over the partition `t_k = (k/m)^exponent`
/// of the path with midpoints weighted by interval width. Exponents above 1
/// crowd the points towards the baseline.
pub fn integrated_gradients_graded<F>(f: F, x: &Tensor, x0: &Tensor, steps: usize, chunk: usize, exponent: f64) -> Result<IgResult>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    check_partition(steps, exponent)?;
    let line = Line::new(&f, x, x0)?;
    let pieces = line.pieces(&partition(steps, exponent), chunk, 0)?;
    line.finish(&pieces, exponent, 0)
}

/// Midpoint-rule integrated gradients that start from `cfg.steps` intervals
/// (graded by `exponent`) and bisect the intervals with the largest local
/// error until the completeness residual is within `cfg.tolerance` or the
/// partition has `cfg.max_steps` intervals. The local error of an interval
/// is its midpoint term minus the exact change of `F` across it, so the
/// errors sum to `total - delta`.
pub fn integrated_gradients_adaptive<F>(f: F, x: &Tensor, x0: &Tensor, cfg: &IgConfig, exponent: f64) -> Result<IgResult>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    let max_steps = cfg.max_steps.max(1);
    let steps = cfg.steps.clamp(1, max_steps);
    check_partition(steps, exponent)?;
    let line = Line::new(&f, x, x0)?;
    let mut pieces = line.pieces(&partition(steps, exponent), cfg.chunk, 0)?;
    let mut result = line.finish(&pieces, exponent, 0)?;
    if result.residual() <= cfg.tolerance || steps >= max_steps {
        return Ok(result);
    }
    let inner: Vec<f64> = pieces[1..].iter().map(|p| p.lo).collect();
    let mut bounds = vec![line.baseline_value];
    bounds.extend(line.values(&inner, cfg.chunk)?);
    bounds.push(line.value);
    for (k, p) in pieces.iter_mut().enumerate() {
        (p.f_lo, p.f_hi) = (bounds[k], bounds[k + 1]);
    }
    let (mut refinements, mut evaluated) = (0, steps);
    let per_round = (cfg.chunk / 2).max(1);
    while result.residual() > cfg.tolerance && pieces.len() < max_steps {
        let mut order: Vec<usize> = (0..pieces.len()).collect();
        order.sort_by(|&a, &b| pieces[b].error().abs().total_cmp(&pieces[a].error().abs()).then(a.cmp(&b)));
        // Intervals far below the worst one are left alone, so a single
        // steep spot does not drag the whole batch into refinement.
        let worst = pieces[order[0]].error().abs();
        let mut chosen: Vec<usize> = order
            .into_iter()
            .take(per_round.min(max_steps - pieces.len()))
            .take_while(|&i| pieces[i].error().abs() >= 0.1 * worst)
            .collect();
        if chosen.is_empty() {
            // Non-finite path values leave nothing to rank.
            break;
        }
        chosen.sort_unstable();
        let spans: Vec<(f64, f64)> = chosen
            .iter()
            .flat_map(|&i| {
                let p = &pieces[i];
                let mid = (p.lo + p.hi) / 2.0;
                [(p.lo, mid), (mid, p.hi)]
            })
            .collect();
        let mut halves = line.pieces(&spans, cfg.chunk, evaluated)?.into_iter();
        evaluated += spans.len();
        let mut next = Vec::with_capacity(pieces.len() + chosen.len());
        let mut chosen = chosen.into_iter().peekable();
        for (i, p) in pieces.into_iter().enumerate() {
            if chosen.next_if_eq(&i).is_none() {
                next.push(p);
                continue;
            }
            let (mut left, mut right) = (halves.next().expect("two halves"), halves.next().expect("two halves"));
            (left.f_lo, left.f_hi) = (p.f_lo, p.f_mid);
            (right.f_lo, right.f_hi) = (p.f_mid, p.f_hi);
            next.extend([left, right]);
            refinements += 1;
        }
        pieces = next;
        result = line.finish(&pieces, exponent, refinements)?;
    }
    Ok(result)
}

/// Attributes `target` on one program to its embedded rows, against the
/// all-zero baseline, with [`integrated_gradients_adaptive`]. The initial
/// partition is uniform unless the target is singular at the baseline's
/// program vector.
pub fn attribute(encoder: &Encoder, target: &Target<'_>, input: &EncoderInput, cfg: &IgConfig) -> Result<IgResult> {
    let x = encoder.embed(input)?.detach();
    let frozen = encoder.freeze(input, &x)?;
    let x0 = make_baseline(encoder, &frozen)?.embeddings;
    let f = |points: &Tensor| -> Result<Tensor> {
        let items = (0..points.dim(0)?)
            .map(|k| Ok((&frozen, points.get(k)?)))
            .collect::<Result<Vec<_>>>()?;
        target.evaluate(&encoder.forward(&items)?)
    };
    let e0 = f_vector(encoder, &frozen, &x0)?;
    let exponent = if target.singular_at(&e0)? { cfg.graded_exponent } else { 1.0 };
    integrated_gradients_adaptive(f, &x, &x0, cfg, exponent)
}

fn f_vector(encoder: &Encoder, input: &EncoderInput, x: &Tensor) -> Result<Tensor> {
    Ok(encoder.forward(&[(input, x.clone())])?.squeeze(0)?.detach())
}
