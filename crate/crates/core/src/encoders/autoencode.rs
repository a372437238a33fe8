use candle_core::{DType, Tensor, D};
use serde::{Deserialize, Serialize};

use super::{Encoder, EncoderConfig, EncoderInput, Item, Structure};
use crate::error::{Error, Result};
use crate::nn::{Linear, Optimizer, OptimizerKind, ParamStore};
use crate::seed;

/// Recursive autoencoder over the leaf sequence. Adjacent vectors are merged
/// greedily, always taking the pair whose reconstruction error is smallest,
/// until one vector (the program embedding) remains.
pub(crate) struct AutoenCode {
    enc: Linear,
    dec: Linear,
    d: usize,
}

/// Plain-float copy of the weights used to pick the merge order.
struct Plain {
    d: usize,
    we: Vec<f64>,
    be: Vec<f64>,
    wd: Vec<f64>,
    bd: Vec<f64>,
}

fn flat(t: &Tensor) -> Result<Vec<f64>> {
    Ok(t.to_dtype(DType::F64)?.flatten_all()?.to_vec1::<f64>()?)
}

impl Plain {
    fn merge(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..d)
            .map(|j| {
                let mut s = self.be[j];
                for i in 0..d {
                    s += a[i] * self.we[i * d + j] + b[i] * self.we[(d + i) * d + j];
                }
                s.tanh()
            })
            .collect()
    }

    fn error(&self, a: &[f64], na: usize, b: &[f64], nb: usize, p: &[f64]) -> f64 {
        let d = self.d;
        let (mut ea, mut eb) = (0.0, 0.0);
        for j in 0..2 * d {
            let mut r = self.bd[j];
            for (i, pi) in p.iter().enumerate() {
                r += pi * self.wd[i * 2 * d + j];
            }
            if j < d {
                ea += (a[j] - r).powi(2);
            } else {
                eb += (b[j - d] - r).powi(2);
            }
        }
        let n = (na + nb) as f64;
        na as f64 / n * ea + nb as f64 / n * eb
    }

    fn plan(&self, leaves: Vec<Vec<f64>>) -> Vec<usize> {
        let mut nodes: Vec<(Vec<f64>, usize)> = leaves.into_iter().map(|v| (v, 1)).collect();
        let pair = |nodes: &[(Vec<f64>, usize)], j: usize| {
            let (a, na) = &nodes[j];
            let (b, nb) = &nodes[j + 1];
            let p = self.merge(a, b);
            (self.error(a, *na, b, *nb, &p), p)
        };
        let mut cand: Vec<(f64, Vec<f64>)> = (0..nodes.len().saturating_sub(1)).map(|j| pair(&nodes, j)).collect();
        let mut plan = Vec::with_capacity(cand.len());
        while nodes.len() > 1 {
            let mut best = 0;
            for (j, c) in cand.iter().enumerate() {
                if c.0 < cand[best].0 {
                    best = j;
                }
            }
            let (_, p) = cand.remove(best);
            let n = nodes[best].1 + nodes[best + 1].1;
            nodes.remove(best + 1);
            nodes[best] = (p, n);
            if best > 0 {
                cand[best - 1] = pair(&nodes, best - 1);
            }
            if best + 1 < nodes.len() {
                cand[best] = pair(&nodes, best);
            }
            plan.push(best);
        }
        plan
    }
}

impl AutoenCode {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        Ok(AutoenCode {
            enc: Linear::new(store, "rae.encode", 2 * c.d, c.d, true)?,
            dec: Linear::new(store, "rae.decode", c.d, 2 * c.d, true)?,
            d: c.d,
        })
    }

    fn plain(&self) -> Result<Plain> {
        let bias = |l: &Linear| match &l.b {
            Some(b) => flat(b),
            None => Ok(vec![0.0; l.w.dim(1)?]),
        };
        Ok(Plain {
            d: self.d,
            we: flat(&self.enc.w)?,
            be: bias(&self.enc)?,
            wd: flat(&self.dec.w)?,
            bd: bias(&self.dec)?,
        })
    }

    pub fn plan_for(&self, x: &Tensor) -> Result<Vec<usize>> {
        let rows = x.to_dtype(DType::F64)?.to_vec2::<f64>()?;
        Ok(self.plain()?.plan(rows))
    }

    pub fn freeze(&self, input: &EncoderInput, x: &Tensor) -> Result<EncoderInput> {
        let mut out = input.clone();
        out.structure = Structure::Leaves {
            plan: Some(self.plan_for(x)?),
        };
        Ok(out)
    }

    fn merge_vec(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        Ok(self.enc.forward(&Tensor::cat(&[a, b], D::Minus1)?)?.tanh()?)
    }

    /// Weighted squared reconstruction error of merging `a` and `b` (batched
    /// over the leading dimension).
    fn merge_error(&self, a: &Tensor, na: usize, b: &Tensor, nb: usize, p: &Tensor) -> Result<Tensor> {
        let rec = self.dec.forward(p)?;
        let ea = (a - rec.narrow(D::Minus1, 0, self.d)?)?.sqr()?.sum(D::Minus1)?;
        let eb = (b - rec.narrow(D::Minus1, self.d, self.d)?)?.sqr()?.sum(D::Minus1)?;
        let n = (na + nb) as f64;
        Ok(((ea * (na as f64 / n))? + (eb * (nb as f64 / n))?)?)
    }

    /// Runs `plan` over `x: [k, n, d]`; returns the roots `[k, d]` and the
    /// summed reconstruction error `[k]`.
    fn run(&self, x: &Tensor, plan: &[usize]) -> Result<(Tensor, Tensor)> {
        let (k, n, _) = x.dims3()?;
        let mut nodes: Vec<(Tensor, usize)> = (0..n)
            .map(|i| Ok((x.narrow(1, i, 1)?.squeeze(1)?, 1)))
            .collect::<Result<_>>()?;
        let mut loss = Tensor::zeros(k, x.dtype(), x.device())?;
        for &j in plan {
            if j + 1 >= nodes.len() {
                return Err(Error::arg("merge plan does not fit the leaf sequence"));
            }
            let (b, nb) = nodes.remove(j + 1);
            let (a, na) = &nodes[j];
            let p = self.merge_vec(a, &b)?;
            loss = (loss + self.merge_error(a, *na, &b, nb, &p)?)?;
            nodes[j] = (p, na + nb);
        }
        if nodes.len() != 1 {
            return Err(Error::arg("merge plan leaves more than one root"));
        }
        Ok((nodes.remove(0).0, loss))
    }

    fn plan_of(&self, input: &EncoderInput, x: &Tensor) -> Result<Vec<usize>> {
        match &input.structure {
            Structure::Leaves { plan: Some(p) } => Ok(p.clone()),
            _ => self.plan_for(x),
        }
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let mut roots = Vec::with_capacity(items.len());
        let mut i = 0;
        while i < items.len() {
            let (input, x) = &items[i];
            // Consecutive copies of one frozen input (integration points)
            // share a plan and run as one batch.
            let mut j = i + 1;
            if matches!(input.structure, Structure::Leaves { plan: Some(_) }) {
                while j < items.len() && std::ptr::eq(items[j].0, *input) {
                    j += 1;
                }
            }
            if input.is_empty() {
                roots.push(Tensor::zeros((j - i, self.d), x.dtype(), x.device())?);
            } else {
                let plan = self.plan_of(input, x)?;
                let xs: Vec<&Tensor> = items[i..j].iter().map(|(_, x)| x).collect();
                let (root, _) = self.run(&Tensor::stack(&xs, 0)?, &plan)?;
                roots.push(root);
            }
            i = j;
        }
        Ok(Tensor::cat(&roots, 0)?)
    }

    /// Summed weighted reconstruction error of one program under its greedy plan.
    pub fn reconstruction(&self, input: &EncoderInput, x: &Tensor) -> Result<Tensor> {
        let plan = self.plan_of(input, x)?;
        let (_, loss) = self.run(&x.unsqueeze(0)?, &plan)?;
        Ok(loss.squeeze(0)?)
    }

    pub fn pair_error(&self, a: &Tensor, na: usize, b: &Tensor, nb: usize) -> Result<f64> {
        let p = self.merge_vec(a, b)?;
        Ok(self
            .merge_error(a, na, b, nb, &p)?
            .to_dtype(DType::F64)?
            .to_scalar::<f64>()?)
    }
}

/// The greedy merge order the autoencoder picks for `x` (`[leaves, d]`).
pub fn greedy_plan(encoder: &Encoder, x: &Tensor) -> Result<Vec<usize>> {
    let rae = encoder
        .autoencode()
        .ok_or_else(|| Error::arg("greedy plans exist only for the autoencoder"))?;
    rae.plan_for(x)
}

/// Weighted reconstruction error of merging two vectors that cover `na` and
/// `nb` leaves, evaluated with tensor operations.
pub fn merge_error(encoder: &Encoder, a: &Tensor, na: usize, b: &Tensor, nb: usize) -> Result<f64> {
    let rae = encoder
        .autoencode()
        .ok_or_else(|| Error::arg("merge errors exist only for the autoencoder"))?;
    rae.pair_error(a, na, b, nb)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Fraction of programs held out to monitor reconstruction.
    pub held_out: f64,
    pub clip: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 5,
            lr: 1e-3,
            batch_size: 16,
            held_out: 0.2,
            clip: 5.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PretrainLog {
    /// Mean held-out reconstruction error before training, then per epoch.
    pub held_out: Vec<f64>,
    pub train: Vec<f64>,
}

fn mean_loss(encoder: &Encoder, rae: &AutoenCode, inputs: &[&EncoderInput]) -> Result<f64> {
    let mut total = 0.0;
    for input in inputs {
        let x = encoder.embed(input)?;
        total += rae.reconstruction(input, &x)?.to_dtype(DType::F64)?.to_scalar::<f64>()?;
    }
    Ok(total / inputs.len().max(1) as f64)
}

/// Trains the merge and reconstruction weights on the summed weighted
/// reconstruction error of every program.
pub fn pretrain_autoencode(encoder: &mut Encoder, inputs: &[EncoderInput], cfg: &PretrainConfig) -> Result<PretrainLog> {
    if encoder.kind() != super::ModelKind::AutoenCode {
        return Err(Error::arg("pretraining applies only to the autoencoder"));
    }
    let usable: Vec<&EncoderInput> = inputs.iter().filter(|i| i.len() >= 2).collect();
    if usable.is_empty() {
        return Err(Error::arg("no program with two or more leaves to pretrain on"));
    }
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut rng = seed::rng(cfg.seed, "encoders.pretrain_autoencode");
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let n_held = ((usable.len() as f64 * cfg.held_out).round() as usize).min(usable.len() - 1);
    let held: Vec<&EncoderInput> = order[..n_held].iter().map(|&i| usable[i]).collect();
    let mut train: Vec<&EncoderInput> = order[n_held..].iter().map(|&i| usable[i]).collect();
    let held = if held.is_empty() { train.clone() } else { held };

    let vars = encoder.store_mut().trainable().into_iter().cloned().collect();
    let mut opt = Optimizer::new(OptimizerKind::Adam, cfg.lr, vars, Some(cfg.clip))?;
    let rae = encoder.autoencode().expect("checked kind");
    let mut log = PretrainLog {
        held_out: vec![mean_loss(encoder, rae, &held)?],
        train: Vec::new(),
    };
    for epoch in 0..cfg.epochs {
        rand::seq::SliceRandom::shuffle(train.as_mut_slice(), &mut rng);
        let mut total = 0.0;
        for batch in train.chunks(cfg.batch_size.max(1)) {
            let mut loss: Option<Tensor> = None;
            for input in batch {
                let x = encoder.embed(input)?;
                let l = rae.reconstruction(input, &x)?;
                loss = Some(match loss {
                    Some(acc) => (acc + l)?,
                    None => l,
                });
            }
            let loss = (loss.expect("non-empty batch") / batch.len() as f64)?;
            let value = loss.to_dtype(DType::F64)?.to_scalar::<f64>()?;
            if !value.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    msg: format!("reconstruction loss became {value}"),
                });
            }
            total += value * batch.len() as f64;
            opt.backward_step(&loss).map_err(|e| Error::Diverged {
                epoch,
                msg: e.to_string(),
            })?;
        }
        log.train.push(total / train.len() as f64);
        log.held_out.push(mean_loss(encoder, rae, &held)?);
    }
    Ok(log)
}
