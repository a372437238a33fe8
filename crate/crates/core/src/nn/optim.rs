use candle_core::backprop::GradStore;
use candle_core::{DType, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Adamax,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Global L2 norm of `grads` and the rescaled gradients when that norm
/// exceeds `max_norm`.
pub fn clip_grad_norm(grads: &[Tensor], max_norm: f64) -> Result<(Vec<Tensor>, f64)> {
    let mut sq = 0.0;
    for g in grads {
        sq += g.sqr()?.sum_all()?.to_dtype(DType::F64)?.to_scalar::<f64>()?;
    }
    let norm = sq.sqrt();
    if !norm.is_finite() || norm <= max_norm || max_norm <= 0.0 {
        return Ok((grads.to_vec(), norm));
    }
    let scale = max_norm / (norm + 1e-6);
    let scaled = grads.iter().map(|g| g * scale).collect::<candle_core::Result<_>>()?;
    Ok((scaled, norm))
}

/// Adam / Adamax over a fixed parameter list, with PyTorch default moments.
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    clip: Option<f64>,
    vars: Vec<Var>,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: usize,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, vars: Vec<Var>, clip: Option<f64>) -> Result<Self> {
        let m = vars
            .iter()
            .map(|v| v.as_tensor().zeros_like())
            .collect::<candle_core::Result<Vec<_>>>()?;
        Ok(Optimizer {
            kind,
            lr,
            clip,
            v: m.clone(),
            m,
            vars,
            t: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    /// Applies one update from `loss`; returns the pre-clip gradient norm.
    /// A non-finite gradient leaves the parameters untouched.
    pub fn backward_step(&mut self, loss: &Tensor) -> Result<f64> {
        let grads = loss.backward()?;
        self.step(&grads)
    }

    pub fn step(&mut self, grads: &GradStore) -> Result<f64> {
        let raw = self
            .vars
            .iter()
            .map(|v| match grads.get(v.as_tensor()) {
                // Gradients still reference the forward graph; the moment
                // buffers must not, or every step keeps the last one alive.
                Some(g) => Ok(g.detach()),
                None => v.as_tensor().zeros_like(),
            })
            .collect::<candle_core::Result<Vec<_>>>()?;
        let (gs, norm) = match self.clip {
            Some(c) => clip_grad_norm(&raw, c)?,
            None => {
                let (_, n) = clip_grad_norm(&raw, f64::INFINITY)?;
                (raw, n)
            }
        };
        if !norm.is_finite() {
            return Err(Error::NonFiniteGradient { step: self.t + 1 });
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        for (i, g) in gs.iter().enumerate() {
            let m = ((&self.m[i] * BETA1)? + (g * (1.0 - BETA1))?)?;
            let update = match self.kind {
                OptimizerKind::Adam => {
                    let v = ((&self.v[i] * BETA2)? + (g.sqr()? * (1.0 - BETA2))?)?;
                    let bc2 = 1.0 - BETA2.powi(t);
                    let denom = ((&v / bc2)?.sqrt()? + EPS)?;
                    self.v[i] = v;
                    ((&m / bc1)? / denom)?
                }
                OptimizerKind::Adamax => {
                    let u = (&self.v[i] * BETA2)?.maximum(&(g.abs()? + EPS)?)?;
                    let upd = ((&m / bc1)? / &u)?;
                    self.v[i] = u;
                    upd
                }
            };
            self.m[i] = m;
            let var = &self.vars[i];
            var.set(&(var.as_tensor() - (update * self.lr)?)?.detach())?;
        }
        Ok(norm)
    }
}
