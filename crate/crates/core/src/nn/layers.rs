use candle_core::{DType, Device, Tensor, D};

use super::params::{Init, ParamStore};
use crate::error::Result;

/// Additive mask value for excluded positions; finite so that masked
/// products stay well defined under autodiff.
pub const NEG_INF: f64 = -1e30;

pub(crate) fn constant(values: Vec<f64>, shape: &[usize], dtype: DType) -> Result<Tensor> {
    Ok(Tensor::from_vec(values, shape, &Device::Cpu)?.to_dtype(dtype)?)
}

pub(crate) fn index_tensor(ids: &[u32]) -> Result<Tensor> {
    Ok(Tensor::from_slice(ids, ids.len(), &Device::Cpu)?)
}

/// Logistic function written through `tanh`, which keeps both the value and
/// its derivative finite for large inputs.
pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(((x * 0.5)?.tanh()? + 1.0)?.affine(0.5, 0.0)?)
}

pub fn softmax_last(x: &Tensor) -> Result<Tensor> {
    let m = x.max_keepdim(D::Minus1)?.detach();
    let e = x.broadcast_sub(&m)?.exp()?;
    Ok(e.broadcast_div(&e.sum_keepdim(D::Minus1)?)?)
}

pub fn layer_norm(x: &Tensor, gamma: &Tensor, beta: &Tensor, eps: f64) -> Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
    let normed = centered.broadcast_div(&(var + eps)?.sqrt()?)?;
    Ok(normed.broadcast_mul(gamma)?.broadcast_add(beta)?)
}

/// Max over `dim` whose gradient goes to a single element (the first
/// maximum) even when several entries tie.
pub fn max_over(x: &Tensor, dim: usize) -> Result<Tensor> {
    let idx = x.detach().argmax_keepdim(dim)?;
    Ok(x.gather(&idx, dim)?.squeeze(dim)?)
}

/// Max over dim 1 of `[B, T, d]` after adding a `[B, T, 1]` mask that is 0
/// for valid steps and `NEG_INF` for padding.
pub fn masked_max(x: &Tensor, mask_add: &Tensor) -> Result<Tensor> {
    max_over(&x.broadcast_add(mask_add)?, 1)
}

/// Gathers rows of `x: [N, d]` into a padded `[groups, longest, d]` layout;
/// padding rows are filled with `pad`. Returns the layout and the per-group
/// lengths.
pub fn segment_layout(x: &Tensor, groups: &[Vec<u32>], pad: f64) -> Result<(Tensor, usize)> {
    let (n, d) = x.dims2()?;
    let longest = groups.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let pad_row = (Tensor::ones((1, d), x.dtype(), x.device())? * pad)?;
    let ext = Tensor::cat(&[x, &pad_row], 0)?;
    let mut idx = Vec::with_capacity(groups.len() * longest);
    for g in groups {
        idx.extend_from_slice(g);
        idx.extend(std::iter::repeat_n(n as u32, longest - g.len()));
    }
    let out = ext.index_select(&index_tensor(&idx)?, 0)?;
    Ok((out.reshape((groups.len(), longest, d))?, longest))
}

/// `[B, T, 1]` additive mask: 0 for `t < len`, `NEG_INF` after.
pub(crate) fn length_mask_add(lengths: &[usize], t: usize, dtype: DType) -> Result<Tensor> {
    let mut v = Vec::with_capacity(lengths.len() * t);
    for &l in lengths {
        v.extend((0..t).map(|i| if i < l { 0.0 } else { NEG_INF }));
    }
    constant(v, &[lengths.len(), t, 1], dtype)
}

/// `[B, 1]` indicator of `step < len` for every sequence.
fn step_mask(lengths: &[usize], step: usize, dtype: DType) -> Result<Tensor> {
    let v = lengths.iter().map(|&l| if step < l { 1.0 } else { 0.0 }).collect();
    constant(v, &[lengths.len(), 1], dtype)
}

/// Keeps `new` where the mask is 1 and `old` elsewhere.
fn blend(mask: &Tensor, new: &Tensor, old: &Tensor) -> Result<Tensor> {
    Ok((old + mask.broadcast_mul(&(new - old)?)?)?)
}

/// Reverses each sequence of `[B, T, d]` within its own length; padding stays put.
pub(crate) fn reverse_padded(x: &Tensor, lengths: &[usize]) -> Result<Tensor> {
    let (b, t, d) = x.dims3()?;
    let mut idx = Vec::with_capacity(b * t);
    for (i, &l) in lengths.iter().enumerate() {
        for s in 0..t {
            let src = if s < l { l - 1 - s } else { s };
            idx.push((i * t + src) as u32);
        }
    }
    let flat = x.reshape((b * t, d))?;
    Ok(flat.index_select(&index_tensor(&idx)?, 0)?.reshape((b, t, d))?)
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub w: Tensor,
    pub b: Option<Tensor>,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, bias: bool) -> Result<Self> {
        let w = store.add(&format!("{name}.weight"), &[fan_in, fan_out], Init::FanIn(fan_in))?;
        let b = if bias {
            Some(store.add(&format!("{name}.bias"), &[fan_out], Init::FanIn(fan_in))?)
        } else {
            None
        };
        Ok(Linear { w, b })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = match x.rank() {
            1 => x.unsqueeze(0)?.matmul(&self.w)?.squeeze(0)?,
            2 => x.matmul(&self.w)?,
            _ => x.broadcast_matmul(&self.w)?,
        };
        Ok(match &self.b {
            Some(b) => y.broadcast_add(b)?,
            None => y,
        })
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, d: usize) -> Result<Self> {
        let gamma = store.add(&format!("{name}.gamma"), &[d], Init::Ones)?;
        let beta = store.add(&format!("{name}.beta"), &[d], Init::Zeros)?;
        Ok(LayerNorm { gamma, beta })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        layer_norm(x, &self.gamma, &self.beta, 1e-5)
    }
}

/// LSTM cell with one bias vector; gate order input, forget, cell, output.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub input: Linear,
    pub recurrent: Linear,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Result<Self> {
        Ok(LstmCell {
            input: Linear::new(store, &format!("{name}.ih"), input, 4 * hidden, true)?,
            recurrent: Linear::new(store, &format!("{name}.hh"), hidden, 4 * hidden, false)?,
            hidden,
        })
    }

    /// One step given the already projected input `[B, 4h]`.
    pub fn step(&self, x_proj: &Tensor, h: &Tensor, c: &Tensor) -> Result<(Tensor, Tensor)> {
        let gates = (x_proj + self.recurrent.forward(h)?)?;
        let hs = self.hidden;
        let i = sigmoid(&gates.narrow(1, 0, hs)?)?;
        let f = sigmoid(&gates.narrow(1, hs, hs)?)?;
        let g = gates.narrow(1, 2 * hs, hs)?.tanh()?;
        let o = sigmoid(&gates.narrow(1, 3 * hs, hs)?)?;
        let c = ((f * c)? + (i * g)?)?;
        let h = (o * c.tanh()?)?;
        Ok((h, c))
    }
}

/// Stacked unidirectional LSTM over padded batches.
#[derive(Clone, Debug)]
pub struct Lstm {
    pub cells: Vec<LstmCell>,
}

impl Lstm {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, layers: usize) -> Result<Self> {
        let mut cells = Vec::with_capacity(layers);
        for l in 0..layers {
            let fan_in = if l == 0 { input } else { hidden };
            cells.push(LstmCell::new(store, &format!("{name}.l{l}"), fan_in, hidden)?);
        }
        Ok(Lstm { cells })
    }

    pub fn hidden(&self) -> usize {
        self.cells.last().map(|c| c.hidden).unwrap_or(0)
    }

    /// Runs `[B, T, in]`; returns top-layer outputs `[B, T, h]` and the last
    /// valid hidden state `[B, h]` of every sequence. Steps past a sequence's
    /// length leave its state unchanged.
    pub fn forward(&self, x: &Tensor, lengths: &[usize]) -> Result<(Tensor, Tensor)> {
        let (b, t, _) = x.dims3()?;
        let dtype = x.dtype();
        let masks: Vec<Tensor> = (0..t).map(|s| step_mask(lengths, s, dtype)).collect::<Result<_>>()?;
        let mut layer_in = x.clone();
        let mut last = Tensor::zeros((b, self.hidden()), dtype, x.device())?;
        for cell in &self.cells {
            let proj = cell.input.forward(&layer_in.reshape((b * t, layer_in.dim(2)?))?)?;
            let proj = proj.reshape((b, t, 4 * cell.hidden))?;
            let mut h = Tensor::zeros((b, cell.hidden), dtype, x.device())?;
            let mut c = h.clone();
            let mut outs = Vec::with_capacity(t);
            for (s, m) in masks.iter().enumerate() {
                let (h2, c2) = cell.step(&proj.narrow(1, s, 1)?.squeeze(1)?, &h, &c)?;
                h = blend(m, &h2, &h)?;
                c = blend(m, &c2, &c)?;
                outs.push(h.clone());
            }
            layer_in = if outs.is_empty() {
                Tensor::zeros((b, 0, cell.hidden), dtype, x.device())?
            } else {
                Tensor::stack(&outs, 1)?
            };
            last = h;
        }
        Ok((layer_in, last))
    }
}

/// GRU cell with separate input and recurrent biases; gate order reset,
/// update, candidate.
#[derive(Clone, Debug)]
pub struct GruCell {
    pub input: Linear,
    pub recurrent: Linear,
    pub hidden: usize,
}

impl GruCell {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Result<Self> {
        Ok(GruCell {
            input: Linear::new(store, &format!("{name}.ih"), input, 3 * hidden, true)?,
            recurrent: Linear::new(store, &format!("{name}.hh"), hidden, 3 * hidden, true)?,
            hidden,
        })
    }

    pub fn step_projected(&self, x_proj: &Tensor, h: &Tensor) -> Result<Tensor> {
        let hs = self.hidden;
        let hp = self.recurrent.forward(h)?;
        let r = sigmoid(&(x_proj.narrow(1, 0, hs)? + hp.narrow(1, 0, hs)?)?)?;
        let z = sigmoid(&(x_proj.narrow(1, hs, hs)? + hp.narrow(1, hs, hs)?)?)?;
        let n = (x_proj.narrow(1, 2 * hs, hs)? + (r * hp.narrow(1, 2 * hs, hs)?)?)?.tanh()?;
        // h' = (1 - z) * n + z * h
        Ok((&n + (z * (h - &n)?)?)?)
    }

    pub fn step(&self, x: &Tensor, h: &Tensor) -> Result<Tensor> {
        self.step_projected(&self.input.forward(x)?, h)
    }
}

/// Single-layer unidirectional GRU over padded batches.
#[derive(Clone, Debug)]
pub struct Gru {
    pub cell: GruCell,
}

impl Gru {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Result<Self> {
        Ok(Gru {
            cell: GruCell::new(store, name, input, hidden)?,
        })
    }

    /// Outputs `[B, T, h]`; steps past a sequence's length repeat its state.
    pub fn forward(&self, x: &Tensor, lengths: &[usize]) -> Result<Tensor> {
        let (b, t, e) = x.dims3()?;
        let hs = self.cell.hidden;
        let proj = self.cell.input.forward(&x.reshape((b * t, e))?)?.reshape((b, t, 3 * hs))?;
        let mut h = Tensor::zeros((b, hs), x.dtype(), x.device())?;
        let mut outs = Vec::with_capacity(t);
        for s in 0..t {
            let m = step_mask(lengths, s, x.dtype())?;
            let h2 = self.cell.step_projected(&proj.narrow(1, s, 1)?.squeeze(1)?, &h)?;
            h = blend(&m, &h2, &h)?;
            outs.push(h.clone());
        }
        if outs.is_empty() {
            return Ok(Tensor::zeros((b, 0, hs), x.dtype(), x.device())?);
        }
        Ok(Tensor::stack(&outs, 1)?)
    }
}

/// Scaled dot-product multi-head self-attention.
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
}

impl MultiHeadAttention {
    pub fn new(store: &mut ParamStore, name: &str, d: usize, heads: usize) -> Result<Self> {
        if heads == 0 || !d.is_multiple_of(heads) {
            return Err(crate::Error::Argument(format!("{heads} heads do not divide width {d}")));
        }
        Ok(MultiHeadAttention {
            q: Linear::new(store, &format!("{name}.q"), d, d, true)?,
            k: Linear::new(store, &format!("{name}.k"), d, d, true)?,
            v: Linear::new(store, &format!("{name}.v"), d, d, true)?,
            o: Linear::new(store, &format!("{name}.o"), d, d, true)?,
            heads,
        })
    }

    /// `x: [B, T, d]`, `key_mask: [B, 1, 1, T]` additive.
    pub fn forward(&self, x: &Tensor, key_mask: &Tensor) -> Result<Tensor> {
        let (b, t, d) = x.dims3()?;
        let hd = d / self.heads;
        let split = |y: Tensor| -> Result<Tensor> {
            Ok(y.reshape((b, t, self.heads, hd))?.transpose(1, 2)?.contiguous()?)
        };
        let q = split(self.q.forward(x)?)?;
        let k = split(self.k.forward(x)?)?;
        let v = split(self.v.forward(x)?)?;
        let scores = (q.matmul(&k.transpose(2, 3)?.contiguous()?)? * (1.0 / (hd as f64).sqrt()))?;
        let attn = softmax_last(&scores.broadcast_add(key_mask)?)?;
        let ctx = attn.matmul(&v)?.transpose(1, 2)?.contiguous()?.reshape((b, t, d))?;
        self.o.forward(&ctx)
    }
}
