use candle_core::Tensor;

use super::{pad_rows, EncoderConfig, Item};
use crate::error::Result;
use crate::nn::{constant, Init, LayerNorm, Linear, MultiHeadAttention, ParamStore, NEG_INF};

struct Block {
    attn: MultiHeadAttention,
    norm1: LayerNorm,
    ff_in: Linear,
    ff_out: Linear,
    norm2: LayerNorm,
}

impl Block {
    fn forward(&self, x: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let x = self.norm1.forward(&(x + self.attn.forward(x, mask)?)?)?;
        let ff = self.ff_out.forward(&self.ff_in.forward(&x)?.relu()?)?;
        self.norm2.forward(&(x + ff)?)
    }
}

/// Post-norm transformer encoder over `[CLS] + tokens`; the program vector is
/// the last layer's output at the CLS position.
pub(super) struct TransformerEncoder {
    cls: Tensor,
    blocks: Vec<Block>,
    d: usize,
}

/// Sinusoidal position table `[n, d]`.
fn positions(n: usize, d: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n * d);
    for pos in 0..n {
        for i in 0..d {
            let rate = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let a = pos as f64 * rate;
            v.push(if i % 2 == 0 { a.sin() } else { a.cos() });
        }
    }
    v
}

impl TransformerEncoder {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        let cls = store.add("transformer.cls", &[c.d], Init::Normal(1.0))?;
        let mut blocks = Vec::with_capacity(c.transformer_layers);
        for l in 0..c.transformer_layers {
            let p = format!("transformer.l{l}");
            blocks.push(Block {
                attn: MultiHeadAttention::new(store, &format!("{p}.attn"), c.d, c.heads)?,
                norm1: LayerNorm::new(store, &format!("{p}.norm1"), c.d)?,
                ff_in: Linear::new(store, &format!("{p}.ff_in"), c.d, c.feed_forward, true)?,
                ff_out: Linear::new(store, &format!("{p}.ff_out"), c.feed_forward, c.d, true)?,
                norm2: LayerNorm::new(store, &format!("{p}.norm2"), c.d)?,
            });
        }
        Ok(TransformerEncoder { cls, blocks, d: c.d })
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let (x, lengths) = pad_rows(items)?;
        let (b, t, _) = x.dims3()?;
        let cls = self.cls.reshape((1, 1, self.d))?.broadcast_as((b, 1, self.d))?;
        let x = Tensor::cat(&[&cls, &x], 1)?;
        let pe = constant(positions(t + 1, self.d), &[1, t + 1, self.d], x.dtype())?;
        let mut h = x.broadcast_add(&pe)?;
        let mut mask = Vec::with_capacity(b * (t + 1));
        for &l in &lengths {
            mask.extend((0..=t).map(|i| if i <= l { 0.0 } else { NEG_INF }));
        }
        let mask = constant(mask, &[b, 1, 1, t + 1], x.dtype())?;
        for block in &self.blocks {
            h = block.forward(&h, &mask)?;
        }
        Ok(h.narrow(1, 0, 1)?.squeeze(1)?.contiguous()?)
    }
}

#[cfg(test)]
mod tests {
    use super::positions;

    #[test]
    fn position_zero_alternates_zero_one() {
        let p = positions(2, 4);
        assert_eq!(&p[..4], &[0.0, 1.0, 0.0, 1.0]);
        assert!((p[4] - 1f64.sin()).abs() < 1e-15);
    }
}
