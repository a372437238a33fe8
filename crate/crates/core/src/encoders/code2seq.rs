use candle_core::{Tensor, D};

use super::code2vec::attend;
use super::{concat_rows, with_fallback, EncoderConfig, Item, Structure};
use crate::error::Result;
use crate::nn::{index_tensor, reverse_padded, segment_layout, Init, Linear, Lstm, ParamStore};

/// Path contexts whose inner node types run through a bidirectional LSTM;
/// leaves are sums of subtoken embeddings. Contexts are combined by
/// attention and projected back to the embedding width.
pub(super) struct Code2Seq {
    forward_lstm: Lstm,
    backward_lstm: Lstm,
    combine: Linear,
    attention: Tensor,
    output: Linear,
    empty: Tensor,
}

impl Code2Seq {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        let w = 2 * c.d + 2 * c.hidden;
        Ok(Code2Seq {
            forward_lstm: Lstm::new(store, "code2seq.path_fwd", c.d, c.hidden, 1)?,
            backward_lstm: Lstm::new(store, "code2seq.path_bwd", c.d, c.hidden, 1)?,
            combine: Linear::new(store, "code2seq.combine", w, w, true)?,
            attention: store.add("code2seq.attention", &[w], Init::FanIn(w))?,
            output: Linear::new(store, "code2seq.output", w, c.d, true)?,
            empty: store.add("code2seq.empty", &[c.d], Init::Normal(0.1))?,
        })
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let (x, offsets) = concat_rows(items)?;
        let (mut l, mut r, mut paths) = (vec![], vec![], vec![]);
        let mut groups = Vec::new();
        let mut present = Vec::with_capacity(items.len());
        for ((input, _), &o) in items.iter().zip(&offsets) {
            let Structure::PathSeqs(ctx) = &input.structure else {
                unreachable!("checked by the encoder")
            };
            present.push(!ctx.is_empty());
            if ctx.is_empty() {
                continue;
            }
            let start = l.len() as u32;
            for (left, path, right) in ctx {
                l.push((o + left) as u32);
                r.push((o + right) as u32);
                paths.push(path.iter().map(|&p| (o + p) as u32).collect::<Vec<_>>());
            }
            groups.push((start..l.len() as u32).collect::<Vec<_>>());
        }
        let computed = if l.is_empty() {
            None
        } else {
            let lengths: Vec<usize> = paths.iter().map(Vec::len).collect();
            let (seq, _) = segment_layout(&x, &paths, 0.0)?;
            let (_, fwd) = self.forward_lstm.forward(&seq, &lengths)?;
            let (_, bwd) = self.backward_lstm.forward(&reverse_padded(&seq, &lengths)?, &lengths)?;
            let left = x.index_select(&index_tensor(&l)?, 0)?;
            let right = x.index_select(&index_tensor(&r)?, 0)?;
            let ctx = Tensor::cat(&[&left, &fwd, &bwd, &right], D::Minus1)?;
            let ctx = self.combine.forward(&ctx)?.tanh()?;
            Some(self.output.forward(&attend(&ctx, &self.attention, &groups)?)?)
        };
        with_fallback(computed, &present, &self.empty)
    }
}
