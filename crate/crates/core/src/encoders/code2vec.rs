use candle_core::{Tensor, D};

use super::{concat_rows, with_fallback, EncoderConfig, Item, Structure};
use crate::error::Result;
use crate::nn::{index_tensor, segment_layout, softmax_last, Init, ParamStore, NEG_INF};

/// Attention-weighted bag of path contexts. A context concatenates the two
/// leaf embeddings and the whole-path embedding, then passes through one
/// bias-free `tanh` layer.
pub(super) struct Code2Vec {
    w: Tensor,
    attention: Tensor,
    empty: Tensor,
}

/// Attention pooling of `contexts: [C, w]` grouped per program.
pub(super) fn attend(contexts: &Tensor, attention: &Tensor, groups: &[Vec<u32>]) -> Result<Tensor> {
    let w = contexts.dim(1)?;
    let scores = contexts.matmul(&attention.reshape((w, 1))?)?;
    let (scores, _) = segment_layout(&scores, groups, NEG_INF)?;
    let weights = softmax_last(&scores.squeeze(2)?)?;
    let (ctx, _) = segment_layout(contexts, groups, 0.0)?;
    Ok(ctx.broadcast_mul(&weights.unsqueeze(2)?)?.sum(1)?)
}

impl Code2Vec {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        let w = 3 * c.d;
        Ok(Code2Vec {
            w: store.add("code2vec.transform", &[w, w], Init::FanIn(w))?,
            attention: store.add("code2vec.attention", &[w], Init::FanIn(w))?,
            empty: store.add("code2vec.empty", &[w], Init::Normal(0.1))?,
        })
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let (x, offsets) = concat_rows(items)?;
        let (mut l, mut p, mut r) = (vec![], vec![], vec![]);
        let mut groups = Vec::new();
        let mut present = Vec::with_capacity(items.len());
        for ((input, _), &o) in items.iter().zip(&offsets) {
            let Structure::Contexts(ctx) = &input.structure else {
                unreachable!("checked by the encoder")
            };
            present.push(!ctx.is_empty());
            if ctx.is_empty() {
                continue;
            }
            let start = l.len() as u32;
            for c in ctx {
                l.push((o + c[0]) as u32);
                p.push((o + c[1]) as u32);
                r.push((o + c[2]) as u32);
            }
            groups.push((start..l.len() as u32).collect::<Vec<_>>());
        }
        let computed = if l.is_empty() {
            None
        } else {
            let pick = |ix: &[u32]| -> Result<Tensor> { Ok(x.index_select(&index_tensor(ix)?, 0)?) };
            let ctx = Tensor::cat(&[pick(&l)?, pick(&p)?, pick(&r)?], D::Minus1)?;
            let ctx = ctx.matmul(&self.w)?.tanh()?;
            Some(attend(&ctx, &self.attention, &groups)?)
        };
        with_fallback(computed, &present, &self.empty)
    }
}
