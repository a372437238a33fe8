use candle_core::Tensor;

use super::{concat_rows, EncoderConfig, Item, Structure};
use crate::error::Result;
use crate::nn::{
    index_tensor, length_mask_add, masked_max, max_over, reverse_padded, segment_layout, Gru, Linear, ParamStore,
    NEG_INF,
};

/// Statement-level encoder: every statement subtree is encoded bottom-up
/// (a node's vector is its own projected embedding plus its children's
/// vectors) and max-pooled over its nodes; the statement sequence goes
/// through a bidirectional GRU whose outputs are max-pooled over time.
pub(super) struct Astnn {
    project: Linear,
    forward_gru: Gru,
    backward_gru: Gru,
}

impl Astnn {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        Ok(Astnn {
            project: Linear::new(store, "astnn.project", c.d, c.hidden, true)?,
            forward_gru: Gru::new(store, "astnn.gru_fwd", c.hidden, c.hidden)?,
            backward_gru: Gru::new(store, "astnn.gru_bwd", c.hidden, c.hidden)?,
        })
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let (x, offsets) = concat_rows(items)?;
        // (descendant row, ancestor-or-self row) pairs realize the bottom-up sum.
        let (mut from, mut to) = (Vec::new(), Vec::new());
        let mut statements: Vec<Vec<u32>> = Vec::new();
        let mut per_item: Vec<Vec<u32>> = Vec::with_capacity(items.len());
        for ((input, _), &o) in items.iter().zip(&offsets) {
            let Structure::Statements(trees) = &input.structure else {
                unreachable!("checked by the encoder")
            };
            let first = statements.len() as u32;
            for tree in trees {
                let mut parent = vec![usize::MAX; tree.rows.len()];
                for (p, kids) in tree.children.iter().enumerate() {
                    for &k in kids {
                        parent[k] = p;
                    }
                }
                for (i, &row) in tree.rows.iter().enumerate() {
                    let mut a = i;
                    loop {
                        from.push((o + row) as u32);
                        to.push((o + tree.rows[a]) as u32);
                        if parent[a] == usize::MAX {
                            break;
                        }
                        a = parent[a];
                    }
                }
                statements.push(tree.rows.iter().map(|&r| (o + r) as u32).collect());
            }
            per_item.push((first..statements.len() as u32).collect());
        }
        let projected = self.project.forward(&x)?;
        let h = projected
            .zeros_like()?
            .index_add(&index_tensor(&to)?, &projected.index_select(&index_tensor(&from)?, 0)?, 0)?;
        let (nodes, _) = segment_layout(&h, &statements, NEG_INF)?;
        let stmt = max_over(&nodes, 1)?;
        let lengths: Vec<usize> = per_item.iter().map(Vec::len).collect();
        let (seq, t) = segment_layout(&stmt, &per_item, 0.0)?;
        let mask = length_mask_add(&lengths, t, seq.dtype())?;
        let fwd = self.forward_gru.forward(&seq, &lengths)?;
        let bwd = self.backward_gru.forward(&reverse_padded(&seq, &lengths)?, &lengths)?;
        let fwd = masked_max(&fwd, &mask)?;
        let bwd = masked_max(&bwd, &mask)?;
        Ok(Tensor::cat(&[&fwd, &bwd], 1)?)
    }
}
