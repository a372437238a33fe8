use candle_core::Tensor;

use super::{concat_rows, EncoderConfig, EncoderInput, Item, Structure};
use crate::error::Result;
use crate::nn::{index_tensor, segment_layout, softmax_last, GruCell, Linear, ParamStore, NEG_INF};

/// Gated graph network: per-edge-type messages, a GRU state update per step,
/// and a global soft-attention readout over node states.
pub(super) struct Ggnn {
    messages: Vec<Linear>,
    gru: GruCell,
    gate: Linear,
    feature: Linear,
    steps: usize,
}

impl Ggnn {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        let messages = (0..EncoderInput::edge_types())
            .map(|t| Linear::new(store, &format!("ggnn.edge{t}"), c.d, c.d, true))
            .collect::<Result<_>>()?;
        Ok(Ggnn {
            messages,
            gru: GruCell::new(store, "ggnn.gru", c.d, c.d)?,
            gate: Linear::new(store, "ggnn.readout.gate", c.d, 1, true)?,
            feature: Linear::new(store, "ggnn.readout.feature", c.d, c.d, true)?,
            steps: c.ggnn_steps,
        })
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let (x, offsets) = concat_rows(items)?;
        let mut edges: Vec<(Vec<u32>, Vec<u32>)> = vec![(vec![], vec![]); self.messages.len()];
        for ((input, _), &o) in items.iter().zip(&offsets) {
            let Structure::Graph { edges: list } = &input.structure else {
                unreachable!("checked by the encoder")
            };
            for &(s, d, t) in list {
                edges[t].0.push((o + s) as u32);
                edges[t].1.push((o + d) as u32);
            }
        }
        // (layer, sources, destinations) for every edge type in use.
        let mut typed = Vec::new();
        for (layer, (s, d)) in self.messages.iter().zip(&edges) {
            if !s.is_empty() {
                typed.push((layer, index_tensor(s)?, index_tensor(d)?));
            }
        }
        let mut h = x;
        for _ in 0..self.steps {
            let mut m = h.zeros_like()?;
            for (layer, src, dst) in &typed {
                let msg = layer.forward(&h.index_select(src, 0)?)?;
                m = m.index_add(dst, &msg, 0)?;
            }
            h = self.gru.step(&m, &h)?;
        }
        let groups: Vec<Vec<u32>> = items
            .iter()
            .zip(&offsets)
            .map(|((input, _), &o)| (o..o + input.len()).map(|i| i as u32).collect())
            .collect();
        let (gate, _) = segment_layout(&self.gate.forward(&h)?, &groups, NEG_INF)?;
        let weights = softmax_last(&gate.squeeze(2)?)?;
        let (feat, _) = segment_layout(&self.feature.forward(&h)?, &groups, 0.0)?;
        Ok(feat.broadcast_mul(&weights.unsqueeze(2)?)?.sum(1)?)
    }
}
