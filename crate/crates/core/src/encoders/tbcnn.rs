use candle_core::Tensor;

use super::{concat_rows, EncoderConfig, Item, Structure};
use crate::error::Result;
use crate::nn::{constant, index_tensor, max_over, segment_layout, Linear, ParamStore, NEG_INF};

/// Left/right weights of child `i` (0-based) among `n` siblings in the
/// continuous binary tree: the rightmost child is fully "right", a lone child
/// is split evenly.
pub(crate) fn child_weights(i: usize, n: usize) -> (f64, f64) {
    let r = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
    (1.0 - r, r)
}

/// Tree-based convolution with one kernel of depth two and max pooling.
///
/// Node vectors are first formed as a linear combination of the node's own
/// embedding with the position-weighted mean of its children's embeddings.
/// Leaves take part in the convolution as windows without children.
pub(super) struct Tbcnn {
    own: Linear,
    left: Linear,
    right: Linear,
    conv_top: Linear,
    conv_left: Linear,
    conv_right: Linear,
}

struct Edges {
    parents: Tensor,
    children: Tensor,
    left: Tensor,
    right: Tensor,
    mean_left: Tensor,
    mean_right: Tensor,
}

impl Tbcnn {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        Ok(Tbcnn {
            own: Linear::new(store, "tbcnn.init.own", c.d, c.d, true)?,
            left: Linear::new(store, "tbcnn.init.left", c.d, c.d, false)?,
            right: Linear::new(store, "tbcnn.init.right", c.d, c.d, false)?,
            conv_top: Linear::new(store, "tbcnn.conv.top", c.d, c.hidden, true)?,
            conv_left: Linear::new(store, "tbcnn.conv.left", c.d, c.hidden, false)?,
            conv_right: Linear::new(store, "tbcnn.conv.right", c.d, c.hidden, false)?,
        })
    }

    fn edges(items: &[Item<'_>], offsets: &[usize], x: &Tensor) -> Result<Option<Edges>> {
        let (mut p, mut ch, mut l, mut r, mut ml, mut mr) = (vec![], vec![], vec![], vec![], vec![], vec![]);
        for ((input, _), &o) in items.iter().zip(offsets) {
            let Structure::Tree { children, .. } = &input.structure else {
                unreachable!("checked by the encoder")
            };
            for (parent, kids) in children.iter().enumerate() {
                let n = kids.len();
                for (i, &k) in kids.iter().enumerate() {
                    let (wl, wr) = child_weights(i, n);
                    p.push((o + parent) as u32);
                    ch.push((o + k) as u32);
                    l.push(wl);
                    r.push(wr);
                    ml.push(wl / n as f64);
                    mr.push(wr / n as f64);
                }
            }
        }
        if p.is_empty() {
            return Ok(None);
        }
        let e = p.len();
        let col = |v: Vec<f64>| constant(v, &[e, 1], x.dtype());
        Ok(Some(Edges {
            parents: index_tensor(&p)?,
            children: index_tensor(&ch)?,
            left: col(l)?,
            right: col(r)?,
            mean_left: col(ml)?,
            mean_right: col(mr)?,
        }))
    }

    /// Sums weighted child rows of `h` into their parents.
    fn gather(h: &Tensor, e: &Edges, w: &Tensor) -> Result<Tensor> {
        let rows = h.index_select(&e.children, 0)?.broadcast_mul(w)?;
        Ok(h.zeros_like()?.index_add(&e.parents, &rows, 0)?)
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let (x, offsets) = concat_rows(items)?;
        let edges = Self::edges(items, &offsets, &x)?;
        let mut h = self.own.forward(&x)?;
        if let Some(e) = &edges {
            h = (h + self.left.forward(&Self::gather(&x, e, &e.mean_left)?)?)?;
            h = (h + self.right.forward(&Self::gather(&x, e, &e.mean_right)?)?)?;
        }
        let mut y = self.conv_top.forward(&h)?;
        if let Some(e) = &edges {
            y = (y + self.conv_left.forward(&Self::gather(&h, e, &e.left)?)?)?;
            y = (y + self.conv_right.forward(&Self::gather(&h, e, &e.right)?)?)?;
        }
        let y = y.tanh()?;
        let groups: Vec<Vec<u32>> = items
            .iter()
            .zip(&offsets)
            .map(|((input, _), &o)| (o..o + input.len()).map(|i| i as u32).collect())
            .collect();
        let (pooled, _) = segment_layout(&y, &groups, NEG_INF)?;
        max_over(&pooled, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::child_weights;

    #[test]
    fn weights_span_left_to_right() {
        assert_eq!(child_weights(0, 1), (0.5, 0.5));
        assert_eq!(child_weights(0, 3), (1.0, 0.0));
        assert_eq!(child_weights(1, 3), (0.5, 0.5));
        assert_eq!(child_weights(2, 3), (0.0, 1.0));
    }
}
