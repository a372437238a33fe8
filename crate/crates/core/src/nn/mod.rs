//! Minimal neural building blocks on top of candle tensors: a seeded
//! parameter store, recurrent cells, attention, and optimizers.

mod layers;
mod optim;
mod params;

pub use layers::{
    layer_norm, masked_max, max_over, segment_layout, sigmoid, softmax_last, Gru, GruCell, LayerNorm, Linear,
    Lstm, LstmCell, MultiHeadAttention, NEG_INF,
};
pub use optim::{clip_grad_norm, Optimizer, OptimizerKind};
pub use params::{Init, ParamInfo, ParamStore, Precision};
pub(crate) use layers::{constant, index_tensor, length_mask_add, reverse_padded};
