use candle_core::Tensor;

use crate::encoders::{Encoder, EncoderInput};
use crate::error::Result;

/// A program with its structure intact and every row embedding zeroed.
#[derive(Clone, Debug)]
pub struct BaselineInput {
    pub input: EncoderInput,
    /// `[rows, d]` zeros.
    pub embeddings: Tensor,
}

pub fn make_baseline(encoder: &Encoder, input: &EncoderInput) -> Result<BaselineInput> {
    let store = encoder.store();
    let embeddings = Tensor::zeros((input.len(), encoder.config().d), store.dtype(), store.device())?;
    Ok(BaselineInput {
        input: input.clone(),
        embeddings,
    })
}

impl BaselineInput {
    /// The encoder's program vector `[1, out]` for the baseline.
    pub fn encode(&self, encoder: &Encoder) -> Result<Tensor> {
        encoder.forward(&[(&self.input, self.embeddings.clone())])
    }
}
