use candle_core::Tensor;

use super::{pad_rows, EncoderConfig, Item};
use crate::error::Result;
use crate::nn::{Lstm, ParamStore};

/// Stacked unidirectional LSTM; the program vector is the top layer's last
/// hidden state.
pub(super) struct LstmEncoder {
    lstm: Lstm,
}

impl LstmEncoder {
    pub fn new(store: &mut ParamStore, c: &EncoderConfig) -> Result<Self> {
        Ok(LstmEncoder {
            lstm: Lstm::new(store, "lstm", c.d, c.hidden, c.lstm_layers)?,
        })
    }

    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        let (x, lengths) = pad_rows(items)?;
        let (_, last) = self.lstm.forward(&x, &lengths)?;
        Ok(last)
    }
}
