//! The eight program encoders. Each maps an [`EncoderInput`] plus its row
//! embeddings to one vector per program; every encoder is differentiable
//! with respect to the row embeddings, which is what attribution works on.

mod astnn;
mod autoencode;
mod checkpoint;
mod code2seq;
mod code2vec;
mod ggnn;
mod input;
mod lstm;
mod tbcnn;
mod transformer;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use candle_core::{Tensor, D};
use serde::{Deserialize, Serialize};

pub use autoencode::{greedy_plan, merge_error, pretrain_autoencode, PretrainConfig, PretrainLog};
pub use checkpoint::{
    export_embeddings, load_checkpoint, save_checkpoint, ProgramEmbedding, CONFIG_FILE, MANIFEST_FILE, WEIGHTS_FILE,
};
pub use input::{EncoderInput, Row, StatementRows, Structure, Table, UnitKind};

use crate::error::{Error, Result};
use crate::features::Vocabs;
use crate::nn::{index_tensor, segment_layout, Init, ParamStore, Precision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    Transformer,
    Tbcnn,
    #[serde(rename = "autoencode")]
    AutoenCode,
    Code2Vec,
    Code2Seq,
    Ggnn,
    Astnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Lstm,
        ModelKind::Transformer,
        ModelKind::Tbcnn,
        ModelKind::AutoenCode,
        ModelKind::Code2Vec,
        ModelKind::Code2Seq,
        ModelKind::Ggnn,
        ModelKind::Astnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Transformer => "transformer",
            ModelKind::Tbcnn => "tbcnn",
            ModelKind::AutoenCode => "autoencode",
            ModelKind::Code2Vec => "code2vec",
            ModelKind::Code2Seq => "code2seq",
            ModelKind::Ggnn => "ggnn",
            ModelKind::Astnn => "astnn",
        }
    }

    /// Token-sequence models versus AST models, as results tables group them.
    pub fn is_token_based(self) -> bool {
        matches!(self, ModelKind::Lstm | ModelKind::Transformer)
    }

    /// Embedding tables the model reads from.
    pub fn tables(self) -> &'static [Table] {
        match self {
            ModelKind::Lstm | ModelKind::Transformer => &[Table::Tokens],
            ModelKind::Tbcnn | ModelKind::AutoenCode | ModelKind::Ggnn | ModelKind::Astnn => &[Table::Nodes],
            ModelKind::Code2Vec => &[Table::Leaves, Table::Paths],
            ModelKind::Code2Seq => &[Table::Tokens, Table::Types],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown model `{s}`")))
    }
}

/// Rows per embedding table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabSizes {
    pub tokens: usize,
    pub nodes: usize,
    pub leaves: usize,
    pub paths: usize,
    pub types: usize,
}

impl Default for VocabSizes {
    fn default() -> Self {
        VocabSizes {
            tokens: 1000,
            nodes: 1000,
            leaves: 1000,
            paths: 1000,
            types: 1000,
        }
    }
}

impl VocabSizes {
    pub fn from_vocabs(v: &Vocabs) -> Self {
        VocabSizes {
            tokens: v.tokens.len(),
            nodes: v.nodes.len(),
            leaves: v.leaves.len(),
            paths: v.paths.len(),
            types: v.types.len(),
        }
    }

    pub fn get(&self, t: Table) -> usize {
        match t {
            Table::Tokens => self.tokens,
            Table::Nodes => self.nodes,
            Table::Leaves => self.leaves,
            Table::Paths => self.paths,
            Table::Types => self.types,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub model: ModelKind,
    /// Embedding width of every table.
    pub d: usize,
    /// Recurrent / convolution width.
    pub hidden: usize,
    pub lstm_layers: usize,
    pub transformer_layers: usize,
    pub heads: usize,
    pub feed_forward: usize,
    pub ggnn_steps: usize,
    pub vocab: VocabSizes,
    pub precision: Precision,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            model: ModelKind::Lstm,
            d: 128,
            hidden: 128,
            lstm_layers: 4,
            transformer_layers: 3,
            heads: 8,
            feed_forward: 2048,
            ggnn_steps: 4,
            vocab: VocabSizes::default(),
            precision: Precision::F32,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn new(model: ModelKind) -> Self {
        EncoderConfig {
            model,
            ..EncoderConfig::default()
        }
    }

    /// A small double-precision configuration for numerical checks.
    pub fn toy(model: ModelKind, d: usize) -> Self {
        EncoderConfig {
            model,
            d,
            hidden: d,
            lstm_layers: 2,
            transformer_layers: 1,
            heads: 2,
            feed_forward: 2 * d,
            ggnn_steps: 2,
            vocab: VocabSizes {
                tokens: 50,
                nodes: 50,
                leaves: 50,
                paths: 50,
                types: 50,
            },
            precision: Precision::F64,
            seed: 7,
        }
    }

    fn validate(&self) -> Result<()> {
        let sizes = [
            self.d,
            self.hidden,
            self.lstm_layers,
            self.transformer_layers,
            self.heads,
            self.feed_forward,
        ];
        if sizes.contains(&0) || self.model.tables().iter().any(|&t| self.vocab.get(t) == 0) {
            return Err(Error::arg("encoder sizes must be positive"));
        }
        Ok(())
    }
}

/// One (input, row embeddings) pair of a batch; embeddings are `[rows, d]`.
pub type Item<'a> = (&'a EncoderInput, Tensor);

enum Net {
    Lstm(lstm::LstmEncoder),
    Transformer(transformer::TransformerEncoder),
    Tbcnn(tbcnn::Tbcnn),
    AutoenCode(autoencode::AutoenCode),
    Code2Vec(code2vec::Code2Vec),
    Code2Seq(code2seq::Code2Seq),
    Ggnn(ggnn::Ggnn),
    Astnn(astnn::Astnn),
}

pub struct Encoder {
    config: EncoderConfig,
    store: ParamStore,
    tables: BTreeMap<Table, Tensor>,
    net: Net,
}

impl Encoder {
    pub fn new(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(config.precision, config.seed);
        let mut tables = BTreeMap::new();
        for &t in config.model.tables() {
            let name = format!("embed.{}", serde_json::to_value(t)?.as_str().unwrap_or("table"));
            let shape = [config.vocab.get(t), config.d];
            // The recursive autoencoder keeps its leaf embeddings fixed.
            let tensor = if config.model == ModelKind::AutoenCode {
                store.add_frozen(&name, &shape, Init::Normal(1.0))?
            } else {
                store.add(&name, &shape, Init::Normal(1.0))?
            };
            tables.insert(t, tensor);
        }
        let c = &config;
        let s = &mut store;
        let net = match c.model {
            ModelKind::Lstm => Net::Lstm(lstm::LstmEncoder::new(s, c)?),
            ModelKind::Transformer => Net::Transformer(transformer::TransformerEncoder::new(s, c)?),
            ModelKind::Tbcnn => Net::Tbcnn(tbcnn::Tbcnn::new(s, c)?),
            ModelKind::AutoenCode => Net::AutoenCode(autoencode::AutoenCode::new(s, c)?),
            ModelKind::Code2Vec => Net::Code2Vec(code2vec::Code2Vec::new(s, c)?),
            ModelKind::Code2Seq => Net::Code2Seq(code2seq::Code2Seq::new(s, c)?),
            ModelKind::Ggnn => Net::Ggnn(ggnn::Ggnn::new(s, c)?),
            ModelKind::Astnn => Net::Astnn(astnn::Astnn::new(s, c)?),
        };
        Ok(Encoder {
            config,
            store,
            tables,
            net,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn kind(&self) -> ModelKind {
        self.config.model
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn count_parameters(&self) -> usize {
        self.store.trainable_count()
    }

    pub fn table(&self, t: Table) -> Option<&Tensor> {
        self.tables.get(&t)
    }

    /// Width of the program vector.
    pub fn out_dim(&self) -> usize {
        let c = &self.config;
        match self.config.model {
            ModelKind::Lstm | ModelKind::Tbcnn => c.hidden,
            ModelKind::Transformer | ModelKind::AutoenCode | ModelKind::Code2Seq | ModelKind::Ggnn => c.d,
            ModelKind::Code2Vec => 3 * c.d,
            ModelKind::Astnn => 2 * c.hidden,
        }
    }

    pub fn input(&self, views: &crate::features::ProgramViews) -> EncoderInput {
        EncoderInput::from_views(self.kind(), views)
    }

    /// Row embeddings `[rows, d]`: each row is the sum of its symbols.
    pub fn embed(&self, input: &EncoderInput) -> Result<Tensor> {
        let d = self.config.d;
        let mut x = Tensor::zeros((input.len(), d), self.store.dtype(), self.store.device())?;
        let mut per_table: BTreeMap<Table, (Vec<u32>, Vec<u32>)> = BTreeMap::new();
        for (i, row) in input.rows.iter().enumerate() {
            let entry = per_table.entry(row.table).or_default();
            for &s in &row.symbols {
                entry.0.push(i as u32);
                entry.1.push(s);
            }
        }
        for (t, (rows, syms)) in per_table {
            let table = self
                .tables
                .get(&t)
                .ok_or_else(|| Error::arg(format!("{} has no {t:?} table", self.kind())))?;
            let limit = table.dim(0)?;
            if let Some(bad) = syms.iter().find(|&&s| s as usize >= limit) {
                return Err(Error::arg(format!("symbol {bad} outside the {t:?} table of {limit} rows")));
            }
            let gathered = table.index_select(&index_tensor(&syms)?, 0)?;
            x = x.index_add(&index_tensor(&rows)?, &gathered, 0)?;
        }
        Ok(x)
    }

    /// Program vectors `[B, out_dim]` for row embeddings supplied by the caller.
    pub fn forward(&self, items: &[Item<'_>]) -> Result<Tensor> {
        if items.is_empty() {
            return Err(Error::arg("empty batch"));
        }
        for (input, x) in items {
            if x.dims() != [input.len(), self.config.d] {
                return Err(Error::arg(format!(
                    "embeddings {:?} do not match {} rows of width {}",
                    x.dims(),
                    input.len(),
                    self.config.d
                )));
            }
            self.check_structure(input)?;
        }
        let out = match &self.net {
            Net::Lstm(m) => m.forward(items),
            Net::Transformer(m) => m.forward(items),
            Net::Tbcnn(m) => m.forward(items),
            Net::AutoenCode(m) => m.forward(items),
            Net::Code2Vec(m) => m.forward(items),
            Net::Code2Seq(m) => m.forward(items),
            Net::Ggnn(m) => m.forward(items),
            Net::Astnn(m) => m.forward(items),
        }?;
        debug_assert_eq!(out.dim(D::Minus1)?, self.out_dim());
        Ok(out)
    }

    pub fn encode(&self, inputs: &[&EncoderInput]) -> Result<Tensor> {
        let items = inputs
            .iter()
            .map(|&i| Ok((i, self.embed(i)?)))
            .collect::<Result<Vec<_>>>()?;
        self.forward(&items)
    }

    /// Whether `input` is encoded by the learned empty-input vector.
    pub fn uses_fallback(&self, input: &EncoderInput) -> bool {
        match &input.structure {
            Structure::Contexts(c) => c.is_empty(),
            Structure::PathSeqs(c) => c.is_empty(),
            _ => false,
        }
    }

    /// Encodes programs in batches of `batch` and returns detached vectors.
    pub fn program_embeddings(&self, ids: &[&str], inputs: &[&EncoderInput], batch: usize) -> Result<Vec<ProgramEmbedding>> {
        if ids.len() != inputs.len() {
            return Err(Error::arg("one id per input is required"));
        }
        let mut out = Vec::with_capacity(ids.len());
        for (id_chunk, in_chunk) in ids.chunks(batch.max(1)).zip(inputs.chunks(batch.max(1))) {
            let v = self.encode(in_chunk)?.to_dtype(candle_core::DType::F64)?.to_vec2::<f64>()?;
            for ((id, input), vector) in id_chunk.iter().zip(in_chunk).zip(v) {
                out.push(ProgramEmbedding {
                    id: id.to_string(),
                    model: self.kind(),
                    vector,
                    fallback: self.uses_fallback(input),
                });
            }
        }
        Ok(out)
    }

    /// Fixes every data-dependent discrete choice (the autoencoder's merge
    /// order) at the values `x` induces, so the forward pass becomes a smooth
    /// function of the embeddings.
    pub fn freeze(&self, input: &EncoderInput, x: &Tensor) -> Result<EncoderInput> {
        match &self.net {
            Net::AutoenCode(m) => m.freeze(input, x),
            _ => Ok(input.clone()),
        }
    }

    fn check_structure(&self, input: &EncoderInput) -> Result<()> {
        let ok = matches!(
            (self.kind(), &input.structure),
            (ModelKind::Lstm | ModelKind::Transformer, Structure::Sequence)
                | (ModelKind::Tbcnn, Structure::Tree { .. })
                | (ModelKind::AutoenCode, Structure::Leaves { .. })
                | (ModelKind::Code2Vec, Structure::Contexts(_))
                | (ModelKind::Code2Seq, Structure::PathSeqs(_))
                | (ModelKind::Ggnn, Structure::Graph { .. })
                | (ModelKind::Astnn, Structure::Statements(_))
        );
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("{} cannot consume this input view", self.kind())))
        }
    }

    pub(crate) fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub(crate) fn autoencode(&self) -> Option<&autoencode::AutoenCode> {
        match &self.net {
            Net::AutoenCode(m) => Some(m),
            _ => None,
        }
    }
}

/// Trainable scalar count of `kind` under `config`.
pub fn count_parameters(kind: ModelKind, config: &EncoderConfig) -> Result<usize> {
    let config = EncoderConfig {
        model: kind,
        ..config.clone()
    };
    Ok(Encoder::new(config)?.count_parameters())
}

/// Concatenates every item's rows into `[N, d]`; returns the offset of each item.
pub(crate) fn concat_rows(items: &[Item<'_>]) -> Result<(Tensor, Vec<usize>)> {
    let mut offsets = Vec::with_capacity(items.len());
    let mut n = 0;
    for (input, _) in items {
        offsets.push(n);
        n += input.len();
    }
    let xs: Vec<&Tensor> = items.iter().map(|(_, x)| x).collect();
    Ok((Tensor::cat(&xs, 0)?, offsets))
}

/// Pads item rows into `[B, T, d]` with zeros; returns the lengths.
pub(crate) fn pad_rows(items: &[Item<'_>]) -> Result<(Tensor, Vec<usize>)> {
    let (all, offsets) = concat_rows(items)?;
    let groups: Vec<Vec<u32>> = items
        .iter()
        .zip(&offsets)
        .map(|((input, _), &o)| (o..o + input.len()).map(|i| i as u32).collect())
        .collect();
    let (x, _) = segment_layout(&all, &groups, 0.0)?;
    Ok((x, items.iter().map(|(i, _)| i.len()).collect()))
}

/// Chooses per item between a computed vector and a learned fallback:
/// `computed` holds rows for the items flagged `true`, in order.
pub(crate) fn with_fallback(computed: Option<Tensor>, present: &[bool], fallback: &Tensor) -> Result<Tensor> {
    let n_computed = present.iter().filter(|&&p| p).count();
    let fb = fallback.unsqueeze(0)?;
    let pool = match computed {
        Some(c) => Tensor::cat(&[&c, &fb], 0)?,
        None => fb,
    };
    let mut next = 0u32;
    let idx: Vec<u32> = present
        .iter()
        .map(|&p| {
            if p {
                next += 1;
                next - 1
            } else {
                n_computed as u32
            }
        })
        .collect();
    Ok(pool.index_select(&index_tensor(&idx)?, 0)?)
}
