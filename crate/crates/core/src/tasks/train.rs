use candle_core::{DType, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::heads::{cosine_rows, encode_all, ClassifierHead, CloneHead, QueryEncoder};
use super::metrics::{candidate_pool, rank_of, Confusion, MetricsReport, TaskKind};
use crate::encoders::{Encoder, EncoderInput};
use crate::error::{Error, Result};
use crate::nn::{Optimizer, OptimizerKind, ParamStore};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Ranking margin (search).
    pub margin: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Global gradient-norm cap.
    pub clip: f64,
    /// Weight of the positive class in the clone loss.
    pub pos_weight: f64,
    /// Chunk size for inference passes.
    pub eval_batch: usize,
    /// Candidate pool for validation ranking (capped at the split size).
    pub valid_pool: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::for_task(TaskKind::Classification)
    }
}

impl TrainConfig {
    pub fn for_task(task: TaskKind) -> Self {
        let (optimizer, lr) = match task {
            TaskKind::Classification | TaskKind::Clone => (OptimizerKind::Adamax, 2e-3),
            TaskKind::Search => (OptimizerKind::Adam, 1e-3),
        };
        TrainConfig {
            optimizer,
            lr,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            margin: 0.05,
            patience: 5,
            clip: 5.0,
            pos_weight: 1.0,
            eval_batch: 32,
            valid_pool: 999,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || self.batch_size == 0 || self.margin < 0.0 || self.pos_weight <= 0.0 {
            return Err(Error::arg("training hyperparameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub split: String,
    pub loss: Option<f64>,
    pub metric: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub entries: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_metric: Option<f64>,
}

impl TrainLog {
    /// Training loss per epoch; index 0 is before any update.
    pub fn train_losses(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.split == "train")
            .filter_map(|e| e.loss)
            .collect()
    }

    pub fn train_metrics(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.split == "train")
            .filter_map(|e| e.metric)
            .collect()
    }
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

struct Stores<'a>(Vec<&'a ParamStore>);

impl Stores<'_> {
    fn snapshot(&self) -> Result<Vec<Vec<Tensor>>> {
        self.0.iter().map(|s| s.snapshot()).collect()
    }

    fn restore(&self, snap: &[Vec<Tensor>]) -> Result<()> {
        for (s, t) in self.0.iter().zip(snap) {
            s.restore(t)?;
        }
        Ok(())
    }
}

/// Mini-batch training with per-epoch logging, early stopping on the
/// validation metric (higher is better) and best-epoch restoration. A
/// non-finite loss or gradient restores the last good parameters and
/// returns [`Error::Diverged`].
fn fit(
    cfg: &TrainConfig,
    stores: Stores<'_>,
    n_train: usize,
    mut batch_loss: impl FnMut(&[usize], &mut ChaCha8Rng) -> Result<Tensor>,
    mut train_metric: impl FnMut() -> Result<Option<f64>>,
    mut valid_metric: impl FnMut() -> Result<Option<f64>>,
) -> Result<TrainLog> {
    cfg.validate()?;
    if n_train == 0 {
        return Err(Error::arg("empty training set"));
    }
    let vars = stores.0.iter().flat_map(|s| s.trainable()).cloned().collect();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, vars, Some(cfg.clip))?;
    let mut log = TrainLog::default();
    let order: Vec<usize> = (0..n_train).collect();

    let mut rng = seed::rng(cfg.seed, "tasks.train/epoch0");
    let mut initial = 0.0;
    for batch in order.chunks(cfg.batch_size) {
        initial += scalar(&batch_loss(batch, &mut rng)?)? * batch.len() as f64;
    }
    let initial = initial / n_train as f64;
    if !initial.is_finite() {
        return Err(Error::Diverged {
            epoch: 0,
            msg: format!("initial loss is {initial}"),
        });
    }
    log.entries.push(EpochLog {
        epoch: 0,
        split: "train".into(),
        loss: Some(initial),
        metric: train_metric()?,
    });
    let mut best = valid_metric()?.unwrap_or(-initial);
    log.best_metric = Some(best);
    log.entries.push(EpochLog {
        epoch: 0,
        split: "valid".into(),
        loss: None,
        metric: Some(best),
    });
    let mut best_snap = stores.snapshot()?;
    let mut last_good = best_snap.clone();
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        let mut rng = seed::rng(cfg.seed, &format!("tasks.train/epoch{epoch}"));
        let mut order = order.clone();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let loss = batch_loss(batch, &mut rng)?;
            let value = scalar(&loss)?;
            let stepped = if value.is_finite() {
                opt.backward_step(&loss).map(|_| ())
            } else {
                Err(Error::Diverged {
                    epoch,
                    msg: format!("loss became {value}"),
                })
            };
            if let Err(e) = stepped {
                stores.restore(&last_good)?;
                return Err(Error::Diverged {
                    epoch,
                    msg: e.to_string(),
                });
            }
            total += value * batch.len() as f64;
        }
        let loss = total / n_train as f64;
        log.entries.push(EpochLog {
            epoch,
            split: "train".into(),
            loss: Some(loss),
            metric: train_metric()?,
        });
        last_good = stores.snapshot()?;
        let metric = valid_metric()?.unwrap_or(-loss);
        log.entries.push(EpochLog {
            epoch,
            split: "valid".into(),
            loss: None,
            metric: Some(metric),
        });
        if metric > best {
            best = metric;
            best_snap = last_good.clone();
            log.best_epoch = epoch;
            log.best_metric = Some(best);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    stores.restore(&best_snap)?;
    Ok(log)
}

pub struct Classifier {
    pub encoder: Encoder,
    pub head: ClassifierHead,
}

impl Classifier {
    pub fn new(encoder: Encoder, classes: usize) -> Result<Self> {
        let c = encoder.config();
        let head = ClassifierHead::new(encoder.out_dim(), classes, c.precision, c.seed)?;
        Ok(Classifier { encoder, head })
    }

    pub fn predict(&self, inputs: &[&EncoderInput], batch: usize) -> Result<Vec<usize>> {
        let emb = encode_all(&self.encoder, inputs, batch)?;
        let logits = self.head.logits(&emb)?;
        Ok(logits.argmax(1)?.to_vec1::<u32>()?.into_iter().map(|v| v as usize).collect())
    }

    pub fn evaluate(&self, inputs: &[&EncoderInput], labels: &[usize], batch: usize) -> Result<MetricsReport> {
        if inputs.is_empty() {
            return Err(Error::arg("empty evaluation split"));
        }
        Ok(MetricsReport::classification(&self.predict(inputs, batch)?, labels))
    }

    pub fn train(
        &self,
        train: (&[&EncoderInput], &[usize]),
        valid: (&[&EncoderInput], &[usize]),
        cfg: &TrainConfig,
    ) -> Result<TrainLog> {
        if train.0.len() != train.1.len() || valid.0.len() != valid.1.len() {
            return Err(Error::arg("one label per program is required"));
        }
        let classes = self.head.classes();
        if let Some(bad) = train.1.iter().chain(valid.1).find(|&&l| l >= classes) {
            return Err(Error::arg(format!("label {bad} outside {classes} classes")));
        }
        fit(
            cfg,
            Stores(vec![self.encoder.store(), &self.head.store]),
            train.0.len(),
            |batch, _| {
                let inputs: Vec<&EncoderInput> = batch.iter().map(|&i| train.0[i]).collect();
                let labels: Vec<usize> = batch.iter().map(|&i| train.1[i]).collect();
                self.head.loss(&self.encoder.encode(&inputs)?, &labels)
            },
            || Ok(Some(self.evaluate(train.0, train.1, cfg.eval_batch)?.headline())),
            || {
                if valid.0.is_empty() {
                    return Ok(None);
                }
                Ok(Some(self.evaluate(valid.0, valid.1, cfg.eval_batch)?.headline()))
            },
        )
    }
}

/// A labelled program pair.
pub type PairRef<'a> = (&'a EncoderInput, &'a EncoderInput, bool);

pub struct CloneModel {
    pub encoder: Encoder,
    pub head: CloneHead,
}

impl CloneModel {
    pub fn new(encoder: Encoder) -> Result<Self> {
        let c = encoder.config();
        let head = CloneHead::new(encoder.out_dim(), c.precision, c.seed)?;
        Ok(CloneModel { encoder, head })
    }

    fn pair_tensors(&self, pairs: &[PairRef<'_>]) -> Result<(Tensor, Tensor)> {
        let a: Vec<&EncoderInput> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<&EncoderInput> = pairs.iter().map(|p| p.1).collect();
        Ok((self.encoder.encode(&a)?, self.encoder.encode(&b)?))
    }

    pub fn probabilities(&self, pairs: &[PairRef<'_>], batch: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(batch.max(1)) {
            let (a, b) = self.pair_tensors(chunk)?;
            let p = self.head.probability(&a.detach(), &b.detach())?;
            out.extend(p.to_dtype(DType::F64)?.to_vec1::<f64>()?);
        }
        Ok(out)
    }

    pub fn evaluate(&self, pairs: &[PairRef<'_>], batch: usize) -> Result<MetricsReport> {
        if pairs.is_empty() {
            return Err(Error::arg("empty evaluation split"));
        }
        let probs = self.probabilities(pairs, batch)?;
        let labels: Vec<bool> = pairs.iter().map(|p| p.2).collect();
        Ok(MetricsReport::clone_detection(Confusion::from_probabilities(&probs, &labels)))
    }

    pub fn train(&self, train: &[PairRef<'_>], valid: &[PairRef<'_>], cfg: &TrainConfig) -> Result<TrainLog> {
        fit(
            cfg,
            Stores(vec![self.encoder.store(), &self.head.store]),
            train.len(),
            |batch, _| {
                let pairs: Vec<PairRef<'_>> = batch.iter().map(|&i| train[i]).collect();
                let (a, b) = self.pair_tensors(&pairs)?;
                let labels: Vec<bool> = pairs.iter().map(|p| p.2).collect();
                self.head.loss(&a, &b, &labels, cfg.pos_weight)
            },
            || Ok(None),
            || {
                if valid.is_empty() {
                    return Ok(None);
                }
                Ok(Some(self.evaluate(valid, cfg.eval_batch)?.headline()))
            },
        )
    }
}

/// A (query token ids, program) pair.
pub type QueryRef<'a> = (&'a [u32], &'a EncoderInput);

pub struct SearchModel {
    pub encoder: Encoder,
    pub query: QueryEncoder,
}

impl SearchModel {
    /// The query encoder reads the same token vocabulary as the code side.
    pub fn new(encoder: Encoder) -> Result<Self> {
        let c = encoder.config();
        let query = QueryEncoder::new(c.vocab.tokens, c.d, encoder.out_dim(), c.precision, c.seed)?;
        Ok(SearchModel { encoder, query })
    }

    /// Ranks each query's paired program inside a pool of `pool` candidates
    /// drawn from `pairs`' programs.
    pub fn evaluate(&self, pairs: &[QueryRef<'_>], k: usize, pool: usize, seed: u64, batch: usize) -> Result<MetricsReport> {
        if pairs.is_empty() {
            return Err(Error::arg("empty evaluation split"));
        }
        let codes: Vec<&EncoderInput> = pairs.iter().map(|p| p.1).collect();
        let c = encode_all(&self.encoder, &codes, batch)?.to_dtype(DType::F64)?.to_vec2::<f64>()?;
        let mut ranks = Vec::with_capacity(pairs.len());
        for (qi, chunk) in pairs.chunks(batch.max(1)).enumerate() {
            let queries: Vec<&[u32]> = chunk.iter().map(|p| p.0).collect();
            let q = self.query.encode(&queries)?.to_dtype(DType::F64)?.to_vec2::<f64>()?;
            for (j, qv) in q.iter().enumerate() {
                let i = qi * batch.max(1) + j;
                let cands = candidate_pool(i, i, pairs.len(), pool, seed)?;
                let scores: Vec<f64> = cands
                    .iter()
                    .map(|&ci| super::heads::search_similarity(qv, &c[ci]).map(|s| s.value))
                    .collect::<Result<_>>()?;
                ranks.push(rank_of(&scores, &cands, 0));
            }
        }
        Ok(MetricsReport::search(&ranks, k, pool))
    }

    pub fn train(&self, train: &[QueryRef<'_>], valid: &[QueryRef<'_>], cfg: &TrainConfig) -> Result<TrainLog> {
        if train.len() < 2 {
            return Err(Error::arg("search training needs at least two pairs to draw negatives"));
        }
        fit(
            cfg,
            Stores(vec![self.encoder.store(), &self.query.store]),
            train.len(),
            |batch, rng| {
                let codes: Vec<&EncoderInput> = batch.iter().map(|&i| train[i].1).collect();
                let pos: Vec<&[u32]> = batch.iter().map(|&i| train[i].0).collect();
                let neg: Vec<&[u32]> = batch
                    .iter()
                    .map(|&i| {
                        let j = rng.random_range(0..train.len() - 1);
                        train[if j >= i { j + 1 } else { j }].0
                    })
                    .collect();
                let c = self.encoder.encode(&codes)?;
                let sp = cosine_rows(&self.query.encode(&pos)?, &c)?;
                let sn = cosine_rows(&self.query.encode(&neg)?, &c)?;
                Ok(((sn - sp)? + cfg.margin)?.relu()?.mean_all()?)
            },
            || Ok(None),
            || {
                if valid.len() < 2 {
                    return Ok(None);
                }
                let pool = cfg.valid_pool.min(valid.len());
                Ok(Some(self.evaluate(valid, 10, pool, cfg.seed, cfg.eval_batch)?.headline()))
            },
        )
    }
}
