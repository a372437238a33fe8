//! Experiment configuration, read from one TOML file.
//!
//! Every field has a default, and `config/default.toml` lists all of them.
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use codeprobe::attribution::IgConfig;
use codeprobe::corpus::DatasetKind;
use codeprobe::encoders::{EncoderConfig, ModelKind, PretrainConfig, VocabSizes};
use codeprobe::features::FeatureConfig;
use codeprobe::nn::Precision;
use codeprobe::tasks::{TaskKind, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Stage};

/// The shipped configuration with every default spelled out.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub dataset: DatasetSection,
    pub features: FeatureConfig,
    pub encoder: EncoderSection,
    pub autoencode_pretrain: PretrainSection,
    pub train: TrainSections,
    pub evaluation: EvaluationSection,
    pub attribution: AttributionSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub task: TaskKind,
    pub model: ModelKind,
    /// Root of every stochastic choice in the run.
    pub seed: u64,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub kind: DatasetKind,
    pub root: PathBuf,
    /// File of program ids (one per line) to restrict the corpus to; empty
    /// for none.
    pub id_list: PathBuf,
    /// Programs sampled from the corpus; 0 keeps all.
    pub programs: usize,
    /// Classification: labels kept, drawn by seed; 0 keeps all.
    pub classes: usize,
    /// Classification: programs kept per label; 0 keeps all.
    pub per_class: usize,
    /// Train, validation and test proportions.
    pub split: [u32; 3],
    /// Clone pairs kept; 0 keeps all.
    pub max_pairs: usize,
    /// Clone pairs: positive share after capping. Unset keeps the natural
    /// ratio.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_fraction: Option<f64>,
    /// Clone pairs built from a labelled corpus without pairs (OJClone).
    pub ojclone_problems: usize,
    pub ojclone_pairs: usize,
}

/// Encoder hyperparameters; the model kind, vocabulary sizes and seed come
/// from the rest of the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub d: usize,
    pub hidden: usize,
    pub lstm_layers: usize,
    pub transformer_layers: usize,
    pub heads: usize,
    pub feed_forward: usize,
    pub ggnn_steps: usize,
    pub precision: Precision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSection {
    pub enabled: bool,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub held_out: f64,
    pub clip: f64,
}

/// Training settings per task; the run uses the section of its task. Seeds
/// come from `[experiment]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSections {
    pub classification: TrainConfig,
    pub clone: TrainConfig,
    pub search: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Search: rank cut-off of the success rate.
    pub k: usize,
    /// Search: candidates per query, the paired program included.
    pub pool: usize,
    pub batch: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationTarget {
    /// Sum of the class logits.
    LogitSum,
    /// Logit of the predicted class.
    Predicted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionSection {
    pub enabled: bool,
    /// Test programs attributed, in split order.
    pub programs: usize,
    pub fraction: f64,
    pub bands: usize,
    pub classification_target: ClassificationTarget,
    pub ig: IgConfig,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            task: TaskKind::Classification,
            model: ModelKind::Lstm,
            seed: 0,
            output: PathBuf::from("runs"),
        }
    }
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            kind: DatasetKind::Poj104,
            root: PathBuf::from("data/poj104"),
            id_list: PathBuf::new(),
            programs: 0,
            classes: 0,
            per_class: 0,
            split: [3, 1, 1],
            max_pairs: 0,
            positive_fraction: None,
            ojclone_problems: 15,
            ojclone_pairs: 50_000,
        }
    }
}

impl Default for EncoderSection {
    fn default() -> Self {
        let e = EncoderConfig::default();
        EncoderSection {
            d: e.d,
            hidden: e.hidden,
            lstm_layers: e.lstm_layers,
            transformer_layers: e.transformer_layers,
            heads: e.heads,
            feed_forward: e.feed_forward,
            ggnn_steps: e.ggnn_steps,
            precision: e.precision,
        }
    }
}

impl Default for PretrainSection {
    fn default() -> Self {
        let p = PretrainConfig::default();
        PretrainSection {
            enabled: true,
            epochs: p.epochs,
            lr: p.lr,
            batch_size: p.batch_size,
            held_out: p.held_out,
            clip: p.clip,
        }
    }
}

impl Default for TrainSections {
    fn default() -> Self {
        TrainSections {
            classification: TrainConfig::for_task(TaskKind::Classification),
            clone: TrainConfig::for_task(TaskKind::Clone),
            search: TrainConfig::for_task(TaskKind::Search),
        }
    }
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection { k: 10, pool: 999, batch: 32 }
    }
}

impl Default for AttributionSection {
    fn default() -> Self {
        AttributionSection {
            enabled: false,
            programs: 20,
            fraction: 0.6,
            bands: 3,
            classification_target: ClassificationTarget::LogitSum,
            ig: IgConfig::default(),
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub task: Option<TaskKind>,
    pub model: Option<ModelKind>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    /// Reads `path`, resolves relative paths against its directory and
    /// applies `overrides`.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::config(path, e.to_string()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::config(path, e.to_string()))?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let base = std::path::absolute(base).map_err(|e| HarnessError::config(path, e.to_string()))?;
        cfg.resolve_paths(&base);
        cfg.apply(overrides);
        cfg.validate().map_err(|msg| HarnessError::config(path, msg))?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = o.task {
            self.experiment.task = t;
        }
        if let Some(m) = o.model {
            self.experiment.model = m;
        }
        if let Some(s) = o.seed {
            self.experiment.seed = s;
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.experiment.output);
        fix(&mut self.dataset.root);
        fix(&mut self.dataset.id_list);
    }

    /// Value ranges; paths are checked when a run starts.
    pub fn validate(&self) -> Result<(), String> {
        let a = &self.attribution;
        if !(1..=3).contains(&a.bands) {
            return Err(format!("attribution.bands must be 1, 2 or 3, got {}", a.bands));
        }
        if !(0.0..=1.0).contains(&a.fraction) {
            return Err(format!("attribution.fraction {} outside [0, 1]", a.fraction));
        }
        if a.ig.steps == 0 || a.ig.max_steps < a.ig.steps {
            return Err("attribution.ig needs 0 < steps <= max_steps".into());
        }
        if self.dataset.split.iter().all(|&r| r == 0) {
            return Err("dataset.split has no nonzero part".into());
        }
        if let Some(f) = self.dataset.positive_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(format!("dataset.positive_fraction {f} outside [0, 1]"));
            }
        }
        if self.evaluation.k == 0 || self.evaluation.pool == 0 || self.evaluation.batch == 0 {
            return Err("evaluation.k, pool and batch must be positive".into());
        }
        if self.encoder.d == 0 || self.encoder.hidden == 0 {
            return Err("encoder widths must be positive".into());
        }
        Ok(())
    }

    /// Paths that must exist before anything is written.
    pub fn check_inputs(&self, stage: Stage) -> Result<(), HarnessError> {
        if !self.dataset.root.exists() {
            return Err(HarnessError::MissingPath {
                stage,
                what: "dataset root",
                path: self.dataset.root.clone(),
            });
        }
        if !self.dataset.id_list.as_os_str().is_empty() && !self.dataset.id_list.is_file() {
            return Err(HarnessError::MissingPath {
                stage,
                what: "id list",
                path: self.dataset.id_list.clone(),
            });
        }
        Ok(())
    }

    pub fn encoder_config(&self, vocab: VocabSizes) -> EncoderConfig {
        let e = &self.encoder;
        EncoderConfig {
            model: self.experiment.model,
            d: e.d,
            hidden: e.hidden,
            lstm_layers: e.lstm_layers,
            transformer_layers: e.transformer_layers,
            heads: e.heads,
            feed_forward: e.feed_forward,
            ggnn_steps: e.ggnn_steps,
            vocab,
            precision: e.precision,
            seed: self.experiment.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = match self.experiment.task {
            TaskKind::Classification => &self.train.classification,
            TaskKind::Clone => &self.train.clone,
            TaskKind::Search => &self.train.search,
        };
        TrainConfig {
            seed: self.experiment.seed,
            ..t.clone()
        }
    }

    pub fn pretrain_config(&self) -> PretrainConfig {
        let p = &self.autoencode_pretrain;
        PretrainConfig {
            epochs: p.epochs,
            lr: p.lr,
            batch_size: p.batch_size,
            held_out: p.held_out,
            clip: p.clip,
            seed: self.experiment.seed,
        }
    }
}
