//! Train, evaluate, attribute and per-run report stages, with stage caching
//! and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use codeprobe::attribution::{
    aggregate_by_node_type, attribute, band_tokens, render_html, AttributionMap, IgResult, Target,
};
use codeprobe::encoders::{
    load_checkpoint, pretrain_autoencode, save_checkpoint, Encoder, EncoderConfig, EncoderInput, ModelKind,
};
use codeprobe::nn::ParamStore;
use codeprobe::seed;
use codeprobe::tasks::{
    Classifier, CloneModel, MetricsReport, PairRef, QueryRef, SearchModel, TaskKind, TrainConfig, TrainLog,
};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{ClassificationTarget, ExperimentConfig};
use crate::error::{HarnessError, InStage, Result, Stage};
use crate::extract::{extract, FeatureSet, TaskData};
use crate::store::{read_json, relative, write_atomic, write_json, write_lines, Hasher};

pub const MANIFEST_FILE: &str = "manifest.json";
const CHECKPOINT_DIR: &str = "checkpoint";

/// A trained encoder with the head of its task.
pub enum TaskModel {
    Classification(Classifier),
    Clone(CloneModel),
    Search(SearchModel),
}

impl TaskModel {
    pub fn new(encoder: Encoder, data: &TaskData) -> codeprobe::Result<Self> {
        Ok(match data.task {
            TaskKind::Classification => TaskModel::Classification(Classifier::new(encoder, data.classes)?),
            TaskKind::Clone => TaskModel::Clone(CloneModel::new(encoder)?),
            TaskKind::Search => TaskModel::Search(SearchModel::new(encoder)?),
        })
    }

    pub fn encoder(&self) -> &Encoder {
        match self {
            TaskModel::Classification(m) => &m.encoder,
            TaskModel::Clone(m) => &m.encoder,
            TaskModel::Search(m) => &m.encoder,
        }
    }

    fn head(&self) -> &ParamStore {
        match self {
            TaskModel::Classification(m) => &m.head.store,
            TaskModel::Clone(m) => &m.head.store,
            TaskModel::Search(m) => &m.query.store,
        }
    }

    pub fn head_parameters(&self) -> usize {
        self.head().trainable_count()
    }

    pub fn save(&self, dir: &Path) -> codeprobe::Result<()> {
        save_checkpoint(
            dir,
            self.encoder().config(),
            &[("encoder", self.encoder().store()), ("head", self.head())],
        )
    }

    pub fn load(dir: &Path, data: &TaskData) -> codeprobe::Result<Self> {
        let (config, map) = load_checkpoint::<EncoderConfig>(dir)?;
        let model = TaskModel::new(Encoder::new(config)?, data)?;
        model.encoder().store().load_map(&map, "encoder/", dir)?;
        model.head().load_map(&map, "head/", dir)?;
        Ok(model)
    }

    pub fn train(&self, inputs: &[EncoderInput], data: &TaskData, cfg: &TrainConfig) -> codeprobe::Result<TrainLog> {
        let s = &data.split;
        match self {
            TaskModel::Classification(m) => {
                let (tx, ty) = programs(inputs, data, &s.train);
                let (vx, vy) = programs(inputs, data, &s.valid);
                m.train((&tx, &ty), (&vx, &vy), cfg)
            }
            TaskModel::Clone(m) => m.train(&pairs(inputs, data, &s.train), &pairs(inputs, data, &s.valid), cfg),
            TaskModel::Search(m) => m.train(&queries(inputs, data, &s.train), &queries(inputs, data, &s.valid), cfg),
        }
    }

    pub fn evaluate(&self, inputs: &[EncoderInput], data: &TaskData, cfg: &ExperimentConfig) -> codeprobe::Result<MetricsReport> {
        let e = &cfg.evaluation;
        let test = &data.split.test;
        match self {
            TaskModel::Classification(m) => {
                let (x, y) = programs(inputs, data, test);
                m.evaluate(&x, &y, e.batch)
            }
            TaskModel::Clone(m) => m.evaluate(&pairs(inputs, data, test), e.batch),
            TaskModel::Search(m) => {
                let pool = e.pool.min(test.len());
                if pool < e.pool {
                    warn!("candidate pool cut from {} to the {} test queries", e.pool, test.len());
                }
                m.evaluate(&queries(inputs, data, test), e.k, pool, cfg.experiment.seed, e.batch)
            }
        }
    }
}

fn programs<'a>(inputs: &'a [EncoderInput], data: &TaskData, idx: &[usize]) -> (Vec<&'a EncoderInput>, Vec<usize>) {
    idx.iter().map(|&i| (&inputs[i], data.labels[i])).unzip()
}

fn pairs<'a>(inputs: &'a [EncoderInput], data: &TaskData, idx: &[usize]) -> Vec<PairRef<'a>> {
    idx.iter()
        .map(|&i| {
            let (a, b, c) = data.clone_pairs[i];
            (&inputs[a], &inputs[b], c)
        })
        .collect()
}

fn queries<'a>(inputs: &'a [EncoderInput], data: &'a TaskData, idx: &[usize]) -> Vec<QueryRef<'a>> {
    idx.iter()
        .map(|&i| {
            let q = &data.queries[i];
            (q.tokens.as_slice(), &inputs[q.program])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub key: String,
    pub seconds: f64,
    /// Reused from an earlier run with the same key.
    pub cached: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedAudit {
    pub derivations: usize,
    /// Streams not traceable to the run seed; 0 in a reproducible run.
    pub untraced: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub task: TaskKind,
    pub model: ModelKind,
    pub seed: u64,
    pub features_key: String,
    pub run_key: String,
    /// Trainable encoder parameters.
    pub parameters: usize,
    pub head_parameters: usize,
    pub programs: usize,
    pub excluded_programs: usize,
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    /// Artifact name to path, relative to the run directory.
    pub artifacts: BTreeMap<String, String>,
    pub seeds: SeedAudit,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn dir(&self) -> PathBuf {
        run_dir(&self.config, &self.run_key)
    }
}

/// `<output>/runs/<task>-<model>-<key prefix>`.
fn run_dir(cfg: &ExperimentConfig, run_key: &str) -> PathBuf {
    let e = &cfg.experiment;
    let name = format!("{}-{}-{}", e.task.name(), e.model.name().to_lowercase(), &run_key[..12]);
    e.output.join("runs").join(name)
}

/// Per-program attribution outcome, listed in `attributions/summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub program_id: String,
    /// Index in the feature set's `programs.jsonl`.
    pub program: usize,
    pub file: String,
    pub delta: f64,
    pub steps: usize,
    pub residual: f64,
}

/// Completion record of a stage: its key and named outputs, relative to the
/// run directory.
#[derive(Serialize, Deserialize)]
struct Marker {
    key: String,
    outputs: BTreeMap<String, String>,
}

/// One experiment: features, one model, one task.
pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub features: FeatureSet,
    pub dir: PathBuf,
    pub run_key: String,
    inputs: Vec<EncoderInput>,
    model: Option<TaskModel>,
    stages: Vec<StageRecord>,
    artifacts: BTreeMap<String, String>,
    metrics: Option<MetricsReport>,
}

impl Pipeline {
    /// Runs (or reuses) extraction and fixes the run directory.
    pub fn prepare(cfg: ExperimentConfig) -> Result<Self> {
        seed::clear_registry();
        let start = Instant::now();
        let features = extract(&cfg)?;
        let kind = cfg.experiment.model;
        let run_key = Hasher::default()
            .part(features.key.as_bytes())
            .json(&cfg.encoder_config(features.task.vocab.clone()))
            .json(&cfg.train_config())
            .json(&(kind == ModelKind::AutoenCode).then(|| (&cfg.autoencode_pretrain, cfg.pretrain_config())))
            .hex();
        let dir = run_dir(&cfg, &run_key);
        let inputs = features.views.iter().map(|v| EncoderInput::from_views(kind, v)).collect();
        let stages = vec![StageRecord {
            stage: Stage::Extract,
            key: features.key.clone(),
            seconds: start.elapsed().as_secs_f64(),
            cached: features.cached,
        }];
        let mut artifacts = BTreeMap::new();
        artifacts.insert("features".to_string(), features.dir.display().to_string());
        Ok(Pipeline {
            cfg,
            features,
            dir,
            run_key,
            inputs,
            model: None,
            stages,
            artifacts,
            metrics: None,
        })
    }

    fn stage_key(&self, stage: Stage) -> String {
        let h = Hasher::default().part(self.run_key.as_bytes()).part(stage.name().as_bytes());
        match stage {
            Stage::Evaluate => h.json(&self.cfg.evaluation),
            Stage::Attribute => h.json(&self.cfg.attribution),
            Stage::Report => h.json(&self.cfg.attribution),
            _ => h,
        }
        .hex()
    }

    fn marker_path(&self, stage: Stage) -> PathBuf {
        self.dir.join("stages").join(format!("{}.json", stage.name()))
    }

    /// Outputs of an earlier completed stage with the same key.
    fn cached(&self, stage: Stage, key: &str) -> Option<Vec<(String, PathBuf)>> {
        let m: Marker = read_json(stage, &self.marker_path(stage)).ok()?;
        let outputs: Vec<(String, PathBuf)> = m.outputs.into_iter().map(|(n, p)| (n, self.dir.join(p))).collect();
        (m.key == key && outputs.iter().all(|(_, p)| p.exists())).then_some(outputs)
    }

    fn record(&mut self, stage: Stage, key: String, start: Instant, outputs: Vec<(String, PathBuf)>, cached: bool) -> Result<()> {
        let rel: BTreeMap<String, String> = outputs.iter().map(|(n, p)| (n.clone(), relative(&self.dir, p))).collect();
        self.artifacts.extend(rel.clone());
        if !cached {
            write_json(stage, &self.marker_path(stage), &Marker { key: key.clone(), outputs: rel })?;
        }
        self.stages.push(StageRecord {
            stage,
            key,
            seconds: start.elapsed().as_secs_f64(),
            cached,
        });
        Ok(())
    }

    pub fn train(&mut self) -> Result<()> {
        const ST: Stage = Stage::Train;
        let start = Instant::now();
        let key = self.stage_key(ST);
        let ckpt = self.dir.join(CHECKPOINT_DIR);
        let log_path = self.dir.join("train_log.jsonl");
        let data = &self.features.task;
        if let Some(outputs) = self.cached(ST, &key) {
            info!("reusing checkpoint in {}", ckpt.display());
            self.model = Some(TaskModel::load(&ckpt, data).stage(ST)?);
            return self.record(ST, key, start, outputs, true);
        }
        let mut encoder = Encoder::new(self.cfg.encoder_config(data.vocab.clone())).stage(ST)?;
        let mut extra = Vec::new();
        if encoder.kind() == ModelKind::AutoenCode && self.cfg.autoencode_pretrain.enabled {
            let train: Vec<EncoderInput> = pretrain_programs(data).into_iter().map(|i| self.inputs[i].clone()).collect();
            let log = pretrain_autoencode(&mut encoder, &train, &self.cfg.pretrain_config()).stage(ST)?;
            let p = self.dir.join("pretrain_log.json");
            write_json(ST, &p, &log)?;
            extra.push(("pretrain_log".to_string(), p));
        }
        let model = TaskModel::new(encoder, data).stage(ST)?;
        info!(
            "training {} on {} ({} encoder parameters)",
            self.cfg.experiment.model,
            data.task.name(),
            model.encoder().count_parameters()
        );
        let log = model.train(&self.inputs, data, &self.cfg.train_config()).stage(ST)?;
        write_lines(ST, &log_path, &log.entries)?;
        // Saved into a scratch directory and renamed, so a checkpoint is
        // either whole or absent.
        let tmp = self.dir.join("checkpoint.tmp");
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp).map_err(|e| io_err(ST, &tmp, e))?;
        }
        model.save(&tmp).stage(ST)?;
        if ckpt.exists() {
            std::fs::remove_dir_all(&ckpt).map_err(|e| io_err(ST, &ckpt, e))?;
        }
        std::fs::rename(&tmp, &ckpt).map_err(|e| io_err(ST, &ckpt, e))?;
        self.model = Some(model);
        let mut outputs = named(&[("checkpoint", ckpt), ("train_log", log_path)]);
        outputs.extend(extra);
        self.record(ST, key, start, outputs, false)
    }

    fn model(&mut self, stage: Stage) -> Result<&TaskModel> {
        if self.model.is_none() {
            self.train()?;
        }
        self.model
            .as_ref()
            .ok_or_else(|| HarnessError::invalid(stage, "no trained model"))
    }

    pub fn evaluate(&mut self) -> Result<()> {
        const ST: Stage = Stage::Evaluate;
        let start = Instant::now();
        let key = self.stage_key(ST);
        let json = self.dir.join("metrics.json");
        let csv = self.dir.join("metrics.csv");
        let emb = self.dir.join("embeddings.jsonl");
        let outputs = named(&[("metrics", json.clone()), ("metrics_csv", csv.clone()), ("embeddings", emb.clone())]);
        if self.cached(ST, &key).is_some() {
            self.metrics = Some(read_json(ST, &json)?);
            return self.record(ST, key, start, outputs, true);
        }
        self.model(ST)?;
        let model = self.model.as_ref().ok_or_else(|| HarnessError::invalid(ST, "no trained model"))?;
        let data = &self.features.task;
        let report = model.evaluate(&self.inputs, data, &self.cfg).stage(ST)?;
        info!("{} {}: {:.4}", self.cfg.experiment.model, data.task.name(), report.headline());
        write_json(ST, &json, &report)?;
        let (header, row) = report.csv();
        write_atomic(ST, &csv, format!("{}\n{}\n", header.join(","), row.join(",")).as_bytes())?;

        let test = test_programs(data);
        let ids: Vec<&str> = test.iter().map(|&i| self.features.programs[i].id.as_str()).collect();
        let inputs: Vec<&EncoderInput> = test.iter().map(|&i| &self.inputs[i]).collect();
        let vectors = model
            .encoder()
            .program_embeddings(&ids, &inputs, self.cfg.evaluation.batch)
            .stage(ST)?;
        write_lines(ST, &emb, &vectors)?;
        self.metrics = Some(report);
        self.record(ST, key, start, outputs, false)
    }

    /// Attributes the first configured number of test items. Classification
    /// and search explain the program; clone detection explains the second
    /// program of a pair against the first.
    pub fn attribute(&mut self) -> Result<()> {
        const ST: Stage = Stage::Attribute;
        let start = Instant::now();
        let key = self.stage_key(ST);
        let summary = self.dir.join("attributions").join("summary.json");
        if let Some(outputs) = self.cached(ST, &key) {
            return self.record(ST, key, start, outputs, true);
        }
        self.model(ST)?;
        let model = self.model.as_ref().ok_or_else(|| HarnessError::invalid(ST, "no trained model"))?;
        let data = &self.features.task;
        let a = &self.cfg.attribution;
        let encoder = model.encoder();
        let mut records = Vec::new();
        for &item in data.split.test.iter().take(a.programs) {
            let (program, ig) = match model {
                TaskModel::Classification(m) => {
                    let input = &self.inputs[item];
                    let target = match a.classification_target {
                        ClassificationTarget::LogitSum => Target::LogitSum(&m.head),
                        ClassificationTarget::Predicted => {
                            let class = m.predict(&[input], 1).stage(ST)?[0];
                            Target::Logit(&m.head, class)
                        }
                    };
                    (item, attribute(encoder, &target, input, &a.ig).stage(ST)?)
                }
                TaskModel::Clone(m) => {
                    let (first, second, _) = data.clone_pairs[item];
                    let reference = vector(encoder, &self.inputs[first]).stage(ST)?;
                    let target = Target::Clone { head: &m.head, reference };
                    (second, attribute(encoder, &target, &self.inputs[second], &a.ig).stage(ST)?)
                }
                TaskModel::Search(m) => {
                    let q = &data.queries[item];
                    let query = m.query.encode(&[q.tokens.as_slice()]).and_then(|t| Ok(t.squeeze(0)?.detach())).stage(ST)?;
                    (q.program, attribute(encoder, &Target::Search { query }, &self.inputs[q.program], &a.ig).stage(ST)?)
                }
            };
            records.push(self.write_map(program, &ig, records.len())?);
        }
        write_json(ST, &summary, &records)?;
        self.record(ST, key, start, named(&[("attributions", summary)]), false)
    }

    fn write_map(&self, program: usize, ig: &IgResult, n: usize) -> Result<AttributionRecord> {
        const ST: Stage = Stage::Attribute;
        let ast = self.features.ast(program)?;
        let id = &self.features.programs[program].id;
        let map = AttributionMap::new(
            id,
            self.cfg.experiment.model,
            self.cfg.experiment.task,
            &ast,
            &self.inputs[program],
            ig,
        )
        .stage(ST)?;
        if map.residual > self.cfg.attribution.ig.tolerance {
            warn!("{id}: completeness residual {:.3e} after {} steps", map.residual, map.steps);
        }
        let file = format!("{n:04}-{}.json", file_stem(id));
        let path = self.dir.join("attributions").join(&file);
        write_json(ST, &path, &map)?;
        Ok(AttributionRecord {
            program_id: id.clone(),
            program,
            file,
            delta: map.delta,
            steps: map.steps,
            residual: map.residual,
        })
    }

    /// Highlighted source pages and the node-type heatmap of this run.
    pub fn report(&mut self) -> Result<()> {
        const ST: Stage = Stage::Report;
        let start = Instant::now();
        let key = self.stage_key(ST);
        let dir = self.dir.join("report");
        let csv = dir.join("heatmap.csv");
        let svg = dir.join("heatmap.svg");
        if let Some(outputs) = self.cached(ST, &key) {
            return self.record(ST, key, start, outputs, true);
        }
        let maps = load_maps(&self.dir)?;
        if maps.is_empty() {
            return Err(HarnessError::invalid(ST, "no attribution maps to report on"));
        }
        let a = &self.cfg.attribution;
        for (record, map) in &maps {
            let ast = self.features.ast(record.program).map_err(|e| restage(e, ST))?;
            let text = &self.features.programs[record.program].text;
            let html = render_html(text, &ast, &band_tokens(map, a.fraction, a.bands), &record.program_id);
            let page = dir.join("html").join(record.file.replace(".json", ".html"));
            write_atomic(ST, &page, html.as_bytes())?;
        }
        let refs: Vec<&AttributionMap> = maps.iter().map(|(_, m)| m).collect();
        let heat = aggregate_by_node_type(&refs).stage(ST)?;
        write_atomic(ST, &csv, heat.to_csv().as_bytes())?;
        let title = format!("{} / {}", self.cfg.experiment.model, self.cfg.experiment.task.name());
        write_atomic(ST, &svg, heat.to_svg(&title).as_bytes())?;
        self.record(ST, key, start, named(&[("heatmap_csv", csv), ("heatmap_svg", svg), ("html", dir.join("html"))]), false)
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self) -> Result<RunManifest> {
        let uses = seed::registry();
        let seeds = SeedAudit {
            derivations: uses.len(),
            untraced: seed::untraced(&uses, self.cfg.experiment.seed).len(),
        };
        let model = self.model.as_ref();
        let parameters = match model {
            Some(m) => m.encoder().count_parameters(),
            None => Encoder::new(self.cfg.encoder_config(self.features.task.vocab.clone()))
                .stage(Stage::Report)?
                .count_parameters(),
        };
        let manifest = RunManifest {
            task: self.cfg.experiment.task,
            model: self.cfg.experiment.model,
            seed: self.cfg.experiment.seed,
            features_key: self.features.key.clone(),
            run_key: self.run_key.clone(),
            parameters,
            head_parameters: model.map_or(0, TaskModel::head_parameters),
            programs: self.features.programs.len(),
            excluded_programs: self.features.task.excluded,
            stages: self.stages,
            metrics: self.metrics,
            artifacts: self.artifacts,
            seeds,
            config: self.cfg,
        };
        write_json(Stage::Report, &self.dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

fn named(outputs: &[(&str, PathBuf)]) -> Vec<(String, PathBuf)> {
    outputs.iter().map(|(n, p)| (n.to_string(), p.clone())).collect()
}

/// Attribution maps listed in a run's summary, in order.
pub fn load_maps(run_dir: &Path) -> Result<Vec<(AttributionRecord, AttributionMap)>> {
    const ST: Stage = Stage::Report;
    let dir = run_dir.join("attributions");
    let records: Vec<AttributionRecord> = read_json(ST, &dir.join("summary.json"))?;
    records
        .into_iter()
        .map(|r| {
            let map = read_json(ST, &dir.join(&r.file))?;
            Ok((r, map))
        })
        .collect()
}

fn vector(encoder: &Encoder, input: &EncoderInput) -> codeprobe::Result<candle_core::Tensor> {
    Ok(encoder.encode(&[input])?.squeeze(0)?.detach())
}

/// Programs the autoencoder is pretrained on: those of the training split.
fn pretrain_programs(data: &TaskData) -> Vec<usize> {
    let mut out = items_programs(data, &data.split.train);
    out.sort_unstable();
    out.dedup();
    out
}

/// Distinct programs of the test split, in first-use order.
fn test_programs(data: &TaskData) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    items_programs(data, &data.split.test)
        .into_iter()
        .filter(|p| seen.insert(*p))
        .collect()
}

fn items_programs(data: &TaskData, items: &[usize]) -> Vec<usize> {
    match data.task {
        TaskKind::Classification => items.to_vec(),
        TaskKind::Clone => items
            .iter()
            .flat_map(|&i| [data.clone_pairs[i].0, data.clone_pairs[i].1])
            .collect(),
        TaskKind::Search => items.iter().map(|&i| data.queries[i].program).collect(),
    }
}

/// File-name-safe form of a program id.
fn file_stem(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .take(80)
        .collect();
    if s.is_empty() { "program".into() } else { s }
}

fn io_err(stage: Stage, path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        stage,
        path: path.to_path_buf(),
        source,
    }
}

fn restage(e: HarnessError, stage: Stage) -> HarnessError {
    match e {
        HarnessError::Core { source, .. } => HarnessError::Core { stage, source },
        other => other,
    }
}

/// Which stages a verb runs; earlier stages are reused when cached.
pub fn run_until(cfg: ExperimentConfig, last: Stage, force_attribution: bool) -> Result<RunManifest> {
    let attribution = force_attribution || cfg.attribution.enabled;
    let mut p = Pipeline::prepare(cfg)?;
    if last != Stage::Extract {
        p.train()?;
    }
    if matches!(last, Stage::Evaluate | Stage::Attribute | Stage::Report) {
        p.evaluate()?;
    }
    if attribution && matches!(last, Stage::Attribute | Stage::Report) {
        p.attribute()?;
        if last == Stage::Report {
            p.report()?;
        }
    }
    p.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Split;

    #[test]
    fn file_stems_are_path_safe() {
        assert_eq!(file_stem("12/a b.txt"), "12_a_b_txt");
        assert_eq!(file_stem(""), "program");
    }

    #[test]
    fn split_programs_follow_the_task() {
        let data = TaskData {
            task: TaskKind::Clone,
            vocab: Default::default(),
            classes: 0,
            labels: vec![],
            class_names: vec![],
            clone_pairs: vec![(0, 1, true), (2, 1, false), (3, 0, false)],
            queries: vec![],
            split: Split {
                train: vec![2],
                valid: vec![],
                test: vec![0, 1],
            },
            excluded: 0,
            skipped: 0,
        };
        assert_eq!(test_programs(&data), [0, 1, 2]);
        assert_eq!(pretrain_programs(&data), [0, 3]);
    }
}
