use std::collections::HashMap;
use std::fs;
use std::path::Path;

use candle_core::Tensor;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ModelKind;
use crate::corpus::write_jsonl;
use crate::error::{Error, Result};
use crate::nn::{ParamInfo, ParamStore};

pub const CONFIG_FILE: &str = "config.json";
pub const WEIGHTS_FILE: &str = "weights.safetensors";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `config.json`, `weights.safetensors` (every store's parameters,
/// names prefixed `"{part}/"`) and `manifest.json` (name, shape, dtype and
/// trainability of every tensor) into `dir`.
pub fn save_checkpoint<C: Serialize>(dir: &Path, config: &C, parts: &[(&str, &ParamStore)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = dir.join(CONFIG_FILE);
    fs::write(&cfg, serde_json::to_vec_pretty(config)?).map_err(|e| Error::io(&cfg, e))?;
    let mut map: HashMap<String, Tensor> = HashMap::new();
    let mut manifest: Vec<ParamInfo> = Vec::new();
    for (part, store) in parts {
        let prefix = format!("{part}/");
        map.extend(store.tensors(&prefix));
        manifest.extend(store.manifest().into_iter().map(|mut p| {
            p.name = format!("{prefix}{}", p.name);
            p
        }));
    }
    candle_core::safetensors::save(&map, dir.join(WEIGHTS_FILE))?;
    let man = dir.join(MANIFEST_FILE);
    fs::write(&man, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&man, e))?;
    Ok(())
}

/// Reads the config back and returns the raw weight map; callers rebuild
/// their models from the config and fill them with
/// [`ParamStore::load_map`].
pub fn load_checkpoint<C: DeserializeOwned>(dir: &Path) -> Result<(C, HashMap<String, Tensor>)> {
    let cfg = dir.join(CONFIG_FILE);
    let text = fs::read(&cfg).map_err(|e| Error::io(&cfg, e))?;
    let config = serde_json::from_slice(&text).map_err(|e| Error::ingest(&cfg, e.to_string()))?;
    let weights = dir.join(WEIGHTS_FILE);
    if !weights.is_file() {
        return Err(Error::ingest(&weights, "missing weight file"));
    }
    let map = candle_core::safetensors::load(&weights, &candle_core::Device::Cpu)?;
    Ok((config, map))
}

/// One program vector; `fallback` marks programs encoded by the learned
/// empty-input vector because their view had no content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramEmbedding {
    pub id: String,
    pub model: ModelKind,
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

/// Writes embeddings as JSON Lines `{id, model, vector}`.
pub fn export_embeddings(path: &Path, embeddings: &[ProgramEmbedding]) -> Result<()> {
    write_jsonl(path, embeddings)
}
