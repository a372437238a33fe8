use std::collections::HashMap;
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    Uniform(f64),
    /// Uniform in `±1/sqrt(fan_in)`.
    FanIn(usize),
    Normal(f64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub trainable: bool,
}

struct Entry {
    name: String,
    var: Var,
    trainable: bool,
}

/// Named parameters, each initialized from its own stream derived from the
/// store seed and the parameter name.
pub struct ParamStore {
    precision: Precision,
    device: Device,
    seed: u64,
    entries: Vec<Entry>,
}

impl ParamStore {
    pub fn new(precision: Precision, seed: u64) -> Self {
        ParamStore {
            precision,
            device: Device::Cpu,
            seed,
            entries: Vec::new(),
        }
    }

    pub fn dtype(&self) -> DType {
        self.precision.dtype()
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    fn values(&self, name: &str, n: usize, init: Init) -> Vec<f64> {
        let mut rng = seed::rng(self.seed, &format!("params/{name}"));
        match init {
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::Uniform(a) => (0..n).map(|_| rng.random_range(-a..=a)).collect(),
            Init::FanIn(fan_in) => {
                let a = 1.0 / (fan_in.max(1) as f64).sqrt();
                (0..n).map(|_| rng.random_range(-a..=a)).collect()
            }
            Init::Normal(std) => {
                let dist = Normal::new(0.0, std).unwrap_or_else(|_| Normal::new(0.0, 1.0).unwrap());
                (0..n).map(|_| dist.sample(&mut rng)).collect()
            }
        }
    }

    fn insert(&mut self, name: &str, shape: &[usize], init: Init, trainable: bool) -> Result<Tensor> {
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::arg(format!("duplicate parameter `{name}`")));
        }
        let n = shape.iter().product();
        let t = Tensor::from_vec(self.values(name, n, init), shape, &self.device)?.to_dtype(self.dtype())?;
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        self.entries.push(Entry {
            name: name.to_string(),
            var,
            trainable,
        });
        Ok(out)
    }

    pub fn add(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Tensor> {
        self.insert(name, shape, init, true)
    }

    /// A parameter excluded from training and from the trainable count.
    pub fn add_frozen(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Tensor> {
        self.insert(name, shape, init, false)
    }

    pub fn trainable_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.trainable)
            .map(|e| e.var.elem_count())
            .sum()
    }

    pub fn trainable(&self) -> Vec<&Var> {
        self.entries.iter().filter(|e| e.trainable).map(|e| &e.var).collect()
    }

    pub fn get(&self, name: &str) -> Option<Tensor> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.var.as_tensor().clone())
    }

    /// Overwrites a parameter value in place (shape must match).
    pub fn set(&self, name: &str, value: &Tensor) -> Result<()> {
        let e = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::arg(format!("unknown parameter `{name}`")))?;
        if e.var.dims() != value.dims() {
            return Err(Error::arg(format!(
                "parameter `{name}` has shape {:?}, got {:?}",
                e.var.dims(),
                value.dims()
            )));
        }
        e.var.set(&value.to_dtype(self.dtype())?)?;
        Ok(())
    }

    pub fn manifest(&self) -> Vec<ParamInfo> {
        self.entries
            .iter()
            .map(|e| ParamInfo {
                name: e.name.clone(),
                shape: e.var.dims().to_vec(),
                dtype: format!("{:?}", self.dtype()).to_lowercase(),
                trainable: e.trainable,
            })
            .collect()
    }

    pub fn snapshot(&self) -> Result<Vec<Tensor>> {
        Ok(self
            .entries
            .iter()
            .map(|e| e.var.as_tensor().copy())
            .collect::<candle_core::Result<_>>()?)
    }

    pub fn restore(&self, snapshot: &[Tensor]) -> Result<()> {
        if snapshot.len() != self.entries.len() {
            return Err(Error::arg("snapshot does not match the parameter set"));
        }
        for (e, t) in self.entries.iter().zip(snapshot) {
            e.var.set(t)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map: HashMap<String, Tensor> = self.tensors("").into_iter().collect();
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }

    /// Loads every parameter by name; missing or mis-shaped entries are errors.
    pub fn load(&self, path: &Path) -> Result<()> {
        if !path.is_file() {
            return Err(Error::ingest(path, "missing weight file"));
        }
        let map = candle_core::safetensors::load(path, &self.device)?;
        self.load_map(&map, "", path)
    }

    /// Named values, each name prefixed with `prefix`.
    pub fn tensors(&self, prefix: &str) -> Vec<(String, Tensor)> {
        self.entries
            .iter()
            .map(|e| (format!("{prefix}{}", e.name), e.var.as_tensor().clone()))
            .collect()
    }

    /// Sets every parameter from `map[prefix + name]`; `origin` names the
    /// source in errors.
    pub fn load_map(&self, map: &HashMap<String, Tensor>, prefix: &str, origin: &Path) -> Result<()> {
        for e in &self.entries {
            let key = format!("{prefix}{}", e.name);
            let t = map
                .get(&key)
                .ok_or_else(|| Error::ingest(origin, format!("missing tensor `{key}`")))?;
            self.set(&e.name, t)?;
        }
        Ok(())
    }
}
