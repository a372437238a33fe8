use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::GzDecoder;
use log::warn;
use rand::seq::index::sample;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClonePair, Lang, QueryCodePair, SourceProgram};
use crate::error::{Error, Result};
use crate::seed;

/// Size of the BigCloneBench method selection used for pair generation.
pub const BCB_SUBSET_SIZE: usize = 9_134;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Poj104,
    BigCloneBench,
    CodeSearchNet,
    /// Canonical JSON Lines layout (`programs.jsonl`, optional `pairs.jsonl`).
    Jsonl,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "poj104" | "poj" => Ok(DatasetKind::Poj104),
            "bigclonebench" | "bcb" => Ok(DatasetKind::BigCloneBench),
            "codesearchnet" | "csn" => Ok(DatasetKind::CodeSearchNet),
            "jsonl" => Ok(DatasetKind::Jsonl),
            other => Err(Error::arg(format!("unknown dataset kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Pairs {
    #[default]
    None,
    Clone(Vec<ClonePair>),
    Query(Vec<QueryCodePair>),
}

impl Pairs {
    pub fn len(&self) -> usize {
        match self {
            Pairs::None => 0,
            Pairs::Clone(p) => p.len(),
            Pairs::Query(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Pair indices per published partition, for layouts that ship one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairPartition {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub programs: Vec<SourceProgram>,
    pub pairs: Pairs,
    pub pair_partition: Option<PairPartition>,
    /// Records dropped during ingestion (empty text, malformed line, dangling pair id).
    pub skipped: usize,
}

impl Dataset {
    pub fn program_index(&self) -> std::collections::HashMap<&str, usize> {
        self.programs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect()
    }
}

pub fn load_dataset(kind: DatasetKind, root: &Path) -> Result<Dataset> {
    if !root.exists() {
        return Err(Error::ingest(root, "dataset root does not exist"));
    }
    let ds = match kind {
        DatasetKind::Poj104 => load_poj(root)?,
        DatasetKind::BigCloneBench => load_bcb(root)?,
        DatasetKind::CodeSearchNet => load_csn(root)?,
        DatasetKind::Jsonl => load_canonical(root)?,
    };
    if ds.programs.is_empty() {
        return Err(Error::ingest(root, "no programs found"));
    }
    Ok(ds)
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    // POJ-104 submissions contain GBK comments; keep the code readable rather than dropping the file.
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn load_poj(root: &Path) -> Result<Dataset> {
    let base = if root.join("ProgramData").is_dir() {
        root.join("ProgramData")
    } else {
        root.to_path_buf()
    };
    let mut classes: Vec<PathBuf> = sorted_entries(&base)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    if classes.is_empty() {
        return Err(Error::ingest(&base, "no class folders"));
    }
    let numeric = classes.iter().all(|p| {
        p.file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.parse::<u64>().is_ok())
    });
    if numeric {
        classes.sort_by_key(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.parse::<u64>().ok())
                .unwrap_or(0)
        });
    }

    let mut programs = Vec::new();
    let mut skipped = 0;
    for (label, dir) in classes.iter().enumerate() {
        let class_name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        for file in sorted_entries(dir)?.into_iter().filter(|p| p.is_file()) {
            let text = read_text(&file)?;
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            match SourceProgram::new(format!("{class_name}/{stem}"), Lang::C, text) {
                Ok(p) => programs.push(p.with_label(label as u32)),
                Err(_) => {
                    warn!("skipping empty program {}", file.display());
                    skipped += 1;
                }
            }
        }
    }
    Ok(Dataset {
        kind: DatasetKind::Poj104,
        programs,
        pairs: Pairs::None,
        pair_partition: None,
        skipped,
    })
}

fn lines(path: &Path) -> Result<Box<dyn Iterator<Item = std::io::Result<String>>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader).lines()))
}

fn json_str(v: &Value, key: &str) -> Option<String> {
    match v.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// BigCloneBench as exported for CodeXGLUE: `data.jsonl` with `{func, idx}`
/// records plus `train.txt` / `valid.txt` / `test.txt` pair lists
/// (`idx1<TAB>idx2<TAB>label`).
fn load_bcb(root: &Path) -> Result<Dataset> {
    let data = root.join("data.jsonl");
    if !data.is_file() {
        return Err(Error::ingest(&data, "missing BigCloneBench function table"));
    }
    let mut programs = Vec::new();
    let mut skipped = 0;
    for (n, line) in lines(&data)?.enumerate() {
        let line = line.map_err(|e| Error::io(&data, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str::<Value>(&line).ok().and_then(|v| {
            let id = json_str(&v, "idx")?;
            let func = json_str(&v, "func")?;
            SourceProgram::new(id, Lang::Java, func).ok()
        });
        match record {
            Some(p) => programs.push(p),
            None => {
                warn!("{}:{}: unusable record skipped", data.display(), n + 1);
                skipped += 1;
            }
        }
    }

    let known: HashSet<String> = programs.iter().map(|p| p.id.clone()).collect();
    let mut pairs = Vec::new();
    let mut partition = PairPartition::default();
    let mut any_split = false;
    for (name, slot) in [("train", 0usize), ("valid", 1), ("test", 2)] {
        let path = root.join(format!("{name}.txt"));
        if !path.is_file() {
            continue;
        }
        any_split = true;
        for (n, line) in lines(&path)?.enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.is_empty() {
                continue;
            }
            let parsed = (cols.len() == 3)
                .then(|| (cols[0], cols[1], cols[2].parse::<i64>().ok()))
                .filter(|(a, b, l)| l.is_some() && a != b && known.contains(*a) && known.contains(*b));
            match parsed {
                Some((a, b, l)) => {
                    let idx = pairs.len();
                    pairs.push(ClonePair {
                        id_a: a.to_string(),
                        id_b: b.to_string(),
                        is_clone: l.unwrap_or(0) != 0,
                    });
                    match slot {
                        0 => partition.train.push(idx),
                        1 => partition.valid.push(idx),
                        _ => partition.test.push(idx),
                    }
                }
                None => {
                    warn!("{}:{}: unusable pair skipped", path.display(), n + 1);
                    skipped += 1;
                }
            }
        }
    }
    Ok(Dataset {
        kind: DatasetKind::BigCloneBench,
        programs,
        pairs: if any_split { Pairs::Clone(pairs) } else { Pairs::None },
        pair_partition: any_split.then_some(partition),
        skipped,
    })
}

fn collect_jsonl_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for p in sorted_entries(dir)? {
        if p.is_dir() {
            collect_jsonl_files(&p, out)?;
        } else {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.ends_with(".jsonl") || name.ends_with(".jsonl.gz") {
                out.push(p);
            }
        }
    }
    Ok(())
}

/// CodeSearchNet JSON Lines (`code`, `docstring` / `docstring_tokens`), with
/// the partition taken from a `train` / `valid` / `test` path component.
fn load_csn(root: &Path) -> Result<Dataset> {
    let mut files = Vec::new();
    collect_jsonl_files(root, &mut files)?;
    if files.is_empty() {
        return Err(Error::ingest(root, "no .jsonl files"));
    }
    let mut programs = Vec::new();
    let mut pairs = Vec::new();
    let mut partition = PairPartition::default();
    let mut skipped = 0;
    for file in &files {
        let rel = file.strip_prefix(root).unwrap_or(file).to_string_lossy().to_string();
        let slot = if rel.contains("test") {
            2
        } else if rel.contains("valid") {
            1
        } else {
            0
        };
        let stem = file
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .trim_end_matches(".gz")
            .trim_end_matches(".jsonl")
            .to_string();
        let part = ["train", "valid", "test"][slot];
        for (n, line) in lines(file)?.enumerate() {
            let line = line.map_err(|e| Error::io(file, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str::<Value>(&line).ok().and_then(|v| {
                let code = json_str(&v, "code").or_else(|| json_str(&v, "original_string"))?;
                let doc = json_str(&v, "docstring")
                    .filter(|d| !d.trim().is_empty())
                    .or_else(|| {
                        let toks = v.get("docstring_tokens")?.as_array()?;
                        let words: Vec<&str> = toks.iter().filter_map(|t| t.as_str()).collect();
                        (!words.is_empty()).then(|| words.join(" "))
                    })?;
                let doc = doc.trim().to_string();
                if doc.is_empty() {
                    return None;
                }
                SourceProgram::new(format!("{part}/{stem}/{n}"), Lang::Java, code)
                    .ok()
                    .map(|p| p.with_doc(doc))
            });
            match record {
                Some(p) => {
                    let idx = pairs.len();
                    pairs.push(QueryCodePair {
                        query: p.doc.clone().unwrap_or_default(),
                        code_id: p.id.clone(),
                    });
                    match slot {
                        0 => partition.train.push(idx),
                        1 => partition.valid.push(idx),
                        _ => partition.test.push(idx),
                    }
                    programs.push(p);
                }
                None => {
                    warn!("{}:{}: unusable record skipped", file.display(), n + 1);
                    skipped += 1;
                }
            }
        }
    }
    Ok(Dataset {
        kind: DatasetKind::CodeSearchNet,
        programs,
        pairs: Pairs::Query(pairs),
        pair_partition: Some(partition),
        skipped,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PairRecord {
    Clone(ClonePair),
    Query(QueryCodePair),
}

fn load_canonical(root: &Path) -> Result<Dataset> {
    let programs_path = if root.is_file() {
        root.to_path_buf()
    } else {
        root.join("programs.jsonl")
    };
    if !programs_path.is_file() {
        return Err(Error::ingest(&programs_path, "missing programs.jsonl"));
    }
    let (programs, mut skipped) = read_programs_jsonl(&programs_path)?;
    let known: HashSet<&str> = programs.iter().map(|p| p.id.as_str()).collect();

    let pairs_path = root.join("pairs.jsonl");
    let mut pairs = Pairs::None;
    if root.is_dir() && pairs_path.is_file() {
        let mut clones = Vec::new();
        let mut queries = Vec::new();
        for (n, line) in lines(&pairs_path)?.enumerate() {
            let line = line.map_err(|e| Error::io(&pairs_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<PairRecord>(&line) {
                Ok(PairRecord::Clone(c))
                    if c.id_a != c.id_b
                        && known.contains(c.id_a.as_str())
                        && known.contains(c.id_b.as_str()) =>
                {
                    clones.push(c)
                }
                Ok(PairRecord::Query(q))
                    if !q.query.trim().is_empty() && known.contains(q.code_id.as_str()) =>
                {
                    queries.push(q)
                }
                _ => {
                    warn!("{}:{}: unusable pair skipped", pairs_path.display(), n + 1);
                    skipped += 1;
                }
            }
        }
        pairs = match (clones.is_empty(), queries.is_empty()) {
            (true, true) => Pairs::None,
            (false, true) => Pairs::Clone(clones),
            (true, false) => Pairs::Query(queries),
            (false, false) => {
                return Err(Error::ingest(&pairs_path, "mixes clone pairs and query pairs"))
            }
        };
    }
    Ok(Dataset {
        kind: DatasetKind::Jsonl,
        programs,
        pairs,
        pair_partition: None,
        skipped,
    })
}

/// Reads canonical program records, skipping (and counting) malformed lines.
pub fn read_programs_jsonl(path: &Path) -> Result<(Vec<SourceProgram>, usize)> {
    let mut programs = Vec::new();
    let mut skipped = 0;
    let mut seen = HashSet::new();
    for (n, line) in lines(path)?.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SourceProgram>(&line) {
            Ok(p) if !p.text.trim().is_empty() && seen.insert(p.id.clone()) => programs.push(p),
            _ => {
                warn!("{}:{}: unusable program record skipped", path.display(), n + 1);
                skipped += 1;
            }
        }
    }
    Ok((programs, skipped))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in lines(path)?.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            Error::ingest(path, format!("line {}: {e}", n + 1))
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Restricts a dataset to an explicit id selection or, when none is given, to
/// `n` programs drawn without replacement under `seed`. Pairs referencing a
/// dropped program are removed.
pub fn select_subset(ds: &Dataset, ids: Option<&[String]>, n: usize, seed: u64) -> Result<Dataset> {
    let keep: HashSet<&str> = match ids {
        Some(ids) => ids.iter().map(String::as_str).collect(),
        None => {
            if n > ds.programs.len() {
                return Err(Error::arg(format!(
                    "subset of {n} requested from {} programs",
                    ds.programs.len()
                )));
            }
            let mut rng = seed::rng(seed, "corpus.subset");
            sample(&mut rng, ds.programs.len(), n)
                .into_iter()
                .map(|i| ds.programs[i].id.as_str())
                .collect()
        }
    };
    let programs: Vec<SourceProgram> = ds
        .programs
        .iter()
        .filter(|p| keep.contains(p.id.as_str()))
        .cloned()
        .collect();
    let (pairs, partition) = match &ds.pairs {
        Pairs::Clone(pairs) => {
            let mut remap = vec![None; pairs.len()];
            let mut kept = Vec::new();
            for (i, p) in pairs.iter().enumerate() {
                if keep.contains(p.id_a.as_str()) && keep.contains(p.id_b.as_str()) {
                    remap[i] = Some(kept.len());
                    kept.push(p.clone());
                }
            }
            let partition = ds.pair_partition.as_ref().map(|part| {
                let f = |v: &[usize]| v.iter().filter_map(|&i| remap[i]).collect::<Vec<_>>();
                PairPartition {
                    train: f(&part.train),
                    valid: f(&part.valid),
                    test: f(&part.test),
                }
            });
            (Pairs::Clone(kept), partition)
        }
        Pairs::Query(pairs) => {
            let mut remap = vec![None; pairs.len()];
            let mut kept = Vec::new();
            for (i, p) in pairs.iter().enumerate() {
                if keep.contains(p.code_id.as_str()) {
                    remap[i] = Some(kept.len());
                    kept.push(p.clone());
                }
            }
            let partition = ds.pair_partition.as_ref().map(|part| {
                let f = |v: &[usize]| v.iter().filter_map(|&i| remap[i]).collect::<Vec<_>>();
                PairPartition {
                    train: f(&part.train),
                    valid: f(&part.valid),
                    test: f(&part.test),
                }
            });
            (Pairs::Query(kept), partition)
        }
        Pairs::None => (Pairs::None, None),
    };
    Ok(Dataset {
        kind: ds.kind,
        programs,
        pairs,
        pair_partition: partition,
        skipped: ds.skipped,
    })
}

/// Caps a clone-pair pool at `max_pairs`, optionally at a fixed positive
/// fraction. Sampling is without replacement under `seed`; the surviving pairs
/// keep their original relative order.
pub fn cap_pairs(
    pairs: &[ClonePair],
    max_pairs: usize,
    positive_fraction: Option<f64>,
    seed: u64,
) -> Result<Vec<ClonePair>> {
    let mut rng = seed::rng(seed, "corpus.cap_pairs");
    let mut chosen: Vec<usize> = match positive_fraction {
        None => {
            if pairs.len() <= max_pairs {
                return Ok(pairs.to_vec());
            }
            sample(&mut rng, pairs.len(), max_pairs).into_vec()
        }
        Some(frac) => {
            if !(0.0..=1.0).contains(&frac) {
                return Err(Error::arg(format!("positive fraction {frac} outside [0, 1]")));
            }
            let pos: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].is_clone).collect();
            let neg: Vec<usize> = (0..pairs.len()).filter(|&i| !pairs[i].is_clone).collect();
            let want_pos = ((max_pairs as f64) * frac).round() as usize;
            let n_pos = want_pos.min(pos.len());
            let n_neg = (max_pairs - want_pos).min(neg.len());
            let mut out: Vec<usize> = sample(&mut rng, pos.len(), n_pos)
                .into_iter()
                .map(|i| pos[i])
                .collect();
            out.extend(sample(&mut rng, neg.len(), n_neg).into_iter().map(|i| neg[i]));
            out
        }
    };
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pairs[i].clone()).collect())
}
