//! Dataset loading, task-specific splitting and feature extraction. Output is
//! cached under `features/<key>` and shared by every model of a task.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::PathBuf;

use codeprobe::ast::{parse_to_ast, Ast};
use codeprobe::corpus::{
    build_ojclone, cap_pairs, load_dataset, select_subset, split, ClonePair, Dataset, Pairs, QueryCodePair,
    SourceProgram,
};
use codeprobe::encoders::VocabSizes;
use codeprobe::features::{extract_views, query_tokens, ProgramViews, Vocabs};
use codeprobe::seed;
use codeprobe::tasks::TaskKind;
use log::{info, warn};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{AtPath, HarnessError, InStage, Result, Stage};
use crate::store::{read_json, read_lines, write_json, write_lines, Hasher};

pub const PROGRAMS_FILE: &str = "programs.jsonl";
pub const VIEWS_FILE: &str = "views.jsonl";
pub const TASK_FILE: &str = "task.json";

const S: Stage = Stage::Extract;

/// Item indices per part: programs (classification), clone pairs or
/// queries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub tokens: Vec<u32>,
    /// Index of the paired program.
    pub program: usize,
}

/// Everything a model needs besides the views, indexed by position in
/// `programs.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskData {
    pub task: TaskKind,
    pub vocab: VocabSizes,
    /// Classification: dense labels `0..classes`, one per program.
    pub classes: usize,
    pub labels: Vec<usize>,
    /// Original label of each dense class.
    pub class_names: Vec<u32>,
    pub clone_pairs: Vec<(usize, usize, bool)>,
    pub queries: Vec<Query>,
    pub split: Split,
    /// Programs left out because they did not parse.
    pub excluded: usize,
    /// Records the loader dropped.
    pub skipped: usize,
}

pub struct FeatureSet {
    pub dir: PathBuf,
    pub key: String,
    pub programs: Vec<SourceProgram>,
    pub views: Vec<ProgramViews>,
    pub task: TaskData,
    pub cached: bool,
}

impl FeatureSet {
    pub fn load(dir: PathBuf, key: String) -> Result<Self> {
        let task = read_json(S, &dir.join(TASK_FILE))?;
        let programs = read_lines(S, &dir.join(PROGRAMS_FILE))?;
        let views = read_lines(S, &dir.join(VIEWS_FILE))?;
        Ok(FeatureSet {
            dir,
            key,
            programs,
            views,
            task,
            cached: true,
        })
    }

    /// Parses one stored program again; views were extracted from the same
    /// AST.
    pub fn ast(&self, index: usize) -> Result<Ast> {
        let p = self
            .programs
            .get(index)
            .ok_or_else(|| HarnessError::invalid(Stage::Attribute, format!("no program {index}")))?;
        parse_to_ast(p).stage(Stage::Attribute)
    }
}

/// Loads the dataset and applies the id list, size cap and class
/// selection of the configuration.
pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.check_inputs(S)?;
    let d = &cfg.dataset;
    let seed = cfg.experiment.seed;
    let mut ds = load_dataset(d.kind, &d.root).stage(S)?;
    if !d.id_list.as_os_str().is_empty() {
        let text = fs::read_to_string(&d.id_list).at(S, &d.id_list)?;
        let ids: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
        ds = select_subset(&ds, Some(&ids), 0, seed).stage(S)?;
    }
    if cfg.experiment.task == TaskKind::Classification {
        ds.programs = restrict_classes(&ds.programs, d.classes, d.per_class, seed)?;
    }
    if d.programs > 0 && d.programs < ds.programs.len() {
        ds = select_subset(&ds, None, d.programs, seed).stage(S)?;
    }
    if ds.programs.is_empty() {
        return Err(HarnessError::invalid(S, "no programs left after selection"));
    }
    Ok(ds)
}

/// Keeps `classes` labels drawn under `seed` (0 keeps all) and at most
/// `per_class` programs of each (0 keeps all), in corpus order.
fn restrict_classes(programs: &[SourceProgram], classes: usize, per_class: usize, seed: u64) -> Result<Vec<SourceProgram>> {
    if let Some(p) = programs.iter().find(|p| p.label.is_none()) {
        return Err(HarnessError::invalid(S, format!("program {} has no label", p.id)));
    }
    let labels: Vec<u32> = programs.iter().filter_map(|p| p.label).collect::<BTreeSet<_>>().into_iter().collect();
    let keep: BTreeSet<u32> = if classes == 0 || classes >= labels.len() {
        labels.iter().copied().collect()
    } else {
        let mut rng = seed::rng(seed, "harness.classes");
        sample(&mut rng, labels.len(), classes).into_iter().map(|i| labels[i]).collect()
    };
    let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, p) in programs.iter().enumerate() {
        if let Some(l) = p.label.filter(|l| keep.contains(l)) {
            by_label.entry(l).or_default().push(i);
        }
    }
    let mut rng = seed::rng(seed, "harness.per_class");
    let mut chosen: Vec<usize> = Vec::new();
    for members in by_label.values() {
        if per_class == 0 || members.len() <= per_class {
            chosen.extend(members);
        } else {
            chosen.extend(sample(&mut rng, members.len(), per_class).into_iter().map(|i| members[i]));
        }
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| programs[i].clone()).collect())
}

/// Content key of the extraction: program text, pairs, and every setting
/// that changes the stored features.
fn feature_key(cfg: &ExperimentConfig, ds: &Dataset) -> String {
    let mut h = Hasher::default()
        .json(&cfg.experiment.task)
        .json(&cfg.experiment.seed)
        .json(&cfg.features)
        .json(&(
            cfg.dataset.split,
            cfg.dataset.max_pairs,
            cfg.dataset.positive_fraction,
            cfg.dataset.ojclone_problems,
            cfg.dataset.ojclone_pairs,
        ))
        .json(&ds.programs);
    h = match &ds.pairs {
        Pairs::None => h.part(b"none"),
        Pairs::Clone(p) => h.json(p),
        Pairs::Query(p) => h.json(p),
    };
    if let Some(part) = &ds.pair_partition {
        h = h.json(&(&part.train, &part.valid, &part.test));
    }
    h.hex()
}

/// Extracts features, or loads them if an identical extraction exists.
pub fn extract(cfg: &ExperimentConfig) -> Result<FeatureSet> {
    let ds = load_corpus(cfg)?;
    let key = feature_key(cfg, &ds);
    let dir = cfg.experiment.output.join("features").join(&key[..16]);
    if dir.join(TASK_FILE).is_file() {
        info!("features cached in {}", dir.display());
        return FeatureSet::load(dir, key);
    }
    let seed = cfg.experiment.seed;

    let mut parsed: Vec<(SourceProgram, Ast)> = Vec::with_capacity(ds.programs.len());
    let mut excluded = 0;
    for p in &ds.programs {
        match parse_to_ast(p) {
            Ok(ast) => parsed.push((p.clone(), ast)),
            Err(e) => {
                warn!("excluding {}: {e}", p.id);
                excluded += 1;
            }
        }
    }
    if parsed.is_empty() {
        return Err(HarnessError::invalid(S, "no program parsed"));
    }

    let layout = match cfg.experiment.task {
        TaskKind::Classification => classification_layout(&parsed, cfg)?,
        TaskKind::Clone => clone_layout(&ds, &parsed, cfg)?,
        TaskKind::Search => search_layout(&ds, &parsed, cfg)?,
    };
    // Only programs some item refers to are kept, in corpus order.
    let kept: Vec<usize> = layout.programs.iter().copied().collect();
    let position: HashMap<usize, usize> = kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();

    let train_asts: Vec<&Ast> = layout.train_programs.iter().map(|&i| &parsed[i].1).collect();
    let train_queries: Vec<&str> = layout.train_queries.iter().map(String::as_str).collect();
    let vocabs = Vocabs::build(&train_asts, &train_queries, &cfg.features, seed);
    let views: Vec<ProgramViews> = kept
        .iter()
        .map(|&i| extract_views(&parsed[i].1, &vocabs, &cfg.features, seed))
        .collect();
    let programs: Vec<SourceProgram> = kept.iter().map(|&i| parsed[i].0.clone()).collect();

    let subtokens = cfg.features.subtokens;
    let task = TaskData {
        task: cfg.experiment.task,
        vocab: VocabSizes::from_vocabs(&vocabs),
        classes: layout.class_names.len(),
        labels: kept.iter().filter_map(|i| layout.labels.get(*i).copied()).collect(),
        class_names: layout.class_names,
        clone_pairs: layout
            .clone_pairs
            .iter()
            .map(|&(a, b, c)| (position[&a], position[&b], c))
            .collect(),
        queries: layout
            .queries
            .into_iter()
            .map(|(text, program)| Query {
                tokens: query_tokens(&text, subtokens)
                    .iter()
                    .map(|t| vocabs.tokens.get(t) as u32)
                    .collect(),
                text,
                program: position[&program],
            })
            .collect(),
        split: match cfg.experiment.task {
            TaskKind::Classification => Split {
                train: layout.split.train.iter().map(|i| position[i]).collect(),
                valid: layout.split.valid.iter().map(|i| position[i]).collect(),
                test: layout.split.test.iter().map(|i| position[i]).collect(),
            },
            _ => layout.split,
        },
        excluded,
        skipped: ds.skipped,
    };

    write_lines(S, &dir.join(PROGRAMS_FILE), &programs)?;
    write_lines(S, &dir.join(VIEWS_FILE), &views)?;
    // Written last: its presence marks a complete extraction.
    write_json(S, &dir.join(TASK_FILE), &task)?;
    info!(
        "extracted {} programs ({excluded} excluded) into {}",
        programs.len(),
        dir.display()
    );
    Ok(FeatureSet {
        dir,
        key,
        programs,
        views,
        task,
        cached: false,
    })
}

/// Task items in terms of indices into the parsed programs.
#[derive(Default)]
struct Layout {
    programs: BTreeSet<usize>,
    /// Programs the vocabulary is built from.
    train_programs: Vec<usize>,
    train_queries: Vec<String>,
    labels: Vec<usize>,
    class_names: Vec<u32>,
    clone_pairs: Vec<(usize, usize, bool)>,
    queries: Vec<(String, usize)>,
    split: Split,
}

fn split_indices(n: usize, ratios: [u32; 3], seed: u64) -> Result<Split> {
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let s = split(&ids, ratios, seed).stage(S)?;
    let back = |v: Vec<String>| v.iter().map(|i| i.parse().unwrap_or_default()).collect();
    Ok(Split {
        train: back(s.train),
        valid: back(s.valid),
        test: back(s.test),
    })
}

fn classification_layout(parsed: &[(SourceProgram, Ast)], cfg: &ExperimentConfig) -> Result<Layout> {
    let class_names: Vec<u32> = parsed.iter().filter_map(|(p, _)| p.label).collect::<BTreeSet<_>>().into_iter().collect();
    if class_names.len() < 2 {
        return Err(HarnessError::invalid(S, "classification needs at least two labels"));
    }
    let dense: HashMap<u32, usize> = class_names.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let labels = parsed.iter().map(|(p, _)| p.label.map_or(0, |l| dense[&l])).collect();
    let split = split_indices(parsed.len(), cfg.dataset.split, cfg.experiment.seed)?;
    Ok(Layout {
        programs: (0..parsed.len()).collect(),
        train_programs: split.train.clone(),
        labels,
        class_names,
        split,
        ..Layout::default()
    })
}

/// Splits items by the dataset's published partition when it has one,
/// otherwise by the configured ratios.
fn partition(published: Option<[Vec<usize>; 3]>, n: usize, cfg: &ExperimentConfig) -> Result<Split> {
    match published {
        Some([train, valid, test]) => Ok(Split { train, valid, test }),
        None => split_indices(n, cfg.dataset.split, cfg.experiment.seed),
    }
}

fn clone_layout(ds: &Dataset, parsed: &[(SourceProgram, Ast)], cfg: &ExperimentConfig) -> Result<Layout> {
    let d = &cfg.dataset;
    let seed = cfg.experiment.seed;
    let index: HashMap<&str, usize> = parsed.iter().enumerate().map(|(i, (p, _))| (p.id.as_str(), i)).collect();
    let (pairs, parts): (Vec<ClonePair>, Option<[Vec<usize>; 3]>) = match &ds.pairs {
        Pairs::Clone(p) => {
            let part = ds.pair_partition.as_ref().map(|p| [p.train.clone(), p.valid.clone(), p.test.clone()]);
            (p.clone(), part)
        }
        Pairs::None => {
            let programs: Vec<SourceProgram> = parsed.iter().map(|(p, _)| p.clone()).collect();
            let oj = build_ojclone(&programs, d.ojclone_problems, d.ojclone_pairs, seed).stage(S)?;
            info!("built {} clone pairs, {:.3} positive", oj.pairs.len(), oj.positive_fraction);
            (oj.pairs, None)
        }
        Pairs::Query(_) => return Err(HarnessError::invalid(S, "clone detection needs clone pairs or labels")),
    };
    let usable = |p: &ClonePair| index.contains_key(p.id_a.as_str()) && index.contains_key(p.id_b.as_str());
    // Each part is filtered and capped on its own so a published partition
    // survives; without one there is a single part, split afterwards.
    let groups: Vec<Vec<ClonePair>> = match &parts {
        Some(parts) => parts
            .iter()
            .map(|idx| idx.iter().map(|&i| pairs[i].clone()).filter(|p| usable(p)).collect())
            .collect(),
        None => vec![pairs.into_iter().filter(|p| usable(p)).collect()],
    };
    let total: usize = groups.iter().map(Vec::len).sum();
    let mut all: Vec<ClonePair> = Vec::new();
    let mut bounds = Vec::new();
    for (g, group) in groups.into_iter().enumerate() {
        let capped = if d.max_pairs > 0 {
            let cap = ((d.max_pairs as f64) * group.len() as f64 / total.max(1) as f64).round() as usize;
            cap_pairs(&group, cap, d.positive_fraction, seed::derive_seed(seed, &format!("harness.cap.{g}"))).stage(S)?
        } else {
            group
        };
        let start = all.len();
        all.extend(capped);
        bounds.push((start..all.len()).collect::<Vec<_>>());
    }
    if all.is_empty() {
        return Err(HarnessError::invalid(S, "no clone pair left"));
    }
    let published = parts.map(|_| {
        let mut b = bounds.into_iter();
        [b.next().unwrap_or_default(), b.next().unwrap_or_default(), b.next().unwrap_or_default()]
    });
    let split = partition(published, all.len(), cfg)?;
    let clone_pairs: Vec<(usize, usize, bool)> = all
        .iter()
        .map(|p| (index[p.id_a.as_str()], index[p.id_b.as_str()], p.is_clone))
        .collect();
    let train_programs: BTreeSet<usize> = split
        .train
        .iter()
        .flat_map(|&i| [clone_pairs[i].0, clone_pairs[i].1])
        .collect();
    Ok(Layout {
        programs: clone_pairs.iter().flat_map(|&(a, b, _)| [a, b]).collect(),
        train_programs: train_programs.into_iter().collect(),
        clone_pairs,
        split,
        ..Layout::default()
    })
}

fn search_layout(ds: &Dataset, parsed: &[(SourceProgram, Ast)], cfg: &ExperimentConfig) -> Result<Layout> {
    let index: HashMap<&str, usize> = parsed.iter().enumerate().map(|(i, (p, _))| (p.id.as_str(), i)).collect();
    let (pairs, parts): (Vec<QueryCodePair>, Option<[Vec<usize>; 3]>) = match &ds.pairs {
        Pairs::Query(p) => {
            let part = ds.pair_partition.as_ref().map(|p| [p.train.clone(), p.valid.clone(), p.test.clone()]);
            (p.clone(), part)
        }
        // Doc strings stand in for queries.
        Pairs::None => (
            parsed
                .iter()
                .filter_map(|(p, _)| {
                    p.doc.as_ref().map(|d| QueryCodePair {
                        query: d.clone(),
                        code_id: p.id.clone(),
                    })
                })
                .collect(),
            None,
        ),
        Pairs::Clone(_) => return Err(HarnessError::invalid(S, "code search needs query pairs or doc strings")),
    };
    let subtokens = cfg.features.subtokens;
    let usable =
        |p: &QueryCodePair| index.contains_key(p.code_id.as_str()) && !query_tokens(&p.query, subtokens).is_empty();
    let mut all: Vec<(String, usize)> = Vec::new();
    let published = match parts {
        Some(parts) => {
            let mut out: [Vec<usize>; 3] = Default::default();
            for (slot, idx) in out.iter_mut().zip(parts) {
                for i in idx {
                    if usable(&pairs[i]) {
                        slot.push(all.len());
                        all.push((pairs[i].query.clone(), index[pairs[i].code_id.as_str()]));
                    }
                }
            }
            Some(out)
        }
        None => {
            all.extend(pairs.iter().filter(|p| usable(p)).map(|p| (p.query.clone(), index[p.code_id.as_str()])));
            None
        }
    };
    if all.is_empty() {
        return Err(HarnessError::invalid(S, "no query pair left"));
    }
    let split = partition(published, all.len(), cfg)?;
    let train_programs: BTreeSet<usize> = split.train.iter().map(|&i| all[i].1).collect();
    Ok(Layout {
        programs: all.iter().map(|q| q.1).collect(),
        train_programs: train_programs.into_iter().collect(),
        train_queries: split.train.iter().map(|&i| all[i].0.clone()).collect(),
        queries: all,
        split,
        ..Layout::default()
    })
}
