//! Acceptance runner: one PASS/FAIL line per criterion.
//!
//! Criteria that need a public dataset read its root from an environment
//! variable (`CODEPROBE_POJ104`, `CODEPROBE_BCB`). Without it they report
//! FAIL with the reason; only failures of criteria that could run make the
//! process exit non-zero. `ACCEPTANCE_ONLY=3,9` runs a subset.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use candle_core::{Device, Tensor};
use codeprobe::ast::{parse_to_ast, Ast};
use codeprobe::attribution::{
    attribute, band_tokens, integrated_gradients, verify_neutrality, AttributionMap, Band, IgConfig, NeutralityReport,
    NeutralitySet, Target, TokenScore,
};
use codeprobe::corpus::{
    build_ojclone, corpus_stats, load_dataset, split, synthetic, DatasetKind, Lang, Pairs, SourceProgram,
};
use codeprobe::encoders::{count_parameters, Encoder, EncoderConfig, EncoderInput, ModelKind, UnitKind, VocabSizes};
use codeprobe::features::{extract_views, query_tokens, EdgeType, FeatureConfig, ProgramViews, Vocabs};
use codeprobe::tasks::{
    rank_of, textual_similarity, Classifier, CloneModel, Confusion, MetricsReport, PairRef, ProbeConfig, QueryRef,
    SearchModel, TaskKind, TrainConfig, WordVectors,
};
use common::{gradient_error, Corpus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Could not run in this environment.
    Blocked(String),
}

use Outcome::{Blocked, Fail, Pass};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn dataset_root(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from).filter(|p| p.exists())
}

fn unavailable(name: &str, var: &str) -> String {
    format!("{name} is not available (set {var} to its extracted root; the download hosts are unreachable from this environment)")
}

/// Parsed programs with views over a vocabulary built from `vocab_from`.
struct Prepared {
    programs: Vec<SourceProgram>,
    asts: Vec<Ast>,
    vocabs: Vocabs,
    views: Vec<ProgramViews>,
    features: FeatureConfig,
}

impl Prepared {
    fn new(programs: Vec<SourceProgram>, vocab_from: impl Fn(&SourceProgram) -> bool, queries: &[&str]) -> Self {
        let features = FeatureConfig::default();
        let (programs, asts): (Vec<_>, Vec<_>) = programs
            .into_iter()
            .filter_map(|p| parse_to_ast(&p).ok().map(|a| (p, a)))
            .unzip();
        let train: Vec<&Ast> = programs.iter().zip(&asts).filter(|(p, _)| vocab_from(p)).map(|(_, a)| a).collect();
        let vocabs = Vocabs::build(&train, queries, &features, SEED);
        let views = asts.iter().map(|a| extract_views(a, &vocabs, &features, SEED)).collect();
        Prepared {
            programs,
            asts,
            vocabs,
            views,
            features,
        }
    }

    fn config(&self, base: EncoderConfig) -> EncoderConfig {
        EncoderConfig {
            vocab: VocabSizes::from_vocabs(&self.vocabs),
            ..base
        }
    }

    fn inputs(&self, kind: ModelKind) -> Vec<EncoderInput> {
        self.views.iter().map(|v| EncoderInput::from_views(kind, v)).collect()
    }
}

#[derive(Default)]
struct Context {
    /// Criterion 6 models with their test inputs.
    poj_models: Vec<(Classifier, Vec<EncoderInput>)>,
}

// ---------------------------------------------------------------------------

const TABLE1_THOUSANDS: [(ModelKind, f64); 8] = [
    (ModelKind::Lstm, 656.0),
    (ModelKind::Transformer, 1924.0),
    (ModelKind::Tbcnn, 231.0),
    (ModelKind::AutoenCode, 66.0),
    (ModelKind::Code2Vec, 404.0),
    (ModelKind::Code2Seq, 938.0),
    (ModelKind::Ggnn, 294.0),
    (ModelKind::Astnn, 329.0),
];

fn parameter_accounting(_: &mut Context) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, reference) in TABLE1_THOUSANDS {
        let n = count_parameters(kind, &EncoderConfig::new(kind)).expect("default config is valid");
        let dev = n as f64 / (reference * 1000.0) - 1.0;
        ok &= dev.abs() <= 0.15;
        parts.push(format!("{kind} {n} ({:+.1}%)", 100.0 * dev));
    }
    verdict(ok, parts.join(", "))
}

fn ig_exactness(_: &mut Context) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let (n, d) = (rng.random_range(1..30), rng.random_range(1..9));
        let w: Vec<f64> = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let wt = Tensor::from_slice(&w, (n, d), &Device::Cpu).unwrap();
        // F(X) = sum_ij W_ij X_ij over row embeddings X.
        let f = |p: &Tensor| Ok(p.broadcast_mul(&wt)?.flatten_from(1)?.sum(1)?);
        let xt = Tensor::from_slice(&x, (n, d), &Device::Cpu).unwrap();
        let r = integrated_gradients(f, &xt, &xt.zeros_like().unwrap(), 1 + case % 10, 4).unwrap();
        let s = r.scores.flatten_all().unwrap().to_vec1::<f64>().unwrap();
        for ((s, wi), xi) in s.iter().zip(&w).zip(&x) {
            worst = worst.max((s - wi * xi).abs() / (wi * xi).abs().max(1.0));
        }
    }
    let bound = 16.0 * f64::EPSILON;
    verdict(worst <= bound, format!("100 cases, max relative error {worst:.2e} (bound {bound:.2e})"))
}

fn clone_pairs(labels: &[u32], n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, bool)> {
    let m = labels.len();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            if labels[i] == labels[j] {
                pos.push((i, j, true));
            } else {
                neg.push((i, j, false));
            }
        }
    }
    pos.shuffle(rng);
    neg.shuffle(rng);
    let half = n / 2;
    pos.truncate(half);
    neg.truncate(n - pos.len());
    let mut all = [pos, neg].concat();
    all.shuffle(rng);
    all
}

fn query_ids(corpus: &Corpus, doc: &str) -> Vec<u32> {
    query_tokens(doc, true).iter().map(|w| corpus.vocabs.tokens.get(w) as u32).collect()
}

fn completeness(_: &mut Context) -> Outcome {
    let cfg = IgConfig::default();
    let c_corpus = Corpus::synthetic(Lang::C, 4, 8, 300, SEED);
    let j_corpus = Corpus::synthetic(Lang::Java, 4, 8, 300, SEED);
    let labels: Vec<usize> = c_corpus.programs.iter().map(|p| p.label.unwrap() as usize).collect();
    let raw_labels: Vec<u32> = c_corpus.programs.iter().map(|p| p.label.unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let pairs = clone_pairs(&raw_labels, 80, &mut rng);
    let queries: Vec<Vec<u32>> = j_corpus
        .programs
        .iter()
        .map(|p| query_ids(&j_corpus, p.doc.as_deref().unwrap()))
        .collect();
    let train = |task| TrainConfig {
        epochs: 3,
        batch_size: 8,
        ..TrainConfig::for_task(task)
    };
    let (mut checked, mut passed, mut worst, mut max_steps) = (0, 0, 0.0f64, 0);
    let mut failures = Vec::new();
    for kind in ModelKind::ALL {
        let toy = |corpus: &Corpus| Encoder::new(corpus.config(kind, EncoderConfig::toy(kind, 8))).unwrap();
        let c_inputs = c_corpus.inputs(kind);
        let c_refs: Vec<&EncoderInput> = c_inputs.iter().collect();

        let classifier = Classifier::new(toy(&c_corpus), 4).unwrap();
        classifier
            .train((&c_refs, &labels), (&[], &[]), &train(TaskKind::Classification))
            .unwrap();
        let clone = CloneModel::new(toy(&c_corpus)).unwrap();
        let pair_refs: Vec<PairRef<'_>> = pairs.iter().map(|&(a, b, y)| (&c_inputs[a], &c_inputs[b], y)).collect();
        clone.train(&pair_refs, &[], &train(TaskKind::Clone)).unwrap();
        let j_inputs = j_corpus.inputs(kind);
        let search = SearchModel::new(toy(&j_corpus)).unwrap();
        let q_refs: Vec<QueryRef<'_>> = queries.iter().map(|q| q.as_slice()).zip(&j_inputs).collect();
        search.train(&q_refs, &[], &train(TaskKind::Search)).unwrap();

        for i in 0..20 {
            let reference = clone.encoder.encode(&[&c_inputs[(i + 1) % c_inputs.len()]]).unwrap().squeeze(0).unwrap();
            let query = search.query.encode(&[&queries[i]]).unwrap().squeeze(0).unwrap();
            let runs = [
                (TaskKind::Classification, &classifier.encoder, Target::LogitSum(&classifier.head), &c_inputs[i]),
                (
                    TaskKind::Clone,
                    &clone.encoder,
                    Target::Clone {
                        head: &clone.head,
                        reference,
                    },
                    &c_inputs[i],
                ),
                (TaskKind::Search, &search.encoder, Target::Search { query }, &j_inputs[i]),
            ];
            for (task, encoder, target, input) in &runs {
                let r = attribute(encoder, target, input, &cfg).unwrap();
                checked += 1;
                max_steps = max_steps.max(r.steps);
                worst = worst.max(r.residual());
                if r.residual() <= 0.01 && r.steps <= 300 {
                    passed += 1;
                } else {
                    failures.push(format!("{kind}/{task:?}/p{i}: {:.3} at m={}", r.residual(), r.steps));
                }
            }
        }
    }
    let mut detail = format!(
        "{passed}/{checked} (encoder, task, program) within 1% at m <= 300; worst residual {worst:.2e}, max m {max_steps}"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failing: {}", failures.iter().take(6).cloned().collect::<Vec<_>>().join(", ")));
    }
    verdict(passed == checked, detail)
}

fn gradient_correctness(_: &mut Context) -> Outcome {
    let corpus = Corpus::synthetic(Lang::C, 5, 2, 200, SEED);
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in ModelKind::ALL {
        let enc = Encoder::new(corpus.config(kind, EncoderConfig::toy(kind, 8))).unwrap();
        let inputs = corpus.inputs(kind);
        let worst = inputs
            .iter()
            .take(10)
            .enumerate()
            .map(|(i, input)| gradient_error(&enc, input, 40, SEED + i as u64))
            .fold(0.0f64, f64::max);
        ok &= worst < 1e-4;
        parts.push(format!("{kind} {worst:.1e}"));
    }
    verdict(ok, format!("max relative error over 10 inputs at d=8, f64: {}", parts.join(", ")))
}

fn metric_oracles(_: &mut Context) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut ranks, mut reference) = (Vec::new(), Vec::new());
    for _ in 0..100 {
        let scores: Vec<f64> = (0..999).map(|_| rng.random_range(0..60) as f64 / 7.0).collect();
        let mut ids: Vec<usize> = (0..999).collect();
        ids.shuffle(&mut rng);
        let target = rng.random_range(0..999);
        ranks.push(rank_of(&scores, &ids, target));
        // Brute force: count candidates strictly ahead of the target.
        let ahead = (0..999)
            .filter(|&j| scores[j] > scores[target] || (scores[j] == scores[target] && ids[j] < ids[target]))
            .count();
        reference.push(ahead + 1);
    }
    let MetricsReport::Search { success_rate, mrr, .. } = MetricsReport::search(&ranks, 10, 999) else {
        unreachable!()
    };
    let sr_ref = reference.iter().filter(|&&r| r <= 10).count() as f64 / 100.0;
    let mrr_ref = reference.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / 100.0;
    let ranks_ok = ranks == reference && success_rate == sr_ref && mrr == mrr_ref;

    let mut f1_ok = true;
    for _ in 0..200 {
        let n = rng.random_range(1..300);
        let probs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let MetricsReport::Clone {
            precision, recall, f1, ..
        } = MetricsReport::clone_detection(Confusion::from_probabilities(&probs, &labels))
        else {
            unreachable!()
        };
        let count = |pred: bool, gold: bool| {
            probs
                .iter()
                .zip(&labels)
                .filter(|(p, l)| (**p >= 0.5) == pred && **l == gold)
                .count() as f64
        };
        let (tp, fp, fn_) = (count(true, true), count(true, false), count(false, true));
        let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        f1_ok &= (precision, recall, f1) == (p, r, f);
    }
    verdict(
        ranks_ok && f1_ok,
        format!("SR@10 {success_rate:.2} / MRR {mrr:.4} over 100 pools of 999 equal the brute force: {ranks_ok}; P/R/F1 from raw counts on 200 cases: {f1_ok}"),
    )
}

// ---------------------------------------------------------------------------

fn poj_subset(root: &std::path::Path) -> Vec<SourceProgram> {
    let ds = load_dataset(DatasetKind::Poj104, root).expect("POJ-104 loads");
    let mut rng = codeprobe::seed::rng(SEED, "acceptance.poj_subset");
    let mut by_class: BTreeMap<u32, Vec<SourceProgram>> = BTreeMap::new();
    for p in ds.programs {
        by_class.entry(p.label.unwrap()).or_default().push(p);
    }
    let mut classes: Vec<u32> = by_class.keys().copied().collect();
    classes.shuffle(&mut rng);
    classes.truncate(10);
    classes.sort();
    let mut out = Vec::new();
    for (new, c) in classes.iter().enumerate() {
        let mut members = by_class.remove(c).unwrap();
        members.shuffle(&mut rng);
        out.extend(members.into_iter().take(100).map(|p| p.with_label(new as u32)));
    }
    out
}

fn desk_classification(ctx: &mut Context) -> Outcome {
    let Some(root) = dataset_root("CODEPROBE_POJ104") else {
        return Blocked(unavailable("POJ-104", "CODEPROBE_POJ104"));
    };
    let programs = poj_subset(&root);
    let ids: Vec<String> = programs.iter().map(|p| p.id.clone()).collect();
    let parts = split(&ids, [3, 1, 1], SEED).unwrap();
    let train_ids: std::collections::HashSet<&String> = parts.train.iter().collect();
    let data = Prepared::new(programs, |p| train_ids.contains(&p.id), &[]);
    let index: HashMap<&str, usize> = data.programs.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let pick = |ids: &[String]| ids.iter().filter_map(|id| index.get(id.as_str()).copied()).collect::<Vec<_>>();
    let (tr, va, te) = (pick(&parts.train), pick(&parts.valid), pick(&parts.test));
    let label = |i: &usize| data.programs[*i].label.unwrap() as usize;
    let start = Instant::now();
    let mut parts_out = Vec::new();
    let mut ok = true;
    for kind in [ModelKind::Lstm, ModelKind::Astnn] {
        let t = Instant::now();
        let inputs = data.inputs(kind);
        let refs = |idx: &[usize]| idx.iter().map(|&i| &inputs[i]).collect::<Vec<_>>();
        let labels = |idx: &[usize]| idx.iter().map(label).collect::<Vec<_>>();
        let model = Classifier::new(Encoder::new(data.config(EncoderConfig::new(kind))).unwrap(), 10).unwrap();
        let cfg = TrainConfig {
            seed: SEED,
            ..TrainConfig::for_task(TaskKind::Classification)
        };
        let log = model
            .train((&refs(&tr), &labels(&tr)), (&refs(&va), &labels(&va)), &cfg)
            .unwrap();
        let acc = model.evaluate(&refs(&te), &labels(&te), 32).unwrap().headline();
        ok &= acc >= 0.6;
        parts_out.push(format!(
            "{kind} test accuracy {:.3} (best epoch {}, {:.0}s)",
            acc,
            log.best_epoch,
            t.elapsed().as_secs_f64()
        ));
        let test_inputs = te.iter().map(|&i| inputs[i].clone()).collect();
        ctx.poj_models.push((model, test_inputs));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(45 * 60);
    verdict(
        ok,
        format!(
            "{}; {} train / {} valid / {} test programs; {:.1} min",
            parts_out.join("; "),
            tr.len(),
            va.len(),
            te.len(),
            elapsed.as_secs_f64() / 60.0
        ),
    )
}

fn describe_chi(r: &NeutralityReport) -> String {
    let c = r.chi_square.as_ref().unwrap();
    format!(
        "{} p={:.4} (count-scaled p={:.3e}, {} programs)",
        r.model, c.p_value, c.count_p_value, r.items
    )
}

/// Clone neutrality of an ASTNN clone model trained at desk scale on
/// OJClone-style pairs: uniformly drawn program pairs, clones iff they share
/// a problem label.
fn desk_clone_neutrality() -> (bool, String) {
    let (programs, problems, n_pairs, source) = match dataset_root("CODEPROBE_POJ104") {
        Some(root) => (poj_subset(&root), 10, 2000, "POJ-104"),
        None => (
            synthetic::generate(Lang::C, synthetic::FAMILIES, 12, SEED).unwrap(),
            synthetic::FAMILIES,
            1000,
            "the synthetic C corpus",
        ),
    };
    let data = Prepared::new(programs, |_| true, &[]);
    let inputs = data.inputs(ModelKind::Astnn);
    let index: HashMap<&str, usize> = data.programs.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let oj = build_ojclone(&data.programs, problems, n_pairs, SEED).unwrap();
    let refs: Vec<PairRef<'_>> = oj
        .pairs
        .iter()
        .map(|p| (&inputs[index[p.id_a.as_str()]], &inputs[index[p.id_b.as_str()]], p.is_clone))
        .collect();
    let (train, test) = refs.split_at(refs.len() * 4 / 5);
    let model = CloneModel::new(Encoder::new(data.config(EncoderConfig::new(ModelKind::Astnn))).unwrap()).unwrap();
    let cfg = TrainConfig {
        epochs: 10,
        seed: SEED,
        ..TrainConfig::for_task(TaskKind::Clone)
    };
    model.train(train, &[], &cfg).unwrap();
    let f1 = model.evaluate(test, 32).unwrap().headline();
    let r = verify_neutrality(NeutralitySet::Clone {
        encoder: &model.encoder,
        head: &model.head,
        pairs: test,
    })
    .unwrap();
    let (mean, std) = (r.mean.unwrap(), r.std.unwrap());
    (
        mean <= 0.25,
        format!(
            "clone (ASTNN, {} OJClone-style pairs from {problems} problems of {source}, {:.1}% positive, test F1 {f1:.3}): mean baseline probability {mean:.4}, std {std:.4} over {} pairs",
            oj.pairs.len(),
            100.0 * oj.positive_fraction,
            r.items
        ),
    )
}

/// Classification neutrality of toy classifiers on the synthetic corpus,
/// reported when the criterion's own models cannot be trained.
fn synthetic_classification_neutrality() -> String {
    let corpus = Corpus::synthetic(Lang::C, 10, 10, 300, SEED);
    let labels: Vec<usize> = corpus.programs.iter().map(|p| p.label.unwrap() as usize).collect();
    let mut out = Vec::new();
    for kind in [ModelKind::Lstm, ModelKind::Astnn] {
        let inputs = corpus.inputs(kind);
        let refs: Vec<&EncoderInput> = inputs.iter().collect();
        let model = Classifier::new(Encoder::new(corpus.config(kind, EncoderConfig::toy(kind, 16))).unwrap(), 10).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            batch_size: 10,
            ..TrainConfig::for_task(TaskKind::Classification)
        };
        model.train((&refs, &labels), (&[], &[]), &cfg).unwrap();
        let r = verify_neutrality(NeutralitySet::Classification {
            encoder: &model.encoder,
            head: &model.head,
            inputs: &refs,
        })
        .unwrap();
        out.push(describe_chi(&r));
    }
    format!("synthetic-corpus reference, not the criterion: {}", out.join(", "))
}

fn baseline_neutrality(ctx: &mut Context) -> Outcome {
    let (clone_ok, clone_detail) = desk_clone_neutrality();
    if ctx.poj_models.is_empty() {
        let reason = format!(
            "classification part needs the criterion 6 models: {}; {clone_detail}; {}",
            unavailable("POJ-104", "CODEPROBE_POJ104"),
            synthetic_classification_neutrality()
        );
        return if clone_ok { Blocked(reason) } else { Fail(reason) };
    }
    let mut ok = clone_ok;
    let mut parts = Vec::new();
    for (model, inputs) in &ctx.poj_models {
        let refs: Vec<&EncoderInput> = inputs.iter().collect();
        let r = verify_neutrality(NeutralitySet::Classification {
            encoder: &model.encoder,
            head: &model.head,
            inputs: &refs,
        })
        .unwrap();
        ok &= r.chi_square.as_ref().unwrap().p_value > 0.05;
        parts.push(describe_chi(&r));
    }
    verdict(ok, format!("chi-square vs uniform: {}; {clone_detail}", parts.join(", ")))
}

fn corpus_statistics(_: &mut Context) -> Outcome {
    let Some(root) = dataset_root("CODEPROBE_POJ104") else {
        return Blocked(unavailable("POJ-104", "CODEPROBE_POJ104"));
    };
    let ds = load_dataset(DatasetKind::Poj104, &root).unwrap();
    let asts: Vec<Option<Ast>> = ds.programs.iter().map(|p| parse_to_ast(p).ok()).collect();
    let s = corpus_stats(&ds.programs, &asts).unwrap();
    let tok = s.avg_code_tokens / 569.25 - 1.0;
    let depth = s.avg_ast_depth / 13.32 - 1.0;
    verdict(
        tok.abs() <= 0.1 && depth.abs() <= 0.1,
        format!(
            "{} programs ({} unparsed): avg tokens {:.2} ({:+.1}%), avg depth {:.2} ({:+.1}%)",
            s.programs,
            s.excluded,
            s.avg_code_tokens,
            100.0 * tok,
            s.avg_ast_depth,
            100.0 * depth
        ),
    )
}

// ---------------------------------------------------------------------------

fn check_paths(ast: &Ast, v: &ProgramViews, cfg: &FeatureConfig) -> Result<(), String> {
    let parents = ast.parents();
    let depth = |mut n: usize| {
        let mut d = 0;
        while let Some(p) = parents[n] {
            n = p;
            d += 1;
        }
        d
    };
    for c in &v.paths.contexts {
        let nodes = &c.nodes;
        let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
        if nodes.len() < 3 || first == last || !ast.nodes[first].is_leaf() || !ast.nodes[last].is_leaf() {
            return Err(format!("bad endpoints {nodes:?}"));
        }
        if nodes.len() - 1 > cfg.max_path_len {
            return Err(format!("path of {} edges", nodes.len() - 1));
        }
        let depths: Vec<usize> = nodes.iter().map(|&n| depth(n)).collect();
        let apex = (0..nodes.len()).min_by_key(|&i| depths[i]).unwrap();
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let up = i < apex && parents[a] == Some(b);
            let down = i >= apex && parents[b] == Some(a);
            if !(up || down) {
                return Err(format!("step {a}->{b} is not a tree edge in the right direction"));
            }
        }
        let slot = |child: usize| ast.nodes[nodes[apex]].children.iter().position(|&c| c == child).unwrap();
        if slot(nodes[apex - 1]).abs_diff(slot(nodes[apex + 1])) > cfg.max_path_width {
            return Err("path wider than the limit".into());
        }
    }
    Ok(())
}

fn check_graph(ast: &Ast, v: &ProgramViews) -> Result<(), String> {
    let leaves = ast.leaves();
    let next: Vec<(usize, usize)> = v.graph.edges_of(EdgeType::NextToken).collect();
    let chain: Vec<(usize, usize)> = leaves.windows(2).map(|w| (w[0], w[1])).collect();
    if next.len() != leaves.len().saturating_sub(1) || next != chain {
        return Err(format!("{} NextToken edges for {} leaves", next.len(), leaves.len()));
    }
    let mut child: Vec<(usize, usize)> = v.graph.edges_of(EdgeType::Child).collect();
    let mut tree: Vec<(usize, usize)> = ast
        .nodes
        .iter()
        .flat_map(|n| n.children.iter().map(move |&c| (n.id, c)))
        .collect();
    child.sort();
    tree.sort();
    if child != tree {
        return Err("Child edges differ from the AST".into());
    }
    Ok(())
}

fn check_statements(ast: &Ast, v: &ProgramViews) -> Result<(), String> {
    let mut from_split: Vec<&str> = v
        .statements
        .subtrees
        .iter()
        .flat_map(|t| t.nodes.iter())
        .filter_map(|&n| ast.nodes[n].token.as_deref())
        .collect();
    let mut from_ast = ast.leaf_tokens();
    from_split.sort();
    from_ast.sort();
    if from_split != from_ast {
        return Err(format!("{} leaves after the split, {} in the AST", from_split.len(), from_ast.len()));
    }
    Ok(())
}

fn check_banding(ast: &Ast, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = ast.lexed.len();
    let map = AttributionMap {
        program_id: ast.source_id.clone(),
        model: ModelKind::Lstm,
        task: TaskKind::Classification,
        delta: 0.0,
        steps: 1,
        residual: 0.0,
        units: UnitKind::Lexed,
        scores: ast
            .lexed
            .iter()
            .enumerate()
            .map(|(i, t)| TokenScore {
                token: t.text.clone(),
                position: Some(i),
                node_type: String::new(),
                // Coarse scores exercise the tie rule.
                score: rng.random_range(0..20) as f64,
                unit: i,
            })
            .collect(),
    };
    let h = band_tokens(&map, 0.6, 3);
    let sizes = [h.count(Band::Red), h.count(Band::Orange), h.count(Band::Yellow)];
    let want = (3 * n).div_ceil(5);
    let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
    if sizes.iter().sum::<usize>() != want || spread > 1 {
        return Err(format!("bands {sizes:?} for {n} tokens"));
    }
    Ok(())
}

fn structural_invariants(_: &mut Context) -> Outcome {
    let (programs, source) = match dataset_root("CODEPROBE_POJ104") {
        Some(root) => {
            let mut ps = load_dataset(DatasetKind::Poj104, &root).unwrap().programs;
            ps.shuffle(&mut codeprobe::seed::rng(SEED, "acceptance.invariants"));
            ps.truncate(1000);
            (ps, "1000 POJ-104 programs")
        }
        None => {
            let mut ps = synthetic::generate(Lang::C, 10, 50, SEED).unwrap();
            ps.extend(synthetic::generate(Lang::Java, 10, 50, SEED).unwrap());
            (ps, "1000 synthetic programs (500 C, 500 Java; POJ-104 unavailable)")
        }
    };
    let total = programs.len();
    let data = Prepared::new(programs, |_| true, &[]);
    let unparsed = total - data.programs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    let mut contexts = 0;
    for (ast, v) in data.asts.iter().zip(&data.views) {
        contexts += v.paths.len();
        let checks = [
            check_paths(ast, v, &data.features),
            check_graph(ast, v),
            check_statements(ast, v),
            check_banding(ast, &mut rng),
        ];
        for e in checks.into_iter().filter_map(Result::err) {
            failures.push(format!("{}: {e}", ast.source_id));
        }
    }
    let checked = data.asts.len();
    let detail = format!(
        "{source}: {checked} parsed ({unparsed} unparsed), {contexts} path contexts; {} violations{}",
        failures.len(),
        failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
    );
    verdict(failures.is_empty() && unparsed == 0 && checked == 1000, detail)
}

// ---------------------------------------------------------------------------

fn probe_direction(pairs: &[(Vec<String>, Vec<String>, bool)]) -> (f64, f64) {
    let streams: Vec<Vec<String>> = pairs.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]).collect();
    let vectors = WordVectors::train(
        &streams,
        &ProbeConfig {
            seed: SEED,
            ..ProbeConfig::default()
        },
    )
    .unwrap();
    let side = |want: bool| {
        let sel: Vec<(&[String], &[String])> = pairs
            .iter()
            .filter(|p| p.2 == want)
            .map(|(a, b, _)| (a.as_slice(), b.as_slice()))
            .collect();
        textual_similarity(&vectors, &sel).unwrap()
    };
    (side(true), side(false))
}

fn lexed(p: &SourceProgram) -> Option<Vec<String>> {
    parse_to_ast(p).ok().map(|a| a.lexed.into_iter().map(|t| t.text).collect())
}

fn textual_probe(_: &mut Context) -> Outcome {
    let synthetic_reference = || {
        let ps = synthetic::generate(Lang::Java, 10, 20, SEED).unwrap();
        let toks: Vec<Vec<String>> = ps.iter().map(|p| lexed(p).unwrap()).collect();
        let labels: Vec<u32> = ps.iter().map(|p| p.label.unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let pairs: Vec<_> = clone_pairs(&labels, 1000, &mut rng)
            .into_iter()
            .map(|(a, b, y)| (toks[a].clone(), toks[b].clone(), y))
            .collect();
        let (c, n) = probe_direction(&pairs);
        format!("synthetic Java reference, not the criterion: clone {c:.3} vs non-clone {n:.3}")
    };
    let Some(root) = dataset_root("CODEPROBE_BCB") else {
        return Blocked(format!("{}; {}", unavailable("BigCloneBench", "CODEPROBE_BCB"), synthetic_reference()));
    };
    let ds = load_dataset(DatasetKind::BigCloneBench, &root).unwrap();
    let Pairs::Clone(all) = &ds.pairs else {
        return Fail("BigCloneBench root has no clone pairs".into());
    };
    let index = ds.program_index();
    let mut rng = codeprobe::seed::rng(SEED, "acceptance.bcb_pairs");
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = all.iter().partition(|p| p.is_clone);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut pairs = Vec::new();
    for p in pos.into_iter().take(500).chain(neg.into_iter().take(500)) {
        let (Some(&a), Some(&b)) = (index.get(p.id_a.as_str()), index.get(p.id_b.as_str())) else {
            continue;
        };
        if let (Some(ta), Some(tb)) = (lexed(&ds.programs[a]), lexed(&ds.programs[b])) {
            pairs.push((ta, tb, p.is_clone));
        }
    }
    let (c, n) = probe_direction(&pairs);
    verdict(
        c > n,
        format!("{} BigCloneBench pairs: mean clone cosine {c:.3} vs non-clone {n:.3}", pairs.len()),
    )
}

// ---------------------------------------------------------------------------

type Criterion = fn(&mut Context) -> Outcome;

fn main() {
    let criteria: [(u32, &str, Criterion); 10] = [
        (1, "parameter accounting", parameter_accounting),
        (2, "integrated-gradients exactness", ig_exactness),
        (3, "completeness axiom", completeness),
        (4, "gradient correctness", gradient_correctness),
        (5, "metric oracles", metric_oracles),
        (6, "desk-scale classification", desk_classification),
        (7, "baseline neutrality", baseline_neutrality),
        (8, "corpus statistics", corpus_statistics),
        (9, "structural invariants", structural_invariants),
        (10, "textual-similarity probe", textual_probe),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut ctx = Context::default();
    let mut hard_failures = 0;
    let mut blocked = 0;
    for (n, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut ctx))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                hard_failures += 1;
                ("FAIL", d)
            }
            Blocked(d) => {
                blocked += 1;
                ("FAIL", format!("not run: {d}"))
            }
        };
        println!("criterion {n:>2} {tag} [{name}] {detail} ({secs:.1}s)");
    }
    println!("acceptance: {hard_failures} failed, {blocked} not runnable in this environment");
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
