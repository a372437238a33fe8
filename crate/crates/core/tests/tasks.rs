mod common;

use codeprobe::corpus::Lang;
use codeprobe::encoders::{Encoder, EncoderConfig, EncoderInput, ModelKind};
use codeprobe::features::query_tokens;
use codeprobe::tasks::{Classifier, CloneModel, MetricsReport, PairRef, QueryRef, SearchModel, TaskKind, TrainConfig};
use codeprobe::Error;
use common::{to_f64, Corpus};

fn encoder(corpus: &Corpus, kind: ModelKind, d: usize) -> Encoder {
    Encoder::new(corpus.config(kind, EncoderConfig::toy(kind, d))).unwrap()
}

#[test]
fn every_encoder_memorizes_a_two_class_toy_set() {
    let corpus = Corpus::synthetic(Lang::C, 2, 10, 200, 21);
    let labels: Vec<usize> = corpus.programs.iter().map(|p| p.label.unwrap() as usize).collect();
    for kind in ModelKind::ALL {
        // The greedy autoencoder pools leaves only and needs more width to
        // separate the two families in 50 epochs.
        let d = if kind == ModelKind::AutoenCode { 32 } else { 16 };
        let model = Classifier::new(encoder(&corpus, kind, d), 2).unwrap();
        let inputs = corpus.inputs(kind);
        let refs: Vec<&EncoderInput> = inputs.iter().collect();
        let cfg = TrainConfig {
            lr: 0.01,
            epochs: 50,
            patience: 50,
            batch_size: 10,
            ..TrainConfig::for_task(TaskKind::Classification)
        };
        let log = model.train((&refs, &labels), (&[], &[]), &cfg).unwrap();
        let best = log.train_metrics().into_iter().fold(0.0, f64::max);
        assert_eq!(best, 1.0, "{kind}: {:?}", log.train_metrics());
    }
}

fn clone_pairs(corpus: &Corpus, inputs: &[EncoderInput], n: usize) -> Vec<(usize, usize, bool)> {
    let mut pairs = Vec::new();
    let m = inputs.len();
    let mut k = 0;
    'outer: for i in 0..m {
        for j in (i + 1)..m {
            if k % 3 == 0 || corpus.programs[i].label == corpus.programs[j].label {
                pairs.push((i, j, corpus.programs[i].label == corpus.programs[j].label));
                if pairs.len() == n {
                    break 'outer;
                }
            }
            k += 1;
        }
    }
    pairs
}

#[test]
fn clone_training_lowers_the_loss_and_is_seeded() {
    let corpus = Corpus::synthetic(Lang::C, 5, 6, 200, 4);
    let kind = ModelKind::Tbcnn;
    let inputs = corpus.inputs(kind);
    let pairs = clone_pairs(&corpus, &inputs, 100);
    assert_eq!(pairs.len(), 100);
    let refs: Vec<PairRef<'_>> = pairs.iter().map(|&(a, b, y)| (&inputs[a], &inputs[b], y)).collect();
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 8,
        lr: 0.01,
        ..TrainConfig::for_task(TaskKind::Clone)
    };
    let run = || {
        let model = CloneModel::new(encoder(&corpus, kind, 16)).unwrap();
        model.train(&refs, &[], &cfg).unwrap().train_losses()
    };
    let (a, b) = (run(), run());
    assert_eq!(a[0], b[0]);
    assert!(a[1] < a[0], "{a:?}");
}

#[test]
fn search_training_runs_and_reports_rank_metrics() {
    let corpus = Corpus::synthetic(Lang::Java, 10, 3, 300, 8);
    let kind = ModelKind::Lstm;
    let model = SearchModel::new(encoder(&corpus, kind, 16)).unwrap();
    let inputs = corpus.inputs(kind);
    let queries: Vec<Vec<u32>> = corpus
        .programs
        .iter()
        .map(|p| {
            query_tokens(p.doc.as_deref().unwrap(), true)
                .iter()
                .map(|w| corpus.vocabs.tokens.get(w) as u32)
                .collect()
        })
        .collect();
    let pairs: Vec<QueryRef<'_>> = queries.iter().map(|q| q.as_slice()).zip(&inputs).collect();
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 8,
        ..TrainConfig::for_task(TaskKind::Search)
    };
    let log = model.train(&pairs[..20], &pairs[20..], &cfg).unwrap();
    assert!(log.train_losses().iter().all(|l| l.is_finite()));
    let report = model.evaluate(&pairs, 10, 30, 1, 16).unwrap();
    let MetricsReport::Search { success_rate, mrr, .. } = report else {
        panic!("wrong report kind")
    };
    assert!((0.0..=1.0).contains(&success_rate) && mrr > 0.0 && mrr <= 1.0);
    assert!(model.evaluate(&pairs, 10, 31, 1, 16).is_err());
}

#[test]
fn divergence_restores_the_last_good_parameters() {
    let corpus = Corpus::synthetic(Lang::C, 2, 4, 200, 2);
    let kind = ModelKind::Ggnn;
    let model = Classifier::new(encoder(&corpus, kind, 8), 2).unwrap();
    let inputs = corpus.inputs(kind);
    let refs: Vec<&EncoderInput> = inputs.iter().collect();
    let labels: Vec<usize> = corpus.programs.iter().map(|p| p.label.unwrap() as usize).collect();
    let cfg = TrainConfig {
        lr: 1e300,
        epochs: 5,
        batch_size: 2,
        ..TrainConfig::for_task(TaskKind::Classification)
    };
    let before = to_f64(&model.head.weight);
    match model.train((&refs, &labels), (&[], &[]), &cfg) {
        Err(Error::Diverged { epoch, .. }) => assert_eq!(epoch, 1),
        other => panic!("expected divergence, got {other:?}"),
    }
    assert_eq!(to_f64(&model.head.weight), before);
}
