mod common;

use candle_core::{DType, Device, Tensor};
use codeprobe::corpus::Lang;
use codeprobe::encoders::{
    greedy_plan, load_checkpoint, merge_error, pretrain_autoencode, save_checkpoint, Encoder, EncoderConfig,
    EncoderInput, ModelKind, PretrainConfig, Row, Structure, Table, UnitKind,
};
use codeprobe::nn::Precision;
use common::{gradient_error, to_f64, Corpus};

fn toy_corpus() -> Corpus {
    Corpus::synthetic(Lang::C, 5, 2, 60, 11)
}

fn toy_encoder(corpus: &Corpus, kind: ModelKind, d: usize) -> Encoder {
    Encoder::new(corpus.config(kind, EncoderConfig::toy(kind, d))).unwrap()
}

#[test]
fn every_encoder_outputs_finite_vectors_of_its_width() {
    let corpus = toy_corpus();
    for kind in ModelKind::ALL {
        let enc = toy_encoder(&corpus, kind, 8);
        let inputs = corpus.inputs(kind);
        let refs: Vec<&EncoderInput> = inputs.iter().collect();
        let y = enc.encode(&refs).unwrap();
        assert_eq!(y.dims(), [refs.len(), enc.out_dim()], "{kind}");
        assert!(to_f64(&y).iter().all(|v| v.is_finite()), "{kind}");
        let again = to_f64(&enc.encode(&refs).unwrap());
        assert_eq!(to_f64(&y), again, "{kind} is not deterministic");
    }
}

#[test]
fn batch_encoding_matches_single_encoding() {
    let corpus = toy_corpus();
    for kind in ModelKind::ALL {
        for precision in [Precision::F64, Precision::F32] {
            let cfg = EncoderConfig {
                precision,
                ..EncoderConfig::toy(kind, 8)
            };
            let enc = Encoder::new(corpus.config(kind, cfg)).unwrap();
            let inputs = corpus.inputs(kind);
            let refs: Vec<&EncoderInput> = inputs.iter().collect();
            let batch = enc.encode(&refs).unwrap();
            for (i, input) in refs.iter().enumerate() {
                let alone = to_f64(&enc.encode(&[input]).unwrap());
                let row = to_f64(&batch.narrow(0, i, 1).unwrap());
                let worst = alone.iter().zip(&row).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(worst <= 1e-5, "{kind} {precision:?} item {i}: {worst}");
            }
        }
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let corpus = Corpus::synthetic(Lang::C, 3, 1, 60, 5);
    for kind in ModelKind::ALL {
        let enc = toy_encoder(&corpus, kind, 6);
        for (i, input) in corpus.inputs(kind).iter().enumerate() {
            let err = gradient_error(&enc, input, 24, i as u64);
            assert!(err < 1e-4, "{kind} program {i}: relative error {err}");
        }
    }
}

#[test]
fn ggnn_single_node_without_steps_is_the_readout_of_its_embedding() {
    let cfg = EncoderConfig {
        ggnn_steps: 0,
        ..EncoderConfig::toy(ModelKind::Ggnn, 2)
    };
    let enc = Encoder::new(cfg).unwrap();
    let input = EncoderInput {
        rows: vec![Row {
            table: Table::Nodes,
            symbols: vec![3],
            units: vec![(0, 1.0)],
        }],
        structure: Structure::Graph { edges: vec![] },
        units: UnitKind::Node,
    };
    let x = [0.7, -1.3];
    let xt = Tensor::new(&[x], &Device::Cpu).unwrap();
    let got = to_f64(&enc.forward(&[(&input, xt)]).unwrap());
    // One node: the attention weight is 1, so the readout is W x + b.
    let w = to_f64(&enc.store().get("ggnn.readout.feature.weight").unwrap());
    let b = to_f64(&enc.store().get("ggnn.readout.feature.bias").unwrap());
    let want = [x[0] * w[0] + x[1] * w[2] + b[0], x[0] * w[1] + x[1] * w[3] + b[1]];
    for (g, e) in got.iter().zip(want) {
        assert!((g - e).abs() < 1e-12, "{got:?} vs {want:?}");
    }
}

#[test]
fn greedy_merge_takes_the_cheaper_adjacent_pair() {
    let enc = Encoder::new(EncoderConfig::toy(ModelKind::AutoenCode, 4)).unwrap();
    for seed in 0..20u64 {
        let vals: Vec<f64> = (0..12).map(|i| ((i as f64 + 1.0) * (seed as f64 + 0.3)).sin()).collect();
        let x = Tensor::from_vec(vals, (3, 4), &Device::Cpu).unwrap();
        let row = |i: usize| x.narrow(0, i, 1).unwrap().squeeze(0).unwrap();
        let ab = merge_error(&enc, &row(0), 1, &row(1), 1).unwrap();
        let bc = merge_error(&enc, &row(1), 1, &row(2), 1).unwrap();
        let plan = greedy_plan(&enc, &x).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan[0], if bc < ab { 1 } else { 0 }, "seed {seed}: {ab} vs {bc}");
        assert_eq!(plan[1], 0);
    }
}

#[test]
fn empty_path_sets_use_the_learned_fallback() {
    for kind in [ModelKind::Code2Vec, ModelKind::Code2Seq] {
        let enc = Encoder::new(EncoderConfig::toy(kind, 4)).unwrap();
        let structure = if kind == ModelKind::Code2Vec {
            Structure::Contexts(vec![])
        } else {
            Structure::PathSeqs(vec![])
        };
        let input = EncoderInput {
            rows: vec![],
            structure,
            units: UnitKind::Node,
        };
        assert!(enc.uses_fallback(&input));
        let y = to_f64(&enc.encode(&[&input]).unwrap());
        let name = format!("{}.empty", kind.name());
        assert_eq!(y, to_f64(&enc.store().get(&name).unwrap()));
        let e = enc.program_embeddings(&["p"], &[&input], 4).unwrap();
        assert!(e[0].fallback);
    }
}

#[test]
fn zero_embeddings_give_an_input_independent_response() {
    let corpus = toy_corpus();
    for kind in [ModelKind::Lstm, ModelKind::Ggnn, ModelKind::Tbcnn] {
        let enc = toy_encoder(&corpus, kind, 8);
        let inputs = corpus.inputs(kind);
        let zero = |i: &EncoderInput| Tensor::zeros((i.len(), 8), DType::F64, &Device::Cpu).unwrap();
        let a = to_f64(&enc.forward(&[(&inputs[0], zero(&inputs[0]))]).unwrap());
        let b = to_f64(&enc.forward(&[(&inputs[0], zero(&inputs[0]))]).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn autoencoder_pretraining_lowers_held_out_reconstruction() {
    let corpus = Corpus::synthetic(Lang::C, 10, 10, 200, 3);
    let mut enc = toy_encoder(&corpus, ModelKind::AutoenCode, 8);
    let inputs = corpus.inputs(ModelKind::AutoenCode);
    assert_eq!(inputs.len(), 100);
    let cfg = PretrainConfig {
        epochs: 1,
        lr: 5e-3,
        ..PretrainConfig::default()
    };
    let log = pretrain_autoencode(&mut enc, &inputs, &cfg).unwrap();
    assert!(log.held_out[1] < log.held_out[0], "{log:?}");
}

#[test]
fn two_leaf_program_is_memorized() {
    let mut enc = Encoder::new(EncoderConfig::toy(ModelKind::AutoenCode, 4)).unwrap();
    let input = EncoderInput {
        rows: (0..2)
            .map(|i| Row {
                table: Table::Nodes,
                symbols: vec![i as u32 + 2],
                units: vec![(i, 1.0)],
            })
            .collect(),
        structure: Structure::Leaves { plan: None },
        units: UnitKind::Node,
    };
    let cfg = PretrainConfig {
        epochs: 400,
        lr: 2e-2,
        held_out: 0.0,
        ..PretrainConfig::default()
    };
    let log = pretrain_autoencode(&mut enc, &[input], &cfg).unwrap();
    let last = *log.held_out.last().unwrap();
    assert!(last < 0.01 * log.held_out[0].max(1.0), "{log:?}");
}

#[test]
fn checkpoints_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = toy_corpus();
    let enc = toy_encoder(&corpus, ModelKind::Astnn, 8);
    save_checkpoint(dir.path(), enc.config(), &[("encoder", enc.store())]).unwrap();
    let (cfg, map): (EncoderConfig, _) = load_checkpoint(dir.path()).unwrap();
    let other = Encoder::new(EncoderConfig { seed: 1234, ..cfg }).unwrap();
    other.store().load_map(&map, "encoder/", dir.path()).unwrap();
    let inputs = corpus.inputs(ModelKind::Astnn);
    let refs: Vec<&EncoderInput> = inputs.iter().collect();
    assert_eq!(to_f64(&enc.encode(&refs).unwrap()), to_f64(&other.encode(&refs).unwrap()));
    assert!(dir.path().join("manifest.json").is_file());
}
