//! Shared fixtures for the integration tests and the acceptance runner.
#![allow(dead_code)]

use candle_core::{DType, Device, Tensor, Var};
use codeprobe::ast::{parse_to_ast, Ast};
use codeprobe::corpus::{synthetic, Lang, SourceProgram};
use codeprobe::encoders::{Encoder, EncoderConfig, EncoderInput, ModelKind, VocabSizes};
use codeprobe::features::{extract_views, FeatureConfig, ProgramViews, Vocabs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Corpus {
    pub programs: Vec<SourceProgram>,
    pub asts: Vec<Ast>,
    pub vocabs: Vocabs,
    pub views: Vec<ProgramViews>,
    pub features: FeatureConfig,
}

impl Corpus {
    pub fn new(programs: Vec<SourceProgram>, vocab_size: usize, queries: &[&str], seed: u64) -> Self {
        let features = FeatureConfig {
            vocab_size,
            ..FeatureConfig::default()
        };
        let asts: Vec<Ast> = programs.iter().map(|p| parse_to_ast(p).expect("fixture parses")).collect();
        let refs: Vec<&Ast> = asts.iter().collect();
        let vocabs = Vocabs::build(&refs, queries, &features, seed);
        let views = asts.iter().map(|a| extract_views(a, &vocabs, &features, seed)).collect();
        Corpus {
            programs,
            asts,
            vocabs,
            views,
            features,
        }
    }

    pub fn synthetic(lang: Lang, families: usize, per_family: usize, vocab_size: usize, seed: u64) -> Self {
        let programs = synthetic::generate(lang, families, per_family, seed).expect("synthetic corpus");
        let docs: Vec<String> = programs.iter().filter_map(|p| p.doc.clone()).collect();
        let queries: Vec<&str> = docs.iter().map(String::as_str).collect();
        Corpus::new(programs, vocab_size, &queries, seed)
    }

    pub fn config(&self, kind: ModelKind, base: EncoderConfig) -> EncoderConfig {
        EncoderConfig {
            model: kind,
            vocab: VocabSizes::from_vocabs(&self.vocabs),
            ..base
        }
    }

    pub fn inputs(&self, kind: ModelKind) -> Vec<EncoderInput> {
        self.views.iter().map(|v| EncoderInput::from_views(kind, v)).collect()
    }
}

pub fn to_f64(t: &Tensor) -> Vec<f64> {
    t.to_dtype(DType::F64).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap()
}

/// Relative error between the analytic gradient of `r · encoder(x)` at random
/// row embeddings `x` and central finite differences, over up to
/// `coords` randomly chosen embedding coordinates.
pub fn gradient_error(encoder: &Encoder, input: &EncoderInput, coords: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Random embeddings keep rows distinct, away from the ties where max
    // pooling has no derivative.
    let d = encoder.config().d;
    let vals: Vec<f64> = (0..input.len() * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Tensor::from_vec(vals, (input.len(), d), &Device::Cpu).unwrap();
    let input = encoder.freeze(input, &x).unwrap();
    let out = encoder.out_dim();
    let r: Vec<f64> = (0..out).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r = Tensor::from_vec(r, out, &Device::Cpu).unwrap();
    let f = |x: &Tensor| -> Tensor {
        let y = encoder.forward(&[(&input, x.clone())]).unwrap().squeeze(0).unwrap();
        (y * &r).unwrap().sum_all().unwrap()
    };
    let var = Var::from_tensor(&x).unwrap();
    let grads = f(var.as_tensor()).backward().unwrap();
    let analytic = grads
        .get(var.as_tensor())
        .map(to_f64)
        .unwrap_or_else(|| vec![0.0; x.elem_count()]);
    let base = to_f64(&x);
    let shape = x.dims().to_vec();
    let eps = 1e-5;
    let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
    for _ in 0..coords.min(base.len()) {
        let k = rng.random_range(0..base.len());
        let eval = |delta: f64| {
            let mut v = base.clone();
            v[k] += delta;
            let t = Tensor::from_vec(v, shape.as_slice(), &Device::Cpu).unwrap();
            f(&t).to_scalar::<f64>().unwrap()
        };
        let numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
        diff += (numeric - analytic[k]).powi(2);
        na += analytic[k].powi(2);
        nn += numeric.powi(2);
    }
    diff.sqrt() / na.sqrt().max(nn.sqrt()).max(1e-12)
}
