//! Shared inputs for the benchmarks.

use codeprobe::ast::{parse_to_ast, Ast};
use codeprobe::corpus::{synthetic, Lang, SourceProgram};
use codeprobe::encoders::{Encoder, EncoderConfig, EncoderInput, ModelKind, VocabSizes};
use codeprobe::features::{extract_views, FeatureConfig, ProgramViews, Vocabs};

/// A parsed synthetic corpus with vocabularies and views.
pub struct Fixture {
    pub programs: Vec<SourceProgram>,
    pub asts: Vec<Ast>,
    pub vocabs: Vocabs,
    pub features: FeatureConfig,
    pub views: Vec<ProgramViews>,
}

impl Fixture {
    pub fn new(lang: Lang, families: usize, per_family: usize, seed: u64) -> Self {
        let programs = synthetic::generate(lang, families, per_family, seed).expect("valid family count");
        let asts: Vec<Ast> = programs
            .iter()
            .map(|p| parse_to_ast(p).expect("synthetic programs parse"))
            .collect();
        let features = FeatureConfig::default();
        let refs: Vec<&Ast> = asts.iter().collect();
        let vocabs = Vocabs::build(&refs, &[], &features, seed);
        let views = asts.iter().map(|a| extract_views(a, &vocabs, &features, seed)).collect();
        Fixture {
            programs,
            asts,
            vocabs,
            features,
            views,
        }
    }

    /// An encoder of width `d` sized to the fixture's vocabularies.
    pub fn encoder(&self, kind: ModelKind, d: usize) -> Encoder {
        let cfg = EncoderConfig {
            vocab: VocabSizes::from_vocabs(&self.vocabs),
            ..EncoderConfig::toy(kind, d)
        };
        Encoder::new(cfg).expect("valid toy configuration")
    }

    pub fn inputs(&self, kind: ModelKind) -> Vec<EncoderInput> {
        self.views.iter().map(|v| EncoderInput::from_views(kind, v)).collect()
    }
}
