//! Kept apart from the other pipeline tests: the seed registry is
//! process-wide, and parallel runs would clear each other's entries.

use std::fs;

use codeprobe::corpus::{synthetic, write_jsonl, Lang};
use codeprobe_cli::pipeline::run_until;
use codeprobe_cli::{ExperimentConfig, Overrides, Stage};

#[test]
fn every_random_stream_traces_back_to_the_run_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("corpus")).unwrap();
    let programs = synthetic::generate(Lang::C, 3, 6, 2).unwrap();
    write_jsonl(&dir.path().join("corpus/programs.jsonl"), &programs).unwrap();
    let config = dir.path().join("e.toml");
    fs::write(
        &config,
        "[experiment]\nmodel = \"autoencode\"\nseed = 31\noutput = \"out\"\n\
         [dataset]\nkind = \"jsonl\"\nroot = \"corpus\"\n\
         [encoder]\nd = 6\nhidden = 6\n\
         [autoencode_pretrain]\nepochs = 1\n\
         [train.classification]\nepochs = 1\n\
         [attribution]\nenabled = true\nprograms = 1\n",
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&config, &Overrides::default()).unwrap();
    let m = run_until(cfg, Stage::Report, false).unwrap();
    assert!(m.seeds.derivations > 0);
    assert_eq!(m.seeds.untraced, 0);
    assert!(m.artifacts.contains_key("pretrain_log"));
}
