//! Command-line verbs.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use codeprobe::ast::parse_to_ast;
use codeprobe::corpus::corpus_stats;
use codeprobe::encoders::ModelKind;
use codeprobe::tasks::TaskKind;
use log::info;

use crate::config::{ExperimentConfig, Overrides, DEFAULT_CONFIG};
use crate::error::{AtPath, HarnessError, InStage, Result, Stage};
use crate::extract::{extract, load_corpus};
use crate::pipeline::{run_until, MANIFEST_FILE};
use crate::report::{by_task, find_manifests, report};

#[derive(Debug, Parser)]
#[command(name = "codeprobe", version, about = "Train, evaluate and attribute program encoders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the corpus and store model input views.
    Extract(RunArgs),
    /// Extract if needed, then train and checkpoint a model.
    Train(RunArgs),
    /// Train if needed, then score the test split.
    Evaluate(RunArgs),
    /// Evaluate if needed, then attribute test programs.
    Attribute(RunArgs),
    /// Every stage; attribution only when enabled in the configuration.
    Run(RunArgs),
    /// Tables and figures over finished runs.
    Report(ReportArgs),
    /// Corpus statistics of the configured dataset, as JSON.
    Stats(RunArgs),
    /// Print the default configuration.
    DefaultConfig,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(short, long)]
    pub config: PathBuf,
    /// Encoder name, or `all` for every encoder in turn.
    #[arg(short, long)]
    pub model: Option<String>,
    #[arg(short, long)]
    pub task: Option<TaskKind>,
    #[arg(short, long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run manifests; defaults to every run under `--output`.
    pub manifests: Vec<PathBuf>,
    /// Output directory whose runs are scanned when no manifest is given.
    #[arg(long, default_value = "runs")]
    pub output: PathBuf,
    /// Report directory; defaults to `<output>/reports/<task>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn models(&self) -> Result<Vec<Option<ModelKind>>> {
        match self.model.as_deref() {
            None => Ok(vec![None]),
            Some("all") => Ok(ModelKind::ALL.iter().copied().map(Some).collect()),
            Some(name) => name
                .parse::<ModelKind>()
                .map(|m| vec![Some(m)])
                .map_err(|e| HarnessError::config(&self.config, e.to_string())),
        }
    }

    fn configs(&self) -> Result<Vec<ExperimentConfig>> {
        self.models()?
            .into_iter()
            .map(|model| {
                let o = Overrides {
                    task: self.task,
                    model,
                    seed: self.seed,
                };
                ExperimentConfig::load(&self.config, &o)
            })
            .collect()
    }
}

pub fn execute(cli: &Cli, out: &mut impl Write) -> Result<()> {
    let print = |out: &mut dyn Write, text: &str| writeln!(out, "{text}").at(Stage::Report, &PathBuf::from("<stdout>"));
    match &cli.command {
        Command::DefaultConfig => print(out, DEFAULT_CONFIG.trim_end()),
        Command::Extract(args) => {
            for cfg in args.configs()? {
                let f = extract(&cfg)?;
                print(out, &f.dir.display().to_string())?;
            }
            Ok(())
        }
        Command::Stats(args) => {
            let cfg = ExperimentConfig::load(&args.config, &Overrides::default())?;
            let ds = load_corpus(&cfg)?;
            let asts: Vec<_> = ds.programs.iter().map(|p| parse_to_ast(p).ok()).collect();
            let stats = corpus_stats(&ds.programs, &asts).stage(Stage::Extract)?;
            let json = serde_json::to_string_pretty(&stats).at(Stage::Extract, &args.config)?;
            print(out, &json)
        }
        Command::Train(args) => stages(args, Stage::Train, false, out),
        Command::Evaluate(args) => stages(args, Stage::Evaluate, false, out),
        Command::Attribute(args) => stages(args, Stage::Report, true, out),
        Command::Run(args) => stages(args, Stage::Report, false, out),
        Command::Report(args) => {
            let manifests = if args.manifests.is_empty() {
                find_manifests(&args.output)?
            } else {
                args.manifests.clone()
            };
            let groups = by_task(&manifests)?;
            if args.out.is_some() && groups.len() > 1 {
                return Err(HarnessError::invalid(
                    Stage::Report,
                    "manifests span several tasks; drop --out to get one report per task",
                ));
            }
            for (task, paths) in groups {
                let dir = args
                    .out
                    .clone()
                    .unwrap_or_else(|| args.output.join("reports").join(task.name()));
                let s = report(&paths, &dir)?;
                info!("{} runs of {} reported in {}", s.runs, task.name(), dir.display());
                print(out, &dir.display().to_string())?;
            }
            Ok(())
        }
    }
}

/// Runs each configured model up to `last`; with several models of one
/// task a report over them follows.
fn stages(args: &RunArgs, last: Stage, force_attribution: bool, out: &mut impl Write) -> Result<()> {
    let mut manifests = Vec::new();
    for cfg in args.configs()? {
        let m = run_until(cfg, last, force_attribution)?;
        let dir = m.dir();
        let headline = m.metrics.as_ref().map(|r| format!(" {:.4}", r.headline())).unwrap_or_default();
        writeln!(out, "{} {}{headline}", m.model, m.task.name()).at(Stage::Report, &dir)?;
        manifests.push(m);
    }
    if manifests.len() > 1 && last == Stage::Report {
        let task = manifests[0].task;
        let paths: Vec<PathBuf> = manifests.iter().map(|m| m.dir().join(MANIFEST_FILE)).collect();
        let dir = manifests[0].config.experiment.output.join("reports").join(task.name());
        report(&paths, &dir)?;
        writeln!(out, "report: {}", dir.display()).at(Stage::Report, &dir)?;
    }
    Ok(())
}
