//! Tables and figures across the runs of one task.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use codeprobe::ast::parse_to_ast;
use codeprobe::attribution::{aggregate_by_node_type, band_tokens, render_html, AttributionMap};
use codeprobe::corpus::SourceProgram;
use codeprobe::tasks::TaskKind;

use crate::error::{AtPath, HarnessError, InStage, Result, Stage};
use crate::extract::PROGRAMS_FILE;
use crate::pipeline::{load_maps, RunManifest, MANIFEST_FILE};
use crate::store::{read_json, read_lines, write_atomic};

const S: Stage = Stage::Report;

#[derive(Debug)]
pub struct ReportSummary {
    pub task: TaskKind,
    pub runs: usize,
    pub files: Vec<PathBuf>,
}

/// Every `runs/*/manifest.json` under an output directory, sorted by path.
pub fn find_manifests(output: &Path) -> Result<Vec<PathBuf>> {
    let runs = output.join("runs");
    if !runs.is_dir() {
        return Err(HarnessError::MissingPath {
            stage: S,
            what: "runs directory",
            path: runs,
        });
    }
    let mut found: Vec<PathBuf> = fs::read_dir(&runs)
        .at(S, &runs)?
        .filter_map(|e| e.ok())
        .map(|e| e.path().join(MANIFEST_FILE))
        .filter(|p| p.is_file())
        .collect();
    found.sort();
    Ok(found)
}

/// Groups manifests by task, in task order.
pub fn by_task(manifests: &[PathBuf]) -> Result<Vec<(TaskKind, Vec<PathBuf>)>> {
    let mut groups: Vec<(TaskKind, Vec<PathBuf>)> = Vec::new();
    for path in manifests {
        let m: RunManifest = read_json(S, path)?;
        match groups.iter_mut().find(|(t, _)| *t == m.task) {
            Some((_, v)) => v.push(path.clone()),
            None => groups.push((m.task, vec![path.clone()])),
        }
    }
    groups.sort_by_key(|(t, _)| TaskKind::ALL.iter().position(|x| x == t));
    Ok(groups)
}

/// Writes `results.csv`, `results.md`, `parameters.csv` and, when runs
/// carry attributions, highlighted pages and the node-type heatmap into
/// `out`. All manifests must belong to one task.
pub fn report(manifests: &[PathBuf], out: &Path) -> Result<ReportSummary> {
    if manifests.is_empty() {
        return Err(HarnessError::invalid(S, "no run manifests to report on"));
    }
    let mut runs: Vec<(PathBuf, RunManifest)> = Vec::new();
    for path in manifests {
        let m: RunManifest = read_json(S, path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        runs.push((dir, m));
    }
    let task = runs[0].1.task;
    if let Some((dir, m)) = runs.iter().find(|(_, m)| m.task != task) {
        return Err(HarnessError::invalid(
            S,
            format!(
                "runs mix tasks: {} is {} but {} is {}",
                runs[0].0.display(),
                task.name(),
                dir.display(),
                m.task.name()
            ),
        ));
    }
    // Token-based models first, then AST-based, each in model order.
    runs.sort_by_key(|(_, m)| (!m.model.is_token_based(), m.model, m.seed));

    let mut files = Vec::new();
    let mut header: Option<Vec<&str>> = None;
    let mut csv = String::new();
    let mut md = String::new();
    let mut params = String::from("family,model,parameters,head_parameters\n");
    for (dir, m) in &runs {
        let metrics = m.metrics.as_ref().ok_or_else(|| {
            HarnessError::invalid(S, format!("{} has no metrics; run the evaluate stage", dir.display()))
        })?;
        let (cols, row) = metrics.csv();
        if header.is_none() {
            let _ = writeln!(csv, "family,model,seed,{}", cols.join(","));
            let _ = writeln!(md, "| family | model | seed | {} |", cols.join(" | "));
            let _ = writeln!(md, "|{}", "---|".repeat(cols.len() + 3));
            header = Some(cols);
        }
        let family = if m.model.is_token_based() { "token" } else { "ast" };
        let _ = writeln!(csv, "{family},{},{},{}", m.model, m.seed, row.join(","));
        let _ = writeln!(md, "| {family} | {} | {} | {} |", m.model, m.seed, row.join(" | "));
        let _ = writeln!(params, "{family},{},{},{}", m.model, m.parameters, m.head_parameters);
    }
    for (name, text) in [("results.csv", &csv), ("results.md", &md), ("parameters.csv", &params)] {
        let p = out.join(name);
        write_atomic(S, &p, text.as_bytes())?;
        files.push(p);
    }

    let mut maps: Vec<AttributionMap> = Vec::new();
    for (dir, m) in &runs {
        if !dir.join("attributions").join("summary.json").is_file() {
            continue;
        }
        let features = features_dir(dir, m)?;
        let programs: Vec<SourceProgram> = read_lines(S, &features.join(PROGRAMS_FILE))?;
        let by_id: HashMap<&str, &SourceProgram> = programs.iter().map(|p| (p.id.as_str(), p)).collect();
        let a = &m.config.attribution;
        for (record, map) in load_maps(dir)? {
            let program = by_id.get(record.program_id.as_str()).ok_or_else(|| {
                HarnessError::invalid(S, format!("{} is not in {}", record.program_id, features.display()))
            })?;
            let ast = parse_to_ast(program).stage(S)?;
            let title = format!("{} / {} / {}", record.program_id, m.model, task.name());
            let html = render_html(&program.text, &ast, &band_tokens(&map, a.fraction, a.bands), &title);
            let page = out
                .join("html")
                .join(m.model.name().to_lowercase())
                .join(record.file.replace(".json", ".html"));
            write_atomic(S, &page, html.as_bytes())?;
            files.push(page);
            maps.push(map);
        }
    }
    if !maps.is_empty() {
        let refs: Vec<&AttributionMap> = maps.iter().collect();
        let heat = aggregate_by_node_type(&refs).stage(S)?;
        let csv = out.join("heatmap.csv");
        let svg = out.join("heatmap.svg");
        write_atomic(S, &csv, heat.to_csv().as_bytes())?;
        write_atomic(S, &svg, heat.to_svg(task.name()).as_bytes())?;
        files.extend([csv, svg]);
    }
    Ok(ReportSummary {
        task,
        runs: runs.len(),
        files,
    })
}

fn features_dir(run_dir: &Path, m: &RunManifest) -> Result<PathBuf> {
    let path = m
        .artifacts
        .get("features")
        .map(PathBuf::from)
        .ok_or_else(|| HarnessError::invalid(S, format!("{} records no feature directory", run_dir.display())))?;
    if !path.is_dir() {
        return Err(HarnessError::MissingPath {
            stage: S,
            what: "feature directory",
            path,
        });
    }
    Ok(path)
}
