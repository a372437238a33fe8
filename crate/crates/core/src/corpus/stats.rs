use serde::{Deserialize, Serialize};

use super::SourceProgram;
use crate::ast::Ast;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub programs: usize,
    /// Programs left out because they did not parse.
    pub excluded: usize,
    pub max_code_tokens: f64,
    pub avg_code_tokens: f64,
    /// Programs carrying a doc string; doc statistics are over these only.
    pub documented: usize,
    pub max_doc_tokens: f64,
    pub avg_doc_tokens: f64,
    pub max_ast_depth: f64,
    pub avg_ast_depth: f64,
    pub max_ast_nodes: f64,
    pub avg_ast_nodes: f64,
}

#[derive(Default)]
struct Acc {
    n: usize,
    sum: f64,
    max: f64,
}

impl Acc {
    fn add(&mut self, v: usize) {
        self.n += 1;
        self.sum += v as f64;
        self.max = self.max.max(v as f64);
    }

    fn avg(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Token, depth and size statistics over the programs whose AST is present.
/// `asts[i]` belongs to `programs[i]`; `None` marks a parse failure.
/// Code tokens are lexed terminals, doc tokens are whitespace-separated words.
pub fn corpus_stats(programs: &[SourceProgram], asts: &[Option<Ast>]) -> Result<CorpusStats> {
    if programs.len() != asts.len() {
        return Err(Error::arg("one AST slot per program is required"));
    }
    let (mut code, mut doc, mut depth, mut nodes) =
        (Acc::default(), Acc::default(), Acc::default(), Acc::default());
    let mut excluded = 0;
    for (p, ast) in programs.iter().zip(asts) {
        let Some(ast) = ast else {
            excluded += 1;
            continue;
        };
        code.add(ast.lexed.len());
        depth.add(ast.depth());
        nodes.add(ast.len());
        if let Some(d) = &p.doc {
            doc.add(d.split_whitespace().count());
        }
    }
    if code.n == 0 {
        return Err(Error::arg("no parsed programs to summarize"));
    }
    Ok(CorpusStats {
        programs: code.n,
        excluded,
        max_code_tokens: code.max,
        avg_code_tokens: code.avg(),
        documented: doc.n,
        max_doc_tokens: doc.max,
        avg_doc_tokens: doc.avg(),
        max_ast_depth: depth.max,
        avg_ast_depth: depth.avg(),
        max_ast_nodes: nodes.max,
        avg_ast_nodes: nodes.avg(),
    })
}
