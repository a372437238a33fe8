//! Integrated-gradients attribution of task outputs to source tokens and AST
//! nodes, with all-zero baselines, neutrality checks, banded highlighting
//! and per-node-type aggregation.

mod banding;
mod baseline;
mod heatmap;
mod ig;
mod neutrality;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use banding::{band_sizes, band_tokens, Band, BandedHighlight, BandedToken};
pub use baseline::{make_baseline, BaselineInput};
pub use heatmap::{aggregate_by_node_type, category_of, Category, NodeTypeHeatmap, NODE_TYPES, OTHER};
pub use ig::{
    attribute, integrated_gradients, integrated_gradients_adaptive, integrated_gradients_graded, IgConfig, IgResult, Target,
};
pub use neutrality::{verify_neutrality, ChiSquare, NeutralityReport, NeutralitySet};
pub use render::render_html;

use crate::ast::{Ast, NodeId};
use crate::encoders::{EncoderInput, ModelKind, UnitKind};
use crate::error::{Error, Result};
use crate::tasks::TaskKind;

/// Attribution received by one source token or AST node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token: String,
    /// Lexed-token index the score is drawn at; `None` for nodes with no
    /// token of their own in the source text.
    pub position: Option<usize>,
    pub node_type: String,
    pub score: f64,
    /// Lexed index or node id, per the map's `units`.
    pub unit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionMap {
    pub program_id: String,
    pub model: ModelKind,
    pub task: TaskKind,
    /// `F(x) - F(x0)`.
    pub delta: f64,
    pub steps: usize,
    /// `|sum of scores - delta| / |delta|`.
    pub residual: f64,
    pub units: UnitKind,
    pub scores: Vec<TokenScore>,
}

impl AttributionMap {
    /// Shares row attributions out among the rows' units and labels every
    /// unit from the program's AST.
    pub fn new(program_id: &str, model: ModelKind, task: TaskKind, ast: &Ast, input: &EncoderInput, ig: &IgResult) -> Result<Self> {
        let rows = ig.row_scores()?;
        if rows.len() != input.len() {
            return Err(Error::arg(format!("{} row scores for {} rows", rows.len(), input.len())));
        }
        let mut per_unit: BTreeMap<usize, f64> = BTreeMap::new();
        for (row, s) in input.rows.iter().zip(&rows) {
            for &(unit, w) in &row.units {
                *per_unit.entry(unit).or_default() += s * w;
            }
        }
        let index = SourceIndex::new(ast);
        let scores = per_unit
            .into_iter()
            .map(|(unit, score)| index.describe(input.units, unit, score))
            .collect::<Result<Vec<_>>>()?;
        Ok(AttributionMap {
            program_id: program_id.to_string(),
            model,
            task,
            delta: ig.delta(),
            steps: ig.steps,
            residual: ig.residual(),
            units: input.units,
            scores,
        })
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().map(|s| s.score).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Links between lexed tokens and AST nodes through their byte spans.
pub(crate) struct SourceIndex<'a> {
    ast: &'a Ast,
    /// Innermost node covering each lexed token.
    lexed_node: Vec<Option<NodeId>>,
    /// First lexed token a node owns outright (not inside a child).
    anchor: Vec<Option<usize>>,
}

impl<'a> SourceIndex<'a> {
    pub(crate) fn new(ast: &'a Ast) -> Self {
        let inside = |outer: &std::ops::Range<usize>, inner: &std::ops::Range<usize>| {
            outer.start <= inner.start && inner.end <= outer.end && outer.start < outer.end
        };
        let order = ast.preorder();
        let lexed_node = ast
            .lexed
            .iter()
            .map(|t| {
                // Preorder visits ancestors first, so the last minimal span
                // found is the deepest node.
                let mut best: Option<(usize, NodeId)> = None;
                for &id in &order {
                    let span = &ast.nodes[id].span;
                    if inside(span, &t.span) && best.is_none_or(|(len, _)| span.len() <= len) {
                        best = Some((span.len(), id));
                    }
                }
                best.map(|(_, id)| id)
            })
            .collect();
        let anchor = ast
            .nodes
            .iter()
            .map(|n| {
                ast.lexed.iter().position(|t| {
                    inside(&n.span, &t.span) && !n.children.iter().any(|&c| inside(&ast.nodes[c].span, &t.span))
                })
            })
            .collect();
        SourceIndex { ast, lexed_node, anchor }
    }

    pub(crate) fn anchor(&self, node: NodeId) -> Option<usize> {
        self.anchor.get(node).copied().flatten()
    }

    fn describe(&self, units: UnitKind, unit: usize, score: f64) -> Result<TokenScore> {
        match units {
            UnitKind::Lexed => {
                let t = self
                    .ast
                    .lexed
                    .get(unit)
                    .ok_or_else(|| Error::arg(format!("lexed token {unit} outside the program")))?;
                let node_type = self.lexed_node[unit].map_or(OTHER.to_string(), |id| self.ast.nodes[id].type_label.clone());
                Ok(TokenScore {
                    token: t.text.clone(),
                    position: Some(unit),
                    node_type,
                    score,
                    unit,
                })
            }
            UnitKind::Node => {
                let n = self
                    .ast
                    .nodes
                    .get(unit)
                    .ok_or_else(|| Error::arg(format!("node {unit} outside the AST")))?;
                Ok(TokenScore {
                    token: n.token.clone().unwrap_or_else(|| n.type_label.clone()),
                    position: self.anchor(unit),
                    node_type: n.type_label.clone(),
                    score,
                    unit,
                })
            }
        }
    }
}
