use serde::{Deserialize, Serialize};

use super::ModelKind;
use crate::features::{EdgeType, ProgramViews};

/// Embedding table a row draws its symbols from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    Tokens,
    Nodes,
    Leaves,
    Paths,
    Types,
}

/// What the `units` of an input row point at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    /// Index into the lexed token stream.
    Lexed,
    /// AST node id.
    Node,
}

/// One embedded input position: the sum of its symbols' table rows.
/// `units` says how an attribution on this row is shared out among source
/// tokens or AST nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub table: Table,
    pub symbols: Vec<u32>,
    pub units: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementRows {
    pub rows: Vec<usize>,
    /// Children as positions into `rows`.
    pub children: Vec<Vec<usize>>,
}

/// How the embedded rows are wired together; row indices throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Structure {
    Sequence,
    Tree { root: usize, children: Vec<Vec<usize>> },
    /// `plan` fixes the greedy merge order (positions into the shrinking
    /// list); computed from the embeddings when absent.
    Leaves { plan: Option<Vec<usize>> },
    /// (left leaf, whole path, right leaf).
    Contexts(Vec<[usize; 3]>),
    /// (left leaf, inner path nodes, right leaf).
    PathSeqs(Vec<(usize, Vec<usize>, usize)>),
    Graph { edges: Vec<(usize, usize, usize)> },
    Statements(Vec<StatementRows>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderInput {
    pub rows: Vec<Row>,
    pub structure: Structure,
    pub units: UnitKind,
}

fn node_row(table: Table, symbols: &[u32], node: usize) -> Row {
    Row {
        table,
        symbols: symbols.to_vec(),
        units: vec![(node, 1.0)],
    }
}

impl EncoderInput {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Builds the input a model of `kind` consumes from extracted views.
    pub fn from_views(kind: ModelKind, views: &ProgramViews) -> Self {
        match kind {
            ModelKind::Lstm | ModelKind::Transformer => {
                let t = &views.tokens;
                let rows = t
                    .ids
                    .iter()
                    .zip(&t.units)
                    .map(|(&id, &u)| Row {
                        table: Table::Tokens,
                        symbols: vec![id],
                        units: vec![(u as usize, 1.0)],
                    })
                    .collect();
                EncoderInput {
                    rows,
                    structure: Structure::Sequence,
                    units: UnitKind::Lexed,
                }
            }
            ModelKind::Tbcnn => {
                let t = &views.tree;
                let rows = t
                    .symbols
                    .iter()
                    .enumerate()
                    .map(|(i, s)| node_row(Table::Nodes, s, i))
                    .collect();
                EncoderInput {
                    rows,
                    structure: Structure::Tree {
                        root: t.root,
                        children: t.children.clone(),
                    },
                    units: UnitKind::Node,
                }
            }
            ModelKind::AutoenCode => {
                let l = &views.leaves;
                let rows = l
                    .nodes
                    .iter()
                    .zip(&l.symbols)
                    .map(|(&n, s)| node_row(Table::Nodes, s, n))
                    .collect();
                EncoderInput {
                    rows,
                    structure: Structure::Leaves { plan: None },
                    units: UnitKind::Node,
                }
            }
            ModelKind::Code2Vec => {
                let mut rows = Vec::new();
                let mut contexts = Vec::new();
                for c in &views.paths.contexts {
                    let (l, r) = (c.nodes[0], c.nodes[c.nodes.len() - 1]);
                    let inner = &c.nodes[1..c.nodes.len() - 1];
                    let share = 1.0 / inner.len().max(1) as f64;
                    let base = rows.len();
                    rows.push(node_row(Table::Leaves, &[c.left_token], l));
                    rows.push(Row {
                        table: Table::Paths,
                        symbols: vec![c.path_id],
                        units: inner.iter().map(|&n| (n, share)).collect(),
                    });
                    rows.push(node_row(Table::Leaves, &[c.right_token], r));
                    contexts.push([base, base + 1, base + 2]);
                }
                EncoderInput {
                    rows,
                    structure: Structure::Contexts(contexts),
                    units: UnitKind::Node,
                }
            }
            ModelKind::Code2Seq => {
                let mut rows = Vec::new();
                let mut contexts = Vec::new();
                for c in &views.paths.contexts {
                    let (l, r) = (c.nodes[0], c.nodes[c.nodes.len() - 1]);
                    let left = rows.len();
                    rows.push(node_row(Table::Tokens, &c.left_leaf, l));
                    let mut path = Vec::with_capacity(c.path.len());
                    for (&ty, &n) in c.path.iter().zip(&c.nodes[1..c.nodes.len() - 1]) {
                        path.push(rows.len());
                        rows.push(node_row(Table::Types, &[ty], n));
                    }
                    let right = rows.len();
                    rows.push(node_row(Table::Tokens, &c.right_leaf, r));
                    contexts.push((left, path, right));
                }
                EncoderInput {
                    rows,
                    structure: Structure::PathSeqs(contexts),
                    units: UnitKind::Node,
                }
            }
            ModelKind::Ggnn => {
                let g = &views.graph;
                let rows = g
                    .symbols
                    .iter()
                    .enumerate()
                    .map(|(i, s)| node_row(Table::Nodes, s, i))
                    .collect();
                let edges = g.edges.iter().map(|&(s, d, t)| (s, d, t.index())).collect();
                EncoderInput {
                    rows,
                    structure: Structure::Graph { edges },
                    units: UnitKind::Node,
                }
            }
            ModelKind::Astnn => {
                let mut rows = Vec::new();
                let mut trees = Vec::new();
                for st in &views.statements.subtrees {
                    let start = rows.len();
                    for (&n, s) in st.nodes.iter().zip(&st.symbols) {
                        rows.push(node_row(Table::Nodes, s, n));
                    }
                    trees.push(StatementRows {
                        rows: (start..rows.len()).collect(),
                        children: st.children.clone(),
                    });
                }
                EncoderInput {
                    rows,
                    structure: Structure::Statements(trees),
                    units: UnitKind::Node,
                }
            }
        }
    }

    /// Edge-type count the graph structure indexes into.
    pub fn edge_types() -> usize {
        EdgeType::ALL.len()
    }
}
