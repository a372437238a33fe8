use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::node_symbols;
use crate::ast::{Ast, NodeId, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeType {
    Child,
    NextToken,
    LastLexicalUse,
}

impl EdgeType {
    pub const ALL: [EdgeType; 3] = [EdgeType::Child, EdgeType::NextToken, EdgeType::LastLexicalUse];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// AST nodes plus typed directed edges; node ids are AST ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramGraph {
    pub symbols: Vec<Vec<u32>>,
    pub edges: Vec<(NodeId, NodeId, EdgeType)>,
}

impl ProgramGraph {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn edges_of(&self, t: EdgeType) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.2 == t)
            .map(|&(s, d, _)| (s, d))
    }
}

/// Child edges (parent to child), a NextToken chain over the leaves in source
/// order, and a LastLexicalUse edge from each identifier leaf to the closest
/// earlier leaf carrying the same token.
pub fn build_program_graph(ast: &Ast, vocab: &Vocabulary, split: bool) -> ProgramGraph {
    let mut edges = Vec::new();
    for id in ast.preorder() {
        for &c in &ast.nodes[id].children {
            edges.push((id, c, EdgeType::Child));
        }
    }
    let leaves = ast.leaves();
    for w in leaves.windows(2) {
        edges.push((w[0], w[1], EdgeType::NextToken));
    }
    let mut last: HashMap<&str, NodeId> = HashMap::new();
    for &leaf in &leaves {
        let node = &ast.nodes[leaf];
        let Some(tok) = node.token.as_deref() else { continue };
        if node.type_label == "ID" {
            if let Some(&prev) = last.get(tok) {
                edges.push((leaf, prev, EdgeType::LastLexicalUse));
            }
        }
        last.insert(tok, leaf);
    }
    ProgramGraph {
        symbols: node_symbols(ast, vocab, split),
        edges,
    }
}
