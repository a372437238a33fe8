//! Normalized syntax trees for C and Java, identifier splitting and vocabularies.

mod labels;
mod parse;
mod subtoken;
mod vocab;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use labels::{is_block_container, is_statement_kind, label_for, LABELS_C, LABELS_JAVA};
pub use parse::parse_to_ast;
pub use subtoken::{is_identifier_like, subtokens, tokenize_camel};
pub use vocab::{build_vocab, Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

use crate::corpus::Lang;
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AstNode {
    pub id: NodeId,
    #[serde(rename = "type")]
    pub type_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    pub children: Vec<NodeId>,
    /// Grammar kind the node was converted from.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub kind: String,
    /// Byte range in the program text.
    #[serde(default)]
    pub span: Range<usize>,
    /// Statement-level node (a split point for statement trees).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub statement: bool,
}

impl AstNode {
    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }
}

/// One terminal of the lexed source (comments excluded, literals whole).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexToken {
    pub text: String,
    pub span: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ast {
    pub root: NodeId,
    pub nodes: Vec<AstNode>,
    pub source_id: String,
    pub lang: Lang,
    #[serde(default)]
    pub lexed: Vec<LexToken>,
}

impl Ast {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    /// Node ids in preorder from the root.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Leaf ids in source order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.nodes[id].is_leaf())
            .collect()
    }

    pub fn leaf_tokens(&self) -> Vec<&str> {
        self.leaves()
            .into_iter()
            .filter_map(|id| self.nodes[id].token.as_deref())
            .collect()
    }

    /// Parent of every node (`None` for the root).
    pub fn parents(&self) -> Vec<Option<NodeId>> {
        let mut parents = vec![None; self.nodes.len()];
        for n in &self.nodes {
            for &c in &n.children {
                parents[c] = Some(n.id);
            }
        }
        parents
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 1usize)];
        while let Some((id, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(self.nodes[id].children.iter().map(|&c| (c, d + 1)));
        }
        best
    }

    /// Checks the tree shape: ids dense and matching positions, one root,
    /// each other node with exactly one parent, every node reachable, and
    /// leaves exactly the nodes carrying a token.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 || self.root >= n {
            return Err(Error::arg("ast has no root"));
        }
        let mut indeg = vec![0usize; n];
        let mut edges = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::arg(format!("node at {i} carries id {}", node.id)));
            }
            if node.is_leaf() != node.children.is_empty() {
                return Err(Error::arg(format!("node {i}: token present iff leaf violated")));
            }
            for &c in &node.children {
                if c >= n {
                    return Err(Error::arg(format!("node {i}: child {c} out of range")));
                }
                indeg[c] += 1;
                edges += 1;
            }
        }
        if indeg[self.root] != 0 || indeg.iter().enumerate().any(|(i, &d)| i != self.root && d != 1) {
            return Err(Error::arg("ast nodes must have exactly one parent"));
        }
        if edges != n - 1 || self.preorder().len() != n {
            return Err(Error::arg("ast is not a single connected tree"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::{build, Shape::*};

    #[test]
    fn depth_counts_nodes_on_longest_path() {
        let ast = build(&Node("R", vec![Leaf("ID", "a"), Node("B", vec![Leaf("ID", "b")])]));
        assert_eq!(ast.depth(), 3);
        assert_eq!(ast.leaf_tokens(), vec!["a", "b"]);
        ast.validate().unwrap();
    }

    #[test]
    fn validate_rejects_shared_child() {
        let mut ast = build(&Node("R", vec![Leaf("ID", "a"), Node("B", vec![Leaf("ID", "b")])]));
        ast.nodes[2].children.push(1);
        assert!(ast.validate().is_err());
    }
}
