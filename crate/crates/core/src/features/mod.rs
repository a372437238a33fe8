//! Model input views derived from an AST: token sequences, typed trees, leaf
//! sequences, path contexts, program graphs and statement-tree sequences.

mod graph;
mod paths;
mod statements;
mod tokens;

use serde::{Deserialize, Serialize};

pub use graph::{build_program_graph, EdgeType, ProgramGraph};
pub use paths::{
    extract_path_contexts, path_key, path_length, path_width, sample_paths, PathContext,
    PathContextSet,
};
pub use statements::{split_statement_trees, StatementTree, StatementTreeSeq};
pub use tokens::{sequence_tokens, to_leaf_seq, to_token_seq, LeafSeq, SeqToken, TokenSeq};

use crate::ast::{build_vocab, subtokens, Ast, NodeId, Vocabulary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Split identifier tokens into camel/snake subtokens.
    pub subtokens: bool,
    /// Longest token sequence fed to the sequence models.
    pub token_cap: usize,
    pub max_path_len: usize,
    pub max_path_width: usize,
    pub max_contexts: usize,
    pub vocab_size: usize,
    pub min_freq: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            subtokens: true,
            token_cap: 1000,
            max_path_len: 8,
            max_path_width: 2,
            max_contexts: 200,
            vocab_size: 1000,
            min_freq: 1,
        }
    }
}

/// Per-role vocabularies.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabs {
    /// Code (sub)tokens, shared with natural-language queries.
    pub tokens: Vocabulary,
    /// AST node symbols: type labels of inner nodes and (sub)tokens of leaves.
    pub nodes: Vocabulary,
    /// Whole leaf tokens (code2vec terminals).
    pub leaves: Vocabulary,
    /// Whole paths (code2vec path table).
    pub paths: Vocabulary,
    /// Node type labels (code2seq path nodes).
    pub types: Vocabulary,
}

impl Vocabs {
    /// Builds every vocabulary from training ASTs plus optional query texts.
    pub fn build(asts: &[&Ast], queries: &[&str], cfg: &FeatureConfig, seed: u64) -> Vocabs {
        let (max, min) = (cfg.vocab_size, cfg.min_freq);
        let mut token_streams: Vec<Vec<String>> = asts
            .iter()
            .map(|a| sequence_tokens(a, cfg.subtokens).into_iter().map(|t| t.text).collect())
            .collect();
        token_streams.extend(queries.iter().map(|q| query_tokens(q, cfg.subtokens)));
        let tokens = build_vocab(token_streams, max, min);
        let nodes = build_vocab(
            asts.iter().map(|a| node_strings(a, cfg.subtokens).into_iter().flatten()),
            max,
            min,
        );
        let leaves = build_vocab(asts.iter().map(|a| a.leaf_tokens()), max, min);
        let types = build_vocab(
            asts.iter().map(|a| a.nodes.iter().map(|n| n.type_label.as_str())),
            max,
            min,
        );
        let paths = build_vocab(
            asts.iter().map(|a| {
                sample_paths(a, cfg, seed)
                    .iter()
                    .map(|p| path_key(a, p))
                    .collect::<Vec<_>>()
            }),
            max,
            min,
        );
        Vocabs {
            tokens,
            nodes,
            leaves,
            paths,
            types,
        }
    }
}

/// Query words, split like code tokens so both sides share one vocabulary.
pub fn query_tokens(query: &str, split: bool) -> Vec<String> {
    query
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .flat_map(|w| subtokens(w, split))
        .map(|w| w.to_lowercase())
        .collect()
}

/// Symbols of every node: inner nodes by type label, leaves by their
/// (sub)tokens.
pub fn node_strings(ast: &Ast, split: bool) -> Vec<Vec<String>> {
    ast.nodes
        .iter()
        .map(|n| match &n.token {
            Some(t) => subtokens(t, split),
            None => vec![n.type_label.clone()],
        })
        .collect()
}

pub fn node_symbols(ast: &Ast, vocab: &Vocabulary, split: bool) -> Vec<Vec<u32>> {
    node_strings(ast, split)
        .into_iter()
        .map(|ss| ss.iter().map(|s| vocab.get(s) as u32).collect())
        .collect()
}

/// Typed tree for tree-convolution: the AST shape with node symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub root: NodeId,
    pub symbols: Vec<Vec<u32>>,
    pub children: Vec<Vec<NodeId>>,
}

pub fn to_tree_view(ast: &Ast, vocabs: &Vocabs, cfg: &FeatureConfig) -> TreeView {
    TreeView {
        root: ast.root,
        symbols: node_symbols(ast, &vocabs.nodes, cfg.subtokens),
        children: ast.nodes.iter().map(|n| n.children.clone()).collect(),
    }
}

/// Union of the model input encodings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "view", rename_all = "snake_case")]
pub enum FeatureView {
    Tokens(TokenSeq),
    Tree(TreeView),
    Leaves(LeafSeq),
    Paths(PathContextSet),
    Graph(ProgramGraph),
    Statements(StatementTreeSeq),
}

impl FeatureView {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureView::Tokens(_) => "tokens",
            FeatureView::Tree(_) => "tree",
            FeatureView::Leaves(_) => "leaves",
            FeatureView::Paths(_) => "paths",
            FeatureView::Graph(_) => "graph",
            FeatureView::Statements(_) => "statements",
        }
    }
}

/// Every view of one program, as stored by the extraction stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramViews {
    pub id: String,
    pub tokens: TokenSeq,
    pub tree: TreeView,
    pub leaves: LeafSeq,
    pub paths: PathContextSet,
    pub graph: ProgramGraph,
    pub statements: StatementTreeSeq,
}

pub fn extract_views(ast: &Ast, vocabs: &Vocabs, cfg: &FeatureConfig, seed: u64) -> ProgramViews {
    ProgramViews {
        id: ast.source_id.clone(),
        tokens: to_token_seq(ast, &vocabs.tokens, cfg.token_cap, cfg.subtokens),
        tree: to_tree_view(ast, vocabs, cfg),
        leaves: to_leaf_seq(ast, &vocabs.nodes, cfg.subtokens),
        paths: extract_path_contexts(ast, vocabs, cfg, seed),
        graph: build_program_graph(ast, &vocabs.nodes, cfg.subtokens),
        statements: split_statement_trees(ast, &vocabs.nodes, cfg.subtokens),
    }
}
