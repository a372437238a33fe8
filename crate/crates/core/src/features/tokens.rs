use serde::{Deserialize, Serialize};

use super::node_symbols;
use crate::ast::{subtokens, Ast, NodeId, Vocabulary};

/// One sequence position: a (sub)token and the lexed token it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqToken {
    pub text: String,
    pub lexed: usize,
}

/// Source tokens for the sequence models, split into subtokens when asked.
pub fn sequence_tokens(ast: &Ast, split: bool) -> Vec<SeqToken> {
    ast.lexed
        .iter()
        .enumerate()
        .flat_map(|(i, t)| {
            subtokens(&t.text, split)
                .into_iter()
                .map(move |text| SeqToken { text, lexed: i })
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub ids: Vec<u32>,
    /// Index into the lexed token stream for every position.
    pub units: Vec<u32>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn to_token_seq(ast: &Ast, vocab: &Vocabulary, cap: usize, split: bool) -> TokenSeq {
    let toks = sequence_tokens(ast, split);
    let toks = &toks[..toks.len().min(cap)];
    TokenSeq {
        ids: toks.iter().map(|t| vocab.get(&t.text) as u32).collect(),
        units: toks.iter().map(|t| t.lexed as u32).collect(),
    }
}

/// AST leaves in source order with their symbol ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafSeq {
    pub nodes: Vec<NodeId>,
    pub symbols: Vec<Vec<u32>>,
}

impl LeafSeq {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn to_leaf_seq(ast: &Ast, vocab: &Vocabulary, split: bool) -> LeafSeq {
    let all = node_symbols(ast, vocab, split);
    let nodes = ast.leaves();
    LeafSeq {
        symbols: nodes.iter().map(|&n| all[n].clone()).collect(),
        nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse_to_ast, Vocabulary, UNK};
    use crate::corpus::{Lang, SourceProgram};

    fn ast(text: &str) -> Ast {
        parse_to_ast(&SourceProgram::new("t", Lang::C, text).unwrap()).unwrap()
    }

    #[test]
    fn ids_follow_vocab_and_oov_is_unk() {
        let v = Vocabulary::from_tokens(["int".to_string(), "a".to_string()], 2, 1);
        let seq = to_token_seq(&ast("int a;"), &v, 100, true);
        assert_eq!(seq.ids, vec![2, 3, UNK as u32]);
        assert_eq!(seq.units, vec![0, 1, 2]);
    }

    #[test]
    fn cap_truncates() {
        let v = Vocabulary::from_tokens(Vec::<String>::new(), 0, 1);
        let seq = to_token_seq(&ast("int a = b + c;"), &v, 2, true);
        assert_eq!(seq.len(), 2);
    }

    #[test]
    fn subtokens_keep_their_source_position() {
        let v = Vocabulary::from_tokens(Vec::<String>::new(), 0, 1);
        let seq = to_token_seq(&ast("int maxValue;"), &v, 100, true);
        assert_eq!(seq.units, vec![0, 1, 1, 2]);
        let raw = to_token_seq(&ast("int maxValue;"), &v, 100, false);
        assert_eq!(raw.units, vec![0, 1, 2]);
    }

    #[test]
    fn leaves_in_source_order() {
        let v = Vocabulary::from_tokens(["a".to_string(), "b".to_string()], 2, 1);
        let a = ast("int x = a + b;");
        let leaves = to_leaf_seq(&a, &v, true);
        let toks: Vec<&str> = leaves.nodes.iter().map(|&n| a.nodes[n].token.as_deref().unwrap()).collect();
        assert_eq!(toks, a.leaf_tokens());
        assert_eq!(toks, vec!["int", "x", "a", "+", "b"]);
        assert!(leaves.len() < a.len());
    }
}
