use serde::{Deserialize, Serialize};

use super::node_symbols;
use crate::ast::{is_block_container, Ast, NodeId, Vocabulary};

/// AST fragment headed by one statement. `children` indexes into `nodes`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementTree {
    pub nodes: Vec<NodeId>,
    pub children: Vec<Vec<usize>>,
    pub symbols: Vec<Vec<u32>>,
}

impl StatementTree {
    pub fn root(&self) -> NodeId {
        self.nodes[0]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementTreeSeq {
    pub subtrees: Vec<StatementTree>,
}

impl StatementTreeSeq {
    pub fn len(&self) -> usize {
        self.subtrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtrees.is_empty()
    }
}

struct Splitter<'a> {
    ast: &'a Ast,
    has_statement: Vec<bool>,
    symbols: Vec<Vec<u32>>,
    out: Vec<StatementTree>,
}

impl Splitter<'_> {
    fn is_container(&self, id: NodeId) -> bool {
        let n = &self.ast.nodes[id];
        is_block_container(self.ast.lang, &n.kind) && !n.children.is_empty()
    }

    /// Statements and non-empty blocks are cut out of the enclosing fragment
    /// and visited after it, which keeps source order.
    fn is_cut(&self, id: NodeId) -> bool {
        self.ast.nodes[id].statement || self.is_container(id)
    }

    fn visit(&mut self, id: NodeId) {
        let n = &self.ast.nodes[id];
        if n.statement {
            self.emit(id);
        } else if self.is_container(id) || (self.has_statement[id] && !n.is_leaf()) {
            for &c in &n.children {
                self.visit(c);
            }
        } else {
            self.emit(id);
        }
    }

    fn emit(&mut self, head: NodeId) {
        let mut tree = StatementTree::default();
        let mut deferred = Vec::new();
        let mut stack = vec![(head, None::<usize>)];
        while let Some((id, parent)) = stack.pop() {
            let local = tree.nodes.len();
            tree.nodes.push(id);
            tree.children.push(Vec::new());
            tree.symbols.push(self.symbols[id].clone());
            if let Some(p) = parent {
                tree.children[p].push(local);
            }
            let mut keep = Vec::new();
            for &c in &self.ast.nodes[id].children {
                if self.is_cut(c) {
                    deferred.push((local, c));
                } else {
                    keep.push(c);
                }
            }
            stack.extend(keep.into_iter().rev().map(|c| (c, Some(local))));
        }
        // Preorder of the fragment equals the order cut points were met in
        // when they are sorted by their position in the source.
        deferred.sort_by_key(|&(_, c)| self.ast.nodes[c].span.start);
        self.out.push(tree);
        for (_, c) in deferred {
            self.visit(c);
        }
    }
}

/// Splits the AST into statement-headed fragments in source order. Nested
/// blocks are lifted out of their statement and follow it in the sequence.
pub fn split_statement_trees(ast: &Ast, vocab: &Vocabulary, split: bool) -> StatementTreeSeq {
    let mut has_statement = vec![false; ast.len()];
    for id in ast.preorder().into_iter().rev() {
        let n = &ast.nodes[id];
        has_statement[id] = n.statement || n.children.iter().any(|&c| has_statement[c]);
    }
    let mut s = Splitter {
        ast,
        has_statement,
        symbols: node_symbols(ast, vocab, split),
        out: Vec::new(),
    };
    s.visit(ast.root);
    StatementTreeSeq { subtrees: s.out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_to_ast;
    use crate::ast::test_support::{build, Shape::*};
    use crate::corpus::{synthetic, Lang, SourceProgram};

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(Vec::<String>::new(), 0, 1)
    }

    fn parse(lang: Lang, text: &str) -> Ast {
        parse_to_ast(&SourceProgram::new("t", lang, text).unwrap()).unwrap()
    }

    fn leaf_multiset(ast: &Ast, seq: &StatementTreeSeq) -> (Vec<String>, Vec<String>) {
        let mut got: Vec<String> = seq
            .subtrees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .filter_map(|&n| ast.nodes[n].token.clone())
            .collect();
        let mut want: Vec<String> = ast.leaf_tokens().into_iter().map(String::from).collect();
        got.sort();
        want.sort();
        (got, want)
    }

    #[test]
    fn header_plus_statements() {
        let ast = parse(Lang::C, "int f(int n){ int a = n; a = a + 1; return a; }");
        let seq = split_statement_trees(&ast, &vocab(), true);
        let statements = ast.nodes.iter().filter(|n| n.statement).count();
        assert_eq!(seq.len(), statements);
        assert_eq!(seq.len(), 4);
        let heads: Vec<&str> = seq.subtrees.iter().map(|t| ast.nodes[t.root()].type_label.as_str()).collect();
        assert_eq!(heads, vec!["FuncDef", "Decl", "Assignment", "Return"]);
    }

    #[test]
    fn empty_body_is_header_only() {
        let ast = parse(Lang::Java, "void f() {}");
        let seq = split_statement_trees(&ast, &vocab(), true);
        assert_eq!(seq.len(), 1);
        assert_eq!(ast.nodes[seq.subtrees[0].root()].type_label, "FuncDef");
    }

    #[test]
    fn no_statements_gives_whole_tree() {
        let ast = build(&Node("Root", vec![Leaf("ID", "a"), Leaf("ID", "b")]));
        let seq = split_statement_trees(&ast, &vocab(), true);
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.subtrees[0].nodes, vec![0, 1, 2]);
    }

    #[test]
    fn nested_blocks_follow_their_header() {
        let ast = parse(Lang::C, "void f(){ if (x) { y = 1; } else z = 2; w = 3; }");
        let seq = split_statement_trees(&ast, &vocab(), true);
        let heads: Vec<String> = seq
            .subtrees
            .iter()
            .map(|t| {
                let n = &ast.nodes[t.root()];
                format!("{}:{}", n.type_label, n.span.start)
            })
            .collect();
        let starts: Vec<usize> = seq.subtrees.iter().map(|t| ast.nodes[t.root()].span.start).collect();
        let mut sorted = starts.clone();
        sorted.sort_unstable();
        assert_eq!(starts, sorted, "{heads:?}");
        assert_eq!(seq.len(), 5);
    }

    #[test]
    fn leaves_partitioned_and_heads_unique() {
        for lang in [Lang::C, Lang::Java] {
            for p in synthetic::generate(lang, 10, 2, 4).unwrap() {
                let ast = parse_to_ast(&p).unwrap();
                let seq = split_statement_trees(&ast, &vocab(), true);
                let (got, want) = leaf_multiset(&ast, &seq);
                assert_eq!(got, want);
                let mut seen = vec![0; ast.len()];
                for t in &seq.subtrees {
                    for &n in &t.nodes {
                        seen[n] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c <= 1));
                for n in ast.nodes.iter().filter(|n| n.statement) {
                    let heads = seq.subtrees.iter().filter(|t| t.root() == n.id).count();
                    assert_eq!(heads, 1);
                }
            }
        }
    }
}
