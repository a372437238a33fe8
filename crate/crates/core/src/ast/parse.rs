use std::cell::RefCell;
use std::ops::Range;

use tree_sitter::{Node, Parser};

use super::labels::{is_literal_kind, is_statement_kind, label_for};
use super::{Ast, AstNode, LexToken};
use crate::corpus::{Lang, SourceProgram};
use crate::error::{Error, Result};

thread_local! {
    static PARSERS: RefCell<[Option<Parser>; 2]> = const { RefCell::new([None, None]) };
}

const SKIPPED: &[&str] = &["comment", "line_comment", "block_comment", "preproc_include"];
const COLLAPSED: &[&str] = &["parenthesized_expression", "expression_statement", "else_clause"];
/// Parents whose operator token is kept as an `Op` leaf.
const OP_PARENTS: &[&str] = &[
    "binary_expression",
    "unary_expression",
    "update_expression",
    "assignment_expression",
    "pointer_expression",
];
/// Kinds whose keyword tokens carry meaning and are kept as `Keyword` leaves.
const KEEP_WORDS: &[&str] = &["sized_type_specifier", "modifiers"];

fn is_comment(kind: &str) -> bool {
    matches!(kind, "comment" | "line_comment" | "block_comment")
}

fn has_word(text: &str) -> bool {
    text.chars().any(|c| c.is_alphanumeric() || c == '_')
}

struct Tmp {
    label: String,
    kind: String,
    token: Option<String>,
    span: Range<usize>,
    statement: bool,
    children: Vec<Tmp>,
}

impl Tmp {
    fn leaf(label: &str, kind: &str, token: &str, span: Range<usize>) -> Tmp {
        Tmp {
            label: label.to_string(),
            kind: kind.to_string(),
            token: Some(token.to_string()),
            span,
            statement: false,
            children: Vec::new(),
        }
    }
}

struct Converter<'a> {
    src: &'a [u8],
    lang: Lang,
}

impl Converter<'_> {
    fn text(&self, node: Node) -> &str {
        node.utf8_text(self.src).unwrap_or("")
    }

    fn convert(&self, node: Node) -> Option<Tmp> {
        let kind = node.kind();
        if SKIPPED.contains(&kind) {
            return None;
        }
        if COLLAPSED.contains(&kind) {
            let mut named: Vec<Node> = Vec::new();
            let mut cursor = node.walk();
            for c in node.named_children(&mut cursor) {
                if !is_comment(c.kind()) {
                    named.push(c);
                }
            }
            if named.len() <= 1 {
                let mut inner = self.convert(*named.first()?)?;
                if is_statement_kind(self.lang, kind) {
                    inner.statement = true;
                }
                return Some(inner);
            }
        }

        let label = label_for(self.lang, kind);
        let text = self.text(node);
        if is_literal_kind(self.lang, kind) || node.child_count() == 0 {
            let mut leaf = Tmp::leaf(&label, kind, text, node.byte_range());
            leaf.statement = is_statement_kind(self.lang, kind);
            return Some(leaf);
        }

        let mut kept = Vec::new();
        let mut words = Vec::new();
        let mut cursor = node.walk();
        for child in node.children(&mut cursor) {
            if child.is_named() {
                if let Some(t) = self.convert(child) {
                    kept.push(t);
                }
                continue;
            }
            let ctext = self.text(child);
            if ctext.is_empty() || child.is_missing() {
                continue;
            }
            if OP_PARENTS.contains(&kind) && !has_word(ctext) {
                kept.push(Tmp::leaf("Op", "operator", ctext, child.byte_range()));
            } else if has_word(ctext) {
                if KEEP_WORDS.contains(&kind) {
                    kept.push(Tmp::leaf("Keyword", "keyword", ctext, child.byte_range()));
                } else {
                    words.push(child);
                }
            }
        }

        let label = if kind == "case_statement" && text.trim_start().starts_with("default") {
            "Default".to_string()
        } else {
            label
        };
        let mut out = Tmp {
            label,
            kind: kind.to_string(),
            token: None,
            span: node.byte_range(),
            statement: is_statement_kind(self.lang, kind),
            children: Vec::new(),
        };
        if kept.is_empty() {
            match words.as_slice() {
                [] => return None,
                [w] => out.token = Some(self.text(*w).to_string()),
                ws => {
                    out.children = ws
                        .iter()
                        .map(|w| Tmp::leaf("Keyword", "keyword", self.text(*w), w.byte_range()))
                        .collect()
                }
            }
        } else {
            out.children = kept;
        }
        Some(out)
    }

    fn lex(&self, node: Node, out: &mut Vec<LexToken>) {
        let kind = node.kind();
        if is_comment(kind) {
            return;
        }
        if (node.child_count() == 0 || is_literal_kind(self.lang, kind)) && !node.is_missing() {
            let text = self.text(node);
            if !text.is_empty() {
                out.push(LexToken {
                    text: text.to_string(),
                    span: node.byte_range(),
                });
            }
            return;
        }
        let mut cursor = node.walk();
        for c in node.children(&mut cursor) {
            self.lex(c, out);
        }
    }
}

fn first_error(node: Node) -> Option<Node> {
    if node.is_error() || node.is_missing() {
        return Some(node);
    }
    if !node.has_error() {
        return None;
    }
    let mut cursor = node.walk();
    let children: Vec<Node> = node.children(&mut cursor).collect();
    children.into_iter().find_map(first_error).or(Some(node))
}

fn flatten(tmp: Tmp, nodes: &mut Vec<AstNode>) -> usize {
    let id = nodes.len();
    nodes.push(AstNode {
        id,
        type_label: tmp.label,
        token: tmp.token,
        children: Vec::new(),
        kind: tmp.kind,
        span: tmp.span,
        statement: tmp.statement,
    });
    let kids: Vec<usize> = tmp.children.into_iter().map(|c| flatten(c, nodes)).collect();
    nodes[id].children = kids;
    id
}

/// Parses a program with the grammar of its language and converts the
/// concrete tree into the normalized AST. Ids are assigned in preorder.
pub fn parse_to_ast(program: &SourceProgram) -> Result<Ast> {
    if program.text.trim().is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            msg: "empty program".into(),
        });
    }
    let slot = match program.lang {
        Lang::C => 0,
        Lang::Java => 1,
    };
    let tree = PARSERS.with(|cell| {
        let mut parsers = cell.borrow_mut();
        if parsers[slot].is_none() {
            let mut p = Parser::new();
            let language = match program.lang {
                Lang::C => tree_sitter_c::LANGUAGE.into(),
                Lang::Java => tree_sitter_java::LANGUAGE.into(),
            };
            p.set_language(&language).map_err(|e| Error::Parse {
                line: 0,
                column: 0,
                msg: format!("grammar load failed: {e}"),
            })?;
            parsers[slot] = Some(p);
        }
        parsers[slot]
            .as_mut()
            .and_then(|p| p.parse(&program.text, None))
            .ok_or_else(|| Error::Parse {
                line: 0,
                column: 0,
                msg: "parser returned no tree".into(),
            })
    })?;

    let root = tree.root_node();
    if let Some(bad) = first_error(root) {
        let pos = bad.start_position();
        let what = if bad.is_missing() {
            format!("missing `{}`", bad.kind())
        } else {
            "syntax error".to_string()
        };
        return Err(Error::Parse {
            line: pos.row + 1,
            column: pos.column + 1,
            msg: what,
        });
    }

    let conv = Converter {
        src: program.text.as_bytes(),
        lang: program.lang,
    };
    let tmp = conv.convert(root).ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        msg: "no syntax beyond comments".into(),
    })?;
    let mut nodes = Vec::new();
    flatten(tmp, &mut nodes);
    let mut lexed = Vec::new();
    conv.lex(root, &mut lexed);
    Ok(Ast {
        root: 0,
        nodes,
        source_id: program.id.clone(),
        lang: program.lang,
        lexed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(lang: Lang, text: &str) -> Ast {
        parse_to_ast(&SourceProgram::new("t", lang, text).unwrap()).unwrap()
    }

    fn labels(ast: &Ast) -> Vec<&str> {
        ast.nodes.iter().map(|n| n.type_label.as_str()).collect()
    }

    /// Leaf tokens in order must be a subsequence of the lexed stream.
    fn assert_leaves_in_lexed(ast: &Ast) {
        let mut lexed = ast.lexed.iter();
        for tok in ast.leaf_tokens() {
            assert!(
                lexed.any(|l| l.text == tok),
                "leaf `{tok}` not found in order in lexed stream"
            );
        }
    }

    #[test]
    fn c_main_has_funcdef_and_return() {
        let ast = parse(Lang::C, "int main(){return 0;}");
        ast.validate().unwrap();
        let ls = labels(&ast);
        assert!(ls.contains(&"FuncDef"));
        assert!(ls.contains(&"Return"));
        assert_eq!(ast.leaf_tokens(), vec!["int", "main", "0"]);
        assert_leaves_in_lexed(&ast);
    }

    #[test]
    fn empty_text_is_parse_error() {
        let p = SourceProgram {
            id: "e".into(),
            lang: Lang::C,
            text: String::new(),
            label: None,
            doc: None,
        };
        assert!(matches!(parse_to_ast(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn syntax_error_reports_position() {
        let p = SourceProgram::new("e", Lang::C, "int main() {\n  int x = ;\n}").unwrap();
        match parse_to_ast(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn comments_dropped_and_literals_whole() {
        let ast = parse(
            Lang::C,
            "#include <stdio.h>\n// hi\nint main(){ printf(\"a b\\n\", x+1); i++; return; }",
        );
        let toks = ast.leaf_tokens();
        assert!(toks.contains(&"\"a b\\n\""));
        assert!(toks.contains(&"++"));
        assert!(!toks.iter().any(|t| t.contains("hi")));
        assert!(toks.contains(&"return"));
        assert!(ast.lexed.iter().all(|t| !t.text.starts_with("//")));
        assert_leaves_in_lexed(&ast);
    }

    #[test]
    fn expression_statements_are_flagged() {
        let ast = parse(Lang::C, "void f(){ a = 1; b = a; }");
        let flagged: Vec<&str> = ast
            .nodes
            .iter()
            .filter(|n| n.statement)
            .map(|n| n.type_label.as_str())
            .collect();
        assert_eq!(flagged, vec!["FuncDef", "Assignment", "Assignment"]);
    }

    #[test]
    fn java_bare_method() {
        let ast = parse(
            Lang::Java,
            "public static int sum(int[] xs) { int s = 0; for (int x : xs) { s += x; } return s; }",
        );
        ast.validate().unwrap();
        let ls = labels(&ast);
        for want in ["FuncDef", "ParamList", "Decl", "For", "Assignment", "Return", "ID"] {
            assert!(ls.contains(&want), "missing {want} in {ls:?}");
        }
        assert_leaves_in_lexed(&ast);
    }

    #[test]
    fn parse_is_deterministic() {
        let text = "int f(int n){ if (n < 2) return n; else return f(n-1)+f(n-2); }";
        assert_eq!(parse(Lang::C, text), parse(Lang::C, text));
    }
}
