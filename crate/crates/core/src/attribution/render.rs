use std::fmt::Write;

use html_escape::encode_text;

use super::{Band, BandedHighlight};
use crate::ast::Ast;

/// Standalone HTML page of `source` with banded tokens on colored
/// backgrounds. Several scored units can share one lexed token (subtokens,
/// a node and its keyword); the token takes the highest of their bands.
pub fn render_html(source: &str, ast: &Ast, highlight: &BandedHighlight, title: &str) -> String {
    let mut bands = vec![Band::None; ast.lexed.len()];
    let mut scores = vec![None::<f64>; ast.lexed.len()];
    for t in &highlight.tokens {
        if let Some(p) = t.position.filter(|&p| p < bands.len()) {
            bands[p] = bands[p].min(t.band);
            scores[p] = Some(scores[p].map_or(t.score, |s| s + t.score));
        }
    }
    let mut body = String::new();
    let mut cursor = 0;
    for ((tok, band), score) in ast.lexed.iter().zip(&bands).zip(&scores) {
        let (Some(gap), Some(text)) = (source.get(cursor..tok.span.start), source.get(tok.span.clone())) else {
            continue;
        };
        body.push_str(&encode_text(gap));
        match (band.color(), score) {
            (Some(color), Some(s)) => {
                let _ = write!(
                    body,
                    r#"<span style="background-color:{color}" title="{s:.4e}">{}</span>"#,
                    encode_text(text)
                );
            }
            _ => body.push_str(&encode_text(text)),
        }
        cursor = tok.span.end;
    }
    if let Some(rest) = source.get(cursor..) {
        body.push_str(&encode_text(rest));
    }
    let legend = [Band::Red, Band::Orange, Band::Yellow]
        .iter()
        .map(|b| {
            format!(
                r#"<span style="background-color:{};padding:0 6px">{:?}</span>"#,
                b.color().unwrap_or_default(),
                b
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{t}</title></head>\n\
         <body style=\"font-family:sans-serif\">\n<h3>{t}</h3>\n<p>{legend}</p>\n\
         <pre style=\"font-family:monospace;font-size:13px;line-height:1.4\">{body}</pre>\n</body></html>\n",
        t = encode_text(title)
    )
}
