use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::AttributionMap;
use crate::encoders::ModelKind;
use crate::error::{Error, Result};

pub const OTHER: &str = "OTHER";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Initialization,
    Control,
    Expression,
}

/// Heatmap columns in display order. Labels are shared by C and Java.
pub const NODE_TYPES: &[(&str, Category)] = &[
    ("FuncDef", Category::Initialization),
    ("Decl", Category::Initialization),
    ("Param", Category::Initialization),
    ("InitDecl", Category::Initialization),
    ("IdentifierType", Category::Initialization),
    ("ArrayDecl", Category::Initialization),
    ("PtrDecl", Category::Initialization),
    ("InitList", Category::Initialization),
    ("Assignment", Category::Initialization),
    ("Return", Category::Control),
    ("If", Category::Control),
    ("For", Category::Control),
    ("While", Category::Control),
    ("DoWhile", Category::Control),
    ("Switch", Category::Control),
    ("Case", Category::Control),
    ("Continue", Category::Control),
    ("Break", Category::Control),
    ("ID", Category::Expression),
    ("Constant", Category::Expression),
    ("BinaryOp", Category::Expression),
    ("FuncCall", Category::Expression),
    ("ExprList", Category::Expression),
    ("ArrayRef", Category::Expression),
    ("StructRef", Category::Expression),
    ("TernaryOp", Category::Expression),
    ("Cast", Category::Expression),
    ("New", Category::Expression),
];

/// Column a node type is counted under: unary operators join `ID`, types
/// outside the table fall into `OTHER`.
fn column(node_type: &str) -> &str {
    let t = if node_type == "UnaryOp" { "ID" } else { node_type };
    NODE_TYPES.iter().find(|(n, _)| *n == t).map_or(OTHER, |(n, _)| n)
}

pub fn category_of(node_type: &str) -> Option<Category> {
    let c = column(node_type);
    NODE_TYPES.iter().find(|(n, _)| *n == c).map(|(_, cat)| *cat)
}

/// Mean normalized attribution per (model, node type).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeTypeHeatmap {
    pub models: Vec<ModelKind>,
    /// `NODE_TYPES` in order, then `OTHER`.
    pub types: Vec<String>,
    /// `values[model][type]`; `None` where no program of the model has a
    /// node of that type.
    pub values: Vec<Vec<Option<f64>>>,
    /// Programs contributing per model (all-zero maps are skipped).
    pub programs: Vec<usize>,
    /// Node types that landed in `OTHER`.
    pub other_types: Vec<String>,
}

/// Each program's scores are divided by their maximum magnitude, averaged
/// per node type within the program, and those per-program means are
/// averaged over the model's programs.
pub fn aggregate_by_node_type(maps: &[&AttributionMap]) -> Result<NodeTypeHeatmap> {
    if maps.is_empty() {
        return Err(Error::arg("no attribution maps to aggregate"));
    }
    let types: Vec<String> = NODE_TYPES.iter().map(|(n, _)| n.to_string()).chain([OTHER.to_string()]).collect();
    let col_of = |t: &str| types.iter().position(|c| c == column(t)).expect("OTHER is always a column");
    let mut models: Vec<ModelKind> = Vec::new();
    // Per model: per column (sum of program means, programs).
    let mut acc: BTreeMap<ModelKind, (Vec<(f64, usize)>, usize)> = BTreeMap::new();
    let mut other = BTreeSet::new();
    for map in maps {
        if !models.contains(&map.model) {
            models.push(map.model);
        }
        let (cols, programs) = acc.entry(map.model).or_insert_with(|| (vec![(0.0, 0); types.len()], 0));
        let scale = map.scores.iter().map(|s| s.score.abs()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            continue;
        }
        *programs += 1;
        let mut within = vec![(0.0, 0usize); types.len()];
        for s in &map.scores {
            let c = col_of(&s.node_type);
            if types[c] == OTHER {
                other.insert(s.node_type.clone());
            }
            within[c].0 += s.score / scale;
            within[c].1 += 1;
        }
        for (c, (sum, n)) in within.into_iter().enumerate() {
            if n > 0 {
                cols[c].0 += sum / n as f64;
                cols[c].1 += 1;
            }
        }
    }
    let values = models
        .iter()
        .map(|m| acc[m].0.iter().map(|&(s, n)| (n > 0).then(|| s / n as f64)).collect())
        .collect();
    let programs = models.iter().map(|m| acc[m].1).collect();
    Ok(NodeTypeHeatmap {
        models,
        types,
        values,
        programs,
        other_types: other.into_iter().collect(),
    })
}

impl NodeTypeHeatmap {
    pub fn get(&self, model: ModelKind, node_type: &str) -> Option<f64> {
        let m = self.models.iter().position(|&k| k == model)?;
        let c = self.types.iter().position(|t| t == column(node_type))?;
        self.values[m][c]
    }

    /// Rows are models, columns node types; empty cells have no data.
    pub fn to_csv(&self) -> String {
        let mut out = format!("model,{}\n", self.types.join(","));
        for (m, row) in self.models.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| v.map(|x| format!("{x:.6}")).unwrap_or_default()).collect();
            let _ = writeln!(out, "{m},{}", cells.join(","));
        }
        out
    }

    /// A colored grid: red for positive, blue for negative, white at 0,
    /// saturated at magnitude 1.
    pub fn to_svg(&self, title: &str) -> String {
        const CELL: usize = 28;
        const LEFT: usize = 110;
        const TOP: usize = 110;
        let width = LEFT + CELL * self.types.len() + 20;
        let height = TOP + CELL * self.models.len() + 20;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<text x="4" y="16" font-size="13">{}</text>"#, html_escape::encode_text(title));
        for (c, t) in self.types.iter().enumerate() {
            let x = LEFT + c * CELL + CELL / 2;
            let _ = writeln!(s, r#"<text transform="translate({x},{}) rotate(-60)">{t}</text>"#, TOP - 6);
        }
        for (r, (m, row)) in self.models.iter().zip(&self.values).enumerate() {
            let y = TOP + r * CELL;
            let _ = writeln!(s, r#"<text x="4" y="{}">{m}</text>"#, y + CELL / 2 + 4);
            for (c, v) in row.iter().enumerate() {
                let x = LEFT + c * CELL;
                let fill = match v {
                    None => "#dddddd".to_string(),
                    Some(v) => {
                        let fade = (255.0 * (1.0 - v.abs().min(1.0))).round() as u8;
                        if *v >= 0.0 {
                            format!("#ff{fade:02x}{fade:02x}")
                        } else {
                            format!("#{fade:02x}{fade:02x}ff")
                        }
                    }
                };
                let _ = writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ffffff"/>"##
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::TokenScore;
    use crate::encoders::UnitKind;
    use crate::tasks::TaskKind;

    fn map(model: ModelKind, scores: &[(&str, f64)]) -> AttributionMap {
        AttributionMap {
            program_id: "p".into(),
            model,
            task: TaskKind::Classification,
            delta: 0.0,
            steps: 1,
            residual: 0.0,
            units: UnitKind::Node,
            scores: scores
                .iter()
                .enumerate()
                .map(|(i, &(t, score))| TokenScore {
                    token: t.into(),
                    position: None,
                    node_type: t.into(),
                    score,
                    unit: i,
                })
                .collect(),
        }
    }

    #[test]
    fn a_single_type_normalizes_to_one() {
        let m = map(ModelKind::Ggnn, &[("While", 0.37)]);
        let h = aggregate_by_node_type(&[&m]).unwrap();
        assert_eq!(h.get(ModelKind::Ggnn, "While"), Some(1.0));
        assert_eq!(h.get(ModelKind::Ggnn, "If"), None);
    }

    #[test]
    fn categories_partition_the_columns() {
        let names: BTreeSet<&str> = NODE_TYPES.iter().map(|(n, _)| *n).collect();
        assert_eq!(names.len(), NODE_TYPES.len());
        for (n, c) in NODE_TYPES {
            assert_eq!(category_of(n), Some(*c));
        }
        assert_eq!(category_of("Compound"), None);
    }

    #[test]
    fn unary_operators_count_as_identifiers_and_unknowns_as_other() {
        let m = map(ModelKind::Astnn, &[("UnaryOp", -1.0), ("ID", 0.5), ("Compound", 0.25)]);
        let h = aggregate_by_node_type(&[&m]).unwrap();
        assert_eq!(h.get(ModelKind::Astnn, "ID"), Some(-0.25));
        assert_eq!(h.get(ModelKind::Astnn, OTHER), Some(0.25));
        assert_eq!(h.other_types, vec!["Compound".to_string()]);
    }

    #[test]
    fn programs_are_averaged_after_normalization() {
        let a = map(ModelKind::Tbcnn, &[("For", 2.0), ("ID", 1.0)]);
        let b = map(ModelKind::Tbcnn, &[("For", 10.0)]);
        let h = aggregate_by_node_type(&[&a, &b]).unwrap();
        assert_eq!(h.get(ModelKind::Tbcnn, "For"), Some(1.0));
        assert_eq!(h.get(ModelKind::Tbcnn, "ID"), Some(0.5));
        assert_eq!(h.programs, vec![2]);
        let csv = h.to_csv();
        assert!(csv.starts_with("model,FuncDef,"));
        assert!(h.to_svg("t").contains("<rect"));
    }

    #[test]
    fn empty_sets_are_rejected() {
        assert!(aggregate_by_node_type(&[]).is_err());
    }
}
