use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{FeatureConfig, Vocabs};
use crate::ast::{subtokens, Ast, NodeId};
use crate::seed;

/// A leaf-to-leaf path through the lowest common ancestor.
///
/// `nodes` holds the AST ids along the path (left leaf first, right leaf
/// last). The id fields carry the encodings used by the two path models:
/// subtoken lists and inner-node types (code2seq), and whole-token / whole-path
/// table entries (code2vec).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathContext {
    pub nodes: Vec<NodeId>,
    pub left_leaf: Vec<u32>,
    pub path: Vec<u32>,
    pub right_leaf: Vec<u32>,
    pub left_token: u32,
    pub path_id: u32,
    pub right_token: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathContextSet {
    pub contexts: Vec<PathContext>,
    /// Leaf pairs satisfying the length/width limits before sampling.
    pub candidates: usize,
}

impl PathContextSet {
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }
}

struct Shape {
    parent: Vec<Option<NodeId>>,
    depth: Vec<usize>,
    /// Position of each node among its parent's children.
    slot: Vec<usize>,
}

impl Shape {
    fn of(ast: &Ast) -> Shape {
        let n = ast.len();
        let mut parent = vec![None; n];
        let mut depth = vec![0; n];
        let mut slot = vec![0; n];
        for id in ast.preorder() {
            for (k, &c) in ast.nodes[id].children.iter().enumerate() {
                parent[c] = Some(id);
                depth[c] = depth[id] + 1;
                slot[c] = k;
            }
        }
        Shape { parent, depth, slot }
    }

    /// Path between two nodes, or `None` when it exceeds the limits.
    fn path(&self, a: NodeId, b: NodeId, max_len: usize, max_width: usize) -> Option<Vec<NodeId>> {
        let (mut x, mut y) = (a, b);
        let mut up = vec![a];
        let mut down = vec![b];
        while self.depth[x] > self.depth[y] {
            x = self.parent[x]?;
            up.push(x);
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y]?;
            down.push(y);
        }
        while x != y {
            if up.len() + down.len() > max_len {
                return None;
            }
            x = self.parent[x]?;
            y = self.parent[y]?;
            up.push(x);
            down.push(y);
        }
        // `x == y` is the common ancestor and sits at the end of both lists.
        down.pop();
        let len = up.len() + down.len() - 1;
        if len > max_len {
            return None;
        }
        let below_a = up[up.len() - 2];
        let below_b = *down.last()?;
        if self.slot[below_a].abs_diff(self.slot[below_b]) > max_width {
            return None;
        }
        up.extend(down.into_iter().rev());
        Some(up)
    }

    fn apex(&self, nodes: &[NodeId]) -> usize {
        (0..nodes.len()).min_by_key(|&i| self.depth[nodes[i]]).unwrap_or(0)
    }
}

/// Number of edges on the path.
pub fn path_length(nodes: &[NodeId]) -> usize {
    nodes.len().saturating_sub(1)
}

/// Distance between the two branches at the common ancestor, counted in
/// child positions.
pub fn path_width(ast: &Ast, nodes: &[NodeId]) -> usize {
    let shape = Shape::of(ast);
    let apex = shape.apex(nodes);
    if apex == 0 || apex + 1 >= nodes.len() {
        return 0;
    }
    shape.slot[nodes[apex - 1]].abs_diff(shape.slot[nodes[apex + 1]])
}

fn key_with(shape: &Shape, ast: &Ast, nodes: &[NodeId]) -> String {
    if nodes.len() < 3 {
        return String::new();
    }
    let apex = shape.apex(nodes);
    let mut key = String::new();
    for (i, &n) in nodes.iter().enumerate().take(nodes.len() - 1).skip(1) {
        if i > 1 {
            key.push(if i <= apex { '^' } else { '_' });
        }
        key.push_str(&ast.nodes[n].type_label);
    }
    key
}

/// Whole-path string (inner node types, `^` going up and `_` going down).
pub fn path_key(ast: &Ast, nodes: &[NodeId]) -> String {
    key_with(&Shape::of(ast), ast, nodes)
}

/// Every leaf pair within the length and width limits, then a uniform
/// sample without replacement when there are more than `max_contexts`.
/// The sample depends only on the seed and the program id.
pub fn sample_paths(ast: &Ast, cfg: &FeatureConfig, seed: u64) -> Vec<Vec<NodeId>> {
    candidates_and_sample(ast, cfg, seed).1
}

fn candidates_and_sample(ast: &Ast, cfg: &FeatureConfig, seed: u64) -> (usize, Vec<Vec<NodeId>>) {
    let leaves = ast.leaves();
    if leaves.len() < 2 {
        return (0, Vec::new());
    }
    let shape = Shape::of(ast);
    let mut all = Vec::new();
    for i in 0..leaves.len() {
        for j in i + 1..leaves.len() {
            if let Some(p) = shape.path(leaves[i], leaves[j], cfg.max_path_len, cfg.max_path_width) {
                all.push(p);
            }
        }
    }
    let total = all.len();
    if total <= cfg.max_contexts {
        return (total, all);
    }
    let mut rng = seed::rng(seed, &format!("features.paths/{}", ast.source_id));
    let mut picked = sample(&mut rng, total, cfg.max_contexts).into_vec();
    picked.sort_unstable();
    let mut slots: Vec<Option<Vec<NodeId>>> = all.into_iter().map(Some).collect();
    (total, picked.into_iter().filter_map(|k| slots[k].take()).collect())
}

pub fn extract_path_contexts(ast: &Ast, vocabs: &Vocabs, cfg: &FeatureConfig, seed: u64) -> PathContextSet {
    let (candidates, paths) = candidates_and_sample(ast, cfg, seed);
    let shape = Shape::of(ast);
    let token = |n: NodeId| ast.nodes[n].token.as_deref().unwrap_or("");
    let subs = |n: NodeId| -> Vec<u32> {
        subtokens(token(n), true)
            .iter()
            .map(|s| vocabs.tokens.get(s) as u32)
            .collect()
    };
    let contexts = paths
        .into_iter()
        .map(|nodes| {
            let (l, r) = (nodes[0], nodes[nodes.len() - 1]);
            PathContext {
                left_leaf: subs(l),
                path: nodes[1..nodes.len() - 1]
                    .iter()
                    .map(|&n| vocabs.types.get(&ast.nodes[n].type_label) as u32)
                    .collect(),
                right_leaf: subs(r),
                left_token: vocabs.leaves.get(token(l)) as u32,
                path_id: vocabs.paths.get(&key_with(&shape, ast, &nodes)) as u32,
                right_token: vocabs.leaves.get(token(r)) as u32,
                nodes,
            }
        })
        .collect();
    PathContextSet {
        contexts,
        candidates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::test_support::{build, Shape::*};
    use crate::ast::parse_to_ast;
    use crate::corpus::{synthetic, Lang};
    use std::collections::VecDeque;

    fn cfg(max_len: usize, max_width: usize, max_contexts: usize) -> FeatureConfig {
        FeatureConfig {
            max_path_len: max_len,
            max_path_width: max_width,
            max_contexts,
            ..FeatureConfig::default()
        }
    }

    /// Reference: breadth-first search over the undirected tree.
    fn bfs_path(ast: &Ast, a: NodeId, b: NodeId) -> Vec<NodeId> {
        let parents = ast.parents();
        let mut prev = vec![usize::MAX; ast.len()];
        let mut queue = VecDeque::from([a]);
        prev[a] = a;
        while let Some(u) = queue.pop_front() {
            let mut nbrs = ast.nodes[u].children.clone();
            nbrs.extend(parents[u]);
            for v in nbrs {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut path = vec![b];
        while *path.last().unwrap() != a {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        path
    }

    #[test]
    fn two_leaf_tree_has_one_context() {
        let ast = build(&Node("Root", vec![Leaf("ID", "a"), Leaf("ID", "b")]));
        let paths = sample_paths(&ast, &cfg(8, 2, 200), 0);
        assert_eq!(paths, vec![vec![1, 0, 2]]);
        assert_eq!(path_key(&ast, &paths[0]), "Root");
    }

    #[test]
    fn star_tree_yields_all_pairs() {
        let n = 7;
        let kids = (0..n).map(|_| Leaf("ID", "x")).collect();
        let ast = build(&Node("Root", kids));
        let paths = sample_paths(&ast, &cfg(8, n, 1000), 0);
        assert_eq!(paths.len(), n * (n - 1) / 2);
        for p in &paths {
            assert_eq!(p, &bfs_path(&ast, p[0], p[2]));
        }
    }

    #[test]
    fn matches_brute_force_on_real_programs() {
        for p in synthetic::generate(Lang::C, 3, 1, 2).unwrap() {
            let ast = parse_to_ast(&p).unwrap();
            let c = cfg(8, 2, usize::MAX);
            let got = sample_paths(&ast, &c, 0);
            let leaves = ast.leaves();
            let mut want = Vec::new();
            for i in 0..leaves.len() {
                for j in i + 1..leaves.len() {
                    let path = bfs_path(&ast, leaves[i], leaves[j]);
                    if path_length(&path) <= 8 && path_width(&ast, &path) <= 2 {
                        want.push(path);
                    }
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn sampling_is_capped_and_deterministic() {
        let p = &synthetic::generate(Lang::C, 1, 1, 3).unwrap()[0];
        let ast = parse_to_ast(p).unwrap();
        let c = cfg(8, 2, 20);
        let a = sample_paths(&ast, &c, 11);
        assert_eq!(a.len(), 20);
        assert_eq!(a, sample_paths(&ast, &c, 11));
    }
}
