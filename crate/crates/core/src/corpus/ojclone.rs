use std::collections::{BTreeSet, HashSet};

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ClonePair, SourceProgram};
use crate::error::{Error, Result};
use crate::seed;

/// Clone pairs drawn from the first problems of a labelled C corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OjClone {
    pub pairs: Vec<ClonePair>,
    pub positive_fraction: f64,
}

/// Samples `n_pairs` distinct unordered program pairs among programs whose
/// label is below `n_problems`. Two programs are clones iff they solve the
/// same problem.
pub fn build_ojclone(
    programs: &[SourceProgram],
    n_problems: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<OjClone> {
    let labels: BTreeSet<u32> = programs.iter().filter_map(|p| p.label).collect();
    if n_problems == 0 || n_problems > labels.len() {
        return Err(Error::arg(format!(
            "{n_problems} problems requested but the corpus has {} classes",
            labels.len()
        )));
    }
    let pool: Vec<&SourceProgram> = programs
        .iter()
        .filter(|p| p.label.is_some_and(|l| (l as usize) < n_problems))
        .collect();
    let m = pool.len();
    let possible = m * m.saturating_sub(1) / 2;
    let target = if n_pairs > possible {
        warn!("only {possible} distinct pairs available, {n_pairs} requested");
        possible
    } else {
        n_pairs
    };

    let mut rng = seed::rng(seed, "corpus.ojclone");
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(target);
    if target * 2 > possible {
        // Dense request: enumerate and shuffle-select.
        let all: Vec<(usize, usize)> =
            (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        let picked = rand::seq::index::sample(&mut rng, all.len(), target);
        let mut idx = picked.into_vec();
        idx.sort_unstable();
        chosen.extend(idx.into_iter().map(|k| all[k]));
    } else {
        let mut seen = HashSet::with_capacity(target);
        while chosen.len() < target {
            let i = rng.random_range(0..m);
            let j = rng.random_range(0..m);
            if i == j {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if seen.insert(key) {
                chosen.push(key);
            }
        }
    }

    let pairs: Vec<ClonePair> = chosen
        .into_iter()
        .map(|(i, j)| ClonePair {
            id_a: pool[i].id.clone(),
            id_b: pool[j].id.clone(),
            is_clone: pool[i].label == pool[j].label,
        })
        .collect();
    let positives = pairs.iter().filter(|p| p.is_clone).count();
    let positive_fraction = if pairs.is_empty() {
        0.0
    } else {
        positives as f64 / pairs.len() as f64
    };
    Ok(OjClone {
        pairs,
        positive_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Lang;

    fn corpus(classes: u32, per: usize) -> Vec<SourceProgram> {
        (0..classes)
            .flat_map(|c| {
                (0..per).map(move |i| {
                    SourceProgram::new(format!("{c}/{i}"), Lang::C, "int main(){}")
                        .unwrap()
                        .with_label(c)
                })
            })
            .collect()
    }

    #[test]
    fn deterministic_and_label_consistent() {
        let progs = corpus(20, 30);
        let a = build_ojclone(&progs, 15, 2000, 4).unwrap();
        let b = build_ojclone(&progs, 15, 2000, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pairs.len(), 2000);
        let label = |id: &str| id.split('/').next().unwrap().parse::<u32>().unwrap();
        for p in &a.pairs {
            assert_ne!(p.id_a, p.id_b);
            assert!(label(&p.id_a) < 15 && label(&p.id_b) < 15);
            assert_eq!(p.is_clone, label(&p.id_a) == label(&p.id_b));
        }
        let unique: HashSet<(&str, &str)> =
            a.pairs.iter().map(|p| (p.id_a.as_str(), p.id_b.as_str())).collect();
        assert_eq!(unique.len(), a.pairs.len());
    }

    #[test]
    fn too_many_problems_rejected() {
        assert!(build_ojclone(&corpus(3, 2), 4, 10, 0).is_err());
    }

    #[test]
    fn dense_request_takes_all_pairs() {
        let out = build_ojclone(&corpus(2, 2), 2, 100, 0).unwrap();
        assert_eq!(out.pairs.len(), 6);
        assert!((out.positive_fraction - 2.0 / 6.0).abs() < 1e-12);
    }
}
