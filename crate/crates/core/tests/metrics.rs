use codeprobe::tasks::{rank_metrics, rank_of, Confusion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference rank: sort candidate positions by (score desc, id asc) and
/// scan for the target.
fn sorted_rank(scores: &[f64], ids: &[usize], target: usize) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(ids[a].cmp(&ids[b])));
    order.iter().position(|&i| i == target).unwrap() + 1
}

#[test]
fn rank_metrics_match_sort_and_scan_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ranks = Vec::new();
    let mut reference = Vec::new();
    for _ in 0..100 {
        // Coarse scores force plenty of ties.
        let scores: Vec<f64> = (0..999).map(|_| (rng.random_range(0..50) as f64) / 10.0).collect();
        let mut ids: Vec<usize> = (0..999).collect();
        ids.swap(0, rng.random_range(0..999));
        let target = rng.random_range(0..999);
        ranks.push(rank_of(&scores, &ids, target));
        reference.push(sorted_rank(&scores, &ids, target));
    }
    assert_eq!(ranks, reference);
    let hits = reference.iter().filter(|&&r| r <= 10).count() as f64 / 100.0;
    let mrr = reference.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / 100.0;
    assert_eq!(rank_metrics(&ranks, 10), (hits, mrr));
}

#[test]
fn f1_matches_raw_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(1..200);
        let probs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let c = Confusion::from_probabilities(&probs, &labels);
        let tp = probs.iter().zip(&labels).filter(|(p, l)| **p >= 0.5 && **l).count() as f64;
        let pp = probs.iter().filter(|p| **p >= 0.5).count() as f64;
        let ap = labels.iter().filter(|l| **l).count() as f64;
        let p = if pp > 0.0 { tp / pp } else { 0.0 };
        let r = if ap > 0.0 { tp / ap } else { 0.0 };
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        assert_eq!((c.precision(), c.recall(), c.f1()), (p, r, f1));
    }
}
