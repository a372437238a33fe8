use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Part sizes by largest remainder: floors first, then the leftover items go
/// to the parts with the largest fractional share (earlier part on ties).
pub(crate) fn part_sizes(n: usize, ratios: [u32; 3]) -> [usize; 3] {
    let total: u64 = ratios.iter().map(|&r| r as u64).sum();
    let mut sizes = [0usize; 3];
    let mut rems = [0u64; 3];
    for i in 0..3 {
        let num = n as u64 * ratios[i] as u64;
        sizes[i] = (num / total) as usize;
        rems[i] = num % total;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Shuffles `items` under `seed` and cuts train/valid/test in the given ratio.
pub fn split(items: &[String], ratios: [u32; 3], seed: u64) -> Result<DatasetSplit> {
    if items.is_empty() {
        return Err(Error::arg("cannot split an empty item list"));
    }
    if ratios.iter().all(|&r| r == 0) {
        return Err(Error::arg("split ratios are all zero"));
    }
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut seed::rng(seed, "corpus.split"));
    let [n_train, n_valid, _] = part_sizes(items.len(), ratios);
    let test = shuffled.split_off(n_train + n_valid);
    let valid = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        train: shuffled,
        valid,
        test,
        seed,
    })
}
