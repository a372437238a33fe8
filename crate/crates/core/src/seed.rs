//! Seed derivation. Every stochastic component draws from a ChaCha stream
//! keyed by `(root seed, component label)`, so components stay independent
//! of each other's consumption order.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One derivation: `derived = derive_seed(root, label)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedUse {
    pub root: u64,
    pub label: String,
    pub derived: u64,
}

static REGISTRY: Mutex<BTreeSet<SeedUse>> = Mutex::new(BTreeSet::new());

/// Every derivation made so far in this process.
pub fn registry() -> Vec<SeedUse> {
    REGISTRY.lock().map(|r| r.iter().cloned().collect()).unwrap_or_default()
}

pub fn clear_registry() {
    if let Ok(mut r) = REGISTRY.lock() {
        r.clear();
    }
}

/// Derivations whose root is neither `seed` nor itself derived (possibly
/// through a chain) from `seed`. Empty when every stochastic stream traces
/// back to the one seed.
pub fn untraced(uses: &[SeedUse], seed: u64) -> Vec<SeedUse> {
    let by_derived: BTreeMap<u64, u64> = uses.iter().map(|u| (u.derived, u.root)).collect();
    uses.iter()
        .filter(|u| {
            let mut root = u.root;
            let mut hops = 0;
            while root != seed {
                match by_derived.get(&root) {
                    Some(&r) if hops < uses.len() => {
                        root = r;
                        hops += 1;
                    }
                    _ => return true,
                }
            }
            false
        })
        .cloned()
        .collect()
}

/// Stable 64-bit mix of a root seed and a label (FNV-1a over the label,
/// finished with splitmix64). Recorded in the process-wide registry.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let derived = mix(seed, label);
    if let Ok(mut r) = REGISTRY.lock() {
        r.insert(SeedUse {
            root: seed,
            label: label.to_string(),
            derived,
        });
    }
    derived
}

fn mix(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(h ^ seed.rotate_left(17))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label))
}
