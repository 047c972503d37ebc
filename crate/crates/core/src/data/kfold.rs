use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validate: Vec<usize>,
}

/// Seeded shuffle of `0..ns` cut into `k` contiguous folds; the first
/// `ns % k` folds get one extra index.
pub fn kfold_split(ns: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k == 0 || ns < k {
        return Err(Error::TooFewSamples {
            samples: ns,
            folds: k,
        });
    }
    let mut idx: Vec<usize> = (0..ns).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (ns / k, ns % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let validate = idx[start..start + len].to_vec();
        let train = idx[..start].iter().chain(&idx[start + len..]).copied().collect();
        folds.push(Fold { train, validate });
        start += len;
    }
    Ok(folds)
}
