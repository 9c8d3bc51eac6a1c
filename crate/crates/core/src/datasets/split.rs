use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index sets of one cross-validation fold. `val` is carved out of the
/// training part and never overlaps `test`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// SplitMix64 step, used to derive independent seeds from one base seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stratified k-fold split. Items of each class are shuffled and dealt
/// round-robin over the folds, with the dealing position carried across
/// classes, so fold sizes and per-fold class counts each differ by at most
/// one. A stratified `val_frac` share of each training part becomes the
/// validation set.
pub fn kfold_split(labels: &[usize], folds: usize, val_frac: f64, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::Config(format!("{} items cannot fill {folds} folds", labels.len())));
    }
    if !(0.0..1.0).contains(&val_frac) {
        return Err(Error::Config(format!("validation fraction {val_frac} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_class = group_by_class(labels, &mut rng);

    let mut test: Vec<Vec<usize>> = vec![Vec::new(); folds];
    let mut slot = 0;
    for items in &by_class {
        for &i in items {
            test[slot].push(i);
            slot = (slot + 1) % folds;
        }
    }

    let mut fold_of = vec![0usize; labels.len()];
    for (f, items) in test.iter().enumerate() {
        for &i in items {
            fold_of[i] = f;
        }
    }
    let mut out = Vec::with_capacity(folds);
    for (f, mut t) in test.into_iter().enumerate() {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for items in &by_class {
            let rest: Vec<usize> = items.iter().copied().filter(|&i| fold_of[i] != f).collect();
            let nv = (val_frac * rest.len() as f64).round() as usize;
            val.extend_from_slice(&rest[..nv]);
            train.extend_from_slice(&rest[nv..]);
        }
        train.sort_unstable();
        val.sort_unstable();
        t.sort_unstable();
        out.push(Fold { train, val, test: t });
    }
    Ok(out)
}

/// Stratified single split into train and test, used for node tasks where
/// only one graph is available.
pub fn stratified_holdout(labels: &[usize], test_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_frac) {
        return Err(Error::Config(format!("test fraction {test_frac} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for items in group_by_class(labels, &mut rng) {
        let nt = (test_frac * items.len() as f64).round() as usize;
        test.extend_from_slice(&items[..nt]);
        train.extend_from_slice(&items[nt..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn group_by_class(labels: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    for items in &mut by_class {
        items.shuffle(rng);
    }
    by_class
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_hundred_items() {
        let labels: Vec<usize> = (0..800).map(|i| i / 400).collect();
        let folds = kfold_split(&labels, 10, 0.1, 1).unwrap();
        for f in &folds {
            assert_eq!(f.test.len(), 80);
            assert_eq!(f.test.iter().filter(|&&i| labels[i] == 1).count(), 40);
            assert_eq!(f.train.len() + f.val.len(), 720);
            assert_eq!(f.val.len(), 72);
        }
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..800).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_items() {
        assert!(kfold_split(&[0, 1, 0], 10, 0.0, 0).is_err());
        assert!(kfold_split(&[0, 1, 0], 1, 0.0, 0).is_err());
    }

    #[test]
    fn derive_seed_spreads() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|s| derive_seed(7, s)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
