//! Seeded train/test splits and stratified folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::instance::HeuristicKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            train_fraction: 0.8,
            stratified: true,
            seed,
        }
    }
}

/// Indices of each class (canonical winner), in dataset order.
fn class_members(dataset: &Dataset) -> Vec<(HeuristicKind, Vec<usize>)> {
    HeuristicKind::ALL
        .iter()
        .map(|&h| {
            let members = dataset
                .records()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.label.winner() == h)
                .map(|(i, _)| i)
                .collect::<Vec<_>>();
            (h, members)
        })
        .filter(|(_, m)| !m.is_empty())
        .collect()
}

/// Index-level split; both halves are returned in dataset order.
pub fn split_indices(dataset: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidTrainFraction(spec.train_fraction));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups = if spec.stratified {
        class_members(dataset)
    } else {
        vec![(HeuristicKind::BF, (0..dataset.len()).collect())]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (h, mut members) in groups {
        if spec.stratified && members.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: h.to_string(),
                size: members.len(),
                needed: 2,
            });
        }
        members.shuffle(&mut rng);
        let cut = (members.len() as f64 * spec.train_fraction).round() as usize;
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Per-class proportional split (or a plain shuffle split when not stratified).
pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset, spec)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Puts exactly `counts[c]` randomly chosen members of each class in the
/// training half; everything else goes to the test half.
pub fn split_by_counts(
    dataset: &Dataset,
    counts: &[(HeuristicKind, usize)],
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (h, mut members) in class_members(dataset) {
        let wanted = counts
            .iter()
            .find(|(c, _)| *c == h)
            .map_or(0, |&(_, n)| n);
        if members.len() < wanted {
            return Err(Error::ClassTooSmall {
                class: h.to_string(),
                size: members.len(),
                needed: wanted,
            });
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..wanted]);
        test.extend_from_slice(&members[wanted..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold assignment. Members of each class are shuffled and dealt
/// round-robin, continuing the deal across classes so fold sizes differ by at
/// most one. A class with fewer than `k` members lands in some folds only.
pub fn kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = dataset.len();
    if k < 2 || n < k {
        return Err(Error::InvalidFoldCount { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    let mut dealt = 0usize;
    for (_, mut members) in class_members(dataset) {
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}
