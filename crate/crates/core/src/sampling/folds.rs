use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{rng, SamplingError, Stratum};

/// Fold number of every example index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: BTreeMap<usize, usize>,
}

/// One round of k-fold cross-validation, as ascending example indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deal the members of each stratum over `k` folds.
///
/// Each stratum is shuffled and dealt round-robin, continuing from the fold
/// where the previous stratum stopped, so fold sizes differ by at most one
/// both per stratum and overall.
pub fn assign_folds(strata: &[Stratum], k: usize, seed: u64) -> Result<FoldAssignment, SamplingError> {
    if k < 2 {
        return Err(SamplingError::InvalidK(k));
    }
    let size: usize = strata.iter().map(|s| s.members.len()).sum();
    if k > size {
        return Err(SamplingError::KTooLarge { k, size });
    }
    let mut rng = rng(seed);
    let mut fold_of = BTreeMap::new();
    let mut next = 0;
    for stratum in strata {
        let mut members = stratum.members.clone();
        members.shuffle(&mut rng);
        for m in members {
            fold_of.insert(m, next);
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

impl FoldAssignment {
    pub fn fold(&self, i: usize) -> Vec<usize> {
        self.fold_of.iter().filter(|(_, &f)| f == i).map(|(&m, _)| m).collect()
    }

    /// Round `i` tests on fold `i`, validates on fold `i + 1 (mod k)` and
    /// trains on the rest. With `k = 2` the validation set is empty.
    pub fn splits(&self) -> Vec<Split> {
        (0..self.k)
            .map(|i| {
                let val = if self.k > 2 { Some((i + 1) % self.k) } else { None };
                let mut split = Split::default();
                for (&m, &f) in &self.fold_of {
                    if f == i {
                        split.test.push(m);
                    } else if Some(f) == val {
                        split.validation.push(m);
                    } else {
                        split.train.push(m);
                    }
                }
                split
            })
            .collect()
    }
}

pub fn kfold(strata: &[Stratum], k: usize, seed: u64) -> Result<Vec<Split>, SamplingError> {
    Ok(assign_folds(strata, k, seed)?.splits())
}
