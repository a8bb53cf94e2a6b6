use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DistillError;
use crate::rng::{derive_seed, seeded, shuffle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SplitRole {
    ReducedTrain,
    ReducedVal,
    SearchHoldout,
    FinalTrain,
    FinalVal,
}

/// Two partitions of the same training data: the search partition
/// (reduced train / reduced val / holdout) and the final 80/20 partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub reduced_fraction: f64,
    pub sub_train_fraction: f64,
    pub final_train_fraction: f64,
    pub search: BTreeMap<String, SplitRole>,
    #[serde(rename = "final")]
    pub final_: BTreeMap<String, SplitRole>,
}

impl SplitPlan {
    pub fn ids(&self, role: SplitRole) -> Vec<String> {
        let map = match role {
            SplitRole::FinalTrain | SplitRole::FinalVal => &self.final_,
            _ => &self.search,
        };
        map.iter().filter(|(_, r)| **r == role).map(|(id, _)| id.clone()).collect()
    }

    pub fn count(&self, role: SplitRole) -> usize {
        self.ids(role).len()
    }
}

/// Split `(id, class)` items per class into a head of `round(fraction·n_c)`
/// and the rest. Within a class, ids are sorted then shuffled with a
/// per-class seed stream.
pub fn stratified_split(items: &[(String, usize)], fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut by_class: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (id, c) in items {
        by_class.entry(*c).or_default().push(id);
    }
    let (mut head, mut tail) = (Vec::new(), Vec::new());
    for (c, mut ids) in by_class {
        ids.sort_unstable();
        shuffle(&mut seeded(derive_seed(seed, c as u64)), &mut ids);
        let k = (fraction * ids.len() as f64).round() as usize;
        head.extend(ids[..k].iter().map(|s| s.to_string()));
        tail.extend(ids[k..].iter().map(|s| s.to_string()));
    }
    head.sort();
    tail.sort();
    (head, tail)
}

fn filter_items(items: &[(String, usize)], keep: &[String]) -> Vec<(String, usize)> {
    let keep: std::collections::BTreeSet<&str> = keep.iter().map(String::as_str).collect();
    items.iter().filter(|(id, _)| keep.contains(id.as_str())).cloned().collect()
}

pub fn make_split_plan(items: &[(String, usize)], seed: u64) -> Result<SplitPlan, DistillError> {
    let classes = items.iter().map(|(_, c)| *c).collect::<std::collections::BTreeSet<_>>().len();
    if items.len() < 10 * classes.max(1) {
        return Err(DistillError::TooFewSamples {
            needed: 10 * classes.max(1),
            classes,
            got: items.len(),
        });
    }
    let (reduced_fraction, sub_train_fraction, final_train_fraction) = (0.6, 0.8, 0.8);
    let (reduced, holdout) = stratified_split(items, reduced_fraction, derive_seed(seed, 1));
    let (sub_train, sub_val) =
        stratified_split(&filter_items(items, &reduced), sub_train_fraction, derive_seed(seed, 2));
    let (final_train, final_val) = stratified_split(items, final_train_fraction, derive_seed(seed, 3));
    let mut search = BTreeMap::new();
    for (ids, role) in [
        (sub_train, SplitRole::ReducedTrain),
        (sub_val, SplitRole::ReducedVal),
        (holdout, SplitRole::SearchHoldout),
    ] {
        search.extend(ids.into_iter().map(|id| (id, role)));
    }
    let mut final_ = BTreeMap::new();
    for (ids, role) in [(final_train, SplitRole::FinalTrain), (final_val, SplitRole::FinalVal)] {
        final_.extend(ids.into_iter().map(|id| (id, role)));
    }
    Ok(SplitPlan {
        seed,
        reduced_fraction,
        sub_train_fraction,
        final_train_fraction,
        search,
        final_,
    })
}

/// Seed of the final 80/20 split inside a plan built from `seed`.
pub(crate) fn final_split_seed(seed: u64) -> u64 {
    derive_seed(seed, 3)
}
