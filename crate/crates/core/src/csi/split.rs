use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Condition, Side};
use crate::rng;

/// A ride's identity and labels, as listed in a corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RideRecord {
    pub ride_id: String,
    pub condition: Condition,
    pub side: Side,
}

/// Ride allocation for one (condition, side) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSplit {
    pub condition: Condition,
    pub side: Side,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Ride-disjoint train/validation/test assignment, stratified per cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub cells: Vec<CellSplit>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl DatasetSplit {
    fn collect(&self, f: impl Fn(&CellSplit) -> &Vec<String>) -> Vec<String> {
        self.cells.iter().flat_map(|c| f(c).iter().cloned()).collect()
    }

    pub fn train(&self) -> Vec<String> {
        self.collect(|c| &c.train)
    }

    pub fn val(&self) -> Vec<String> {
        self.collect(|c| &c.val)
    }

    pub fn test(&self) -> Vec<String> {
        self.collect(|c| &c.test)
    }
}

/// (train, val, test) counts for a cell of `n` rides.
///
/// Validation and test each get `floor(n/5)`; with three or more rides both
/// get at least one; the remainder goes to training.
pub fn cell_counts(n: usize) -> (usize, usize, usize) {
    let mut val = n / 5;
    let mut test = n / 5;
    if n >= 3 {
        val = val.max(1);
        test = test.max(1);
    }
    (n - val - test, val, test)
}

/// Split rides 60/20/20 within every (condition, side) cell.
///
/// Deterministic for a fixed seed and independent of the input order.
pub fn split_dataset(rides: &[RideRecord], seed: u64) -> DatasetSplit {
    let mut cells: BTreeMap<(Condition, Side), Vec<String>> = BTreeMap::new();
    for r in rides {
        cells.entry((r.condition, r.side)).or_default().push(r.ride_id.clone());
    }
    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(cells.len());
    for ((condition, side), mut ids) in cells {
        ids.sort();
        ids.dedup();
        let mut rng = rng::stream(seed, &format!("split/{condition}/{side}"));
        ids.shuffle(&mut rng);
        let (n_train, n_val, _) = cell_counts(ids.len());
        if ids.len() < 3 {
            let msg = format!(
                "cell ({condition}, {side}) has only {} ride(s); all assigned to training",
                ids.len()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        let test = ids.split_off(n_train + n_val);
        let val = ids.split_off(n_train);
        out.push(CellSplit {
            condition,
            side,
            train: ids,
            val,
            test,
        });
    }
    DatasetSplit {
        seed,
        cells: out,
        warnings,
    }
}
