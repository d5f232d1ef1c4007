//! Breadth-first hitting-set DAG with conflicts generated on demand.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

/// Result of testing one set of components assumed abnormal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Consistent,
    /// Inconsistent; the conflict is disjoint from the tested set.
    Conflict(Vec<usize>),
    /// Inconsistent, conflict not computed.
    Inconsistent,
}

pub trait ConflictSource {
    /// Tests the assumption that exactly `abnormal` is faulty. A conflict is
    /// only needed when `want_conflict` is set.
    fn test(&mut self, abnormal: &BTreeSet<usize>, want_conflict: bool) -> Outcome;
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HsResult {
    /// Minimal hitting sets in order of discovery (by cardinality).
    pub sets: Vec<BTreeSet<usize>>,
    pub conflicts: Vec<Vec<usize>>,
}

/// Enumerates all minimal hitting sets of size at most `max_card`.
pub fn hs_dag(source: &mut dyn ConflictSource, max_card: usize) -> HsResult {
    let mut out = HsResult::default();
    let mut level: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new()];
    for depth in 0..=max_card {
        let mut next: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        for h in &level {
            if out.sets.iter().any(|d| d.is_subset(h)) {
                continue;
            }
            let reused = out.conflicts.iter().find(|c| c.iter().all(|x| !h.contains(x))).cloned();
            let label = match reused {
                Some(c) => c,
                None => match source.test(h, depth < max_card) {
                    Outcome::Consistent => {
                        out.sets.push(h.clone());
                        continue;
                    }
                    Outcome::Inconsistent => continue,
                    Outcome::Conflict(c) => {
                        out.conflicts.push(c.clone());
                        c
                    }
                },
            };
            if depth < max_card {
                for &c in &label {
                    let mut child = h.clone();
                    child.insert(c);
                    next.insert(child);
                }
            }
        }
        level = next.into_iter().collect();
        if level.is_empty() {
            break;
        }
    }
    out
}

struct Fixed<'a> {
    conflicts: &'a [Vec<usize>],
}

impl ConflictSource for Fixed<'_> {
    fn test(&mut self, abnormal: &BTreeSet<usize>, _: bool) -> Outcome {
        match self.conflicts.iter().find(|c| c.iter().all(|x| !abnormal.contains(x))) {
            Some(c) => Outcome::Conflict(c.clone()),
            None => Outcome::Consistent,
        }
    }
}

/// Minimal hitting sets of an explicit conflict collection.
pub fn minimal_hitting_sets<T: Ord + Clone>(conflicts: &[BTreeSet<T>], max_card: usize) -> Vec<BTreeSet<T>> {
    let mut ids: BTreeMap<T, usize> = BTreeMap::new();
    let mut names: Vec<T> = Vec::new();
    let coded: Vec<Vec<usize>> = conflicts
        .iter()
        .map(|c| {
            c.iter()
                .map(|x| {
                    *ids.entry(x.clone()).or_insert_with(|| {
                        names.push(x.clone());
                        names.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let mut source = Fixed { conflicts: &coded };
    hs_dag(&mut source, max_card).sets.into_iter().map(|s| s.into_iter().map(|i| names[i].clone()).collect()).collect()
}
