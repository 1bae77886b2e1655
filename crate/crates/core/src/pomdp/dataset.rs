use serde::Serialize;

use super::StepRecord;
use crate::{Error, Result};

/// Consecutive pair `(a_t, a_{t+1}, o_t, o_{t+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Tuple {
    pub action: usize,
    pub next_action: usize,
    pub obs: usize,
    pub next_obs: usize,
}

/// Exact integer sufficient statistics of a tuple dataset.
///
/// `counts[a]` has length `A * O^2`; the tuple `(a', o, o')` lives at index
/// `a' * O^2 + o * O + o'`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TupleCounts {
    num_actions: usize,
    num_observations: usize,
    n: Vec<u64>,
    counts: Vec<Vec<u64>>,
}

impl TupleCounts {
    pub fn new(num_actions: usize, num_observations: usize) -> Self {
        let len = num_actions * num_observations * num_observations;
        Self {
            num_actions,
            num_observations,
            n: vec![0; num_actions],
            counts: vec![vec![0; len]; num_actions],
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    #[inline]
    pub fn index(&self, next_action: usize, obs: usize, next_obs: usize) -> usize {
        let o = self.num_observations;
        next_action * o * o + obs * o + next_obs
    }

    pub fn push(&mut self, tuple: Tuple) {
        let idx = self.index(tuple.next_action, tuple.obs, tuple.next_obs);
        self.counts[tuple.action][idx] += 1;
        self.n[tuple.action] += 1;
    }

    /// `n(a)`: number of tuples whose first action is `a`.
    pub fn n(&self, action: usize) -> u64 {
        self.n[action]
    }

    pub fn per_action(&self) -> &[u64] {
        &self.n
    }

    /// Raw count vector `c(a)`.
    pub fn counts(&self, action: usize) -> &[u64] {
        &self.counts[action]
    }

    pub fn total(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Adds `other` into `self`. Panics on mismatched dimensions.
    pub fn absorb(&mut self, other: &TupleCounts) {
        assert_eq!(
            (self.num_actions, self.num_observations),
            (other.num_actions, other.num_observations),
            "merging tuple counts of different shapes"
        );
        for a in 0..self.num_actions {
            self.n[a] += other.n[a];
            for (x, y) in self.counts[a].iter_mut().zip(&other.counts[a]) {
                *x += *y;
            }
        }
    }
}

/// Ordered tuples of one trajectory (or a merge of several) plus their counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleDataset {
    tuples: Vec<Tuple>,
    counts: TupleCounts,
}

impl TupleDataset {
    pub fn new(num_actions: usize, num_observations: usize) -> Self {
        Self {
            tuples: Vec::new(),
            counts: TupleCounts::new(num_actions, num_observations),
        }
    }

    pub fn push(&mut self, tuple: Tuple) {
        self.counts.push(tuple);
        self.tuples.push(tuple);
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn counts(&self) -> &TupleCounts {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Overlapping consecutive tuples of a trajectory: `n + 1` steps give `n` tuples.
pub fn build_tuple_dataset(trajectory: &[StepRecord], num_actions: usize, num_observations: usize) -> TupleDataset {
    let mut ds = TupleDataset::new(num_actions, num_observations);
    for w in trajectory.windows(2) {
        ds.push(Tuple {
            action: w[0].action,
            next_action: w[1].action,
            obs: w[0].observation,
            next_obs: w[1].observation,
        });
    }
    ds
}

/// Union of per-trajectory datasets. No tuple straddles two inputs.
pub fn merge_datasets(datasets: &[TupleDataset]) -> Option<TupleDataset> {
    let first = datasets.first()?;
    let mut merged = TupleDataset::new(first.counts.num_actions, first.counts.num_observations);
    for ds in datasets {
        merged.tuples.extend_from_slice(&ds.tuples);
        merged.counts.absorb(&ds.counts);
    }
    Some(merged)
}

/// Tuple counts of a step trace in the `t,action,observation,...` record
/// format. `#` lines and the header are skipped; consecutive records form
/// tuples regardless of episode.
pub fn tuple_counts_from_trace(text: &str, num_actions: usize, num_observations: usize) -> Result<TupleCounts> {
    let mut counts = TupleCounts::new(num_actions, num_observations);
    let mut prev: Option<(usize, usize)> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("t,") {
            continue;
        }
        let mut fields = line.split(',').skip(1);
        let mut field = |what: &str, bound: usize| -> Result<usize> {
            let v: usize = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: missing or bad {what}", i + 1)))?;
            if v >= bound {
                return Err(Error::Parse(format!("line {}: {what} {v} out of range", i + 1)));
            }
            Ok(v)
        };
        let a = field("action", num_actions)?;
        let o = field("observation", num_observations)?;
        if let Some((pa, po)) = prev {
            counts.push(Tuple {
                action: pa,
                next_action: a,
                obs: po,
                next_obs: o,
            });
        }
        prev = Some((a, o));
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn traj(actions: &[usize], obs: &[usize]) -> Vec<StepRecord> {
        actions
            .iter()
            .zip(obs)
            .enumerate()
            .map(|(t, (&a, &o))| StepRecord {
                t,
                action: a,
                observation: o,
                reward: 0.0,
                hidden_state: 0,
            })
            .collect()
    }

    #[test]
    fn five_steps_give_four_tuples() {
        let ds = build_tuple_dataset(&traj(&[0, 1, 1, 0, 1], &[2, 0, 1, 1, 0]), 2, 3);
        assert_eq!(ds.len(), 4);
        assert_eq!(
            ds.tuples()[1],
            Tuple {
                action: 1,
                next_action: 1,
                obs: 0,
                next_obs: 1
            }
        );
        assert_eq!(ds.counts().n(0), 2);
        assert_eq!(ds.counts().n(1), 2);
    }

    #[test]
    fn single_action_trajectory() {
        let ds = build_tuple_dataset(&traj(&[1; 7], &[0, 1, 0, 1, 0, 1, 0]), 3, 2);
        assert_eq!(ds.counts().per_action(), &[0, 6, 0]);
    }

    #[test]
    fn short_trajectories_are_empty() {
        assert!(build_tuple_dataset(&traj(&[0], &[0]), 1, 1).is_empty());
        assert!(build_tuple_dataset(&[], 1, 1).is_empty());
    }

    #[test]
    fn merge_of_one_is_identity() {
        let ds = build_tuple_dataset(&traj(&[0, 1, 1, 0], &[1, 0, 1, 1]), 2, 2);
        assert_eq!(merge_datasets(std::slice::from_ref(&ds)).unwrap(), ds);
        assert!(merge_datasets(&[]).is_none());
    }

    #[test]
    fn trace_text_matches_trajectory_counts() {
        let a = [0, 1, 1, 2, 0];
        let o = [3, 0, 2, 2, 1];
        let mut text = String::from("# agent=x\nt,action,observation,reward,grid_index,episode\n");
        for t in 0..5 {
            text.push_str(&format!("{t},{},{},0.5,,0\n", a[t], o[t]));
        }
        let counts = tuple_counts_from_trace(&text, 3, 4).unwrap();
        assert_eq!(&counts, build_tuple_dataset(&traj(&a, &o), 3, 4).counts());
        assert!(matches!(tuple_counts_from_trace("0,5,0\n", 3, 4), Err(Error::Parse(_))));
        assert!(matches!(tuple_counts_from_trace("0,1\n", 3, 4), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn counts_are_conserved(parts in prop::collection::vec(prop::collection::vec((0usize..3, 0usize..4), 0..40), 1..5)) {
            let datasets: Vec<_> = parts
                .iter()
                .map(|p| {
                    let (a, o): (Vec<_>, Vec<_>) = p.iter().copied().unzip();
                    build_tuple_dataset(&traj(&a, &o), 3, 4)
                })
                .collect();
            for ds in &datasets {
                prop_assert_eq!(ds.counts().total() as usize, ds.len());
                let c: u64 = (0..3).map(|a| ds.counts().counts(a).iter().sum::<u64>()).sum();
                prop_assert_eq!(c as usize, ds.len());
            }
            let merged = merge_datasets(&datasets).unwrap();
            for a in 0..3 {
                let sum: u64 = datasets.iter().map(|d| d.counts().n(a)).sum();
                prop_assert_eq!(merged.counts().n(a), sum);
            }
            prop_assert_eq!(merged.len(), datasets.iter().map(|d| d.len()).sum::<usize>());
            // recounting the merged tuples from scratch gives the same statistics
            let mut recount = TupleCounts::new(3, 4);
            merged.tuples().iter().for_each(|t| recount.push(*t));
            prop_assert_eq!(&recount, merged.counts());
        }
    }
}
