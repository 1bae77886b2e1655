use nalgebra::DMatrix;
use serde::Serialize;

use super::operator::BlockDiagObservationOperator;
use crate::pomdp::{TupleCounts, TupleDataset};

/// Intermediate and final quantities for one action.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionEstimate {
    /// `d̂_{S^2}(s, s')` before clipping.
    pub d_hat_s2: DMatrix<f64>,
    /// Clipped, non-negative `d̄_{S^2}`.
    pub d_bar_s2: DMatrix<f64>,
    pub transition: DMatrix<f64>,
    /// Rows of `d̄_{S^2}` that summed to zero and fell back to uniform.
    pub fallback_rows: usize,
}

/// Inverts one action's `(a', o, o')` frequency vector into `T̂_a`.
pub fn estimate_action(op: &BlockDiagObservationOperator, freq: &[f64]) -> ActionEstimate {
    let s = op.num_states();
    let d_as2 = op.apply_pinv(freq);
    let mut d_hat: DMatrix<f64> = DMatrix::zeros(s, s);
    for block in d_as2.chunks(s * s) {
        for (idx, v) in block.iter().enumerate() {
            d_hat[(idx / s, idx % s)] += v;
        }
    }
    let d_bar = d_hat.map(|x| x.max(0.0));
    let mut t = DMatrix::zeros(s, s);
    let mut fallback_rows = 0;
    for r in 0..s {
        let sum: f64 = d_bar.row(r).sum();
        if sum > 0.0 {
            for c in 0..s {
                t[(r, c)] = d_bar[(r, c)] / sum;
            }
        } else {
            fallback_rows += 1;
            for c in 0..s {
                t[(r, c)] = 1.0 / s as f64;
            }
        }
    }
    ActionEstimate {
        d_hat_s2: d_hat,
        d_bar_s2: d_bar,
        transition: t,
        fallback_rows,
    }
}

/// Per-action transition estimates. Actions without samples carry the
/// uniform matrix and `valid[a] == false`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate {
    pub transitions: Vec<DMatrix<f64>>,
    pub counts: Vec<u64>,
    pub episode: usize,
    pub valid: Vec<bool>,
    pub d_bar: Vec<Option<DMatrix<f64>>>,
}

impl TransitionEstimate {
    pub fn num_actions(&self) -> usize {
        self.transitions.len()
    }

    /// Smallest row sum of `d̄_{S^2}` for action `a`, floored at `floor`.
    pub fn d_min(&self, action: usize, floor: f64) -> f64 {
        match &self.d_bar[action] {
            Some(d) => {
                let total: f64 = d.sum();
                if total <= 0.0 {
                    return floor;
                }
                (0..d.nrows())
                    .map(|r| d.row(r).sum() / total)
                    .fold(f64::INFINITY, f64::min)
                    .max(floor)
            }
            None => floor,
        }
    }
}

pub fn estimate_from_counts(
    counts: &TupleCounts,
    operators: &[BlockDiagObservationOperator],
    episode: usize,
) -> TransitionEstimate {
    assert_eq!(counts.num_actions(), operators.len(), "one operator per action");
    let num_states = operators[0].num_states();
    let mut est = TransitionEstimate {
        transitions: Vec::with_capacity(operators.len()),
        counts: counts.per_action().to_vec(),
        episode,
        valid: Vec::with_capacity(operators.len()),
        d_bar: Vec::with_capacity(operators.len()),
    };
    for (a, op) in operators.iter().enumerate() {
        let n = counts.n(a);
        if n == 0 {
            est.transitions
                .push(DMatrix::from_element(num_states, num_states, 1.0 / num_states as f64));
            est.valid.push(false);
            est.d_bar.push(None);
            continue;
        }
        let freq: Vec<f64> = counts.counts(a).iter().map(|&c| c as f64 / n as f64).collect();
        let ae = estimate_action(op, &freq);
        est.transitions.push(ae.transition);
        est.valid.push(true);
        est.d_bar.push(Some(ae.d_bar_s2));
    }
    est
}

pub fn estimate_transition_model(
    dataset: &TupleDataset,
    operators: &[BlockDiagObservationOperator],
) -> TransitionEstimate {
    estimate_from_counts(dataset.counts(), operators, 0)
}

pub fn frobenius_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

/// Per-action record of an estimate dump.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateDump {
    pub action: usize,
    pub n: u64,
    pub counts: Vec<u64>,
    pub d_bar_s2: Option<Vec<Vec<f64>>>,
    pub transition: Vec<Vec<f64>>,
    pub radius: f64,
    pub valid: bool,
}

impl EstimateDump {
    pub fn collect(est: &TransitionEstimate, counts: &TupleCounts, radii: &[f64]) -> Vec<Self> {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
        };
        (0..est.num_actions())
            .map(|a| EstimateDump {
                action: a,
                n: counts.n(a),
                counts: counts.counts(a).to_vec(),
                d_bar_s2: est.d_bar[a].as_ref().map(rows),
                transition: rows(&est.transitions[a]),
                radius: radii[a],
                valid: est.valid[a],
            })
            .collect()
    }
}
