use nalgebra::DMatrix;
use serde::Serialize;

use super::grid::BeliefGrid;
use crate::pomdp::belief::{bayes_update_into, expected_reward_raw};

/// Finite MDP induced on a belief grid: for every grid point `i`, action `a`
/// and observation `o`, the likelihood `P(o | b_i, a)` and the grid index of
/// the projected Bayes successor.
#[derive(Debug, Clone)]
pub struct BeliefMdp {
    num_points: usize,
    num_actions: usize,
    num_observations: usize,
    resolution: usize,
    obs_prob: Vec<f64>,
    succ: Vec<u32>,
    reward: Vec<f64>,
}

impl BeliefMdp {
    pub fn build(grid: &BeliefGrid, transition: &[DMatrix<f64>], observation: &[DMatrix<f64>], reward: &[f64]) -> Self {
        let num_points = grid.len();
        let num_actions = transition.len();
        let num_observations = reward.len();
        let mut obs_prob = vec![0.0; num_points * num_actions * num_observations];
        let mut succ = vec![0u32; num_points * num_actions * num_observations];
        let mut rew = vec![0.0; num_points * num_actions];
        let mut next = vec![0.0; grid.num_states()];
        for (i, b) in grid.points().enumerate() {
            for a in 0..num_actions {
                rew[i * num_actions + a] = expected_reward_raw(b, &observation[a], reward);
                for o in 0..num_observations {
                    let idx = (i * num_actions + a) * num_observations + o;
                    match bayes_update_into(b, &transition[a], &observation[a], o, &mut next) {
                        Some(p) => {
                            obs_prob[idx] = p;
                            succ[idx] = grid.project(&next) as u32;
                        }
                        None => {
                            obs_prob[idx] = 0.0;
                            succ[idx] = i as u32;
                        }
                    }
                }
                // likelihoods are sums of the same products; pin the total to 1
                let base = (i * num_actions + a) * num_observations;
                let total: f64 = obs_prob[base..base + num_observations].iter().sum();
                obs_prob[base..base + num_observations]
                    .iter_mut()
                    .for_each(|p| *p /= total);
            }
        }
        Self {
            num_points,
            num_actions,
            num_observations,
            resolution: grid.resolution(),
            obs_prob,
            succ,
            reward: rew,
        }
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn obs_prob(&self, i: usize, a: usize, o: usize) -> f64 {
        self.obs_prob[(i * self.num_actions + a) * self.num_observations + o]
    }

    pub fn successor(&self, i: usize, a: usize, o: usize) -> usize {
        self.succ[(i * self.num_actions + a) * self.num_observations + o] as usize
    }

    /// `g(b_i, a)`.
    pub fn reward(&self, i: usize, a: usize) -> f64 {
        self.reward[i * self.num_actions + a]
    }

    /// `g(b_i, a) + sum_o P(o | b_i, a) v(succ(i, a, o))`.
    #[inline]
    pub fn q_value(&self, i: usize, a: usize, v: &[f64]) -> f64 {
        let base = (i * self.num_actions + a) * self.num_observations;
        let probs = &self.obs_prob[base..base + self.num_observations];
        let succ = &self.succ[base..base + self.num_observations];
        let mut q = self.reward[i * self.num_actions + a];
        for (p, s) in probs.iter().zip(succ) {
            q += p * v[*s as usize];
        }
        q
    }

    /// Greedy action and value at `i`, lowest action index on ties.
    #[inline]
    pub fn backup(&self, i: usize, v: &[f64]) -> (usize, f64) {
        let mut best = (0, self.q_value(i, 0, v));
        for a in 1..self.num_actions {
            let q = self.q_value(i, a, v);
            if q > best.1 {
                best = (a, q);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub resolution: usize,
    pub gain: f64,
    pub bias: Vec<f64>,
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// `span(v_{n+1} - v_n)` of the last sweep.
    pub span: f64,
    /// Lower and upper one-step improvement of the last sweep.
    pub gain_bounds: (f64, f64),
    #[serde(skip)]
    pub span_trace: Vec<f64>,
}

impl PlanResult {
    pub fn bias_span(&self) -> f64 {
        let max = self.bias.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.bias.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Serializable summary of a plan.
#[derive(Debug, Clone, Serialize)]
pub struct PlanDump {
    pub resolution: usize,
    pub gain: f64,
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&PlanResult> for PlanDump {
    fn from(p: &PlanResult) -> Self {
        Self {
            resolution: p.resolution,
            gain: p.gain,
            policy: p.policy.clone(),
            iterations: p.iterations,
            converged: p.converged,
        }
    }
}

/// Damping weight of the aperiodicity transform `v <- (1 - τ) v + τ T v`.
pub const APERIODICITY_WEIGHT: f64 = 0.5;

/// Relative value iteration for the average-reward criterion.
///
/// Each sweep evaluates the Bellman backup `T v = max_a [g + P v]`, records
/// the span of `T v - v` and moves to the damped iterate
/// `(1 - τ) v + τ T v`, re-centred at grid index 0. Damping leaves the gain,
/// the improvements `T v - v` and the greedy policy unchanged while ruling
/// out the periodic oscillation that nearest-point successor maps produce.
/// Stops once the span drops below `tol`; the gain is the midpoint of the
/// extreme one-step improvements. Exceeding `max_iter` returns the last
/// iterate with `converged == false`.
pub fn relative_value_iteration(bmdp: &BeliefMdp, tol: f64, max_iter: usize) -> PlanResult {
    let n = bmdp.num_points();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut span_trace = Vec::new();
    let mut bounds = (0.0, 0.0);
    let mut converged = false;
    let mut iterations = 0;
    let tau = APERIODICITY_WEIGHT;
    while iterations < max_iter {
        iterations += 1;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let (_, q) = bmdp.backup(i, &v);
            let d = q - v[i];
            w[i] = v[i] + tau * d;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let span = hi - lo;
        span_trace.push(span);
        bounds = (lo, hi);
        if span < tol {
            converged = true;
            break;
        }
        let reference = w[0];
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi - reference;
        }
    }
    let policy = (0..n).map(|i| bmdp.backup(i, &v).0).collect();
    PlanResult {
        resolution: bmdp.resolution(),
        gain: 0.5 * (bounds.0 + bounds.1),
        bias: v,
        policy,
        iterations,
        converged,
        span: span_trace.last().copied().unwrap_or(f64::INFINITY),
        gain_bounds: bounds,
        span_trace,
    }
}
