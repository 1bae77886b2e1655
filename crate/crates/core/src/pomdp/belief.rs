use nalgebra::DMatrix;

use super::PomdpModel;
use crate::{Error, Result};

const BELIEF_TOL: f64 = 1e-10;

/// A point on the state simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Distribution("empty belief".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Distribution(format!("belief has invalid entry: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_TOL {
            return Err(Error::Distribution(format!("belief sums to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(num_states: usize) -> Self {
        Self(vec![1.0 / num_states as f64; num_states])
    }

    pub fn point(num_states: usize, state: usize) -> Self {
        let mut p = vec![0.0; num_states];
        p[state] = 1.0;
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &Belief) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// In-place Bayes update; leaves `self` untouched on error.
    pub fn update_in_place(
        &mut self,
        action: usize,
        obs: usize,
        transition: &[DMatrix<f64>],
        observation: &[DMatrix<f64>],
    ) -> Result<()> {
        let mut out = vec![0.0; self.0.len()];
        bayes_update_into(&self.0, &transition[action], &observation[action], obs, &mut out).ok_or(
            Error::ImpossibleObservation {
                action,
                observation: obs,
            },
        )?;
        self.0 = out;
        Ok(())
    }
}

/// Writes the posterior after `(a, o)` into `out` and returns the observation
/// likelihood `P(o | b, a)`, or `None` when that likelihood is zero.
pub(crate) fn bayes_update_into(
    prior: &[f64],
    trans: &DMatrix<f64>,
    obs_model: &DMatrix<f64>,
    obs: usize,
    out: &mut [f64],
) -> Option<f64> {
    let s_count = prior.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    let mut denom = 0.0;
    for sp in 0..s_count {
        let w = prior[sp] * obs_model[(obs, sp)];
        if w == 0.0 {
            continue;
        }
        denom += w;
        for (s, x) in out.iter_mut().enumerate() {
            *x += w * trans[(sp, s)];
        }
    }
    if !(denom > 0.0) {
        return None;
    }
    let mut sum = 0.0;
    for x in out.iter_mut() {
        *x /= denom;
        sum += *x;
    }
    // absorb floating point drift
    for x in out.iter_mut() {
        *x /= sum;
    }
    Some(denom)
}

/// Bayes filter step:
/// `b'(s) = sum_{s'} b(s') O_a(o|s') T_a(s|s') / sum_{s''} O_a(o|s'') b(s'')`.
pub fn belief_update(
    b: &Belief,
    action: usize,
    obs: usize,
    transition: &[DMatrix<f64>],
    observation: &[DMatrix<f64>],
) -> Result<Belief> {
    let mut next = b.clone();
    next.update_in_place(action, obs, transition, observation)?;
    Ok(next)
}

/// `g(b, a) = sum_s sum_o b(s) O_a(o|s) r(o)`.
pub fn expected_reward(b: &Belief, action: usize, model: &PomdpModel) -> f64 {
    expected_reward_raw(b.probs(), &model.observation()[action], model.reward())
}

pub(crate) fn expected_reward_raw(b: &[f64], obs_model: &DMatrix<f64>, reward: &[f64]) -> f64 {
    let mut g = 0.0;
    for (s, &bs) in b.iter().enumerate() {
        if bs == 0.0 {
            continue;
        }
        let mu: f64 = obs_model.column(s).iter().zip(reward).map(|(p, r)| p * r).sum();
        g += bs * mu;
    }
    g
}
