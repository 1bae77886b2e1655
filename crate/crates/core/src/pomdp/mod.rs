//! Tabular POMDPs: the model itself, assumption checks, belief tracking,
//! simulation, random instance generation and tuple datasets.

pub(crate) mod belief;
mod dataset;
mod generate;
mod io;

pub use belief::{belief_update, expected_reward, Belief};
pub use dataset::{build_tuple_dataset, merge_datasets, tuple_counts_from_trace, Tuple, TupleCounts, TupleDataset};
pub use generate::{generate_instance, generate_instance_with_sigma, random_transitions, GenParams};
pub use io::ModelDocument;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Tolerance on the stochasticity of rows, columns and the initial distribution.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Full tabular POMDP.
///
/// `transition[a][(s, s')]` is the probability of moving from `s` to `s'`
/// under action `a`; `observation[a][(o, s)]` is the probability of emitting
/// `o` in state `s` when `a` is played. Rewards are a deterministic function of
/// the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    transition: Vec<DMatrix<f64>>,
    observation: Vec<DMatrix<f64>>,
    reward: Vec<f64>,
    init_dist: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Smallest entry over every transition matrix.
    pub epsilon: f64,
    /// `min_a sigma_S(O_a)`.
    pub alpha: f64,
    pub per_action_sigma_min: Vec<f64>,
    pub epsilon_violated: bool,
    pub alpha_violated: bool,
}

impl AssumptionReport {
    pub fn is_valid(&self) -> bool {
        !self.epsilon_violated && !self.alpha_violated
    }
}

impl PomdpModel {
    pub fn new(
        transition: Vec<DMatrix<f64>>,
        observation: Vec<DMatrix<f64>>,
        reward: Vec<f64>,
        init_dist: Vec<f64>,
    ) -> Result<Self> {
        let num_actions = transition.len();
        if num_actions == 0 {
            return Err(Error::Structure("at least one action is required".into()));
        }
        let num_states = transition[0].nrows();
        let num_observations = reward.len();
        if num_states == 0 || num_observations == 0 {
            return Err(Error::Structure("empty state or observation space".into()));
        }
        if observation.len() != num_actions {
            return Err(Error::Structure(format!(
                "{} transition matrices but {} observation matrices",
                num_actions,
                observation.len()
            )));
        }
        if init_dist.len() != num_states {
            return Err(Error::Structure(format!(
                "initial distribution has length {}, expected {num_states}",
                init_dist.len()
            )));
        }
        for (a, t) in transition.iter().enumerate() {
            if t.shape() != (num_states, num_states) {
                return Err(Error::Structure(format!(
                    "transition[{a}] has shape {:?}, expected ({num_states}, {num_states})",
                    t.shape()
                )));
            }
            for s in 0..num_states {
                check_distribution(t.row(s).iter().copied(), &format!("transition[{a}] row {s}"))?;
            }
        }
        for (a, o) in observation.iter().enumerate() {
            if o.shape() != (num_observations, num_states) {
                return Err(Error::Structure(format!(
                    "observation[{a}] has shape {:?}, expected ({num_observations}, {num_states})",
                    o.shape()
                )));
            }
            for s in 0..num_states {
                check_distribution(o.column(s).iter().copied(), &format!("observation[{a}] column {s}"))?;
            }
        }
        if let Some(r) = reward.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Distribution(format!("reward {r} outside [0, 1]")));
        }
        check_distribution(init_dist.iter().copied(), "initial distribution")?;
        Ok(Self {
            num_states,
            num_actions,
            num_observations,
            transition,
            observation,
            reward,
            init_dist,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn transition(&self) -> &[DMatrix<f64>] {
        &self.transition
    }

    pub fn observation(&self) -> &[DMatrix<f64>] {
        &self.observation
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    pub fn init_dist(&self) -> &[f64] {
        &self.init_dist
    }

    /// Same model with a different transition tensor, validated again.
    pub fn with_transitions(&self, transition: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(
            transition,
            self.observation.clone(),
            self.reward.clone(),
            self.init_dist.clone(),
        )
    }

    /// Expected reward of playing `action` in hidden state `state`.
    pub fn mean_reward(&self, state: usize, action: usize) -> f64 {
        self.observation[action]
            .column(state)
            .iter()
            .zip(&self.reward)
            .map(|(p, r)| p * r)
            .sum()
    }

    /// Bayes update of `b` after playing `action` and observing `obs`.
    pub fn belief_update(&self, b: &Belief, action: usize, obs: usize) -> Result<Belief> {
        belief_update(b, action, obs, &self.transition, &self.observation)
    }

    pub fn expected_reward(&self, b: &Belief, action: usize) -> f64 {
        expected_reward(b, action, self)
    }

    /// Draws `o ~ O_a(.|s)` and then `s' ~ T_a(.|s)`.
    pub fn simulate_step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> (usize, usize) {
        simulate_step(state, action, self, rng)
    }

    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(self.init_dist.iter().copied(), rng.random::<f64>())
    }
}

fn check_distribution(values: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for v in values {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Distribution(format!("{what} has invalid entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Distribution(format!("{what} sums to {sum}")));
    }
    Ok(())
}

/// Inverse-CDF draw from a discrete distribution with a single uniform `u`.
pub(crate) fn sample_index(probs: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    last_positive
}

/// Smallest singular value among the first `S` of an `O x S` matrix (zero when `O < S`).
pub fn sigma_s(m: &DMatrix<f64>) -> f64 {
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Checks the minimum-transition and weakly-revealing assumptions.
pub fn validate_assumptions(model: &PomdpModel) -> AssumptionReport {
    let epsilon = model
        .transition
        .iter()
        .flat_map(|t| t.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let per_action_sigma_min: Vec<f64> = model.observation.iter().map(sigma_s).collect();
    let alpha = per_action_sigma_min.iter().copied().fold(f64::INFINITY, f64::min);
    AssumptionReport {
        epsilon,
        alpha,
        per_action_sigma_min,
        epsilon_violated: epsilon <= 0.0,
        alpha_violated: alpha <= 0.0,
    }
}

pub fn simulate_step<R: Rng + ?Sized>(state: usize, action: usize, model: &PomdpModel, rng: &mut R) -> (usize, usize) {
    let obs = sample_index(
        model.observation[action].column(state).iter().copied(),
        rng.random::<f64>(),
    );
    let next = sample_index(model.transition[action].row(state).iter().copied(), rng.random::<f64>());
    (obs, next)
}

/// One interaction step. The hidden state is kept for diagnostics only and is
/// never handed to an agent's decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
    pub hidden_state: usize,
}

/// A running POMDP simulation owning its hidden state and random stream.
#[derive(Debug, Clone)]
pub struct Environment<'m> {
    model: &'m PomdpModel,
    state: usize,
    t: usize,
    rng: crate::SimRng,
}

impl<'m> Environment<'m> {
    pub fn new(model: &'m PomdpModel, mut rng: crate::SimRng) -> Self {
        let state = model.sample_initial_state(&mut rng);
        Self {
            model,
            state,
            t: 0,
            rng,
        }
    }

    pub fn model(&self) -> &'m PomdpModel {
        self.model
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn step(&mut self, action: usize) -> StepRecord {
        let (obs, next) = simulate_step(self.state, action, self.model, &mut self.rng);
        let rec = StepRecord {
            t: self.t,
            action,
            observation: obs,
            reward: self.model.reward[obs],
            hidden_state: self.state,
        };
        self.state = next;
        self.t += 1;
        rec
    }
}
