use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use super::{sigma_s, PomdpModel};
use crate::{seeded_rng, Error, Result};

/// Knobs of the random instance generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Probability mass of the designated observation of each `(s, a)`.
    pub p_dom: f64,
    /// Observation matrices are redrawn until `min_a sigma_S(O_a) > alpha_min`.
    pub alpha_min: f64,
    pub max_retries: usize,
    /// Minimum transition probability; `None` means `1 / (20 S)`.
    pub epsilon_floor: Option<f64>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            p_dom: 0.7,
            alpha_min: 0.05,
            max_retries: 100,
            epsilon_floor: None,
        }
    }
}

impl GenParams {
    pub fn floor_for(&self, num_states: usize) -> f64 {
        self.epsilon_floor.unwrap_or(1.0 / (20.0 * num_states as f64))
    }
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub(crate) fn simplex_sample<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|x| *x /= sum);
    } else {
        v.iter_mut().for_each(|x| *x = 1.0 / len as f64);
    }
    v
}

/// Random row-stochastic matrices whose entries are all at least `floor`:
/// each row is a simplex sample mixed with the uniform row, `floor + (1 - S floor) x`.
pub fn random_transitions<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    floor: f64,
    rng: &mut R,
) -> Vec<DMatrix<f64>> {
    assert!(
        floor * num_states as f64 <= 1.0,
        "transition floor {floor} infeasible for S={num_states}"
    );
    let free = 1.0 - floor * num_states as f64;
    (0..num_actions)
        .map(|_| {
            let mut t = DMatrix::zeros(num_states, num_states);
            for s in 0..num_states {
                let row = simplex_sample(num_states, rng);
                for (sp, x) in row.into_iter().enumerate() {
                    t[(s, sp)] = floor + free * x;
                }
                renormalize_row(&mut t, s);
            }
            t
        })
        .collect()
}

pub(crate) fn renormalize_row(t: &mut DMatrix<f64>, s: usize) {
    let sum: f64 = t.row(s).sum();
    for sp in 0..t.ncols() {
        t[(s, sp)] /= sum;
    }
}

/// Emission structure of one action before the dominant mass is chosen:
/// `O(p) = p D + (1 - p) R`, with `D` the designated-observation indicator
/// and `R` the remainder spread over the other observations.
struct EmissionDraw {
    dominant: Vec<usize>,
    rest: Vec<Vec<f64>>,
}

impl EmissionDraw {
    fn sample<R: Rng + ?Sized>(num_states: usize, num_observations: usize, rng: &mut R) -> Self {
        // distinct designated observations across states of one action
        let dominant = sample(rng, num_observations, num_states).into_vec();
        let rest = (0..num_states)
            .map(|_| simplex_sample(num_observations - 1, rng))
            .collect();
        Self { dominant, rest }
    }

    fn matrix(&self, num_observations: usize, p_dom: f64) -> DMatrix<f64> {
        let num_states = self.dominant.len();
        let mut o = DMatrix::zeros(num_observations, num_states);
        for (s, &dom) in self.dominant.iter().enumerate() {
            let mut it = self.rest[s].iter();
            for obs in 0..num_observations {
                o[(obs, s)] = if obs == dom {
                    p_dom
                } else {
                    (1.0 - p_dom) * it.next().copied().unwrap_or(0.0)
                };
            }
            let sum: f64 = o.column(s).sum();
            for obs in 0..num_observations {
                o[(obs, s)] /= sum;
            }
        }
        o
    }

    /// Dominant mass giving `sigma_S = target`, by bisection on `[0, 1]`.
    /// `None` when the target is out of reach or the designated entries
    /// would stop being the largest of their columns.
    fn calibrate(&self, num_observations: usize, target: f64) -> Option<f64> {
        let sigma = |p: f64| sigma_s(&self.matrix(num_observations, p));
        let (mut lo, mut hi) = (0.0, 1.0);
        if !(sigma(lo) < target && sigma(hi) > target) {
            return None;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if sigma(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = 0.5 * (lo + hi);
        let o = self.matrix(num_observations, p);
        let dominant_is_max = self
            .dominant
            .iter()
            .enumerate()
            .all(|(s, &d)| (0..num_observations).all(|obs| obs == d || o[(obs, s)] < o[(d, s)]));
        dominant_is_max.then_some(p)
    }
}

fn random_observations<R: Rng + ?Sized>(
    num_states: usize,
    num_observations: usize,
    p_dom: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    if num_observations == 1 {
        return DMatrix::from_element(1, num_states, 1.0);
    }
    EmissionDraw::sample(num_states, num_observations, rng).matrix(num_observations, p_dom)
}

fn check_dims(num_states: usize, num_actions: usize, num_observations: usize, params: &GenParams) -> Result<f64> {
    if num_states == 0 || num_actions == 0 || num_observations == 0 {
        return Err(Error::Structure("dimensions must be positive".into()));
    }
    if num_states > num_observations {
        return Err(Error::Structure(format!(
            "S = {num_states} > O = {num_observations}: the weakly revealing condition cannot hold"
        )));
    }
    if !(0.0..=1.0).contains(&params.p_dom) {
        return Err(Error::Domain(format!("p_dom = {} outside [0, 1]", params.p_dom)));
    }
    let floor = params.floor_for(num_states);
    if !(floor > 0.0 && floor * num_states as f64 <= 1.0) {
        return Err(Error::Domain(format!(
            "transition floor {floor} infeasible for S = {num_states}"
        )));
    }
    Ok(floor)
}

/// Like [`generate_instance`], but the dominant mass of each action is tuned
/// so that `sigma_S(O_a)` equals `sigma_targets[a]` (to bisection accuracy).
/// Each action's emission structure is redrawn until its target is reachable
/// with the designated observations still the most likely ones.
pub fn generate_instance_with_sigma(
    num_states: usize,
    num_observations: usize,
    sigma_targets: &[f64],
    seed: u64,
    params: &GenParams,
) -> Result<PomdpModel> {
    let num_actions = sigma_targets.len();
    let floor = check_dims(num_states, num_actions, num_observations, params)?;
    if num_observations < 2 {
        return Err(Error::Structure("sigma calibration needs O >= 2".into()));
    }
    let mut rng = seeded_rng(seed);
    let transition = random_transitions(num_states, num_actions, floor, &mut rng);
    let reward: Vec<f64> = (0..num_observations).map(|_| rng.random::<f64>()).collect();
    let init = vec![1.0 / num_states as f64; num_states];
    let mut observation = Vec::with_capacity(num_actions);
    for &target in sigma_targets {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::Domain(format!("sigma target {target} outside (0, 1)")));
        }
        let mut found = None;
        for _ in 0..=params.max_retries {
            let draw = EmissionDraw::sample(num_states, num_observations, &mut rng);
            if let Some(p) = draw.calibrate(num_observations, target) {
                found = Some(draw.matrix(num_observations, p));
                break;
            }
        }
        observation.push(found.ok_or(Error::GenerationFailed {
            retries: params.max_retries,
            best_alpha: 0.0,
            alpha_min: target,
        })?);
    }
    PomdpModel::new(transition, observation, reward, init)
}

/// Random instance: floored transitions, dominant-observation emission
/// matrices, rewards uniform in `[0, 1]` per observation and a uniform
/// initial distribution.
pub fn generate_instance(
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    seed: u64,
    params: &GenParams,
) -> Result<PomdpModel> {
    let floor = check_dims(num_states, num_actions, num_observations, params)?;
    let mut rng = seeded_rng(seed);
    let transition = random_transitions(num_states, num_actions, floor, &mut rng);
    let reward: Vec<f64> = (0..num_observations).map(|_| rng.random::<f64>()).collect();
    let init = vec![1.0 / num_states as f64; num_states];

    let mut best_alpha = 0.0f64;
    for _ in 0..=params.max_retries {
        let observation: Vec<DMatrix<f64>> = (0..num_actions)
            .map(|_| random_observations(num_states, num_observations, params.p_dom, &mut rng))
            .collect();
        let alpha = observation.iter().map(sigma_s).fold(f64::INFINITY, f64::min);
        if alpha > params.alpha_min {
            return PomdpModel::new(transition, observation, reward, init);
        }
        best_alpha = best_alpha.max(alpha);
    }
    Err(Error::GenerationFailed {
        retries: params.max_retries,
        best_alpha,
        alpha_min: params.alpha_min,
    })
}
