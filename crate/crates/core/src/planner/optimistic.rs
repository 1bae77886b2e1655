use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::bmdp::{relative_value_iteration, BeliefMdp, PlanResult};
use super::grid::BeliefGrid;
use crate::estimator::{ConfidenceRegion, TransitionEstimate};

/// Planner knobs shared by every agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerSettings {
    /// Grid resolution `m`.
    pub resolution: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Random perturbations evaluated besides the centre estimate.
    pub n_candidates: usize,
    /// Entry floor of perturbed rows; `None` means `1 / (20 S)`.
    pub eps_proj: Option<f64>,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        Self {
            resolution: 10,
            tol: 1e-6,
            max_iter: 100_000,
            n_candidates: 16,
            eps_proj: None,
        }
    }
}

impl PlannerSettings {
    pub fn floor_for(&self, num_states: usize) -> f64 {
        self.eps_proj.unwrap_or(1.0 / (20.0 * num_states as f64))
    }
}

/// Candidate transition models inside the confidence region. Index 0 is
/// always the centre `T̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateModelSet {
    pub models: Vec<Vec<DMatrix<f64>>>,
}

/// Euclidean projection of `row` onto `{x : x_i >= floor, sum x = 1}`.
pub fn project_row_floored(row: &[f64], floor: f64) -> Vec<f64> {
    let n = row.len();
    let floor = floor.min(1.0 / n as f64);
    let budget = 1.0 - floor * n as f64;
    // projection of (row - floor) onto the simplex scaled to `budget`
    let shifted: Vec<f64> = row.iter().map(|x| x - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - budget) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = shifted.iter().map(|x| (x - theta).max(0.0) + floor).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= sum);
    out
}

fn perturb<R: Rng + ?Sized>(center: &DMatrix<f64>, radius: f64, floor: f64, rng: &mut R) -> DMatrix<f64> {
    let s = center.nrows();
    let mut z = DMatrix::from_fn(s, s, |_, _| rng.sample::<f64, _>(StandardNormal));
    for r in 0..s {
        let mean = z.row(r).mean();
        for c in 0..s {
            z[(r, c)] -= mean;
        }
    }
    let norm = z.norm();
    if radius <= 0.0 || norm == 0.0 {
        return center.clone();
    }
    let moved = center + z * (radius / norm);
    let mut cand = DMatrix::zeros(s, s);
    for r in 0..s {
        let row: Vec<f64> = moved.row(r).iter().copied().collect();
        for (c, x) in project_row_floored(&row, floor).into_iter().enumerate() {
            cand[(r, c)] = x;
        }
    }
    let dev = &cand - center;
    let dist = dev.norm();
    if dist > radius {
        // convex combination with the centre stays row-stochastic
        center + dev * (radius / dist * (1.0 - 1e-12))
    } else {
        cand
    }
}

/// `{T̂} ∪ {n random perturbations}`. Candidate `j` consumes the same random
/// draws whatever `n` is, so smaller sets are prefixes of larger ones.
pub fn generate_candidates<R: Rng + ?Sized>(
    estimate: &TransitionEstimate,
    region: &ConfidenceRegion,
    n_candidates: usize,
    floor: f64,
    rng: &mut R,
) -> CandidateModelSet {
    let mut models = Vec::with_capacity(n_candidates + 1);
    models.push(estimate.transitions.clone());
    for _ in 0..n_candidates {
        let m = estimate
            .transitions
            .iter()
            .zip(&region.radii)
            .map(|(t, &r)| perturb(t, r, floor, rng))
            .collect();
        models.push(m);
    }
    CandidateModelSet { models }
}

/// Outcome of the optimistic oracle.
#[derive(Debug, Clone)]
pub struct OptimisticPlan {
    pub plan: PlanResult,
    pub transitions: Vec<DMatrix<f64>>,
    pub gain: f64,
    pub candidate: usize,
    pub candidate_gains: Vec<f64>,
}

/// Plans on one fully specified model.
pub fn plan_on_model(
    grid: &BeliefGrid,
    transition: &[DMatrix<f64>],
    observation: &[DMatrix<f64>],
    reward: &[f64],
    settings: &PlannerSettings,
) -> PlanResult {
    let bmdp = BeliefMdp::build(grid, transition, observation, reward);
    relative_value_iteration(&bmdp, settings.tol, settings.max_iter)
}

/// Picks the candidate model (and its greedy grid policy) with the largest
/// planned gain; ties go to the lowest candidate index. `forced` models are
/// appended after the random candidates.
#[allow(clippy::too_many_arguments)]
pub fn optimistic_plan<R: Rng + ?Sized>(
    estimate: &TransitionEstimate,
    region: &ConfidenceRegion,
    observation: &[DMatrix<f64>],
    reward: &[f64],
    grid: &BeliefGrid,
    settings: &PlannerSettings,
    rng: &mut R,
    forced: &[Vec<DMatrix<f64>>],
) -> OptimisticPlan {
    let floor = settings.floor_for(grid.num_states());
    let mut set = generate_candidates(estimate, region, settings.n_candidates, floor, rng);
    set.models.extend(forced.iter().cloned());
    let mut best: Option<(usize, PlanResult)> = None;
    let mut gains = Vec::with_capacity(set.models.len());
    for (j, model) in set.models.iter().enumerate() {
        let plan = plan_on_model(grid, model, observation, reward, settings);
        gains.push(plan.gain);
        let better = match &best {
            None => true,
            Some((_, b)) => plan.gain > b.gain,
        };
        if better {
            best = Some((j, plan));
        }
    }
    let (candidate, plan) = best.expect("candidate set contains the centre");
    OptimisticPlan {
        gain: plan.gain,
        transitions: set.models.swap_remove(candidate),
        plan,
        candidate,
        candidate_gains: gains,
    }
}
