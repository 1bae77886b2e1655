use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::ucrl::EpisodeAcc;
use super::{env_rng, AgentConfig, BeliefTracker, RunLog, Variant};
use crate::planner::{discretize, plan_on_model};
use crate::pomdp::{random_transitions, sample_index, Environment, PomdpModel};
use crate::{Error, Result, SimRng};

/// One transition-model hypothesis with the belief it implies.
#[derive(Debug, Clone)]
struct Particle {
    transitions: Vec<DMatrix<f64>>,
    belief: BeliefTracker,
}

/// Posterior-sampling agent backed by a Rao-Blackwellized particle filter:
/// every particle carries a full transition hypothesis and tracks the exact
/// hidden-state belief under it, weighted by the observation likelihood.
///
/// Episode `k` ends once its length would exceed `T_{k-1} + 1` or some action
/// has been played more than twice its count at the episode start; the
/// first episode has length `t0`. At each episode start one particle is drawn
/// by weight, the planner runs on its model, and the agent acts greedily from
/// the posterior-mean belief propagated under that model.
pub fn run_psrl_pf(model: &PomdpModel, horizon: usize, config: &AgentConfig, rng: &mut SimRng) -> Result<RunLog> {
    let Variant::PsrlPf {
        particles: np,
        ess_threshold,
        jitter_concentration,
    } = config.variant
    else {
        return Err(Error::Config(format!(
            "run_psrl_pf given a {} config",
            config.variant.tag()
        )));
    };
    let (ns, na, no) = (model.num_states(), model.num_actions(), model.num_observations());
    config.validate(na)?;
    let grid = discretize(ns, config.planner.resolution)?;
    let obs = model.observation();
    let floor = 1.0 / (20.0 * ns as f64);
    let mut env = Environment::new(model, env_rng(rng));
    let mut log = RunLog::new(config, horizon);
    let mut truth = BeliefTracker::new(model.init_dist());

    let mut particles: Vec<Particle> = (0..np)
        .map(|_| Particle {
            transitions: random_transitions(ns, na, floor, rng),
            belief: BeliefTracker::new(model.init_dist()),
        })
        .collect();
    let mut weights = vec![1.0 / np as f64; np];

    let mut cumulative = vec![0u64; na];
    let mut prev_len = config.t0.saturating_sub(1);
    let mut k = 0;
    while env.time() < horizon {
        let pick = sample_index(weights.iter().copied(), rng.random::<f64>());
        let sampled = particles[pick].transitions.clone();
        let plan = plan_on_model(&grid, &sampled, obs, model.reward(), &config.planner);
        if !plan.converged {
            log.warnings.push(format!("episode {k}: planner did not converge"));
        }
        let mut mean = vec![0.0; ns];
        for (p, w) in particles.iter().zip(&weights) {
            for (m, b) in mean.iter_mut().zip(&p.belief.b) {
                *m += w * b;
            }
        }
        let total: f64 = mean.iter().sum();
        mean.iter_mut().for_each(|m| *m /= total);
        let mut belief = BeliefTracker::new(&mean);

        let max_len = prev_len + 1;
        let mut ep = EpisodeAcc::new(na, no, k);
        let mut len = 0;
        while env.time() < horizon && len < max_len {
            let gi = grid.project(&belief.b);
            let a = plan.policy[gi];
            let start_count = cumulative[a];
            if ep.n[a] + start_count > 2 * start_count.max(1) {
                break;
            }
            let rec = env.step(a);
            log.record(&rec, Some(gi), k);
            ep.observe(a, rec.observation);
            belief.update(&sampled[a], &obs[a], rec.observation);
            truth.update(&model.transition()[a], &obs[a], rec.observation);
            ep.belief_error += belief.l1(&truth);
            len += 1;

            filter_step(&mut particles, &mut weights, obs, a, rec.observation);
            if effective_sample_size(&weights) < ess_threshold {
                particles = systematic_resample(&particles, &weights, rng);
                weights.iter_mut().for_each(|w| *w = 1.0 / np as f64);
                for p in particles.iter_mut() {
                    jitter(&mut p.transitions, jitter_concentration, rng);
                }
            }
        }
        ep.close(&mut log, &mut cumulative, Some(plan.gain), None);
        prev_len = len;
        k += 1;
    }
    Ok(log)
}

/// Reweights by `P(o | b_i, a)` and advances every particle belief.
fn filter_step(particles: &mut [Particle], weights: &mut [f64], obs: &[DMatrix<f64>], action: usize, o: usize) {
    let mut total = 0.0;
    for (p, w) in particles.iter_mut().zip(weights.iter_mut()) {
        let lik: f64 = p
            .belief
            .b
            .iter()
            .enumerate()
            .map(|(s, b)| b * obs[action][(o, s)])
            .sum();
        *w *= lik;
        total += *w;
        p.belief.update(&p.transitions[action], &obs[action], o);
    }
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        let n = weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = 1.0 / n);
    }
}

fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling: one uniform offset, `n` evenly spaced pointers.
fn systematic_resample<T: Clone>(items: &[T], weights: &[f64], rng: &mut SimRng) -> Vec<T> {
    let n = items.len();
    let u0 = rng.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut acc = weights[0];
    let mut i = 0;
    for j in 0..n {
        let u = u0 + j as f64 / n as f64;
        while u > acc && i + 1 < n {
            i += 1;
            acc += weights[i];
        }
        out.push(items[i].clone());
    }
    out
}

/// Replaces each row by a draw from `Dirichlet(concentration * row)`.
fn jitter(transitions: &mut [DMatrix<f64>], concentration: f64, rng: &mut SimRng) {
    for t in transitions.iter_mut() {
        for r in 0..t.nrows() {
            let mut sum = 0.0;
            for c in 0..t.ncols() {
                let shape = (concentration * t[(r, c)]).max(1e-3);
                let g = Gamma::new(shape, 1.0).expect("positive shape").sample(rng).max(1e-300);
                t[(r, c)] = g;
                sum += g;
            }
            for c in 0..t.ncols() {
                t[(r, c)] = (t[(r, c)] / sum).max(1e-12);
            }
            let sum: f64 = t.row(r).sum();
            for c in 0..t.ncols() {
                t[(r, c)] /= sum;
            }
        }
    }
}
