use nalgebra::DMatrix;
use rand::Rng;

use super::ucrl::EpisodeAcc;
use super::{env_rng, iota_mixture, uniform_transitions, AgentConfig, BeliefTracker, RunLog, Variant};
use crate::estimator::{build_operators, estimate_from_counts};
use crate::planner::{discretize, plan_on_model};
use crate::pomdp::belief::expected_reward_raw;
use crate::pomdp::{random_transitions, Belief, Environment, PomdpModel, TupleCounts};
use crate::{Error, Result, SimRng};

/// Uniformly random actions for the whole horizon, as one episode.
pub fn run_uniform(model: &PomdpModel, horizon: usize, config: &AgentConfig, rng: &mut SimRng) -> Result<RunLog> {
    if config.variant != Variant::Uniform {
        return Err(Error::Config(format!(
            "run_uniform given a {} config",
            config.variant.tag()
        )));
    }
    let (na, no) = (model.num_actions(), model.num_observations());
    let mut env = Environment::new(model, env_rng(rng));
    let mut log = RunLog::new(config, horizon);
    let mut ep = EpisodeAcc::new(na, no, 0);
    let mut cumulative = vec![0; na];
    while env.time() < horizon {
        let a = rng.random_range(0..na);
        let rec = env.step(a);
        log.record(&rec, None, 0);
        ep.observe(a, rec.observation);
    }
    ep.close(&mut log, &mut cumulative, None, None);
    Ok(log)
}

/// Greedy action on the instantaneous expected reward `g(b, a)` with
/// probability `1 - iota (A - 1)`, otherwise a uniformly chosen other action.
/// Ties go to the lowest index.
pub fn myopic_policy_action(
    belief: &Belief,
    observation: &[DMatrix<f64>],
    reward: &[f64],
    iota: f64,
    rng: &mut SimRng,
) -> usize {
    iota_mixture(
        greedy_reward_action(belief.probs(), observation, reward),
        iota,
        observation.len(),
        rng,
    )
}

fn greedy_reward_action(b: &[f64], observation: &[DMatrix<f64>], reward: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (a, o) in observation.iter().enumerate() {
        let g = expected_reward_raw(b, o, reward);
        if g > best.1 {
            best = (a, g);
        }
    }
    best.0
}

/// Data-collection policy of the estimation experiments: `iota`-floored
/// myopic play on a belief tracked with an internal transition model that
/// is redrawn every `rotation_period` steps. Rotation periods are logged as
/// episodes.
pub fn run_myopic(model: &PomdpModel, horizon: usize, config: &AgentConfig, rng: &mut SimRng) -> Result<RunLog> {
    let Variant::Myopic { iota, rotation_period } = config.variant else {
        return Err(Error::Config(format!(
            "run_myopic given a {} config",
            config.variant.tag()
        )));
    };
    let (ns, na, no) = (model.num_states(), model.num_actions(), model.num_observations());
    config.validate(na)?;
    let obs = model.observation();
    let mut env = Environment::new(model, env_rng(rng));
    let mut log = RunLog::new(config, horizon);
    let mut belief = BeliefTracker::new(model.init_dist());
    let mut truth = BeliefTracker::new(model.init_dist());
    let floor = 1.0 / (20.0 * ns as f64);
    let mut cumulative = vec![0; na];
    let mut k = 0;
    while env.time() < horizon {
        let internal = random_transitions(ns, na, floor, rng);
        let mut ep = EpisodeAcc::new(na, no, k);
        let end = (env.time() + rotation_period).min(horizon);
        while env.time() < end {
            let greedy = greedy_reward_action(&belief.b, obs, model.reward());
            let a = iota_mixture(greedy, iota, na, rng);
            let rec = env.step(a);
            log.record(&rec, None, k);
            ep.observe(a, rec.observation);
            belief.update(&internal[a], &obs[a], rec.observation);
            truth.update(&model.transition()[a], &obs[a], rec.observation);
            ep.belief_error += belief.l1(&truth);
        }
        ep.close(&mut log, &mut cumulative, None, None);
        k += 1;
    }
    Ok(log)
}

/// Alternates `tau1` uniform exploration steps with `tau2` greedy steps.
/// At the end of every exploration phase the transitions are re-estimated
/// from all exploration tuples and the planner runs on that point estimate.
/// Each phase is logged as its own episode.
pub fn run_seeu_lite(model: &PomdpModel, horizon: usize, config: &AgentConfig, rng: &mut SimRng) -> Result<RunLog> {
    let Variant::SeeuLite { tau1, tau2 } = config.variant else {
        return Err(Error::Config(format!(
            "run_seeu_lite given a {} config",
            config.variant.tag()
        )));
    };
    let (ns, na, no) = (model.num_states(), model.num_actions(), model.num_observations());
    config.validate(na)?;
    let ops = build_operators(model.observation())?;
    let grid = discretize(ns, config.planner.resolution)?;
    let obs = model.observation();
    let mut env = Environment::new(model, env_rng(rng));
    let mut log = RunLog::new(config, horizon);
    let mut belief = BeliefTracker::new(model.init_dist());
    let mut truth = BeliefTracker::new(model.init_dist());
    let mut explored = TupleCounts::new(na, no);
    let mut current = uniform_transitions(ns, na);
    let mut cumulative = vec![0; na];
    let mut k = 0;
    while env.time() < horizon {
        // exploration
        let mut ep = EpisodeAcc::new(na, no, k);
        let end = (env.time() + tau1).min(horizon);
        while env.time() < end {
            let a = rng.random_range(0..na);
            let rec = env.step(a);
            log.record(&rec, None, k);
            ep.observe(a, rec.observation);
            belief.update(&current[a], &obs[a], rec.observation);
            truth.update(&model.transition()[a], &obs[a], rec.observation);
            ep.belief_error += belief.l1(&truth);
        }
        explored.absorb(&ep.close(&mut log, &mut cumulative, None, None));
        k += 1;
        if env.time() >= horizon {
            break;
        }
        current = estimate_from_counts(&explored, &ops, k).transitions;
        let plan = plan_on_model(&grid, &current, obs, model.reward(), &config.planner);
        if !plan.converged {
            log.warnings.push(format!("phase {k}: planner did not converge"));
        }
        // exploitation
        let mut ep = EpisodeAcc::new(na, no, k);
        let end = (env.time() + tau2).min(horizon);
        while env.time() < end {
            let gi = grid.project(&belief.b);
            let a = plan.policy[gi];
            let rec = env.step(a);
            log.record(&rec, Some(gi), k);
            ep.observe(a, rec.observation);
            belief.update(&current[a], &obs[a], rec.observation);
            truth.update(&model.transition()[a], &obs[a], rec.observation);
            ep.belief_error += belief.l1(&truth);
        }
        ep.close(&mut log, &mut cumulative, Some(plan.gain), None);
        k += 1;
    }
    Ok(log)
}
