use rand::Rng;

use super::{
    env_rng, iota_mixture, uniform_transitions, AgentConfig, BeliefTracker, EpisodeStats, EstimationSnapshot, RunLog,
    Variant,
};
use crate::estimator::{build_operators, estimate_from_counts, frobenius_distance, ConfidenceRegion, Dims};
use crate::planner::{discretize, optimistic_plan};
use crate::pomdp::{Environment, PomdpModel, Tuple, TupleCounts};
use crate::{Error, Result, SimRng};

/// Episodic optimistic agent.
///
/// Episode 0 plays uniformly for `t0` steps. Each later episode `k` estimates
/// the transitions from all tuples gathered so far (or, without reuse, from
/// episode `k - 1` alone), builds the confidence balls, asks the optimistic
/// oracle for a grid policy and follows it greedily on a belief propagated
/// with the chosen model. The episode stops as soon as the action about to be
/// played has `n_k(a) >= max(1, N_k(a))`.
pub fn run_aoas_ucrl(model: &PomdpModel, horizon: usize, config: &AgentConfig, rng: &mut SimRng) -> Result<RunLog> {
    match config.variant {
        Variant::AoasUcrl { sample_reuse } => run_ucrl(model, horizon, config, sample_reuse, None, rng),
        _ => Err(Error::Config(format!(
            "run_aoas_ucrl given a {} config",
            config.variant.tag()
        ))),
    }
}

/// Same loop with two changes: actions come from the `iota`-floored mixture
/// around the greedy action, and each estimate uses only the previous
/// episode's tuples.
pub fn run_oas_ucrl(model: &PomdpModel, horizon: usize, config: &AgentConfig, rng: &mut SimRng) -> Result<RunLog> {
    match config.variant {
        Variant::OasUcrl { iota } => run_ucrl(model, horizon, config, false, Some(iota), rng),
        _ => Err(Error::Config(format!(
            "run_oas_ucrl given a {} config",
            config.variant.tag()
        ))),
    }
}

fn run_ucrl(
    model: &PomdpModel,
    horizon: usize,
    config: &AgentConfig,
    reuse: bool,
    iota: Option<f64>,
    rng: &mut SimRng,
) -> Result<RunLog> {
    let (ns, na, no) = (model.num_states(), model.num_actions(), model.num_observations());
    config.validate(na)?;
    if horizon <= config.t0 {
        return Err(Error::Config(format!(
            "horizon {horizon} must exceed t0 = {}",
            config.t0
        )));
    }
    let ops = build_operators(model.observation())?;
    let grid = discretize(ns, config.planner.resolution)?;
    let dims = Dims {
        states: ns,
        actions: na,
        observations: no,
    };
    let obs = model.observation();
    let mut env = Environment::new(model, env_rng(rng));
    let mut log = RunLog::new(config, horizon);

    let mut belief = BeliefTracker::new(model.init_dist());
    let mut truth = BeliefTracker::new(model.init_dist());
    let mut all_counts = TupleCounts::new(na, no);
    let mut cumulative = vec![0u64; na];

    // episode 0: uniform exploration, belief under uniform transitions
    let uniform = uniform_transitions(ns, na);
    let mut ep = EpisodeAcc::new(na, no, 0);
    while env.time() < config.t0 {
        let a = rng.random_range(0..na);
        let rec = env.step(a);
        log.record(&rec, None, 0);
        ep.observe(a, rec.observation);
        belief.update(&uniform[a], &obs[a], rec.observation);
        truth.update(&model.transition()[a], &obs[a], rec.observation);
        ep.belief_error += belief.l1(&truth);
    }
    let mut last_counts = ep.close(&mut log, &mut cumulative, None, None);
    all_counts.absorb(&last_counts);

    let mut k = 1;
    while env.time() < horizon {
        let data = if reuse { &all_counts } else { &last_counts };
        let est = estimate_from_counts(data, &ops, k);
        let region = ConfidenceRegion::build(&est, k, dims, config.delta, config.c_scale)?;
        log.snapshots.push(EstimationSnapshot {
            episode: k,
            t: env.time(),
            samples: est.counts.clone(),
            frobenius: (0..na)
                .map(|a| frobenius_distance(&model.transition()[a], &est.transitions[a]))
                .collect(),
        });
        let opt = optimistic_plan(&est, &region, obs, model.reward(), &grid, &config.planner, rng, &[]);
        if !opt.plan.converged {
            log.warnings.push(format!(
                "episode {k}: planner stopped after {} sweeps with span {}",
                opt.plan.iterations, opt.plan.span
            ));
        }
        let tilde = &opt.transitions;
        let mut ep = EpisodeAcc::new(na, no, k);
        let mut stop = None;
        while env.time() < horizon {
            let gi = grid.project(&belief.b);
            let greedy = opt.plan.policy[gi];
            let a = match iota {
                Some(iota) => iota_mixture(greedy, iota, na, rng),
                None => greedy,
            };
            if ep.n[a] >= cumulative[a].max(1) {
                stop = Some(a);
                break;
            }
            let rec = env.step(a);
            log.record(&rec, Some(gi), k);
            ep.observe(a, rec.observation);
            belief.update(&tilde[a], &obs[a], rec.observation);
            truth.update(&model.transition()[a], &obs[a], rec.observation);
            ep.belief_error += belief.l1(&truth);
        }
        last_counts = ep.close(&mut log, &mut cumulative, Some(opt.gain), stop);
        all_counts.absorb(&last_counts);
        k += 1;
    }
    Ok(log)
}

/// In-episode accumulator. Tuples never straddle an episode boundary.
pub(super) struct EpisodeAcc {
    pub(super) k: usize,
    pub(super) n: Vec<u64>,
    pub(super) counts: TupleCounts,
    prev: Option<(usize, usize)>,
    length: usize,
    pub(super) belief_error: f64,
}

impl EpisodeAcc {
    pub(super) fn new(num_actions: usize, num_observations: usize, k: usize) -> Self {
        Self {
            k,
            n: vec![0; num_actions],
            counts: TupleCounts::new(num_actions, num_observations),
            prev: None,
            length: 0,
            belief_error: 0.0,
        }
    }

    pub(super) fn observe(&mut self, action: usize, obs: usize) {
        self.n[action] += 1;
        self.length += 1;
        if let Some((pa, po)) = self.prev {
            self.counts.push(Tuple {
                action: pa,
                next_action: action,
                obs: po,
                next_obs: obs,
            });
        }
        self.prev = Some((action, obs));
    }

    /// Appends the stats, advances `N_k` and hands back the episode's tuples.
    pub(super) fn close(
        self,
        log: &mut RunLog,
        cumulative: &mut [u64],
        planned_gain: Option<f64>,
        stop_action: Option<usize>,
    ) -> TupleCounts {
        let start = log.steps.len() - self.length;
        log.episodes.push(EpisodeStats {
            k: self.k,
            start,
            length: self.length,
            n: self.n.clone(),
            cumulative: cumulative.to_vec(),
            planned_gain,
            stop_action,
            belief_error: self.belief_error,
        });
        for (c, n) in cumulative.iter_mut().zip(&self.n) {
            *c += n;
        }
        self.counts
    }
}
