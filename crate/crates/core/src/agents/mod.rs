//! Learning agents. Every agent drives an [`Environment`] for a fixed horizon
//! and returns a [`RunLog`]; one run is single-threaded and fully determined by
//! `(model, config, rng)`.

mod baselines;
mod psrl;
mod ucrl;

pub use baselines::{myopic_policy_action, run_myopic, run_seeu_lite, run_uniform};
pub use psrl::run_psrl_pf;
pub use ucrl::{run_aoas_ucrl, run_oas_ucrl};

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::docfmt::f17;
use crate::planner::PlannerSettings;
use crate::pomdp::belief::bayes_update_into;
use crate::pomdp::{PomdpModel, StepRecord};
use crate::{seeded_rng, Error, Result, SimRng};

/// Agent family plus the parameters only that family uses.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Variant {
    /// `sample_reuse = false` estimates from the previous episode only.
    AoasUcrl {
        sample_reuse: bool,
    },
    OasUcrl {
        iota: f64,
    },
    SeeuLite {
        tau1: usize,
        tau2: usize,
    },
    PsrlPf {
        particles: usize,
        ess_threshold: f64,
        /// Dirichlet concentration of the post-resampling jitter kernel.
        jitter_concentration: f64,
    },
    Uniform,
    Myopic {
        iota: f64,
        rotation_period: usize,
    },
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::AoasUcrl { .. } => "aoas_ucrl",
            Variant::OasUcrl { .. } => "oas_ucrl",
            Variant::SeeuLite { .. } => "seeu_lite",
            Variant::PsrlPf { .. } => "psrl_pf",
            Variant::Uniform => "uniform",
            Variant::Myopic { .. } => "myopic",
        }
    }

    /// Variant with its default parameters.
    pub fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "aoas_ucrl" => Variant::AoasUcrl { sample_reuse: true },
            "oas_ucrl" => Variant::OasUcrl { iota: 0.025 },
            "seeu_lite" => Variant::SeeuLite {
                tau1: 8000,
                tau2: 20000,
            },
            "psrl_pf" => Variant::PsrlPf {
                particles: 100,
                ess_threshold: 30.0,
                jitter_concentration: 500.0,
            },
            "uniform" => Variant::Uniform,
            "myopic" => Variant::Myopic {
                iota: 0.15,
                rotation_period: 10_000,
            },
            other => return Err(Error::Config(format!("unknown agent variant `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentConfig {
    pub variant: Variant,
    /// Length of the initial uniform episode (PSRL: length of the first episode).
    pub t0: usize,
    pub delta: f64,
    pub c_scale: f64,
    pub planner: PlannerSettings,
}

impl AgentConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            t0: 2500,
            delta: 0.05,
            c_scale: 0.5,
            planner: PlannerSettings::default(),
        }
    }

    /// Short identifier used in CSV `agent` columns.
    pub fn label(&self) -> String {
        match &self.variant {
            Variant::AoasUcrl { sample_reuse: false } => "aoas_ucrl_noreuse".into(),
            Variant::OasUcrl { iota } => format!("oas_ucrl_iota{iota}"),
            Variant::Myopic { iota, .. } => format!("myopic_iota{iota}"),
            v => v.tag().into(),
        }
    }

    pub fn validate(&self, num_actions: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{}: {m}", self.variant.tag())));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        if self.c_scale < 0.0 {
            return bad(format!("c_scale = {} is negative", self.c_scale));
        }
        if self.planner.resolution == 0 {
            return bad("grid resolution must be >= 1".into());
        }
        let iota_ok = |iota: f64| iota >= 0.0 && iota * (num_actions as f64 - 1.0) <= 1.0 + 1e-12;
        match self.variant {
            Variant::AoasUcrl { .. } | Variant::OasUcrl { .. } if self.t0 < 2 => bad("t0 must be >= 2".into()),
            Variant::OasUcrl { iota } | Variant::Myopic { iota, .. } if !iota_ok(iota) => {
                bad(format!("iota = {iota} infeasible for A = {num_actions}"))
            }
            Variant::Myopic { rotation_period: 0, .. } => bad("rotation_period must be >= 1".into()),
            Variant::SeeuLite { tau1, tau2 } if tau1 < 2 || tau2 == 0 => bad("tau1 >= 2 and tau2 >= 1 required".into()),
            Variant::PsrlPf {
                particles,
                ess_threshold,
                jitter_concentration,
            } => {
                if particles == 0 || !(ess_threshold >= 0.0) || !(jitter_concentration > 0.0) || self.t0 == 0 {
                    bad("particles, t0 and jitter concentration must be positive".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Bookkeeping of one episode. `cumulative` is `N_k`, the per-action play
/// counts before the episode; `n` is `n_k`, the plays inside it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub k: usize,
    pub start: usize,
    pub length: usize,
    pub n: Vec<u64>,
    pub cumulative: Vec<u64>,
    /// Gain of the plan followed in the episode, when one exists.
    pub planned_gain: Option<f64>,
    /// Action whose in-episode budget ended the episode.
    pub stop_action: Option<usize>,
    /// `sum_t ||b_t - b_t^true||_1` between the agent belief and the
    /// true-model belief over the episode.
    pub belief_error: f64,
}

/// Per-action transition errors of the estimate built at an episode start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationSnapshot {
    pub episode: usize,
    pub t: usize,
    pub samples: Vec<u64>,
    pub frobenius: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepEntry {
    pub t: u64,
    pub action: u16,
    pub observation: u16,
    pub reward: f64,
    pub grid_index: Option<u32>,
    pub episode: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub agent: String,
    pub config: AgentConfig,
    pub seed: Option<u64>,
    pub horizon: usize,
    pub steps: Vec<StepEntry>,
    pub episodes: Vec<EpisodeStats>,
    pub snapshots: Vec<EstimationSnapshot>,
    pub warnings: Vec<String>,
}

impl RunLog {
    fn new(config: &AgentConfig, horizon: usize) -> Self {
        Self {
            agent: config.label(),
            config: config.clone(),
            seed: None,
            horizon,
            steps: Vec::with_capacity(horizon),
            episodes: Vec::new(),
            snapshots: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn record(&mut self, rec: &StepRecord, grid_index: Option<usize>, episode: usize) {
        self.steps.push(StepEntry {
            t: rec.t as u64,
            action: rec.action as u16,
            observation: rec.observation as u16,
            reward: rec.reward,
            grid_index: grid_index.map(|g| g as u32),
            episode: episode as u32,
        });
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }

    /// Plays per action over the whole run.
    pub fn pulls(&self, num_actions: usize) -> Vec<u64> {
        let mut n = vec![0; num_actions];
        for s in &self.steps {
            n[s.action as usize] += 1;
        }
        n
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Line-oriented dump: two `#` header lines echoing the agent, then one
    /// CSV record per step.
    pub fn write_records<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# agent={} seed={} horizon={}",
            self.agent,
            self.seed.map_or("none".to_string(), |s| s.to_string()),
            self.horizon
        )?;
        writeln!(w, "# config={}", serde_json::to_string(&self.config)?)?;
        writeln!(w, "t,action,observation,reward,grid_index,episode")?;
        for s in &self.steps {
            let g = s.grid_index.map_or(String::new(), |g| g.to_string());
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.t,
                s.action,
                s.observation,
                f17(s.reward),
                g,
                s.episode
            )?;
        }
        Ok(())
    }
}

/// Runs the agent described by `config` with a stream seeded by `seed`.
pub fn run_agent(model: &PomdpModel, horizon: usize, config: &AgentConfig, seed: u64) -> Result<RunLog> {
    let mut rng = seeded_rng(seed);
    let mut log = match config.variant {
        Variant::AoasUcrl { .. } => run_aoas_ucrl(model, horizon, config, &mut rng)?,
        Variant::OasUcrl { .. } => run_oas_ucrl(model, horizon, config, &mut rng)?,
        Variant::SeeuLite { .. } => run_seeu_lite(model, horizon, config, &mut rng)?,
        Variant::PsrlPf { .. } => run_psrl_pf(model, horizon, config, &mut rng)?,
        Variant::Uniform => run_uniform(model, horizon, config, &mut rng)?,
        Variant::Myopic { .. } => run_myopic(model, horizon, config, &mut rng)?,
    };
    log.seed = Some(seed);
    Ok(log)
}

/// Environment stream derived from the agent stream so one seed fixes both.
fn env_rng(rng: &mut SimRng) -> SimRng {
    SimRng::seed_from_u64(rng.random::<u64>())
}

fn uniform_transitions(num_states: usize, num_actions: usize) -> Vec<DMatrix<f64>> {
    vec![DMatrix::from_element(num_states, num_states, 1.0 / num_states as f64); num_actions]
}

/// `greedy` with probability `1 - iota (A - 1)`, otherwise one of the other
/// actions uniformly. Always consumes one draw, plus one when exploring.
fn iota_mixture(greedy: usize, iota: f64, num_actions: usize, rng: &mut SimRng) -> usize {
    let u = rng.random::<f64>();
    if num_actions == 1 || u < 1.0 - iota * (num_actions - 1) as f64 {
        return greedy;
    }
    let j = rng.random_range(0..num_actions - 1);
    if j >= greedy {
        j + 1
    } else {
        j
    }
}

/// Running belief kept as a raw vector with a scratch buffer.
#[derive(Debug, Clone)]
struct BeliefTracker {
    b: Vec<f64>,
    scratch: Vec<f64>,
}

impl BeliefTracker {
    fn new(init: &[f64]) -> Self {
        Self {
            b: init.to_vec(),
            scratch: vec![0.0; init.len()],
        }
    }

    /// Bayes step; an observation impossible under the tracked model resets
    /// the belief to uniform and returns `false`.
    fn update(&mut self, trans: &DMatrix<f64>, obs_model: &DMatrix<f64>, obs: usize) -> bool {
        match bayes_update_into(&self.b, trans, obs_model, obs, &mut self.scratch) {
            Some(_) => {
                std::mem::swap(&mut self.b, &mut self.scratch);
                true
            }
            None => {
                let n = self.b.len() as f64;
                self.b.iter_mut().for_each(|x| *x = 1.0 / n);
                false
            }
        }
    }

    fn l1(&self, other: &BeliefTracker) -> f64 {
        self.b.iter().zip(&other.b).map(|(x, y)| (x - y).abs()).sum()
    }
}
