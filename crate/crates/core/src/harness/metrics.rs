use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::config::CiMethod;
use crate::estimator::frobenius_distance;
use crate::planner::{discretize, plan_on_model, PlannerSettings};
use crate::pomdp::PomdpModel;
use crate::{Error, Result};

/// Mean and 95% half-width of per-run values at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ci {
    pub mean: f64,
    pub halfwidth: f64,
    /// Set when fewer than two values made a half-width impossible.
    pub degenerate: bool,
}

/// Student-t (or normal) 95% interval: quantile at `n - 1` degrees of freedom
/// times the sample standard deviation over `sqrt(n)`.
pub fn aggregate_ci(values: &[f64], method: CiMethod) -> Ci {
    let n = values.len();
    if n == 0 {
        return Ci {
            mean: f64::NAN,
            halfwidth: 0.0,
            degenerate: true,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Ci {
            mean,
            halfwidth: 0.0,
            degenerate: true,
        };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let q = match method {
        CiMethod::StudentT => StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975),
        CiMethod::Normal => Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(0.975),
    };
    Ci {
        mean,
        halfwidth: q * var.sqrt() / (n as f64).sqrt(),
        degenerate: false,
    }
}

/// Per-checkpoint summary over runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub checkpoints: Vec<u64>,
    /// `values[run][i]` is the value of `run` at `checkpoints[i]`.
    pub values: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub halfwidth: Vec<f64>,
}

impl MetricSeries {
    pub fn from_runs(checkpoints: Vec<u64>, values: Vec<Vec<f64>>, method: CiMethod) -> Self {
        let (mut mean, mut halfwidth) = (Vec::new(), Vec::new());
        for i in 0..checkpoints.len() {
            let col: Vec<f64> = values.iter().map(|run| run[i]).collect();
            let ci = aggregate_ci(&col, method);
            mean.push(ci.mean);
            halfwidth.push(ci.halfwidth);
        }
        Self {
            checkpoints,
            values,
            mean,
            halfwidth,
        }
    }

    pub fn final_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|r| *r.last().expect("non-empty series"))
            .collect()
    }

    pub fn mean_at(&self, checkpoint: u64) -> Option<f64> {
        self.checkpoints
            .iter()
            .position(|&c| c == checkpoint)
            .map(|i| self.mean[i])
    }
}

/// `count` log-spaced integer checkpoints in `[1, horizon]`, every power of
/// ten up to `horizon`, and `horizon` itself; sorted and deduplicated.
pub fn log_checkpoints(horizon: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count + 8);
    let top = (horizon as f64).ln();
    for i in 0..count {
        let x = if count == 1 {
            top
        } else {
            top * i as f64 / (count - 1) as f64
        };
        out.push((x.exp().round() as u64).clamp(1, horizon));
    }
    let mut p = 1u64;
    while p <= horizon {
        out.push(p);
        p = match p.checked_mul(10) {
            Some(q) => q,
            None => break,
        };
    }
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    out
}

/// Per-action sample-count checkpoints, `per_decade` log-spaced points per
/// factor of ten between `min` and `max` (both included).
pub fn sample_checkpoints(min: u64, max: u64, per_decade: usize) -> Vec<u64> {
    let decades = (max as f64 / min as f64).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    let mut out: Vec<u64> = (0..=steps)
        .map(|i| {
            let frac = if steps == 0 { 0.0 } else { i as f64 / steps as f64 };
            (min as f64 * (max as f64 / min as f64).powf(frac)).round() as u64
        })
        .collect();
    out.dedup();
    out
}

/// Regret reference: the gain of relative value iteration on the true model
/// over the fine grid.
pub fn compute_gain_oracle(model: &PomdpModel, m_star: usize, tol: f64) -> Result<f64> {
    let grid = discretize(model.num_states(), m_star)?;
    let settings = PlannerSettings {
        resolution: m_star,
        tol,
        ..PlannerSettings::default()
    };
    let plan = plan_on_model(
        &grid,
        model.transition(),
        model.observation(),
        model.reward(),
        &settings,
    );
    if !plan.converged {
        return Err(Error::NotConverged {
            iterations: plan.iterations,
            span: plan.span,
        });
    }
    Ok(plan.gain)
}

/// One regret row per checkpoint `t`: `(t, sum_{u<t} r_u, t rho* - sum_{u<t} r_u)`.
pub fn compute_regret_series(rewards: &[f64], rho_star: f64, checkpoints: &[u64]) -> Result<Vec<(u64, f64, f64)>> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut cum = 0.0;
    let mut t = 0usize;
    for &c in checkpoints {
        if c as usize > rewards.len() {
            return Err(Error::Range(format!("checkpoint {c} beyond horizon {}", rewards.len())));
        }
        if (c as usize) < t {
            return Err(Error::Range("checkpoints must be non-decreasing".into()));
        }
        while t < c as usize {
            cum += rewards[t];
            t += 1;
        }
        out.push((c, cum, c as f64 * rho_star - cum));
    }
    Ok(out)
}

/// `errors[a][j] = ||T_a - T̂_a^{(j)}||_F` for every snapshot `j`.
pub fn compute_frobenius_series(model: &PomdpModel, snapshots: &[Vec<DMatrix<f64>>]) -> Vec<Vec<f64>> {
    (0..model.num_actions())
        .map(|a| {
            snapshots
                .iter()
                .map(|snap| frobenius_distance(&model.transition()[a], &snap[a]))
                .collect()
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
