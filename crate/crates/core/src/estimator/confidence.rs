use serde::Serialize;

use super::estimate::TransitionEstimate;
use super::theory::TheoryConstants;
use crate::{Error, Result};

/// Problem dimensions entering the radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
}

/// `δ_{a,k} = δ / (A k^3)`.
pub fn confidence_level(delta: f64, num_actions: usize, k: usize) -> f64 {
    delta / (num_actions as f64 * (k as f64).powi(3))
}

/// Frobenius diameter of the set of row-stochastic `S x S` matrices.
fn radius_cap(num_states: usize) -> f64 {
    (2.0 * num_states as f64).sqrt()
}

fn check_k_delta(k: usize, delta: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("episode index k must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Shared square-root term `sqrt(2 k S A log(2 A O^2 k / δ_{a,k}) / N)`.
fn rate_term(k: usize, samples: u64, dims: Dims, delta: f64) -> f64 {
    let dak = confidence_level(delta, dims.actions, k);
    let log_term = (2.0 * dims.actions as f64 * (dims.observations * dims.observations) as f64 * k as f64 / dak).ln();
    (2.0 * k as f64 * dims.states as f64 * dims.actions as f64 * log_term / samples as f64).sqrt()
}

/// Practical radius `c_scale * sqrt(2 k S A log(2 A O^2 k / δ_{a,k}) / N)`,
/// capped at `sqrt(2 S)`. `N = 0` returns the cap.
pub fn confidence_radius(k: usize, samples: u64, dims: Dims, delta: f64, c_scale: f64) -> Result<f64> {
    check_k_delta(k, delta)?;
    if c_scale < 0.0 {
        return Err(Error::Domain(format!("c_scale = {c_scale} is negative")));
    }
    let cap = radius_cap(dims.states);
    if samples == 0 {
        return Ok(cap);
    }
    Ok((c_scale * rate_term(k, samples, dims, delta)).min(cap))
}

/// Radius with the full theoretical prefactor `4 G / (α² d_min (1 - η))`.
/// Reporting only; uncapped.
pub fn theoretical_radius(
    k: usize,
    samples: u64,
    dims: Dims,
    delta: f64,
    alpha: f64,
    d_min: f64,
    constants: &TheoryConstants,
) -> Result<f64> {
    check_k_delta(k, delta)?;
    if samples == 0 {
        return Ok(f64::INFINITY);
    }
    let prefactor = 4.0 * constants.g_tilde / (alpha * alpha * d_min * (1.0 - constants.eta_max));
    Ok(prefactor * rate_term(k, samples, dims, delta))
}

/// Per-action Frobenius balls around `T̂_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceRegion {
    pub radii: Vec<f64>,
    pub deltas: Vec<f64>,
    pub c_scale: f64,
    pub episode: usize,
}

impl ConfidenceRegion {
    pub fn build(estimate: &TransitionEstimate, k: usize, dims: Dims, delta: f64, c_scale: f64) -> Result<Self> {
        let radii = estimate
            .counts
            .iter()
            .map(|&n| confidence_radius(k, n, dims, delta, c_scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            deltas: vec![confidence_level(delta, dims.actions, k); radii.len()],
            radii,
            c_scale,
            episode: k,
        })
    }

    /// Degenerate region: every ball has radius zero.
    pub fn zero(num_actions: usize) -> Self {
        Self {
            radii: vec![0.0; num_actions],
            deltas: vec![0.0; num_actions],
            c_scale: 0.0,
            episode: 0,
        }
    }
}
