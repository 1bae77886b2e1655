use serde::Serialize;

use crate::{Error, Result};

/// Closed-form constants driven by the minimum transition probability `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub epsilon: f64,
    /// Belief-filter contraction bound `1 - ε / (1 - ε)`.
    pub eta_max: f64,
    /// One-step belief constant `4 (1 - ε) / ε²`.
    pub l1: f64,
    /// Cumulative belief-error constant `4 (1 - ε)² / ε³`.
    pub l: f64,
    /// Regret constant `4 (1 - ε)³ / ε⁴`.
    pub c: f64,
    /// Bias-span bound evaluated at `ε / 2`.
    pub d: f64,
    pub g_tilde: f64,
}

/// Uniform bias-span bound
/// `D(ε) = 8 (2 / (1 - β)² + (1 + β) log_β((1 - β) / 8)) / (1 - β)`, `β = (1 - 2ε) / (1 - ε)`.
pub fn bias_span_bound(epsilon: f64) -> f64 {
    let beta = (1.0 - 2.0 * epsilon) / (1.0 - epsilon);
    let log_beta = ((1.0 - beta) / 8.0).ln() / beta.ln();
    8.0 * (2.0 / (1.0 - beta).powi(2) + (1.0 + beta) * log_beta) / (1.0 - beta)
}

pub fn theory_constants(epsilon: f64, g_tilde: f64) -> Result<TheoryConstants> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside (0, 1/2)")));
    }
    if !(g_tilde >= 1.0) {
        return Err(Error::Domain(format!("G = {g_tilde} must be >= 1")));
    }
    let q = 1.0 - epsilon;
    Ok(TheoryConstants {
        epsilon,
        eta_max: 1.0 - epsilon / q,
        l1: 4.0 * q / epsilon.powi(2),
        l: 4.0 * q.powi(2) / epsilon.powi(3),
        c: 4.0 * q.powi(3) / epsilon.powi(4),
        d: bias_span_bound(epsilon / 2.0),
        g_tilde,
    })
}
