use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes or dimensions disagree with each other.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("observation {observation} is impossible under the current belief for action {action}")]
    ImpossibleObservation { action: usize, observation: usize },

    #[error("instance generation failed after {retries} retries (best alpha {best_alpha:.4}, required > {alpha_min})")]
    GenerationFailed {
        retries: usize,
        best_alpha: f64,
        alpha_min: f64,
    },

    #[error("observation block ({action}, {other_action}) is rank deficient: sigma_min = {sigma_min:e}")]
    RankDeficient {
        action: usize,
        other_action: usize,
        sigma_min: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("belief grid with {points} points exceeds the budget of {budget} points")]
    GridTooLarge { points: u128, budget: usize },

    #[error("value iteration did not converge after {iterations} sweeps (span {span:e})")]
    NotConverged { iterations: usize, span: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
