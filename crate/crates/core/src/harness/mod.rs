//! Experiment orchestration: flat key-value configs, seeded runs across
//! rayon workers, regret and estimation metrics, and CSV/SVG output.

mod config;
mod metrics;
mod run;

pub use config::{parse_flat, CiMethod, ExperimentConfig, ExperimentKind, InstanceSpec};
pub use metrics::{
    aggregate_ci, compute_frobenius_series, compute_gain_oracle, compute_regret_series, log_checkpoints, ls_slope,
    sample_checkpoints, Ci, MetricSeries,
};
pub use run::{
    estimation_curves, load_instances, run_experiment, AgentSummary, ErrorCurve, EstimationSummary, ExperimentReport,
    InstanceReport,
};
