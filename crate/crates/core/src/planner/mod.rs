//! Planning on a discretized belief simplex.
//!
//! The simplex is replaced by the lattice of points with coordinates in
//! `{0, 1/m, ..., 1}`; Bayes successors are projected back onto the lattice,
//! which turns the belief MDP into a finite MDP solved by relative value
//! iteration. Optimism is approximated by planning on a finite set of
//! candidate transition models drawn from the confidence region.

mod bmdp;
mod grid;
mod optimistic;

pub use bmdp::{relative_value_iteration, BeliefMdp, PlanDump, PlanResult, APERIODICITY_WEIGHT};
pub use grid::{discretize, discretize_with_budget, BeliefGrid, DEFAULT_GRID_BUDGET};
pub use optimistic::{
    generate_candidates, optimistic_plan, plan_on_model, project_row_floored, CandidateModelSet, OptimisticPlan,
    PlannerSettings,
};
