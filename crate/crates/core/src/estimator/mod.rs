//! Action-wise observation-aware estimation of the transition model.
//!
//! For each action `a` the tuples starting with `a` give an empirical
//! distribution over `(a', o, o')`. Inverting the known block-diagonal
//! observation operator `B_a = diag_{a'}(O_a ⊗ O_{a'})` maps it back to
//! `(a', s, s')`; summing out `a'`, clipping negatives and row-normalizing
//! yields `T̂_a`.

mod confidence;
mod estimate;
mod operator;
mod theory;

pub use confidence::{confidence_level, confidence_radius, theoretical_radius, ConfidenceRegion, Dims};
pub use estimate::{
    estimate_action, estimate_from_counts, estimate_transition_model, frobenius_distance, ActionEstimate, EstimateDump,
    TransitionEstimate,
};
pub use operator::{build_block_diag, build_operators, BlockDiagObservationOperator, SVD_CUTOFF};
pub use theory::{bias_span_bound, theory_constants, TheoryConstants};
