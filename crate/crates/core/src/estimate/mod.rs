//! A posteriori error estimation on P1 solutions.

mod geometry;
pub mod hierarchical;
mod residual;
pub mod stats;

pub use geometry::{element_geometry, reference_jacobian, DegenerateElement, ElementGeometry, REFERENCE_AREA};
pub use hierarchical::{hierarchical_reconstruct, HierarchicalField};
pub use residual::{
    compute_estimates, eta_value, g_matrix, jump_norm, local_terms, omega, outward_normal, ElementEstimate,
    EstimateError, Estimates, EstimatorOptions, LocalTerms,
};
pub use stats::{local_effectivity, mean_std, normalized_log_std, percentile, write_estimates_csv};

/// Global effectivity index `estimate / exact`.
pub fn effectivity(estimate: f64, exact: f64) -> f64 {
    estimate / exact
}
