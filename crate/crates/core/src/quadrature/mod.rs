//! Randomly shifted rank-1 lattice rules on `[-1,1]^K`, Hellinger and total
//! variation estimates, and power-law rate fits.

mod lattice;
mod metrics;
mod rates;

pub use lattice::{lattice_rule, Estimate, GeneratingVector, QuadratureRule, EMBEDDED_POINTS};
pub use metrics::{
    expected_hellinger_sq, hellinger, hellinger_from_densities, hellinger_sq_estimate,
    total_variation_estimate, tv_bound_check,
};
pub use rates::{fit_rate, predicted_l2_sq_rate, predicted_sup_sq_rate, reference_rate, RateModel};
