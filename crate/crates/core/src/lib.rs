//! Parallel combinations of LMS adaptive filters.
//!
//! Two LMS filters with different step sizes run side by side and an adaptive
//! supervisor blends their coefficient vectors into a global estimate
//!
//! ```text
//! w_i = eta(i) w_{1,i} + (1 - eta(i)) w_{2,i}
//! ```
//!
//! The filters can interact through one of four topologies: fully independent,
//! conditional coefficients leakage, conditional handover, or cyclic
//! coefficients feedback (every `L` iterations both filters restart from the
//! global vector). With `L = 1` the global vector follows a variable step size
//! LMS recursion whose step is `eta(i) mu_1 + (1 - eta(i)) mu_2`.
//!
//! Besides the adaptive machinery the crate carries closed-form steady-state
//! and recursive transient mean-square models for the feedback topology, and a
//! seeded Monte Carlo harness to check them against simulation.
//!
//! Module map:
//!
//! - [`scenario`]: system-identification data streams (AR(1) input, random-walk plant).
//! - [`filters`]: LMS recursion and the VSS-LMS baseline.
//! - [`supervisors`]: activation-function supervisors (affine, convex, normalized).
//! - [`combinations`]: the two-filter combination engine and its topologies.
//! - [`theory`]: steady-state and transient EMSE models.
//! - [`harness`]: ensembles, metrics, config files, CSV and comparisons.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists them.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinations;
mod error;
pub mod filters;
pub mod harness;
pub mod scenario;
pub mod supervisors;
pub mod theory;

pub use combinations::{CombinationState, CyclePeriod, StepDiagnostics, Topology};
pub use error::{Error, Result};
pub use filters::{FilterState, VssLmsState};
pub use scenario::{PlantInit, SampleRecord, ScenarioConfig, Stream};
pub use supervisors::{Activation, Normalization, SupervisorState};

/// `10 log10(x)`; zero (and anything non-positive) maps to negative infinity.
pub fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * x.log10()
    } else {
        f64::NEG_INFINITY
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversion() {
        assert_eq!(to_db(1.0), 0.0);
        assert!((to_db(1e-3) + 30.0).abs() < 1e-12);
        assert_eq!(to_db(0.0), f64::NEG_INFINITY);
        assert!(!to_db(0.0).is_nan());
    }
}
