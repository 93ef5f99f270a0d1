//! Mean-square models of the two-LMS combination with cyclic feedback.
//!
//! [`steady`] holds the closed-form steady-state EMSE and the optimal mixing
//! parameter under small cycle periods; [`transient`] holds the recursive
//! transient model for stationary plants (general input covariance and the
//! scalar white-input form).

pub mod steady;
pub mod transient;

pub use steady::{
    feedback_variance_fixed_point, optimal_eta, optimal_eta_from_emse, steady_state_emse, SteadyState,
    SteadyStateInputs,
};
pub use transient::{
    transient_init, transient_init_white, transient_step, transient_step_white, TransientModelState, TransientOutput,
    TransientParams, WhiteTransientState,
};
