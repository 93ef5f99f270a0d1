//! Steady-state EMSE of the feedback combination.
//!
//! For small cycle periods the combination behaves like a single LMS filter
//! with net step `mu_bar = eta_bar mu1 + (1 - eta_bar) mu2`:
//!
//! ```text
//! zeta = [mu_bar tr(R) sigma_v^2 + tr(Q) / mu_bar] / [2 - mu_bar tr(R)]
//! ```
//!
//! and the mean mixing parameter minimizes that expression, projected onto the
//! range of the activation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Global EMSE of an LMS filter with step `mu_bar` in a random-walk scenario.
pub fn steady_state_emse(mu_bar: f64, trace_ru: f64, noise_variance: f64, trace_q: f64) -> Result<f64> {
    check_scenario(trace_ru, noise_variance, trace_q)?;
    let product = mu_bar * trace_ru;
    if product >= 2.0 {
        return Err(Error::Unstable { product });
    }
    if mu_bar < 0.0 || (mu_bar == 0.0 && trace_q > 0.0) || !mu_bar.is_finite() {
        return Err(Error::Domain(format!(
            "net step size must be positive (nonnegative for a stationary plant), got {mu_bar}"
        )));
    }
    if mu_bar == 0.0 {
        return Ok(0.0);
    }
    Ok((product * noise_variance + trace_q / mu_bar) / (2.0 - product))
}

fn check_scenario(trace_ru: f64, noise_variance: f64, trace_q: f64) -> Result<()> {
    if !(trace_ru > 0.0 && trace_ru.is_finite()) {
        return Err(Error::Domain(format!("tr(R_u) must be positive, got {trace_ru}")));
    }
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::Domain(format!("noise variance must be nonnegative, got {noise_variance}")));
    }
    if !(trace_q >= 0.0 && trace_q.is_finite()) {
        return Err(Error::Domain(format!("tr(Q) must be nonnegative, got {trace_q}")));
    }
    Ok(())
}

/// Inputs of the optimal mixing parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateInputs {
    pub mu1: f64,
    pub mu2: f64,
    pub trace_ru: f64,
    pub noise_variance: f64,
    pub trace_q: f64,
    /// `[f(a_min), f(a_max)]`.
    pub eta_range: (f64, f64),
}

/// Mean steady-state supervisor and the resulting EMSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    /// Unconstrained minimizer `eta°`.
    pub eta_opt: f64,
    /// `eta°` projected onto the activation range.
    pub eta_bar: f64,
    pub mu_bar: f64,
    pub c: f64,
}

/// Minimizer of the steady-state EMSE over the mixing parameter.
///
/// `eta° = [c - tr(R)(tr(Q) + 2 mu2 sigma_v^2)] / [2 (mu1 - mu2) tr(R) sigma_v^2]`
/// with `c^2 = tr(R)^2 tr(Q)^2 + 4 sigma_v^2 tr(R) tr(Q)`. For a stationary
/// plant (`c = 0`) this gives `-mu2 / (mu1 - mu2)`, i.e. a vanishing net step.
pub fn optimal_eta(inputs: &SteadyStateInputs) -> Result<SteadyState> {
    let SteadyStateInputs { mu1, mu2, trace_ru, noise_variance, trace_q, eta_range } = *inputs;
    check_scenario(trace_ru, noise_variance, trace_q)?;
    if mu1 == mu2 {
        return Err(Error::DegeneratePool(
            "equal component step sizes leave the mixing parameter undetermined".to_string(),
        ));
    }
    if noise_variance <= 0.0 {
        return Err(Error::Domain("the optimal mixing parameter needs a positive noise variance".to_string()));
    }
    if !(eta_range.0 <= eta_range.1) {
        return Err(Error::Domain(format!("empty mixing range [{}, {}]", eta_range.0, eta_range.1)));
    }
    let c = (trace_ru * trace_ru * trace_q * trace_q + 4.0 * noise_variance * trace_ru * trace_q).sqrt();
    let eta_opt =
        (c - trace_ru * (trace_q + 2.0 * mu2 * noise_variance)) / (2.0 * (mu1 - mu2) * trace_ru * noise_variance);
    let eta_bar = eta_opt.clamp(eta_range.0, eta_range.1);
    Ok(SteadyState { eta_opt, eta_bar, mu_bar: eta_bar * mu1 + (1.0 - eta_bar) * mu2, c })
}

/// `eta° = dz2 / (dz1 + dz2)` with `dz_n = zeta_n - zeta_12`, the minimizer of
/// `eta^2 zeta1 + 2 eta (1 - eta) zeta12 + (1 - eta)^2 zeta2`.
pub fn optimal_eta_from_emse(zeta1: f64, zeta2: f64, zeta12: f64) -> Result<f64> {
    let dz1 = zeta1 - zeta12;
    let dz2 = zeta2 - zeta12;
    let den = dz1 + dz2;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegeneratePool("component a priori errors are statistically identical".to_string()));
    }
    Ok(dz2 / den)
}

/// Solves `mu_bar^2 tr(R) (zeta + sigma_v^2) + tr(Q) = 2 mu_bar zeta` by
/// fixed-point iteration, starting from zero.
///
/// The map is a contraction with factor `mu_bar tr(R) / 2`.
#[allow(clippy::too_many_arguments)]
pub fn feedback_variance_fixed_point(
    mu1: f64,
    mu2: f64,
    eta_bar: f64,
    trace_ru: f64,
    noise_variance: f64,
    trace_q: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    check_scenario(trace_ru, noise_variance, trace_q)?;
    let mu_bar = eta_bar * mu1 + (1.0 - eta_bar) * mu2;
    let product = mu_bar * trace_ru;
    if product >= 2.0 {
        return Err(Error::Unstable { product });
    }
    if mu_bar < 0.0 || (mu_bar == 0.0 && trace_q > 0.0) || !mu_bar.is_finite() {
        return Err(Error::Domain(format!("net step size must be positive, got {mu_bar}")));
    }
    if mu_bar == 0.0 {
        return Ok(0.0);
    }
    let mut zeta = 0.0;
    for _ in 0..max_iter {
        let next = (mu_bar * mu_bar * trace_ru * (zeta + noise_variance) + trace_q) / (2.0 * mu_bar);
        if (next - zeta).abs() <= tol * next.abs() {
            return Ok(next);
        }
        zeta = next;
    }
    Err(Error::Domain(format!("fixed point did not converge in {max_iter} iterations")))
}
