//! Component adaptive filters.
//!
//! The LMS recursion takes its *a priori* coefficients from the caller, which
//! is how the combination topologies decide what each filter adapts:
//!
//! ```text
//! w_n,i = w_n,a + mu_n u_i [d(i) - u_i^T w_n,a]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Filter output `u^T w`.
pub fn lms_predict(w: &[f64], u: &[f64]) -> Result<f64> {
    check_len(w.len(), u.len())?;
    Ok(crate::dot(w, u))
}

/// LMS step from the *a priori* coefficients `w_a`.
///
/// `mu = 0` is accepted and returns `w_a` unchanged.
pub fn lms_update(w_a: &[f64], u: &[f64], d: f64, mu: f64) -> Result<Vec<f64>> {
    let mut w = w_a.to_vec();
    lms_update_in_place(&mut w, u, d, mu)?;
    Ok(w)
}

/// In-place LMS step; returns the error `d - u^T w_a`.
pub fn lms_update_in_place(w: &mut [f64], u: &[f64], d: f64, mu: f64) -> Result<f64> {
    check_len(w.len(), u.len())?;
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("step size must be nonnegative, got {mu}")));
    }
    if !d.is_finite() {
        return Err(Error::NonFinite { quantity: "desired signal" });
    }
    let e = d - crate::dot(w, u);
    if !e.is_finite() {
        return Err(Error::NonFinite { quantity: "LMS error" });
    }
    let g = mu * e;
    for (wk, uk) in w.iter_mut().zip(u) {
        *wk += g * uk;
    }
    Ok(e)
}

/// One component LMS filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub w: Vec<f64>,
    mu: f64,
}

impl FilterState {
    /// Zero-initialized filter of length `len`.
    pub fn new(len: usize, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("step size must be positive, got {mu}")));
        }
        Ok(Self { w: vec![0.0; len], mu })
    }

    pub fn step_size(&self) -> f64 {
        self.mu
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn predict(&self, u: &[f64]) -> Result<f64> {
        lms_predict(&self.w, u)
    }

    /// Standalone LMS iteration (`w_a = w_{i-1}`); returns the error.
    pub fn adapt(&mut self, u: &[f64], d: f64) -> Result<f64> {
        lms_update_in_place(&mut self.w, u, d, self.mu)
    }

    /// Replaces the coefficients with `apriori` and adapts from there.
    pub fn adapt_from(&mut self, apriori: &[f64], u: &[f64], d: f64) -> Result<f64> {
        check_len(self.w.len(), apriori.len())?;
        self.w.copy_from_slice(apriori);
        self.adapt(u, d)
    }
}

/// Parameters of the variable step size LMS baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VssParams {
    /// Forgetting factor of the step-size recursion, in (0, 1).
    pub decay: f64,
    /// Gain on the squared error.
    pub gain: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl VssParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.decay > 0.0 && self.decay < 1.0) {
            problems.push(format!("VSS decay must lie in (0, 1), got {}", self.decay));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            problems.push(format!("VSS gain must be positive, got {}", self.gain));
        }
        if !(self.mu_min > 0.0 && self.mu_min <= self.mu_max && self.mu_max.is_finite()) {
            problems.push(format!(
                "VSS step bounds must satisfy 0 < mu_min <= mu_max, got [{}, {}]",
                self.mu_min, self.mu_max
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Variable step size LMS with step recursion
/// `mu(i) = clamp(decay mu(i-1) + gain e(i)^2, mu_min, mu_max)`.
///
/// The step is refreshed with the current error before the coefficient update,
/// which then uses the new step.
#[derive(Debug, Clone, PartialEq)]
pub struct VssLmsState {
    pub w: Vec<f64>,
    pub mu: f64,
    pub params: VssParams,
}

/// Output of one VSS-LMS iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VssOutput {
    pub y: f64,
    pub e: f64,
    pub mu: f64,
}

impl VssLmsState {
    /// Zero coefficients, initial step `mu_max`.
    pub fn new(len: usize, params: VssParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { w: vec![0.0; len], mu: params.mu_max, params })
    }

    pub fn step(&mut self, u: &[f64], d: f64) -> Result<VssOutput> {
        let y = lms_predict(&self.w, u)?;
        let e = d - y;
        let p = &self.params;
        self.mu = (p.decay * self.mu + p.gain * e * e).clamp(p.mu_min, p.mu_max);
        let g = self.mu * e;
        for (wk, uk) in self.w.iter_mut().zip(u) {
            *wk += g * uk;
        }
        if !g.is_finite() {
            return Err(Error::NonFinite { quantity: "VSS-LMS update" });
        }
        Ok(VssOutput { y, e, mu: self.mu })
    }
}

/// Functional form of [`VssLmsState::step`].
pub fn vss_lms_step(state: &VssLmsState, u: &[f64], d: f64) -> Result<(VssLmsState, VssOutput)> {
    let mut next = state.clone();
    let out = next.step(u, d)?;
    Ok((next, out))
}
