//! Transient EMSE model of the two-LMS combination with cyclic feedback.
//!
//! The model tracks the whitened error covariances `K_1`, `K_2`, `K_12`
//! (coordinates of the eigenvectors of `R_u`) and the mean and variance of the
//! supervisor's auxiliary variable. One call to [`transient_step`] at iteration
//! `i`:
//!
//! 1. evaluates `E eta(i-1) = f(a_bar)` and `E eta^2(i-1) = f^2 + sigma_a^2 f'^2`;
//! 2. reads `zeta_n(i) = tr(Lambda K_n)`, `zeta_12(i)`, and the global EMSE;
//! 3. propagates the covariances through a feedback iteration (`i mod L = 0`)
//!    or an independent one;
//! 4. advances `a_bar` and `sigma_a^2`.
//!
//! The supervisor statistics are kept consistent with the clamp on `a`:
//! `a_bar` is clamped to the bounds, `sigma_a^2` to `[0, (a_max - a_min)^2 / 4]`
//! and `E eta^2` to the largest second moment attainable inside the range of `f`.
//!
//! The plant is stationary throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::combinations::CyclePeriod;
use crate::error::{Error, Result};
use crate::supervisors::{Activation, SupervisorState};

/// Relative cut below which eigenvalues of `R_u` are treated as zero.
const EIGEN_FLOOR: f64 = 1e-12;

/// Fixed parameters of a transient model run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientParams {
    pub mu1: f64,
    pub mu2: f64,
    pub noise_variance: f64,
    pub activation: Activation,
    /// Unnormalized supervisor step `mu_a`.
    pub step_size: f64,
    pub a_bounds: (f64, f64),
    pub period: CyclePeriod,
    /// `a_bar(-1)`.
    pub initial_a: f64,
}

impl TransientParams {
    /// Takes activation, step, bounds and the initial `a` from a supervisor.
    pub fn new(
        mu1: f64,
        mu2: f64,
        noise_variance: f64,
        supervisor: &SupervisorState,
        period: CyclePeriod,
    ) -> Result<Self> {
        if supervisor.normalization.is_some() {
            return Err(Error::Domain("the transient model covers unnormalized supervisors only".to_string()));
        }
        let p = Self {
            mu1,
            mu2,
            noise_variance,
            activation: supervisor.activation,
            step_size: supervisor.step_size,
            a_bounds: (supervisor.a_min, supervisor.a_max),
            period,
            initial_a: supervisor.a,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_initial_a(mut self, a: f64) -> Self {
        self.initial_a = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.mu1 > 0.0 && self.mu1.is_finite() && self.mu2 > 0.0 && self.mu2.is_finite()) {
            problems.push(format!("step sizes must be positive, got ({}, {})", self.mu1, self.mu2));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            problems.push(format!("noise variance must be nonnegative, got {}", self.noise_variance));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            problems.push(format!("supervisor step must be nonnegative, got {}", self.step_size));
        }
        if !(self.a_bounds.0 < self.a_bounds.1) {
            problems.push(format!("empty supervisor bounds [{}, {}]", self.a_bounds.0, self.a_bounds.1));
        }
        if self.period == CyclePeriod::Every(0) {
            problems.push("cycle period must be at least 1".to_string());
        }
        if !self.initial_a.is_finite() {
            problems.push("initial a must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Model quantities at one iteration.
///
/// The EMSEs are those of the *a priori* errors at iteration `i`. The
/// supervisor statistics are the updated ones, `a_bar(i)` and `sigma_a^2(i)`,
/// and the `eta` moments are evaluated from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientOutput {
    pub iteration: u64,
    pub zeta: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta12: f64,
    pub eta_mean: f64,
    pub eta_sq_mean: f64,
    pub a_mean: f64,
    pub a_var: f64,
}

/// `(E eta, E eta^2)` from the linearized activation.
///
/// The second moment is capped at the largest value a variable confined to
/// `[f(a_min), f(a_max)]` with mean `E eta` can have.
fn eta_moments(p: &TransientParams, a_mean: f64, a_var: f64) -> (f64, f64) {
    let (f, d1, _) = p.activation.eval(a_mean);
    let lo = p.activation.value(p.a_bounds.0);
    let hi = p.activation.value(p.a_bounds.1);
    let ceiling = f * f + ((hi - f) * (f - lo)).max(0.0);
    (f, (f * f + a_var * d1 * d1).min(ceiling))
}

/// Largest variance of a variable confined to the supervisor bounds.
fn max_a_var(p: &TransientParams) -> f64 {
    0.25 * (p.a_bounds.1 - p.a_bounds.0).powi(2)
}

/// `E eta^2 (dz1 + dz2) - 2 E eta dz2 + zeta2`.
fn global_emse(m1: f64, m2: f64, dz1: f64, dz2: f64, zeta2: f64) -> f64 {
    m2 * (dz1 + dz2) - 2.0 * m1 * dz2 + zeta2
}

/// Mean and variance recursions of the auxiliary variable.
fn supervisor_recursion(p: &TransientParams, a_mean: f64, a_var: f64, dz1: f64, dz2: f64, zeta2: f64) -> (f64, f64) {
    let (f, d1, d2) = p.activation.eval(a_mean);
    let mu = p.step_size;
    let sv = p.noise_variance;
    let s = dz1 + dz2;
    let drift = (1.0 - f) * dz2 - f * dz1;

    let g1 = drift * d2 - s * d1 * d1;
    let g2 = 3.0 * d1.powi(4) * s * s
        + d2 * d2 * (zeta2 * s + 2.0 * dz2 * dz2)
        + 3.0 * f * d2 * d2 * s * (f * dz1 - (2.0 - f) * dz2)
        + 6.0 * d1 * d1 * d2 * s * (f * dz1 - (1.0 - f) * dz2)
        + d2 * d2 * s * sv;
    let gv = d1 * d1 * (dz2 * dz2 + s * (2.0 * f * f * s - 4.0 * f * dz2 + zeta2 + sv));

    let a_next = (a_mean + mu * drift * d1).clamp(p.a_bounds.0, p.a_bounds.1);
    let var_next = ((1.0 + 2.0 * mu * g1 + mu * mu * g2) * a_var + mu * mu * gv).clamp(0.0, max_a_var(p));
    (a_next, var_next)
}

/// General-input model state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientModelState {
    /// Eigenvalues of `R_u`.
    pub lambda: DVector<f64>,
    /// Eigenvectors of `R_u`, by column.
    pub basis: DMatrix<f64>,
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub k12: DMatrix<f64>,
    pub a_mean: f64,
    pub a_var: f64,
    pub params: TransientParams,
    /// Largest asymmetry removed from `K_1`, `K_2` by the last step.
    pub symmetry_drift: f64,
}

/// Eigendecomposes `R_u` and starts all covariances at `U^T w^o w^o^T U`
/// (zero-initialized filters), with `sigma_a^2(-1) = 0`.
pub fn transient_init(w_o: &[f64], r_u: &DMatrix<f64>, params: TransientParams) -> Result<TransientModelState> {
    params.validate()?;
    let m = w_o.len();
    if r_u.nrows() != m || r_u.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: r_u.nrows().max(r_u.ncols()) });
    }
    let scale = r_u.amax();
    if !scale.is_finite() || (r_u - r_u.transpose()).amax() > 1e-12 * scale.max(1.0) {
        return Err(Error::Domain("regressor covariance must be finite and symmetric".to_string()));
    }
    let eig = SymmetricEigen::new(r_u.clone());
    let top = eig.eigenvalues.max();
    if top <= 0.0 {
        return Err(Error::Domain("regressor covariance must have a positive eigenvalue".to_string()));
    }
    let mut lambda = eig.eigenvalues.clone();
    for l in lambda.iter_mut() {
        if *l < -EIGEN_FLOOR * top * 1e3 {
            return Err(Error::Domain(format!("regressor covariance is not positive semidefinite (eigenvalue {l})")));
        }
        if *l < EIGEN_FLOOR * top {
            *l = 0.0;
        }
    }
    let basis = eig.eigenvectors;
    let rotated = basis.transpose() * DVector::from_column_slice(w_o);
    let k = &rotated * rotated.transpose();
    Ok(TransientModelState {
        lambda,
        basis,
        k1: k.clone(),
        k2: k.clone(),
        k12: k,
        a_mean: params.initial_a,
        a_var: 0.0,
        params,
        symmetry_drift: 0.0,
    })
}

/// `tr(Lambda X)`.
fn trace_lambda(lambda: &DVector<f64>, x: &DMatrix<f64>) -> f64 {
    lambda.iter().enumerate().map(|(k, l)| l * x[(k, k)]).sum()
}

/// `Lambda X`.
fn left(lambda: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for (r, l) in lambda.iter().enumerate() {
        out.row_mut(r).scale_mut(*l);
    }
    out
}

/// `X Lambda`.
fn right(lambda: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for (c, l) in lambda.iter().enumerate() {
        out.column_mut(c).scale_mut(*l);
    }
    out
}

/// `sigma_v^2 Lambda + tr(Lambda X) Lambda + 2 Lambda X Lambda`.
fn fourth_moment(lambda: &DVector<f64>, x: &DMatrix<f64>, sv: f64) -> DMatrix<f64> {
    let mut a = right(lambda, &left(lambda, x)) * 2.0;
    let diag = sv + trace_lambda(lambda, x);
    for (k, l) in lambda.iter().enumerate() {
        a[(k, k)] += diag * l;
    }
    a
}

fn symmetrize(x: &mut DMatrix<f64>) -> f64 {
    let drift = (&*x - x.transpose()).amax();
    let sym = (&*x + x.transpose()) * 0.5;
    *x = sym;
    drift
}

/// One model iteration.
pub fn transient_step(state: &mut TransientModelState, i: u64) -> Result<TransientOutput> {
    let p = state.params;
    let lambda = &state.lambda;
    let (m1, m2) = eta_moments(&p, state.a_mean, state.a_var);

    let zeta1 = trace_lambda(lambda, &state.k1);
    let zeta2 = trace_lambda(lambda, &state.k2);
    let zeta12 = trace_lambda(lambda, &state.k12);
    let dz1 = zeta1 - zeta12;
    let dz2 = zeta2 - zeta12;
    let zeta = global_emse(m1, m2, dz1, dz2, zeta2);

    let (mu1, mu2, sv) = (p.mu1, p.mu2, p.noise_variance);
    if p.period.fires(i) {
        let cross = &state.k12 + state.k12.transpose();
        let k = &state.k1 * m2 + cross * (m1 - m2) + &state.k2 * (1.0 - 2.0 * m1 + m2);
        let a = fourth_moment(lambda, &k, sv);
        let kl = right(lambda, &k);
        let lk = left(lambda, &k);
        let sym = &kl + &lk;
        state.k1 = &k - &sym * mu1 + &a * (mu1 * mu1);
        state.k2 = &k - &sym * mu2 + &a * (mu2 * mu2);
        state.k12 = &k - lk * mu1 - kl * mu2 + a * (mu1 * mu2);
    } else {
        let a1 = fourth_moment(lambda, &state.k1, sv);
        let a2 = fourth_moment(lambda, &state.k2, sv);
        let a12 = fourth_moment(lambda, &state.k12, sv);
        let s1 = right(lambda, &state.k1) + left(lambda, &state.k1);
        let s2 = right(lambda, &state.k2) + left(lambda, &state.k2);
        let lk12 = left(lambda, &state.k12);
        let k12l = right(lambda, &state.k12);
        state.k1 = &state.k1 - s1 * mu1 + a1 * (mu1 * mu1);
        state.k2 = &state.k2 - s2 * mu2 + a2 * (mu2 * mu2);
        state.k12 = &state.k12 - lk12 * mu1 - k12l * mu2 + a12 * (mu1 * mu2);
    }
    state.symmetry_drift = symmetrize(&mut state.k1).max(symmetrize(&mut state.k2));

    let (a_mean, a_var) = supervisor_recursion(&p, state.a_mean, state.a_var, dz1, dz2, zeta2);
    state.a_mean = a_mean;
    state.a_var = a_var;

    let finite =
        zeta.is_finite() && state.k1.iter().chain(state.k2.iter()).chain(state.k12.iter()).all(|x| x.is_finite());
    if !finite || !a_mean.is_finite() || !a_var.is_finite() {
        return Err(Error::ModelDivergence { iteration: i });
    }
    let (eta_mean, eta_sq_mean) = eta_moments(&p, a_mean, a_var);
    Ok(TransientOutput { iteration: i, zeta, zeta1, zeta2, zeta12, eta_mean, eta_sq_mean, a_mean, a_var })
}

/// White-input model: `R_u = sigma_u^2 I` reduces the covariances to traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhiteTransientState {
    pub input_variance: f64,
    pub filter_length: usize,
    pub zeta1: f64,
    pub zeta2: f64,
    /// `zeta_n - zeta_12`.
    pub dzeta1: f64,
    pub dzeta2: f64,
    pub a_mean: f64,
    pub a_var: f64,
    pub params: TransientParams,
}

/// Starts from zero-initialized filters: `zeta_n = sigma_u^2 ||w^o||^2`.
pub fn transient_init_white(w_o: &[f64], input_variance: f64, params: TransientParams) -> Result<WhiteTransientState> {
    params.validate()?;
    if !(input_variance > 0.0 && input_variance.is_finite()) {
        return Err(Error::Domain(format!("input variance must be positive, got {input_variance}")));
    }
    if w_o.is_empty() {
        return Err(Error::Domain("plant must have at least one coefficient".to_string()));
    }
    let zeta0 = input_variance * crate::dot(w_o, w_o);
    Ok(WhiteTransientState {
        input_variance,
        filter_length: w_o.len(),
        zeta1: zeta0,
        zeta2: zeta0,
        dzeta1: 0.0,
        dzeta2: 0.0,
        a_mean: params.initial_a,
        a_var: 0.0,
        params,
    })
}

/// One iteration of the scalar white-input recursions.
///
/// With `a_n = 1 - 2 mu_n s + mu_n^2 (M+2) s^2`, `b_n = 1 - mu_n (M+2) s`
/// (`s = sigma_u^2`), a feedback iteration maps the global EMSE `zeta` to
///
/// ```text
/// zeta_n'  = a_n zeta + mu_n^2 M s^2 sigma_v^2
/// dzeta_n' = (mu_m - mu_n) s [b_n zeta - mu_n M s sigma_v^2]
/// ```
///
/// and an independent iteration gives
///
/// ```text
/// zeta_n'  = a_n zeta_n + mu_n^2 M s^2 sigma_v^2
/// dzeta_n' = (1 - mu_n s) dzeta_n - s b_n [mu_n zeta_n - mu_m zeta_12] + mu_n (mu_n - mu_m) M s^2 sigma_v^2
/// ```
pub fn transient_step_white(state: &mut WhiteTransientState, i: u64) -> Result<TransientOutput> {
    let p = state.params;
    let s = state.input_variance;
    let m = state.filter_length as f64;
    let sv = p.noise_variance;
    let (m1, m2) = eta_moments(&p, state.a_mean, state.a_var);

    let (zeta1, zeta2, dz1, dz2) = (state.zeta1, state.zeta2, state.dzeta1, state.dzeta2);
    let zeta12 = zeta2 - dz2;
    let zeta = global_emse(m1, m2, dz1, dz2, zeta2);

    let mus = [p.mu1, p.mu2];
    let a_n = |mu: f64| 1.0 - 2.0 * mu * s + mu * mu * (m + 2.0) * s * s;
    let b_n = |mu: f64| 1.0 - mu * (m + 2.0) * s;
    let floor = |mu: f64| mu * mu * m * s * s * sv;
    let mut next = [(0.0, 0.0); 2];
    for n in 0..2 {
        let (mu, mu_m) = (mus[n], mus[1 - n]);
        next[n] = if p.period.fires(i) {
            (a_n(mu) * zeta + floor(mu), (mu_m - mu) * s * (b_n(mu) * zeta - mu * m * s * sv))
        } else {
            let (zn, dzn) = if n == 0 { (zeta1, dz1) } else { (zeta2, dz2) };
            (
                a_n(mu) * zn + floor(mu),
                (1.0 - mu * s) * dzn - s * b_n(mu) * (mu * zn - mu_m * zeta12) + mu * (mu - mu_m) * m * s * s * sv,
            )
        };
    }
    state.zeta1 = next[0].0;
    state.dzeta1 = next[0].1;
    state.zeta2 = next[1].0;
    state.dzeta2 = next[1].1;

    let (a_mean, a_var) = supervisor_recursion(&p, state.a_mean, state.a_var, dz1, dz2, zeta2);
    state.a_mean = a_mean;
    state.a_var = a_var;
    let finite =
        [zeta, state.zeta1, state.zeta2, state.dzeta1, state.dzeta2, a_mean, a_var].iter().all(|x| x.is_finite());
    if !finite {
        return Err(Error::ModelDivergence { iteration: i });
    }
    let (eta_mean, eta_sq_mean) = eta_moments(&p, a_mean, a_var);
    Ok(TransientOutput { iteration: i, zeta, zeta1, zeta2, zeta12, eta_mean, eta_sq_mean, a_mean, a_var })
}
