//! Supervisors adapting the mixing parameter `eta`.
//!
//! All supervisors share one stochastic-gradient rule on an auxiliary state `a`
//! mapped through a strictly increasing activation `f`:
//!
//! ```text
//! a(i)   = a(i-1) + mu_a e(i) [y_1(i) - y_2(i)] f'(a(i-1))
//! eta(i) = f(a(i))
//! ```
//!
//! `f(a) = a` gives the affine supervisor and the logistic function gives the
//! convex one. `a` is clamped to `[a_min, a_max]` after every update. The
//! normalized variants divide the step by a smoothed power of the global error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default saturation of the convex supervisor's auxiliary variable.
pub const CONVEX_A_BOUNDS: (f64, f64) = (-4.0, 4.0);
/// Default range of the affine mixing parameter.
pub const AFFINE_ETA_BOUNDS: (f64, f64) = (-0.25, 1.25);
/// Default regularizer of the normalized supervisors.
pub const DEFAULT_EPSILON: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `f(a) = a`.
    Affine,
    /// `f(a) = 1 / (1 + exp(-a))`.
    Sigmoid,
}

impl Activation {
    /// `(f(a), f'(a), f''(a))`.
    pub fn eval(self, a: f64) -> (f64, f64, f64) {
        match self {
            Activation::Affine => (a, 1.0, 0.0),
            Activation::Sigmoid => {
                // exp of a nonpositive argument only, so nothing overflows
                let z = (-a.abs()).exp();
                let f = if a >= 0.0 { 1.0 / (1.0 + z) } else { z / (1.0 + z) };
                let d1 = z / ((1.0 + z) * (1.0 + z));
                (f, d1, d1 * (1.0 - 2.0 * f))
            }
        }
    }

    pub fn value(self, a: f64) -> f64 {
        self.eval(a).0
    }

    /// The auxiliary value producing `eta`.
    pub fn inverse(self, eta: f64) -> Result<f64> {
        match self {
            Activation::Affine => Ok(eta),
            Activation::Sigmoid if eta > 0.0 && eta < 1.0 => Ok((eta / (1.0 - eta)).ln()),
            Activation::Sigmoid => {
                Err(Error::Domain(format!("sigmoid mixing parameter must lie in (0, 1), got {eta}")))
            }
        }
    }

    /// Default `[a_min, a_max]`.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Activation::Affine => AFFINE_ETA_BOUNDS,
            Activation::Sigmoid => CONVEX_A_BOUNDS,
        }
    }
}

/// Free-function form of [`Activation::eval`].
pub fn activation_eval(act: Activation, a: f64) -> (f64, f64, f64) {
    act.eval(a)
}

/// `beta e^2 + (1 - beta) p`.
pub fn normalized_power_update(p: f64, e: f64, beta: f64) -> f64 {
    beta * e * e + (1.0 - beta) * p
}

/// Error-power normalization of the supervisor step, `mu~ / (p(i) + epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub beta: f64,
    pub epsilon: f64,
    pub power: f64,
}

impl Normalization {
    pub fn new(beta: f64, epsilon: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Domain(format!("normalization beta must lie in (0, 1], got {beta}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("normalization epsilon must be nonnegative, got {epsilon}")));
        }
        Ok(Self { beta, epsilon, power: 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisorState {
    pub a: f64,
    pub eta: f64,
    /// `mu_a`, or `mu~` when normalized.
    pub step_size: f64,
    pub activation: Activation,
    pub a_min: f64,
    pub a_max: f64,
    pub normalization: Option<Normalization>,
}

impl SupervisorState {
    /// Supervisor starting from the neutral mixture `eta = 0.5` with default bounds.
    pub fn new(activation: Activation, step_size: f64) -> Result<Self> {
        if !(step_size >= 0.0 && step_size.is_finite()) {
            return Err(Error::Domain(format!("supervisor step size must be nonnegative, got {step_size}")));
        }
        let (a_min, a_max) = activation.default_bounds();
        let a = activation.inverse(0.5)?;
        Ok(Self { a, eta: activation.value(a), step_size, activation, a_min, a_max, normalization: None })
    }

    pub fn convex(step_size: f64) -> Result<Self> {
        Self::new(Activation::Sigmoid, step_size)
    }

    pub fn affine(step_size: f64) -> Result<Self> {
        Self::new(Activation::Affine, step_size)
    }

    pub fn with_bounds(mut self, a_min: f64, a_max: f64) -> Result<Self> {
        if !(a_min < a_max) {
            return Err(Error::Domain(format!("supervisor bounds must satisfy a_min < a_max, got [{a_min}, {a_max}]")));
        }
        self.a_min = a_min;
        self.a_max = a_max;
        self.set_a(self.a);
        Ok(self)
    }

    pub fn with_normalization(mut self, beta: f64, epsilon: f64) -> Result<Self> {
        self.normalization = Some(Normalization::new(beta, epsilon)?);
        Ok(self)
    }

    pub fn with_initial_eta(mut self, eta: f64) -> Result<Self> {
        let a = self.activation.inverse(eta)?;
        self.set_a(a);
        Ok(self)
    }

    /// Sets `a` (clamped) and refreshes `eta`.
    pub fn set_a(&mut self, a: f64) {
        self.a = a.clamp(self.a_min, self.a_max);
        self.eta = self.activation.value(self.a);
    }

    /// `[f(a_min), f(a_max)]`.
    pub fn eta_range(&self) -> (f64, f64) {
        (self.activation.value(self.a_min), self.activation.value(self.a_max))
    }

    /// Advances one iteration with the global error `e` and component outputs
    /// `y1`, `y2` computed from the previous coefficients.
    pub fn update(&mut self, e: f64, y1: f64, y2: f64) -> Result<()> {
        let step = match &mut self.normalization {
            None => self.step_size,
            Some(n) => {
                n.power = normalized_power_update(n.power, e, n.beta);
                self.step_size / (n.power + n.epsilon)
            }
        };
        if !step.is_finite() {
            return Err(Error::NonFinite { quantity: "supervisor step size" });
        }
        let (_, slope, _) = self.activation.eval(self.a);
        let a = self.a + step * e * (y1 - y2) * slope;
        if !a.is_finite() {
            return Err(Error::NonFinite { quantity: "supervisor auxiliary variable" });
        }
        self.set_a(a);
        Ok(())
    }
}

/// Functional form of [`SupervisorState::update`].
pub fn supervisor_update(state: &SupervisorState, e: f64, y1: f64, y2: f64) -> Result<SupervisorState> {
    let mut next = state.clone();
    next.update(e, y1, y2)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn activation_examples() {
        assert_eq!(Activation::Sigmoid.eval(0.0), (0.5, 0.25, 0.0));
        assert_eq!(Activation::Affine.eval(0.3), (0.3, 1.0, 0.0));
        let (f, d1, d2) = Activation::Sigmoid.eval(4.0);
        assert!(close(f, 0.982_013_790_037_908_4, 1e-15));
        assert!(close(d1, 0.017_662_706_213_291_1, 1e-15));
        assert!(close(d2, -0.017_027_335_928_389_1, 1e-15));
    }

    #[test]
    fn sigmoid_is_finite_far_out() {
        for a in [-800.0, -40.0, 40.0, 800.0] {
            let (f, d1, d2) = Activation::Sigmoid.eval(a);
            assert!(f.is_finite() && d1.is_finite() && d2.is_finite());
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn power_update_examples() {
        assert!(close(normalized_power_update(0.5, 0.0, 0.9), 0.05, 1e-15));
        assert_eq!(normalized_power_update(0.5, 0.3, 1.0), 0.09);
        assert!(close(normalized_power_update(0.5, 0.1, 0.9), 0.059, 1e-15));
    }

    #[test]
    fn update_examples() {
        let s = SupervisorState::convex(1.0).unwrap();
        assert_eq!(s.a, 0.0);
        assert_eq!(s.eta, 0.5);
        assert_eq!(supervisor_update(&s, 0.0, 1.0, 0.2).unwrap(), s);
        assert_eq!(supervisor_update(&s, 0.7, 0.2, 0.2).unwrap(), s);
        let next = supervisor_update(&s, 1.0, 0.1, 0.0).unwrap();
        assert!(close(next.a, 0.025, 1e-15));
        assert!(close(next.eta, 0.506_249_674_499_510_4, 1e-15));
    }

    #[test]
    fn affine_initial_state_is_neutral() {
        let s = SupervisorState::affine(2.0).unwrap();
        assert_eq!((s.a, s.eta), (0.5, 0.5));
        assert_eq!((s.a_min, s.a_max), AFFINE_ETA_BOUNDS);
    }

    #[test]
    fn normalized_step_uses_error_power() {
        let mut s = SupervisorState::convex(0.7).unwrap().with_normalization(0.5, 0.01).unwrap();
        s.update(0.2, 0.1, 0.0).unwrap();
        let p = 0.5 * 0.04;
        assert!(close(s.normalization.unwrap().power, p, 1e-15));
        assert!(close(s.a, 0.7 / (p + 0.01) * 0.2 * 0.1 * 0.25, 1e-14));
    }

    #[test]
    fn non_finite_inputs_are_reported() {
        let mut s = SupervisorState::convex(1.0).unwrap();
        assert!(matches!(s.update(f64::NAN, 1.0, 0.0), Err(Error::NonFinite { .. })));
        let mut s = SupervisorState::convex(1.0).unwrap().with_normalization(1.0, 0.0).unwrap();
        assert!(matches!(s.update(0.0, 1.0, 0.0), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn clamped_sigmoid_range() {
        let s = SupervisorState::convex(1.0).unwrap();
        let (lo, hi) = s.eta_range();
        assert!(close(lo, 0.0180, 1e-4) && close(hi, 0.9820, 1e-4));
    }

    proptest! {
        #[test]
        fn a_stays_within_bounds(
            steps in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..100),
            mu in 0.0..500.0f64, affine in any::<bool>(),
        ) {
            let act = if affine { Activation::Affine } else { Activation::Sigmoid };
            let mut s = SupervisorState::new(act, mu).unwrap();
            for (e, y1, y2) in steps {
                s.update(e, y1, y2).unwrap();
                prop_assert!(s.a >= s.a_min && s.a <= s.a_max);
                prop_assert_eq!(s.eta, act.value(s.a));
            }
            if !affine {
                prop_assert!(s.eta >= 0.0179 && s.eta <= 0.9821);
            }
        }

        #[test]
        fn response_is_monotone(
            a0 in -3.9..3.9f64, g1 in -1.0..1.0f64, g2 in -1.0..1.0f64, mu in 0.0..10.0f64,
        ) {
            let mut s = SupervisorState::convex(mu).unwrap();
            s.set_a(a0);
            let lo = g1.min(g2);
            let hi = g1.max(g2);
            let n1 = supervisor_update(&s, 1.0, lo, 0.0).unwrap();
            let n2 = supervisor_update(&s, 1.0, hi, 0.0).unwrap();
            prop_assert!(n1.a <= n2.a);
        }

        #[test]
        fn sigmoid_matches_convex_rule(
            a0 in -4.0..4.0f64, e in -2.0..2.0f64, y1 in -2.0..2.0f64, y2 in -2.0..2.0f64, mu in 0.0..300.0f64,
        ) {
            let mut s = SupervisorState::convex(mu).unwrap();
            s.set_a(a0);
            let eta_prev = 1.0 / (1.0 + (-a0).exp());
            let direct = (a0 + mu * e * (y1 - y2) * eta_prev * (1.0 - eta_prev)).clamp(-4.0, 4.0);
            s.update(e, y1, y2).unwrap();
            prop_assert!((s.a - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            prop_assert!((s.eta - 1.0 / (1.0 + (-direct).exp())).abs() <= 1e-12);
        }

        #[test]
        fn affine_matches_eta_rule(
            eta0 in -0.25..1.25f64, e in -2.0..2.0f64, y1 in -2.0..2.0f64, y2 in -2.0..2.0f64, mu in 0.0..5.0f64,
        ) {
            let mut s = SupervisorState::affine(mu).unwrap();
            s.set_a(eta0);
            let direct = (eta0 + mu * e * (y1 - y2)).clamp(-0.25, 1.25);
            s.update(e, y1, y2).unwrap();
            prop_assert_eq!(s.eta, direct);
        }
    }
}
