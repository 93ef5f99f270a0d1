//! The two-filter combination engine.
//!
//! One iteration runs, in order:
//!
//! 1. component outputs `y_n = u^T w_{n,i-1}` and global error `e = d - u^T w_{i-1}`;
//! 2. *a priori* coefficient selection from the topology;
//! 3. LMS updates of both filters from their *a priori* vectors;
//! 4. post-update transfers (leakage, handover);
//! 5. supervisor update with `(e, y_1, y_2)`;
//! 6. global vector `w_i = eta(i) w_{1,i} + (1 - eta(i)) w_{2,i}`.
//!
//! Filter 1 is conventionally the fast one; leakage and handover move
//! coefficients from filter 1 to filter 2 only.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::filters::FilterState;
use crate::supervisors::SupervisorState;

/// Default condition threshold of leakage and handover.
pub const DEFAULT_ETA_THRESHOLD: f64 = 0.98;

/// Cycle period `L` of the feedback or handover schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CyclePeriod {
    Every(u64),
    /// `L = infinity`: no cycle instant after iteration 0.
    Never,
}

impl CyclePeriod {
    pub fn every(l: u64) -> Result<Self> {
        if l == 0 {
            Err(Error::Domain("cycle period must be at least 1".to_string()))
        } else {
            Ok(CyclePeriod::Every(l))
        }
    }

    /// `i mod L == 0`, counting from iteration 0.
    pub fn fires(self, i: u64) -> bool {
        match self {
            CyclePeriod::Every(l) => i.is_multiple_of(l),
            CyclePeriod::Never => i == 0,
        }
    }
}

/// How the component filters interact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    /// Filters adapt their own previous coefficients.
    Independent,
    /// `w_2 <- alpha w_{1,i-1} + (1 - alpha) w_2` with `alpha = amount` when `eta(i-1) >= threshold`.
    Leakage { amount: f64, threshold: f64 },
    /// `w_2 <- w_1` at cycle instants when `eta(i-1) >= threshold`.
    Handover { period: CyclePeriod, threshold: f64 },
    /// Both filters restart from the global vector at cycle instants.
    CyclicFeedback { period: CyclePeriod },
}

impl Topology {
    pub fn feedback(l: u64) -> Result<Self> {
        Ok(Topology::CyclicFeedback { period: CyclePeriod::every(l)? })
    }

    pub fn leakage(amount: f64) -> Result<Self> {
        let t = Topology::Leakage { amount, threshold: DEFAULT_ETA_THRESHOLD };
        t.validate()?;
        Ok(t)
    }

    pub fn handover(l: u64) -> Result<Self> {
        Ok(Topology::Handover { period: CyclePeriod::every(l)?, threshold: DEFAULT_ETA_THRESHOLD })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Topology::Leakage { amount, threshold } => {
                if !(0.0..=1.0).contains(&amount) {
                    return Err(Error::Domain(format!("leak amount must lie in [0, 1], got {amount}")));
                }
                if !threshold.is_finite() {
                    return Err(Error::Domain("leakage threshold must be finite".to_string()));
                }
            }
            Topology::Handover { period, threshold } => {
                if period == CyclePeriod::Every(0) {
                    return Err(Error::Domain("cycle period must be at least 1".to_string()));
                }
                if !threshold.is_finite() {
                    return Err(Error::Domain("handover threshold must be finite".to_string()));
                }
            }
            Topology::CyclicFeedback { period } => {
                if period == CyclePeriod::Every(0) {
                    return Err(Error::Domain("cycle period must be at least 1".to_string()));
                }
            }
            Topology::Independent => {}
        }
        Ok(())
    }

    /// Whether both filters restart from the global vector at iteration `i`.
    pub fn feeds_back(&self, i: u64) -> bool {
        matches!(self, Topology::CyclicFeedback { period } if period.fires(i))
    }
}

/// `eta w1 + (1 - eta) w2`.
pub fn combine_output(eta: f64, w1: &[f64], w2: &[f64]) -> Result<Vec<f64>> {
    check_len(w1.len(), w2.len())?;
    Ok(w1.iter().zip(w2).map(|(a, b)| eta * a + (1.0 - eta) * b).collect())
}

fn combine_into(out: &mut [f64], eta: f64, w1: &[f64], w2: &[f64]) {
    for ((o, a), b) in out.iter_mut().zip(w1).zip(w2) {
        *o = eta * a + (1.0 - eta) * b;
    }
}

/// *A priori* coefficients `(w_{1,a}, w_{2,a})` at iteration `i`.
///
/// Only cyclic feedback changes them; leakage and handover act after the update.
pub fn apriori_coefficients<'a>(
    topology: &Topology,
    i: u64,
    w1_prev: &'a [f64],
    w2_prev: &'a [f64],
    w_global_prev: &'a [f64],
) -> (&'a [f64], &'a [f64]) {
    if topology.feeds_back(i) {
        (w_global_prev, w_global_prev)
    } else {
        (w1_prev, w2_prev)
    }
}

/// `eta mu1 + (1 - eta) mu2`, the step of the equivalent VSS filter.
pub fn net_step_size(eta: f64, mu1: f64, mu2: f64) -> f64 {
    eta * mu1 + (1.0 - eta) * mu2
}

/// Per-iteration quantities for ensemble statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub iteration: u64,
    /// Global error `d - u^T w_{i-1}`.
    pub error: f64,
    pub y1: f64,
    pub y2: f64,
    /// `u^T w_{i-1}`.
    pub output: f64,
    /// `d - u^T w_{n,a}` for each filter.
    pub filter_errors: [f64; 2],
    /// `eta(i-1)`, the weight in force for the global error.
    pub eta_prev: f64,
    pub eta: f64,
    pub a: f64,
    /// `eta(i) mu1 + (1 - eta(i)) mu2`.
    pub net_mu: f64,
    /// Global and component *a priori* errors, available when the plant is supplied.
    pub apriori: Option<AprioriErrors>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriErrors {
    pub global: f64,
    pub first: f64,
    pub second: f64,
}

/// Two LMS filters, a supervisor, a topology and the cached global vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationState {
    pub filters: [FilterState; 2],
    pub supervisor: SupervisorState,
    pub topology: Topology,
    pub global: Vec<f64>,
    iteration: u64,
    scratch: Vec<f64>,
}

impl CombinationState {
    /// Zero-initialized filters of length `len` with step sizes `mu1`, `mu2`.
    pub fn new(len: usize, mu1: f64, mu2: f64, supervisor: SupervisorState, topology: Topology) -> Result<Self> {
        topology.validate()?;
        Ok(Self {
            filters: [FilterState::new(len, mu1)?, FilterState::new(len, mu2)?],
            supervisor,
            topology,
            global: vec![0.0; len],
            iteration: 0,
            scratch: vec![0.0; len],
        })
    }

    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }

    /// Index of the next iteration.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn step_sizes(&self) -> (f64, f64) {
        (self.filters[0].step_size(), self.filters[1].step_size())
    }

    /// Runs one iteration on `(u, d)`. `plant` is only used for the
    /// *a priori* error diagnostics.
    pub fn step(&mut self, u: &[f64], d: f64, plant: Option<&[f64]>) -> Result<StepDiagnostics> {
        let m = self.global.len();
        check_len(m, u.len())?;
        if let Some(w) = plant {
            check_len(m, w.len())?;
        }
        let i = self.iteration;
        let [f1, f2] = &mut self.filters;

        let y1 = crate::dot(u, &f1.w);
        let y2 = crate::dot(u, &f2.w);
        let y = crate::dot(u, &self.global);
        let error = d - y;
        let apriori = plant.map(|w| {
            let target = crate::dot(u, w);
            AprioriErrors { global: target - y, first: target - y1, second: target - y2 }
        });
        let eta_prev = self.supervisor.eta;

        let filter_errors = match self.topology {
            Topology::CyclicFeedback { period } if period.fires(i) => {
                [f1.adapt_from(&self.global, u, d)?, f2.adapt_from(&self.global, u, d)?]
            }
            Topology::Leakage { amount, threshold } => {
                self.scratch.copy_from_slice(&f1.w);
                let errs = [f1.adapt(u, d)?, f2.adapt(u, d)?];
                if eta_prev >= threshold {
                    for (w2, w1_prev) in f2.w.iter_mut().zip(&self.scratch) {
                        *w2 = amount * w1_prev + (1.0 - amount) * *w2;
                    }
                }
                errs
            }
            Topology::Handover { period, threshold } => {
                let errs = [f1.adapt(u, d)?, f2.adapt(u, d)?];
                if period.fires(i) && eta_prev >= threshold {
                    f2.w.copy_from_slice(&f1.w);
                }
                errs
            }
            _ => [f1.adapt(u, d)?, f2.adapt(u, d)?],
        };

        self.supervisor.update(error, y1, y2)?;
        let eta = self.supervisor.eta;
        combine_into(&mut self.global, eta, &f1.w, &f2.w);
        if self.global.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { iteration: i });
        }
        self.iteration += 1;

        Ok(StepDiagnostics {
            iteration: i,
            error,
            y1,
            y2,
            output: y,
            filter_errors,
            eta_prev,
            eta,
            a: self.supervisor.a,
            net_mu: net_step_size(eta, f1.step_size(), f2.step_size()),
            apriori,
        })
    }
}

/// Functional form of [`CombinationState::step`].
pub fn combination_step(
    state: &CombinationState,
    u: &[f64],
    d: f64,
    plant: Option<&[f64]>,
) -> Result<(CombinationState, StepDiagnostics)> {
    let mut next = state.clone();
    let diag = next.step(u, d, plant)?;
    Ok((next, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::lms_update;
    use crate::scenario::{generate_stream, ScenarioConfig};

    #[test]
    fn combine_endpoints() {
        let w1 = [1.0, 2.0];
        let w2 = [-3.0, 0.5];
        assert_eq!(combine_output(1.0, &w1, &w2).unwrap(), w1.to_vec());
        assert_eq!(combine_output(0.0, &w1, &w2).unwrap(), w2.to_vec());
        for eta in [-0.25, 0.3, 1.25] {
            assert_eq!(combine_output(eta, &w1, &w1).unwrap(), w1.to_vec());
        }
        assert!(combine_output(0.5, &w1, &[1.0]).is_err());
    }

    #[test]
    fn apriori_selection() {
        let (w1, w2, wg) = ([1.0], [2.0], [3.0]);
        let fb = Topology::feedback(50).unwrap();
        assert_eq!(apriori_coefficients(&fb, 100, &w1, &w2, &wg), (&wg[..], &wg[..]));
        assert_eq!(apriori_coefficients(&fb, 101, &w1, &w2, &wg), (&w1[..], &w2[..]));
        let every = Topology::feedback(1).unwrap();
        for i in [0, 1, 7, 12345] {
            assert_eq!(apriori_coefficients(&every, i, &w1, &w2, &wg), (&wg[..], &wg[..]));
        }
        for t in [Topology::Independent, Topology::leakage(0.6).unwrap(), Topology::handover(10).unwrap()] {
            assert_eq!(apriori_coefficients(&t, 20, &w1, &w2, &wg), (&w1[..], &w2[..]));
        }
    }

    #[test]
    fn net_step_examples() {
        assert_eq!(net_step_size(1.0, 0.08, 0.005), 0.08);
        assert_eq!(net_step_size(0.0, 0.08, 0.005), 0.005);
        assert!((net_step_size(0.5, 0.08, 0.005) - 0.0425).abs() < 1e-15);
    }

    #[test]
    fn topology_validation() {
        assert!(Topology::feedback(0).is_err());
        assert!(Topology::leakage(1.5).is_err());
        assert!(Topology::handover(0).is_err());
    }

    fn scenario() -> ScenarioConfig {
        ScenarioConfig::new(6, 400).with_input(1.0, 0.5).with_seed(3)
    }

    #[test]
    fn frozen_supervisor_decouples_filters() {
        let cfg = scenario();
        let sup = SupervisorState::convex(0.0).unwrap();
        let mut comb = CombinationState::new(6, 0.05, 0.01, sup, Topology::Independent).unwrap();
        let mut lone1 = FilterState::new(6, 0.05).unwrap();
        let mut lone2 = FilterState::new(6, 0.01).unwrap();
        for s in generate_stream(&cfg, 0).unwrap() {
            let diag = comb.step(&s.regressor, s.desired, None).unwrap();
            lone1.adapt(&s.regressor, s.desired).unwrap();
            lone2.adapt(&s.regressor, s.desired).unwrap();
            assert_eq!(diag.eta, 0.5);
        }
        assert_eq!(comb.filters[0].w, lone1.w);
        assert_eq!(comb.filters[1].w, lone2.w);
    }

    #[test]
    fn full_feedback_with_equal_steps_is_plain_lms() {
        let cfg = scenario();
        let sup = SupervisorState::convex(100.0).unwrap();
        let mut comb = CombinationState::new(6, 0.03, 0.03, sup, Topology::feedback(1).unwrap()).unwrap();
        let mut lone = FilterState::new(6, 0.03).unwrap();
        for s in generate_stream(&cfg, 1).unwrap() {
            comb.step(&s.regressor, s.desired, None).unwrap();
            lone.adapt(&s.regressor, s.desired).unwrap();
            for (g, l) in comb.global.iter().zip(&lone.w) {
                assert!((g - l).abs() <= 1e-12 * (1.0 + l.abs()));
            }
        }
    }

    #[test]
    fn full_feedback_is_a_vss_filter() {
        let cfg = scenario();
        let sup = SupervisorState::convex(200.0).unwrap();
        let mut comb = CombinationState::new(6, 0.1, 0.01, sup, Topology::feedback(1).unwrap()).unwrap();
        // external VSS-LMS driven by the eta trace
        let mut w = vec![0.0; 6];
        for s in generate_stream(&cfg, 2).unwrap() {
            let diag = comb.step(&s.regressor, s.desired, None).unwrap();
            let mu = diag.eta * 0.1 + (1.0 - diag.eta) * 0.01;
            w = lms_update(&w, &s.regressor, s.desired, mu).unwrap();
            for (g, v) in comb.global.iter().zip(&w) {
                assert!((g - v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn long_period_matches_independent() {
        let cfg = scenario();
        let sup = SupervisorState::convex(100.0).unwrap();
        let period = cfg.horizon as u64 + 1;
        let mut a = CombinationState::new(6, 0.05, 0.005, sup.clone(), Topology::feedback(period).unwrap()).unwrap();
        let mut b = CombinationState::new(6, 0.05, 0.005, sup, Topology::Independent).unwrap();
        for s in generate_stream(&cfg, 5).unwrap() {
            let da = a.step(&s.regressor, s.desired, Some(&s.plant)).unwrap();
            let db = b.step(&s.regressor, s.desired, Some(&s.plant)).unwrap();
            assert_eq!(da, db);
            assert_eq!(a.global, b.global);
        }
    }

    #[test]
    fn swapping_filters_mirrors_the_trajectory() {
        let cfg = scenario();
        let mut a = CombinationState::new(
            6,
            0.05,
            0.005,
            SupervisorState::convex(150.0).unwrap(),
            Topology::feedback(20).unwrap(),
        )
        .unwrap();
        let mut b = CombinationState::new(
            6,
            0.005,
            0.05,
            SupervisorState::convex(150.0).unwrap(),
            Topology::feedback(20).unwrap(),
        )
        .unwrap();
        for s in generate_stream(&cfg, 6).unwrap() {
            let da = a.step(&s.regressor, s.desired, None).unwrap();
            let db = b.step(&s.regressor, s.desired, None).unwrap();
            assert!((da.a + db.a).abs() < 1e-9);
            for (x, y) in a.global.iter().zip(&b.global) {
                assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn output_difference_equals_apriori_difference() {
        let cfg = scenario().with_random_walk(1e-4);
        let mut comb = CombinationState::new(
            6,
            0.05,
            0.005,
            SupervisorState::affine(1.0).unwrap(),
            Topology::feedback(7).unwrap(),
        )
        .unwrap();
        for s in generate_stream(&cfg, 0).unwrap() {
            let d = comb.step(&s.regressor, s.desired, Some(&s.plant)).unwrap();
            let ea = d.apriori.unwrap();
            assert!(((d.y1 - d.y2) - (ea.second - ea.first)).abs() < 1e-12);
            // global a priori error mixes with the previous weight
            let mixed = d.eta_prev * ea.first + (1.0 - d.eta_prev) * ea.second;
            assert!((ea.global - mixed).abs() < 1e-9);
        }
    }

    #[test]
    fn leakage_pulls_slow_filter_when_condition_holds() {
        let sup = SupervisorState::convex(0.0).unwrap().with_initial_eta(0.99).unwrap();
        let mut comb = CombinationState::new(2, 0.1, 0.01, sup, Topology::leakage(0.6).unwrap()).unwrap();
        comb.filters[0].w = vec![1.0, 1.0];
        comb.filters[1].w = vec![0.0, 0.0];
        // zero regressor: LMS updates are no-ops, only the transfer acts
        comb.step(&[0.0, 0.0], 0.0, None).unwrap();
        assert_eq!(comb.filters[1].w, vec![0.6, 0.6]);

        let sup = SupervisorState::convex(0.0).unwrap();
        let mut comb = CombinationState::new(2, 0.1, 0.01, sup, Topology::leakage(0.6).unwrap()).unwrap();
        comb.filters[0].w = vec![1.0, 1.0];
        comb.step(&[0.0, 0.0], 0.0, None).unwrap();
        assert_eq!(comb.filters[1].w, vec![0.0, 0.0]);
    }

    #[test]
    fn handover_copies_at_cycle_instants_only() {
        let sup = SupervisorState::convex(0.0).unwrap().with_initial_eta(0.99).unwrap();
        let mut comb = CombinationState::new(1, 0.5, 0.1, sup, Topology::handover(3).unwrap()).unwrap();
        let mut copies = Vec::new();
        for _ in 0..6 {
            comb.step(&[1.0], 1.0, None).unwrap();
            copies.push(comb.filters[0].w == comb.filters[1].w);
        }
        assert_eq!(copies, vec![true, false, false, true, false, false]);
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        let sup = SupervisorState::convex(0.0).unwrap();
        let mut comb = CombinationState::new(1, 5.0, 4.0, sup, Topology::Independent).unwrap();
        let mut result = Ok(());
        for _ in 0..5000 {
            if let Err(e) = comb.step(&[1.0], 1.0, None) {
                result = Err(e);
                break;
            }
        }
        assert!(matches!(result, Err(Error::Divergence { .. }) | Err(Error::NonFinite { .. })));
    }
}
