//! Theory tables and theory/simulation comparison.

use serde::Serialize;

use crate::combinations::{CyclePeriod, Topology};
use crate::error::{Error, Result};
use crate::supervisors::Activation;
use crate::theory::{
    optimal_eta, steady_state_emse, transient_init, transient_init_white, transient_step, transient_step_white,
    SteadyStateInputs, TransientOutput, TransientParams,
};

use super::config::ExperimentConfig;
use super::metrics::{MetricsRow, MetricsTable};

/// Steady-state prediction for one phase of the walk schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateLine {
    pub start_iteration: u64,
    pub trace_q: f64,
    pub eta_opt: f64,
    pub eta_bar: f64,
    pub mu_bar: f64,
    pub emse: f64,
    pub emse_db: f64,
}

/// Output of [`run_theory`].
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    /// Transient model table; stationary scenarios with an unnormalized supervisor only.
    pub table: Option<MetricsTable>,
    pub steady_state: Vec<SteadyStateLine>,
    /// Whether the scalar white-input recursions produced the table.
    pub white_input: bool,
    pub warnings: Vec<String>,
}

fn transient_period(topology: &Topology) -> Result<CyclePeriod> {
    match *topology {
        Topology::CyclicFeedback { period } => Ok(period),
        Topology::Independent => Ok(CyclePeriod::Never),
        _ => Err(Error::Domain(
            "the mean-square models cover the cyclic feedback and independent topologies only".to_string(),
        )),
    }
}

fn theory_row(out: &TransientOutput, mu1: f64, mu2: f64) -> MetricsRow {
    MetricsRow {
        i: out.iteration,
        emse: out.zeta,
        emse1: out.zeta1,
        emse2: out.zeta2,
        cross_emse: out.zeta12,
        eta_mean: out.eta_mean,
        a_mean: out.a_mean,
        eta_sq_mean: out.eta_sq_mean,
        net_mu: out.eta_mean * mu1 + (1.0 - out.eta_mean) * mu2,
        n_realizations: 0,
        a_sq_mean: out.a_mean * out.a_mean + out.a_var,
    }
}

/// Transient model over the scenario horizon, forcing the general or the
/// white-input recursions.
pub fn transient_table(cfg: &ExperimentConfig, white: bool) -> Result<MetricsTable> {
    let sc = &cfg.scenario;
    if !sc.is_stationary() {
        return Err(Error::Domain("the transient model needs a stationary plant".to_string()));
    }
    let (mu1, mu2) = (cfg.combination.mu1, cfg.combination.mu2);
    let period = transient_period(&cfg.topology()?)?;
    let params = TransientParams::new(mu1, mu2, sc.noise_variance, &cfg.supervisor_state()?, period)?;
    let w_o = sc.initial_plant()?;
    let mut rows = Vec::with_capacity(sc.horizon);
    if white {
        if !sc.is_white() {
            return Err(Error::Domain("white-input recursions need a white scenario".to_string()));
        }
        let mut st = transient_init_white(&w_o, sc.input_variance, params)?;
        for i in 0..sc.horizon as u64 {
            rows.push(theory_row(&transient_step_white(&mut st, i)?, mu1, mu2));
        }
    } else {
        let mut st = transient_init(&w_o, &sc.regressor_covariance(), params)?;
        for i in 0..sc.horizon as u64 {
            rows.push(theory_row(&transient_step(&mut st, i)?, mu1, mu2));
        }
    }
    Ok(MetricsTable { rows, n_diverged: 0 })
}

/// Steady-state lines (one per walk phase) and, for stationary scenarios,
/// the transient table. White scenarios use the scalar recursions.
pub fn run_theory(cfg: &ExperimentConfig) -> Result<TheoryReport> {
    cfg.validate()?;
    let topology = cfg.topology()?;
    transient_period(&topology)?;
    let sc = &cfg.scenario;
    let sup = cfg.supervisor_state()?;
    let mut warnings = Vec::new();

    let mut steady_state = Vec::new();
    if matches!(topology, Topology::CyclicFeedback { .. }) {
        if sup.activation == Activation::Affine && sc.is_stationary() {
            warnings.push(
                "affine supervisor with a stationary plant: the supervisor variance is not small and the \
                 predicted mean mixing parameter is unreliable"
                    .to_string(),
            );
        }
        for &(start, var) in &sc.process_noise_schedule {
            let inputs = SteadyStateInputs {
                mu1: cfg.combination.mu1,
                mu2: cfg.combination.mu2,
                trace_ru: sc.trace_ru(),
                noise_variance: sc.noise_variance,
                trace_q: var * sc.filter_length as f64,
                eta_range: sup.eta_range(),
            };
            match optimal_eta(&inputs) {
                Ok(ss) => {
                    let emse = steady_state_emse(ss.mu_bar, inputs.trace_ru, inputs.noise_variance, inputs.trace_q)?;
                    steady_state.push(SteadyStateLine {
                        start_iteration: start,
                        trace_q: inputs.trace_q,
                        eta_opt: ss.eta_opt,
                        eta_bar: ss.eta_bar,
                        mu_bar: ss.mu_bar,
                        emse,
                        emse_db: crate::to_db(emse),
                    });
                }
                Err(e) => warnings.push(format!("no steady-state line for the phase starting at {start}: {e}")),
            }
        }
    } else {
        warnings.push("steady-state model applies to cyclic feedback only".to_string());
    }

    let table = if !sc.is_stationary() {
        warnings.push("nonstationary plant: transient model skipped".to_string());
        None
    } else if sup.normalization.is_some() {
        warnings.push("normalized supervisor: transient model skipped".to_string());
        None
    } else {
        Some(transient_table(cfg, sc.is_white())?)
    };

    Ok(TheoryReport { table, steady_state, white_input: sc.is_white(), warnings })
}

/// Agreement between a simulated and a predicted EMSE curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub iterations: usize,
    pub band_db: f64,
    pub max_abs_db: f64,
    pub mean_abs_db: f64,
    pub fraction_within: f64,
    /// `fraction_within >= 0.9`.
    pub pass: bool,
    #[serde(skip)]
    pub deviation_db: Vec<f64>,
}

/// Fraction of iterations a comparison must keep inside the band.
pub const PASS_FRACTION: f64 = 0.9;

/// Per-iteration `10 log10(sim) - 10 log10(theory)` of the global EMSE.
pub fn compare(sim: &MetricsTable, theory: &MetricsTable, band_db: f64) -> Result<CompareReport> {
    if sim.len() != theory.len() || sim.rows.iter().zip(&theory.rows).any(|(a, b)| a.i != b.i) {
        return Err(Error::Domain(format!("iteration axes differ ({} vs {} rows)", sim.len(), theory.len())));
    }
    if sim.is_empty() {
        return Err(Error::Domain("nothing to compare".to_string()));
    }
    if !(band_db >= 0.0) {
        return Err(Error::Domain(format!("band must be nonnegative, got {band_db}")));
    }
    let deviation_db: Vec<f64> = sim
        .rows
        .iter()
        .zip(&theory.rows)
        .map(|(a, b)| {
            let (x, y) = (crate::to_db(a.emse), crate::to_db(b.emse));
            if x == y {
                0.0
            } else {
                x - y
            }
        })
        .collect();
    let n = deviation_db.len();
    let abs: Vec<f64> = deviation_db.iter().map(|d| d.abs()).collect();
    let within = abs.iter().filter(|d| **d <= band_db).count();
    let fraction_within = within as f64 / n as f64;
    Ok(CompareReport {
        iterations: n,
        band_db,
        max_abs_db: abs.iter().copied().fold(0.0, f64::max),
        mean_abs_db: abs.iter().sum::<f64>() / n as f64,
        fraction_within,
        pass: fraction_within >= PASS_FRACTION,
        deviation_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{CombinationSpec, SupervisorSpec, TopologyKind};
    use crate::scenario::ScenarioConfig;

    fn cfg(activation: Activation, mu_a: f64) -> ExperimentConfig {
        ExperimentConfig::new(
            ScenarioConfig::new(5, 400).with_seed(2),
            CombinationSpec::new(TopologyKind::CyclicFeedback, 0.05, 0.01).with_period(10),
            SupervisorSpec::new(activation, mu_a),
        )
        .with_ensemble(10, 100)
    }

    #[test]
    fn white_and_general_tables_agree() {
        let c = cfg(Activation::Sigmoid, 50.0);
        let a = transient_table(&c, true).unwrap();
        let b = transient_table(&c, false).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.emse - y.emse).abs() <= 1e-10 * x.emse.abs());
            assert!((x.a_mean - y.a_mean).abs() <= 1e-10 * x.a_mean.abs().max(1e-12));
        }
    }

    #[test]
    fn affine_stationary_warns() {
        let report = run_theory(&cfg(Activation::Affine, 1.0)).unwrap();
        assert!(report.warnings.iter().any(|w| w.contains("affine")));
        assert!(report.white_input);
        assert_eq!(report.table.unwrap().len(), 400);
        let quiet = run_theory(&cfg(Activation::Sigmoid, 50.0)).unwrap();
        assert!(quiet.warnings.is_empty());
    }

    #[test]
    fn phases_get_their_own_lines() {
        let mut c = cfg(Activation::Sigmoid, 50.0);
        c.scenario.process_noise_schedule = vec![(0, 1e-4), (200, 1e-6)];
        let report = run_theory(&c).unwrap();
        assert_eq!(report.steady_state.len(), 2);
        assert!(report.table.is_none());
        assert!(report.steady_state[0].emse > report.steady_state[1].emse);
    }

    #[test]
    fn transfer_topologies_are_rejected() {
        let mut c = cfg(Activation::Sigmoid, 50.0);
        c.combination.topology = TopologyKind::Handover;
        assert!(run_theory(&c).is_err());
    }

    fn flat(values: &[f64]) -> MetricsTable {
        MetricsTable {
            rows: values
                .iter()
                .enumerate()
                .map(|(i, &emse)| MetricsRow {
                    i: i as u64,
                    emse,
                    emse1: emse,
                    emse2: emse,
                    cross_emse: emse,
                    eta_mean: 0.5,
                    a_mean: 0.0,
                    eta_sq_mean: 0.25,
                    net_mu: 0.01,
                    n_realizations: 1,
                    a_sq_mean: 0.0,
                })
                .collect(),
            n_diverged: 0,
        }
    }

    #[test]
    fn compare_examples() {
        let t = flat(&[1.0, 0.5, 0.1, 0.0]);
        let same = compare(&t, &t, 0.5).unwrap();
        assert_eq!((same.max_abs_db, same.fraction_within), (0.0, 1.0));
        assert!(same.pass);

        let up = 10f64.powf(0.1);
        let shifted = flat(&[up, 0.5 * up, 0.1 * up]);
        let base = flat(&[1.0, 0.5, 0.1]);
        let r = compare(&base, &shifted, 0.5).unwrap();
        assert_eq!(r.fraction_within, 0.0);
        assert!((r.max_abs_db - 1.0).abs() < 1e-12);
        assert!(!r.pass);

        assert!(compare(&base, &t, 1.0).is_err());
    }
}
