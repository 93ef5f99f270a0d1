//! Seeded Monte Carlo ensembles.
//!
//! Realizations are grouped in fixed chunks of consecutive indices. Each chunk
//! is summed with compensated arithmetic and chunks are merged in index order,
//! so the result does not depend on how many threads ran the chunks.

use rayon::prelude::*;

use crate::combinations::CombinationState;
use crate::error::{Error, Result};
use crate::filters::{FilterState, VssLmsState};
use crate::scenario::Stream;

use super::config::ExperimentConfig;
use super::metrics::{MetricsRow, MetricsTable, Neumaier};

const CHUNK: usize = 32;
const FIELDS: usize = 9;

/// Per-iteration values of one realization, in [`MetricsRow`] order with `a^2` last.
type Trace = Vec<[f64; FIELDS]>;

/// Divergence tolerated before an ensemble is declared failed.
const MAX_DIVERGED_FRACTION: f64 = 0.01;

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Divergence { .. } | Error::NonFinite { .. })
}

struct ChunkSums {
    sums: Vec<[Neumaier; FIELDS]>,
    completed: usize,
    diverged: usize,
}

fn run_chunk<F>(indices: &[u64], horizon: usize, run: &F) -> Result<ChunkSums>
where
    F: Fn(u64) -> Result<Trace> + Sync,
{
    let mut acc = ChunkSums { sums: vec![[Neumaier::default(); FIELDS]; horizon], completed: 0, diverged: 0 };
    for &r in indices {
        match run(r) {
            Ok(trace) => {
                for (slot, values) in acc.sums.iter_mut().zip(&trace) {
                    for (s, v) in slot.iter_mut().zip(values) {
                        s.add(*v);
                    }
                }
                acc.completed += 1;
            }
            Err(e) if is_divergence(&e) => acc.diverged += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(acc)
}

fn accumulate<F>(indices: &[u64], horizon: usize, workers: Option<usize>, run: F) -> Result<MetricsTable>
where
    F: Fn(u64) -> Result<Trace> + Sync + Send,
{
    let go = || -> Result<Vec<ChunkSums>> {
        indices.par_chunks(CHUNK).map(|chunk| run_chunk(chunk, horizon, &run)).collect()
    };
    let chunks = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?
            .install(go)?,
        None => go()?,
    };

    let mut total = vec![[Neumaier::default(); FIELDS]; horizon];
    let (mut completed, mut diverged) = (0, 0);
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(&chunk.sums) {
            for (a, b) in t.iter_mut().zip(c) {
                a.merge(b);
            }
        }
        completed += chunk.completed;
        diverged += chunk.diverged;
    }
    let n = indices.len();
    if completed == 0 || diverged as f64 > MAX_DIVERGED_FRACTION * n as f64 {
        return Err(Error::ExperimentFailed { diverged, total: n });
    }
    let scale = 1.0 / completed as f64;
    let rows = total
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let m = |k: usize| s[k].value() * scale;
            MetricsRow {
                i: i as u64,
                emse: m(0),
                emse1: m(1),
                emse2: m(2),
                cross_emse: m(3),
                eta_mean: m(4),
                a_mean: m(5),
                eta_sq_mean: m(6),
                net_mu: m(7),
                n_realizations: completed,
                a_sq_mean: m(8),
            }
        })
        .collect();
    Ok(MetricsTable { rows, n_diverged: diverged })
}

/// One combination realization.
pub fn run_realization(cfg: &ExperimentConfig, realization: u64) -> Result<Trace> {
    let scenario = &cfg.scenario;
    let mut stream = Stream::new(scenario, realization)?;
    let mut comb = CombinationState::new(
        scenario.filter_length,
        cfg.combination.mu1,
        cfg.combination.mu2,
        cfg.supervisor_state()?,
        cfg.topology()?,
    )?;
    let mut trace = Vec::with_capacity(scenario.horizon);
    while let Some(s) = stream.advance() {
        let d = comb.step(s.regressor, s.desired, Some(s.plant))?;
        let ea = d.apriori.expect("plant supplied");
        trace.push([
            ea.global * ea.global,
            ea.first * ea.first,
            ea.second * ea.second,
            ea.first * ea.second,
            d.eta,
            d.a,
            d.eta * d.eta,
            d.net_mu,
            d.a * d.a,
        ]);
    }
    Ok(trace)
}

/// Ensemble over realizations `0..ensemble_size`.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<MetricsTable> {
    let indices: Vec<u64> = (0..cfg.harness.ensemble_size as u64).collect();
    run_ensemble_over(cfg, &indices)
}

/// Ensemble over an explicit list of realization indices.
pub fn run_ensemble_over(cfg: &ExperimentConfig, indices: &[u64]) -> Result<MetricsTable> {
    cfg.validate()?;
    accumulate(indices, cfg.scenario.horizon, cfg.harness.workers, |r| run_realization(cfg, r))
}

/// A standalone filter run on the same streams as the combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Lms { step_size: f64 },
    Vss,
}

impl Baseline {
    pub fn label(&self) -> String {
        match self {
            Baseline::Lms { step_size } => format!("lms-{step_size}"),
            Baseline::Vss => "vss".to_string(),
        }
    }
}

/// The baselines requested by `[baselines]`.
pub fn configured_baselines(cfg: &ExperimentConfig) -> Vec<Baseline> {
    let mut out: Vec<Baseline> =
        cfg.baselines.lms_step_sizes.iter().map(|&step_size| Baseline::Lms { step_size }).collect();
    if cfg.baselines.vss {
        out.push(Baseline::Vss);
    }
    out
}

/// Runs one baseline realization. Every component column holds `e_a^2`,
/// `eta = 1`, `a = 0` and `net_mu` is the step in force.
pub fn run_baseline_realization(cfg: &ExperimentConfig, baseline: Baseline, realization: u64) -> Result<Trace> {
    let scenario = &cfg.scenario;
    let m = scenario.filter_length;
    let mut stream = Stream::new(scenario, realization)?;
    let mut trace = Vec::with_capacity(scenario.horizon);
    let row = |ea: f64, mu: f64| {
        let e2 = ea * ea;
        [e2, e2, e2, e2, 1.0, 0.0, 1.0, mu, 0.0]
    };
    match baseline {
        Baseline::Lms { step_size } => {
            let mut f = FilterState::new(m, step_size)?;
            while let Some(s) = stream.advance() {
                let ea = crate::dot(s.regressor, s.plant) - crate::dot(s.regressor, &f.w);
                f.adapt(s.regressor, s.desired)?;
                if f.w.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Divergence { iteration: s.iteration });
                }
                trace.push(row(ea, step_size));
            }
        }
        Baseline::Vss => {
            let mut f = VssLmsState::new(m, cfg.vss_params())?;
            while let Some(s) = stream.advance() {
                let ea = crate::dot(s.regressor, s.plant) - crate::dot(s.regressor, &f.w);
                let out = f.step(s.regressor, s.desired)?;
                if f.w.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Divergence { iteration: s.iteration });
                }
                trace.push(row(ea, out.mu));
            }
        }
    }
    Ok(trace)
}

/// Ensembles of every configured baseline, labelled.
pub fn run_baselines(cfg: &ExperimentConfig) -> Result<Vec<(Baseline, MetricsTable)>> {
    cfg.validate()?;
    let indices: Vec<u64> = (0..cfg.harness.ensemble_size as u64).collect();
    configured_baselines(cfg)
        .into_iter()
        .map(|b| {
            let table = accumulate(&indices, cfg.scenario.horizon, cfg.harness.workers, |r| {
                run_baseline_realization(cfg, b, r)
            })?;
            Ok((b, table))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{CombinationSpec, SupervisorSpec, TopologyKind};
    use crate::scenario::ScenarioConfig;
    use crate::supervisors::Activation;

    fn tiny(topology: TopologyKind, mu_a: f64) -> ExperimentConfig {
        ExperimentConfig::new(
            ScenarioConfig::new(4, 200).with_seed(9),
            CombinationSpec::new(topology, 0.05, 0.01),
            SupervisorSpec::new(Activation::Sigmoid, mu_a),
        )
        .with_ensemble(1, 50)
    }

    #[test]
    fn single_frozen_realization_is_two_plain_lms() {
        let mut cfg = tiny(TopologyKind::Independent, 0.0);
        cfg.baselines.lms_step_sizes = vec![0.05, 0.01];
        let table = run_ensemble(&cfg).unwrap();
        let base = run_baselines(&cfg).unwrap();
        assert_eq!(table.emse1_series(), base[0].1.emse());
        assert_eq!(table.emse2_series(), base[1].1.emse());
        assert!(table.rows.iter().all(|r| r.eta_mean == 0.5 && r.n_realizations == 1));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = tiny(TopologyKind::CyclicFeedback, 100.0).with_ensemble(70, 50);
        cfg.combination.cycle_period = Some(5);
        cfg.harness.workers = Some(1);
        let one = run_ensemble(&cfg).unwrap();
        cfg.harness.workers = Some(4);
        let four = run_ensemble(&cfg).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn divergent_ensembles_fail() {
        let mut cfg = tiny(TopologyKind::Independent, 10.0).with_ensemble(5, 50);
        cfg.combination.mu1 = 50.0;
        assert!(matches!(run_ensemble(&cfg), Err(Error::ExperimentFailed { diverged: 5, total: 5 })));
    }

    impl MetricsTable {
        fn emse1_series(&self) -> Vec<f64> {
            self.column(|r| r.emse1)
        }
        fn emse2_series(&self) -> Vec<f64> {
            self.column(|r| r.emse2)
        }
    }
}
