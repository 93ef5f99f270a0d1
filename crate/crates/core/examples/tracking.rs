//! Cyclic feedback with a normalized supervisor against its own components
//! while the plant's random walk slows down. One line per phase.
//!
//! cargo run --release --example tracking

use afcomb::harness::{
    estimate_steady_state, run_baselines, run_ensemble, run_theory, CombinationSpec, ExperimentConfig, SupervisorSpec,
    TopologyKind,
};
use afcomb::{to_db, Activation, Result, ScenarioConfig};

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::new(
        ScenarioConfig::new(10, 6000).with_schedule(vec![(0, 1e-4), (2000, 1e-5), (4000, 1e-6)]).with_seed(9),
        CombinationSpec::new(TopologyKind::CyclicFeedback, 0.08, 0.005).with_period(10),
        SupervisorSpec::new(Activation::Sigmoid, 0.7).normalized(0.7, 1e-2),
    )
    .with_ensemble(200, 1000);
    cfg.baselines.lms_step_sizes = vec![0.08, 0.005];
    cfg.baselines.vss = true;

    let comb = run_ensemble(&cfg)?.emse();
    let baselines = run_baselines(&cfg)?;
    let predicted = run_theory(&cfg)?.steady_state;
    for (k, end) in [2000, 4000, 6000].into_iter().enumerate() {
        let phase = |s: &[f64]| estimate_steady_state(&s[..end], 1000).map(to_db);
        print!("phase ending at {end}: combination {:.2} dB (theory {:.2})", phase(&comb)?, predicted[k].emse_db);
        for (b, t) in &baselines {
            print!(", {} {:.2}", b.label(), phase(&t.emse())?);
        }
        println!();
    }
    Ok(())
}
