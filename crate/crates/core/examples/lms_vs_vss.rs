//! Two fixed-step LMS filters and a VSS-LMS spanning the same step range on a
//! plant that slows down twice.
//!
//! cargo run --release --example lms_vs_vss

use afcomb::harness::{
    estimate_steady_state, run_baselines, CombinationSpec, ExperimentConfig, SupervisorSpec, TopologyKind,
};
use afcomb::{to_db, Activation, Result, ScenarioConfig};

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::new(
        ScenarioConfig::new(10, 6000).with_schedule(vec![(0, 1e-4), (2000, 1e-5), (4000, 1e-6)]).with_seed(9),
        CombinationSpec::new(TopologyKind::Independent, 0.08, 0.005),
        SupervisorSpec::new(Activation::Sigmoid, 100.0),
    )
    .with_ensemble(100, 1000);
    cfg.baselines.lms_step_sizes = vec![0.08, 0.005];
    cfg.baselines.vss = true;

    println!("{:>12} {:>12} {:>12} {:>12}", "filter", "q = 1e-4", "q = 1e-5", "q = 1e-6");
    for (baseline, table) in run_baselines(&cfg)? {
        let emse = table.emse();
        let phases: Vec<String> = [2000, 4000, 6000]
            .iter()
            .map(|&end| estimate_steady_state(&emse[..end], 1000).map(|x| format!("{:9.2} dB", to_db(x))))
            .collect::<Result<_>>()?;
        println!("{:>12} {}", baseline.label(), phases.join(" "));
    }
    Ok(())
}
