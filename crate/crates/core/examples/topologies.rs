//! Convergence of the four topologies on a fast/slow pair. Independent filters
//! stall while the supervisor moves from the fast to the slow filter; the
//! transfer topologies pull the slow filter along.
//!
//! cargo run --release --example topologies

use afcomb::harness::{
    estimate_steady_state, run_ensemble, CombinationSpec, ExperimentConfig, SupervisorSpec, TopologyKind,
};
use afcomb::{to_db, Activation, Result, ScenarioConfig};

fn main() -> Result<()> {
    let kinds =
        [TopologyKind::Independent, TopologyKind::Leakage, TopologyKind::Handover, TopologyKind::CyclicFeedback];
    println!("{:>16} {:>10} {:>10} {:>10} {:>12}", "topology", "i = 250", "i = 750", "i = 1500", "steady (dB)");
    for kind in kinds {
        let mut spec = CombinationSpec::new(kind, 0.05, 0.005);
        match kind {
            TopologyKind::Leakage => spec.leak_amount = Some(0.5),
            TopologyKind::Handover | TopologyKind::CyclicFeedback => spec = spec.with_period(50),
            TopologyKind::Independent => {}
        }
        let cfg = ExperimentConfig::new(
            ScenarioConfig::new(7, 5000).with_seed(7),
            spec,
            SupervisorSpec::new(Activation::Sigmoid, 200.0),
        )
        .with_ensemble(200, 1000);
        let emse = run_ensemble(&cfg)?.emse();
        println!(
            "{:>16} {:10.2} {:10.2} {:10.2} {:12.2}",
            format!("{kind:?}"),
            to_db(emse[250]),
            to_db(emse[750]),
            to_db(emse[1500]),
            to_db(estimate_steady_state(&emse, 1000)?)
        );
    }
    Ok(())
}
