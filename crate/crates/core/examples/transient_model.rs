//! Transient EMSE and supervisor moments from the recursive model next to a
//! Monte Carlo ensemble, for an affine supervisor on white input.
//!
//! cargo run --release --example transient_model

use afcomb::harness::{
    compare, run_ensemble, run_theory, CombinationSpec, ExperimentConfig, SupervisorSpec, TopologyKind,
};
use afcomb::{to_db, Activation, Result, ScenarioConfig};

fn main() -> Result<()> {
    let cfg = ExperimentConfig::new(
        ScenarioConfig::new(7, 3000).with_seed(1),
        CombinationSpec::new(TopologyKind::CyclicFeedback, 0.05, 0.01).with_period(80),
        SupervisorSpec::new(Activation::Affine, 2.0),
    )
    .with_ensemble(500, 1000);
    let report = run_theory(&cfg)?;
    for w in &report.warnings {
        println!("note: {w}");
    }
    let theory = report.table.expect("stationary plant");
    let sim = run_ensemble(&cfg)?;

    println!(
        "{:>5} {:>9} {:>9} {:>8} {:>8} {:>9} {:>9}",
        "i", "th (dB)", "sim (dB)", "th a", "sim a", "th var", "sim var"
    );
    for i in (0..theory.len()).step_by(200) {
        let (t, s) = (&theory.rows[i], &sim.rows[i]);
        println!(
            "{i:>5} {:9.2} {:9.2} {:8.4} {:8.4} {:9.5} {:9.5}",
            to_db(t.emse),
            to_db(s.emse),
            t.a_mean,
            s.a_mean,
            t.a_var(),
            s.a_var()
        );
    }
    let r = compare(&sim, &theory, 1.5)?;
    println!("{:.1}% of iterations within 1.5 dB, mean deviation {:.2} dB", 100.0 * r.fraction_within, r.mean_abs_db);
    Ok(())
}
