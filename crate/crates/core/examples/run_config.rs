//! Config-driven run: loads a TOML experiment, simulates it, evaluates the
//! models and writes both metrics tables next to each other.
//!
//! cargo run --release --example run_config -- crates/core/configs/tiny.toml target/tiny

use std::path::{Path, PathBuf};

use afcomb::harness::{compare, run_ensemble, run_theory, ExperimentConfig};
use afcomb::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/tiny.toml"));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/run_config".to_string()));

    let cfg = ExperimentConfig::load(&config)?;
    let sim = run_ensemble(&cfg)?;
    sim.save(out.join("sim.csv"))?;
    println!("simulated {} iterations x {} realizations", sim.len(), cfg.harness.ensemble_size);

    let report = run_theory(&cfg)?;
    for line in &report.steady_state {
        println!("steady state from i = {}: {:.2} dB", line.start_iteration, line.emse_db);
    }
    for w in &report.warnings {
        println!("note: {w}");
    }
    if let Some(theory) = report.table {
        theory.save(out.join("theory.csv"))?;
        let r = compare(&sim, &theory, 1.0)?;
        println!("{:.1}% of iterations within 1 dB", 100.0 * r.fraction_within);
    }
    println!("tables written to {}", out.display());
    Ok(())
}
