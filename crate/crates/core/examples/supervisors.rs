//! Mixing-parameter trajectories of the three supervisor flavours on the same
//! stream: convex, affine and normalized convex.
//!
//! cargo run --release --example supervisors

use afcomb::{CombinationState, Result, ScenarioConfig, Stream, SupervisorState, Topology};

fn trace(sup: SupervisorState, cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    let mut comb = CombinationState::new(cfg.filter_length, 0.05, 0.005, sup, Topology::Independent)?;
    let mut stream = Stream::new(cfg, 0)?;
    let mut eta = Vec::with_capacity(cfg.horizon);
    while let Some(s) = stream.advance() {
        eta.push(comb.step(s.regressor, s.desired, None)?.eta);
    }
    Ok(eta)
}

fn main() -> Result<()> {
    let cfg = ScenarioConfig::new(7, 4000).with_seed(2);
    let runs = [
        ("convex", trace(SupervisorState::convex(200.0)?, &cfg)?),
        ("affine", trace(SupervisorState::affine(2.0)?, &cfg)?),
        ("normalized", trace(SupervisorState::convex(0.5)?.with_normalization(0.9, 1e-2)?, &cfg)?),
    ];
    print!("{:>6}", "i");
    for (name, _) in &runs {
        print!(" {name:>11}");
    }
    println!();
    for i in (0..cfg.horizon).step_by(250) {
        print!("{i:>6}");
        for (_, eta) in &runs {
            print!(" {:11.4}", eta[i]);
        }
        println!();
    }
    Ok(())
}
