//! With feedback at every iteration the global vector is an LMS filter whose
//! step is `eta(i) mu1 + (1 - eta(i)) mu2`. Replays that recursion next to the
//! combination and reports the largest gap.
//!
//! cargo run --release --example vss_equivalence

use afcomb::{CombinationState, Result, ScenarioConfig, Stream, SupervisorState, Topology};

fn main() -> Result<()> {
    let cfg = ScenarioConfig::new(8, 2000).with_input(1.0, 0.5).with_seed(4);
    let mut comb = CombinationState::new(8, 0.1, 0.01, SupervisorState::convex(100.0)?, Topology::feedback(1)?)?;
    let mut replay = vec![0.0; 8];
    let mut stream = Stream::new(&cfg, 0)?;
    let mut worst = 0.0f64;
    while let Some(s) = stream.advance() {
        let e = s.desired - s.regressor.iter().zip(&replay).map(|(u, w)| u * w).sum::<f64>();
        let d = comb.step(s.regressor, s.desired, None)?;
        for (w, u) in replay.iter_mut().zip(s.regressor) {
            *w += d.net_mu * e * u;
        }
        let gap = comb.global.iter().zip(&replay).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
        if s.iteration % 400 == 0 {
            println!("i = {:5}  net step {:.5}  eta {:.4}", s.iteration, d.net_mu, d.eta);
        }
    }
    println!("largest coefficient gap over {} iterations: {worst:.3e}", cfg.horizon);
    Ok(())
}
