//! Steady-state EMSE of cyclic feedback: closed form against simulation for a
//! few cycle periods, with and without a random-walk plant.
//!
//! cargo run --release --example steady_state

use afcomb::harness::{
    estimate_steady_state, run_ensemble, CombinationSpec, ExperimentConfig, SupervisorSpec, TopologyKind,
};
use afcomb::theory::{optimal_eta, steady_state_emse, SteadyStateInputs};
use afcomb::{to_db, Activation, Result, ScenarioConfig, SupervisorState};

fn main() -> Result<()> {
    let (mu1, mu2, m) = (0.07, 0.01, 5);
    for q in [0.0, 1e-5, 1e-4] {
        let inputs = SteadyStateInputs {
            mu1,
            mu2,
            trace_ru: m as f64,
            noise_variance: 1e-2,
            trace_q: m as f64 * q,
            eta_range: SupervisorState::convex(100.0)?.eta_range(),
        };
        let ss = optimal_eta(&inputs)?;
        let theory = steady_state_emse(ss.mu_bar, inputs.trace_ru, inputs.noise_variance, inputs.trace_q)?;
        println!(
            "q = {q:e}: eta_opt {:.3}, eta_bar {:.3}, mu_bar {:.4}, predicted {:.2} dB",
            ss.eta_opt,
            ss.eta_bar,
            ss.mu_bar,
            to_db(theory)
        );
        for l in [1, 10, 100] {
            let cfg = ExperimentConfig::new(
                ScenarioConfig::new(m, 8000).with_random_walk(q).with_seed(l),
                CombinationSpec::new(TopologyKind::CyclicFeedback, mu1, mu2).with_period(l),
                SupervisorSpec::new(Activation::Sigmoid, 100.0),
            )
            .with_ensemble(100, 1000);
            let sim = estimate_steady_state(&run_ensemble(&cfg)?.emse(), 1000)?;
            println!("    L = {l:3}: simulated {:.2} dB", to_db(sim));
        }
    }
    Ok(())
}
