//! Draws a correlated stream and checks its second-order statistics against
//! the Toeplitz covariance `sigma_u^2 gamma^|j-k|` used by the models.
//!
//! cargo run --release --example data_streams

use afcomb::{Result, ScenarioConfig, Stream};

fn main() -> Result<()> {
    let cfg = ScenarioConfig::new(4, 100_000).with_input(1.0, 0.7).with_random_walk(1e-6).with_seed(3);
    let m = cfg.filter_length;
    let mut stream = Stream::new(&cfg, 0)?;

    let mut cov = vec![0.0; m * m];
    let mut noise = 0.0;
    let mut drift = 0.0;
    let mut n = 0.0;
    let start = cfg.initial_plant()?;
    while let Some(s) = stream.advance() {
        for j in 0..m {
            for k in 0..m {
                cov[j * m + k] += s.regressor[j] * s.regressor[k];
            }
        }
        let clean: f64 = s.regressor.iter().zip(s.plant).map(|(u, w)| u * w).sum();
        noise += (s.desired - clean).powi(2);
        drift = s.plant.iter().zip(&start).map(|(a, b)| (a - b).powi(2)).sum();
        n += 1.0;
    }

    let expected = cfg.regressor_covariance();
    println!("empirical R_u (expected in brackets):");
    for j in 0..m {
        let row: Vec<String> =
            (0..m).map(|k| format!("{:6.3} [{:5.3}]", cov[j * m + k] / n, expected[(j, k)])).collect();
        println!("  {}", row.join("  "));
    }
    println!("noise variance {:.5} (configured {})", noise / n, cfg.noise_variance);
    println!("plant drift |w_end - w_start|^2 = {:.4} (expected about M q i = {:.4})", drift, m as f64 * 1e-6 * n);
    Ok(())
}
