//! Byte-level regression tests of the CSV output on a small config.

use std::path::Path;

use afcomb::harness::{run_ensemble, run_theory, ExperimentConfig, MetricsTable, COLUMNS};

fn manifest(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn tiny() -> ExperimentConfig {
    ExperimentConfig::load(manifest("configs/tiny.toml")).unwrap()
}

#[test]
fn simulation_matches_golden_csv() {
    let got = run_ensemble(&tiny()).unwrap().to_csv_string().unwrap();
    let want = std::fs::read_to_string(manifest("tests/data/tiny_sim.csv")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn theory_matches_golden_csv() {
    let report = run_theory(&tiny()).unwrap();
    let got = report.table.unwrap().to_csv_string().unwrap();
    let want = std::fs::read_to_string(manifest("tests/data/tiny_theory.csv")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn golden_csv_has_the_documented_layout() {
    let text = std::fs::read_to_string(manifest("tests/data/tiny_sim.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
    assert_eq!(lines.count(), 40);
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn csv_round_trips_through_disk() {
    let table = run_ensemble(&tiny()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/out.csv");
    table.save(&path).unwrap();
    let back = MetricsTable::load(&path).unwrap();
    assert_eq!(back.len(), table.len());
    for (a, b) in back.rows.iter().zip(&table.rows) {
        assert_eq!(
            (a.i, a.emse, a.eta_mean, a.net_mu, a.n_realizations),
            (b.i, b.emse, b.eta_mean, b.net_mu, b.n_realizations)
        );
    }
    assert_eq!(back.to_csv_string().unwrap(), table.to_csv_string().unwrap());
}
