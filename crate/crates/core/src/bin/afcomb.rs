use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use afcomb::harness::{self, ExperimentConfig, MetricsTable};
use afcomb::{to_db, Result};

/// Combinations of LMS filters: simulation, theory and comparison.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo ensemble of a config and write its metrics CSV.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the steady-state and transient models of a config.
    Theory {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the EMSE columns of a simulated and a predicted CSV.
    Compare {
        sim: PathBuf,
        theory: PathBuf,
        #[arg(long = "band-db", default_value_t = 1.0)]
        band_db: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(n) = common.realizations {
        cfg.harness.ensemble_size = n;
    }
    if let Some(h) = common.horizon {
        cfg.scenario.horizon = h;
        cfg.harness.steady_state_window = cfg.harness.steady_state_window.min(h.saturating_sub(1).max(1));
    }
    if let Some(out) = &common.out {
        cfg.harness.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}-{suffix}.csv"))
}

fn emit(table: &MetricsTable, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => table.save(p),
        None => table.write_csv(std::io::stdout().lock()),
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let table = harness::run_ensemble(cfg)?;
    let out = cfg.harness.output.as_deref();
    emit(&table, out)?;
    let window = cfg.harness.steady_state_window;
    let ss = harness::estimate_steady_state(&table.emse(), window)?;
    eprintln!(
        "combination: steady-state EMSE {:.2} dB over the last {window} iterations ({} realizations, {} diverged)",
        to_db(ss),
        table.rows[0].n_realizations,
        table.n_diverged
    );
    for (baseline, t) in harness::run_baselines(cfg)? {
        let ss = harness::estimate_steady_state(&t.emse(), window)?;
        eprintln!("{}: steady-state EMSE {:.2} dB", baseline.label(), to_db(ss));
        if let Some(p) = out {
            t.save(sibling(p, &baseline.label()))?;
        }
    }
    Ok(())
}

fn theory(cfg: &ExperimentConfig) -> Result<()> {
    let report = harness::run_theory(cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for line in &report.steady_state {
        eprintln!(
            "phase from {}: eta_bar {:.4}, mu_bar {:.5}, steady-state EMSE {:.2} dB",
            line.start_iteration, line.eta_bar, line.mu_bar, line.emse_db
        );
    }
    let summary = serde_json::json!({ "steady_state": report.steady_state, "warnings": report.warnings });
    if let Some(p) = cfg.harness.output.as_deref() {
        let meta = p.with_extension("json");
        std::fs::write(&meta, format!("{summary:#}\n"))
            .map_err(|source| afcomb::Error::Io { path: meta.clone(), source })?;
    }
    match &report.table {
        Some(t) => emit(t, cfg.harness.output.as_deref()),
        None => {
            println!("{summary:#}");
            Ok(())
        }
    }
}

fn compare(sim: &Path, theory: &Path, band_db: f64, out: Option<&Path>) -> Result<bool> {
    let report = harness::compare(&MetricsTable::load(sim)?, &MetricsTable::load(theory)?, band_db)?;
    let text = format!("{:#}\n", serde_json::to_value(&report).expect("report serializes"));
    match out {
        Some(p) => std::fs::write(p, &text).map_err(|source| afcomb::Error::Io { path: p.to_path_buf(), source })?,
        None => print!("{text}"),
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, common } => load(config, common).and_then(|c| simulate(&c)).map(|_| true),
        Command::Theory { config, common } => load(config, common).and_then(|c| theory(&c)).map(|_| true),
        Command::Compare { sim, theory, band_db, common } => compare(sim, theory, *band_db, common.out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
