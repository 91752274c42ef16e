//! Error against CPU time for MO2 and the classical integrators, written as
//! CSV (the same layout as `cpd run`).
//!
//! ```text
//! cargo run --release --example efficiency -- [eps] [out.csv]
//! ```

use cpd_core::baselines::Baseline;
use cpd_core::fields::FieldId;
use cpd_core::harness::{run_experiment, write_csv, ExperimentConfig, ExperimentKind, Method};

fn main() -> cpd_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let eps: f64 = args.next().map(|s| s.parse().expect("eps")).unwrap_or(1e-2);
    let out = args.next();
    let methods = vec![
        Method::Mo(2),
        Method::Baseline(Baseline::Boris),
        Method::Baseline(Baseline::Rk2),
        Method::Baseline(Baseline::CrankNicolson),
    ];
    let h = (0..12).map(|k| 1.0 / (10.0 * 2f64.powi(k))).collect();
    let mut cfg = ExperimentConfig::sweep(ExperimentKind::Efficiency, FieldId::General, methods, vec![eps], h);
    cfg.repeats = 3;
    let rows = run_experiment(&cfg)?;
    for r in &rows {
        eprintln!(
            "{:<6} h={:<10.3e} err={:<10.3e} cpu={:.4} s",
            r.method, r.h, r.err, r.cpu_seconds
        );
    }
    match out {
        Some(path) => write_csv(&rows, std::fs::File::create(path)?),
        None => write_csv(&rows, std::io::stdout().lock()),
    }
}
