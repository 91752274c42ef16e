//! Error at a fixed step across `eps` on the general field.
//!
//! ```text
//! cargo run --release --example uniform_accuracy -- [h]
//! ```

use cpd_core::fields::FieldId;
use cpd_core::harness::{run_experiment, ExperimentConfig, ExperimentKind, Method};

fn main() -> cpd_core::Result<()> {
    let h: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("h"))
        .unwrap_or(1.0 / 40.0);
    let eps = vec![1e-1, 1e-2, 1e-3, 1e-4];
    let methods = (1..=4).map(Method::Mo).collect();
    let cfg = ExperimentConfig::sweep(ExperimentKind::OrderVsEps, FieldId::General, methods, eps, vec![h]);
    let rows = run_experiment(&cfg)?;
    println!("{:<6} {:>8} {:>12}  note", "method", "eps", "err");
    for r in &rows {
        println!(
            "{:<6} {:>8.0e} {:>12.3e}  {}",
            r.method,
            r.eps,
            r.err,
            r.error.as_deref().unwrap_or("")
        );
    }
    for order in 1..=4 {
        let id = format!("mo{order}");
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == id && r.error.is_none())
            .map(|r| r.err)
            .collect();
        let (lo, hi) = errs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        println!("{id}: max/min over {} finished runs = {:.2e}", errs.len(), hi / lo);
    }
    Ok(())
}
