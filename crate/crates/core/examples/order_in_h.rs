//! Temporal convergence of MO1–MO4 on the general field.
//!
//! ```text
//! cargo run --release --example order_in_h -- [eps]
//! ```

use cpd_core::fields::FieldId;
use cpd_core::harness::{
    fit_rows, run_experiment, standard_h_values, ExperimentConfig, ExperimentKind, Method, SweepVariable,
};

fn main() -> cpd_core::Result<()> {
    let eps: f64 = std::env::args().nth(1).map(|s| s.parse().expect("eps")).unwrap_or(1e-2);
    let methods = (1..=4).map(Method::Mo).collect();
    let cfg = ExperimentConfig::sweep(
        ExperimentKind::OrderVsH,
        FieldId::General,
        methods,
        vec![eps],
        standard_h_values(),
    );
    let rows = run_experiment(&cfg)?;
    println!("{:<6} {:>10} {:>12} {:>12}", "method", "h", "err", "floor");
    for r in &rows {
        println!(
            "{:<6} {:>10.5} {:>12.3e} {:>12.3e}",
            r.method,
            r.h,
            r.err,
            10.0 * r.oracle_estimate
        );
    }
    for order in 1..=4 {
        let id = format!("mo{order}");
        let mine: Vec<_> = rows.iter().filter(|r| r.method == id).collect();
        match fit_rows(&mine, SweepVariable::H) {
            Ok(fit) => println!("{id}: slope {:.2} over {} points", fit.slope, fit.used),
            Err(e) => println!("{id}: {e}"),
        }
    }
    Ok(())
}
