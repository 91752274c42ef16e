//! Error against ε at fixed h on the maximal-ordering field, where the error
//! should fall like εʳ.
//!
//! ```text
//! cargo run --release --example maximal_ordering -- [field] [h]
//! ```

use cpd_core::fields::FieldId;
use cpd_core::harness::{
    fit_rows, run_experiment, standard_eps_values, ExperimentConfig, ExperimentKind, Method, SweepVariable,
};

fn main() -> cpd_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let field: FieldId = args.next().map(|s| s.parse()).transpose()?.unwrap_or(FieldId::Maximal);
    let h: f64 = args.next().map(|s| s.parse().expect("h")).unwrap_or(1.0 / 40.0);
    let methods = (1..=4).map(Method::Mo).collect();
    let cfg = ExperimentConfig::sweep(
        ExperimentKind::OrderVsEps,
        field,
        methods,
        standard_eps_values(),
        vec![h],
    );
    let rows = run_experiment(&cfg)?;
    println!("{:<6} {:>10} {:>12} {:>12}  note", "method", "eps", "err", "floor");
    for r in &rows {
        println!(
            "{:<6} {:>10.3e} {:>12.3e} {:>12.3e}  {}",
            r.method,
            r.eps,
            r.err,
            10.0 * r.oracle_estimate,
            r.error.as_deref().unwrap_or("")
        );
    }
    for order in 1..=4 {
        let id = format!("mo{order}");
        let mine: Vec<_> = rows.iter().filter(|r| r.method == id).collect();
        match fit_rows(&mine, SweepVariable::Eps) {
            Ok(fit) => println!("{id}: slope in eps {:.2} over {} points", fit.slope, fit.used),
            Err(e) => println!("{id}: {e}"),
        }
    }
    Ok(())
}
