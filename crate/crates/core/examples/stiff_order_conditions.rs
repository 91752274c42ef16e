//! The weights of MO1–MO4 at a few points on the imaginary axis, followed by
//! the full identity suite that `cpd check` runs.
//!
//! ```text
//! cargo run --release --example stiff_order_conditions
//! ```

use num_complex::Complex64;

use cpd_core::expint::tableau;
use cpd_core::harness::identity_suite;

fn main() -> cpd_core::Result<()> {
    for order in 1..=4 {
        let tab = tableau(order)?;
        println!("{} ({} stages, nodes {:?})", tab.name, tab.stages(), tab.c);
        for y in [0.0, 1.0, 10.0, 50.0] {
            let z = Complex64::new(0.0, y);
            let psi: Vec<String> = (1..=order.max(2))
                .map(|rho| format!("|psi{rho}|={:.1e}", tab.psi(rho, z).norm()))
                .collect();
            println!("  z = {y:>4}i  {}", psi.join("  "));
        }
    }
    println!();
    for c in identity_suite()? {
        println!(
            "{:<32} {:.2e} <= {:.0e} {}",
            c.name,
            c.residual,
            c.tolerance,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
