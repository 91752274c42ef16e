//! Well-prepared initial data as a coefficient vector: build, save, reload
//! and evaluate along the diagonal.
//!
//! ```text
//! cargo run --release --example coef_vector_io -- [path]
//! ```

use std::f64::consts::PI;

use cpd_core::fields::GeneralField;
use cpd_core::solver::{standard_v0, standard_x0};
use cpd_core::spectral::{project_initial, CoefVector};
use cpd_core::twoscale::TwoScaleSystem;

fn main() -> cpd_core::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("cpd_u0.bin").display().to_string());
    let field = GeneralField;
    let (x0, v0) = (standard_x0(), standard_v0());
    let system = TwoScaleSystem::new(&field, &x0, 1e-2, 64)?;
    let u0 = system.initial_data(4, &x0, &v0)?;
    let c = project_initial(&system, &u0);
    c.write_to(std::fs::File::create(&path)?)?;
    let back = CoefVector::read_from(std::fs::File::open(&path)?)?;
    assert_eq!(back, c);
    println!("{} modes x 6 components written to {path}", back.n_tau());
    println!("conjugate symmetry residual {:.1e}", back.conjugate_symmetry_residual());
    for theta in [0.0, PI / 2.0, PI] {
        let u = back.evaluate(theta);
        println!(
            "U(0, {theta:.3}) = [{}]",
            u.iter().map(|v| format!("{v:+.6}")).collect::<Vec<_>>().join(", ")
        );
    }
    let tail: f64 = (24..32).map(|k| back.get(3, k).norm()).fold(0.0, f64::max);
    println!("largest |coefficient| for modes 24..31 of w1: {tail:.1e}");
    Ok(())
}
