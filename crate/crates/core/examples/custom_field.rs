//! A user-supplied field: only `B` and `E` are given, derivatives come from
//! finite differences. Prints a sampled trajectory and compares the endpoint
//! with fine RK4.
//!
//! ```text
//! cargo run --release --example custom_field
//! ```

use cpd_core::baselines::{integrate, Baseline};
use cpd_core::fields::{CustomField, FieldId};
use cpd_core::solver::{error_metric, solve_with_field, SolveConfig};
use cpd_core::transform::ParticleState;
use cpd_core::Vec3;

fn main() -> cpd_core::Result<()> {
    // a slightly sheared field with a weak linear electric field
    let field = CustomField::new(
        |x: &Vec3| Vec3::new(0.2 * x[2], 1.0 + 0.1 * x[0], 0.5),
        |x: &Vec3| Vec3::new(-0.3 * x[0], 0.0, 0.1 * x[1]),
    );
    let eps = 0.05;
    let cfg = SolveConfig {
        x0: Vec3::new(0.5, 0.0, 0.2),
        v0: Vec3::new(0.3, -0.4, 0.6),
        stride: 10,
        ..SolveConfig::standard(FieldId::Custom, eps, 3, 1.0 / 200.0)
    };
    let traj = solve_with_field(&cfg, &field)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "t", "x1", "x2", "x3");
    for s in &traj.states {
        println!("{:>6.3} {:>10.5} {:>10.5} {:>10.5}", s.t, s.x[0], s.x[1], s.x[2]);
    }
    let start = ParticleState::new(0.0, cfg.x0, cfg.v0);
    let reference = integrate(Baseline::Rk4, &field, eps, 1e-5, 1.0, &start)?;
    let m = error_metric(traj.final_state(), &reference, eps)?;
    println!(
        "endpoint error against RK4: {:.3e} (x {:.1e}, eps*v {:.1e})",
        m.err, m.err_x, m.err_v_scaled
    );
    Ok(())
}
