//! In a constant magnetic field without electric field the two-scale
//! solution is the exact helix, for any step size.
//!
//! ```text
//! cargo run --release --example uniform_helix
//! ```

use cpd_core::fields::{FieldId, UniformField};
use cpd_core::solver::{error_metric, solve_with_field, standard_v0, standard_x0, SolveConfig};
use cpd_core::transform::ParticleState;
use cpd_core::Vec3;

fn helix(b: &Vec3, x0: &Vec3, v0: &Vec3, eps: f64, t: f64) -> ParticleState {
    let unit = b.normalize();
    let omega = b.norm() / eps;
    let v_par = unit * unit.dot(v0);
    let v_perp = v0 - v_par;
    let side = v_perp.cross(&unit);
    let (s, c) = (omega * t).sin_cos();
    ParticleState::new(
        t,
        x0 + v_par * t + v_perp * (s / omega) + side * ((1.0 - c) / omega),
        v_par + v_perp * c + side * s,
    )
}

fn main() -> cpd_core::Result<()> {
    let field = UniformField {
        b: Vec3::new(0.2, 1.0, -0.6),
        e: Vec3::zeros(),
    };
    let (x0, v0) = (standard_x0(), standard_v0());
    println!("{:<6} {:>8} {:>8} {:>12}", "method", "eps", "h", "err");
    for order in 1..=4 {
        for eps in [1e-1, 1e-4] {
            for h in [1.0, 0.1] {
                let cfg = SolveConfig::standard(FieldId::Custom, eps, order, h);
                let traj = solve_with_field(&cfg, &field)?;
                let m = error_metric(traj.final_state(), &helix(&field.b, &x0, &v0, eps, 1.0), eps)?;
                println!("mo{order:<4} {eps:>8.0e} {h:>8} {:>12.3e}", m.err);
            }
        }
    }
    Ok(())
}
