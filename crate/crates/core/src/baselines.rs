//! Standard time-steppers for `x' = v`, `v' = v × B(x)/ε + E(x)`, plus the
//! fine-step reference solution used to measure errors.

use crate::fields::FieldModel;
use crate::solver::{error_metric, step_count};
use crate::transform::ParticleState;
use crate::{CpdError, Result, Vec3};

/// Picard iterations allowed per Crank–Nicolson step.
pub const CN_MAX_ITER: usize = 100;
/// Relative change in the midpoint that ends a Crank–Nicolson iteration.
pub const CN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Boris,
    Rk2,
    CrankNicolson,
    Rk4,
}

impl Baseline {
    pub fn as_str(&self) -> &'static str {
        match self {
            Baseline::Boris => "boris",
            Baseline::Rk2 => "rk2",
            Baseline::CrankNicolson => "cn",
            Baseline::Rk4 => "rk4ref",
        }
    }
}

fn acceleration(field: &dyn FieldModel, eps: f64, x: &Vec3, v: &Vec3) -> Result<Vec3> {
    Ok(v.cross(&field.magnetic(x)) / eps + field.electric(x)?)
}

/// Solves `u − u × c = r` exactly.
fn rotate_solve(r: &Vec3, c: &Vec3) -> Vec3 {
    (r + r.cross(c) + c * r.dot(c)) / (1.0 + c.norm_squared())
}

/// One Boris step in synchronised form. With `Bₙ, Eₙ` at `xₙ`:
///
/// ```text
///     u − (h/2) u × Bₙ/ε = vₙ + (h/2) Eₙ
///     xₙ₊₁ = xₙ + h u
///     vₙ₊₁ = u + (h/2)(u × Bₙ₊₁/ε + Eₙ₊₁)
/// ```
///
/// Consecutive steps compose to the usual leap-frog Boris scheme.
pub fn boris_step(field: &dyn FieldModel, eps: f64, s: &ParticleState, h: f64) -> Result<ParticleState> {
    let fields = (field.magnetic(&s.x), field.electric(&s.x)?);
    Ok(boris_step_cached(field, eps, s, h, fields)?.0)
}

fn boris_step_cached(
    field: &dyn FieldModel,
    eps: f64,
    s: &ParticleState,
    h: f64,
    (b, e): (Vec3, Vec3),
) -> Result<(ParticleState, (Vec3, Vec3))> {
    let u = rotate_solve(&(s.v + e * (0.5 * h)), &(b * (0.5 * h / eps)));
    let x = s.x + u * h;
    let b1 = field.magnetic(&x);
    let e1 = field.electric(&x)?;
    let v = u + (u.cross(&b1) / eps + e1) * (0.5 * h);
    Ok((ParticleState::new(s.t + h, x, v), (b1, e1)))
}

/// Explicit midpoint rule.
pub fn rk2_step(field: &dyn FieldModel, eps: f64, s: &ParticleState, h: f64) -> Result<ParticleState> {
    let a1 = acceleration(field, eps, &s.x, &s.v)?;
    let xm = s.x + s.v * (0.5 * h);
    let vm = s.v + a1 * (0.5 * h);
    let a2 = acceleration(field, eps, &xm, &vm)?;
    Ok(ParticleState::new(s.t + h, s.x + vm * h, s.v + a2 * h))
}

/// Classical fourth-order Runge–Kutta.
pub fn rk4_step(field: &dyn FieldModel, eps: f64, s: &ParticleState, h: f64) -> Result<ParticleState> {
    let (x, v) = (s.x, s.v);
    let k1x = v;
    let k1v = acceleration(field, eps, &x, &v)?;
    let x2 = x + k1x * (0.5 * h);
    let v2 = v + k1v * (0.5 * h);
    let k2v = acceleration(field, eps, &x2, &v2)?;
    let x3 = x + v2 * (0.5 * h);
    let v3 = v + k2v * (0.5 * h);
    let k3v = acceleration(field, eps, &x3, &v3)?;
    let x4 = x + v3 * h;
    let v4 = v + k3v * h;
    let k4v = acceleration(field, eps, &x4, &v4)?;
    Ok(ParticleState::new(
        s.t + h,
        x + (k1x + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0),
        v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0),
    ))
}

/// Implicit midpoint (Crank–Nicolson). For a trial midpoint `x_m` the
/// velocity equation is linear and solved exactly; `x_m` is then updated by
/// fixed-point iteration.
pub fn cn_step(field: &dyn FieldModel, eps: f64, s: &ParticleState, h: f64) -> Result<ParticleState> {
    let mut xm = s.x + s.v * (0.5 * h);
    for _ in 0..CN_MAX_ITER {
        let b = field.magnetic(&xm);
        let e = field.electric(&xm)?;
        let vm = rotate_solve(&(s.v + e * (0.5 * h)), &(b * (0.5 * h / eps)));
        let next = s.x + vm * (0.5 * h);
        let change = (next - xm).norm();
        xm = next;
        if !change.is_finite() {
            break;
        }
        if change <= CN_TOL * xm.norm().max(1.0) {
            return Ok(ParticleState::new(s.t + h, xm * 2.0 - s.x, vm * 2.0 - s.v));
        }
    }
    Err(CpdError::NoConvergence {
        iterations: CN_MAX_ITER,
    })
}

/// Integrates to `t_final` with a fixed step; `T/h` must be an integer.
pub fn integrate(
    method: Baseline,
    field: &dyn FieldModel,
    eps: f64,
    h: f64,
    t_final: f64,
    initial: &ParticleState,
) -> Result<ParticleState> {
    let n = step_count(t_final, h)?;
    integrate_steps(method, field, eps, h, n, initial)
}

pub fn integrate_steps(
    method: Baseline,
    field: &dyn FieldModel,
    eps: f64,
    h: f64,
    n: u64,
    initial: &ParticleState,
) -> Result<ParticleState> {
    let mut s = *initial;
    let mut cached = None;
    for step in 0..n {
        s = match method {
            Baseline::Boris => {
                let fields = match cached {
                    Some(f) => f,
                    None => (field.magnetic(&s.x), field.electric(&s.x)?),
                };
                let (next, f) = boris_step_cached(field, eps, &s, h, fields)?;
                cached = Some(f);
                next
            }
            Baseline::Rk2 => rk2_step(field, eps, &s, h)?,
            Baseline::CrankNicolson => cn_step(field, eps, &s, h)?,
            Baseline::Rk4 => rk4_step(field, eps, &s, h)?,
        };
        if !s.is_finite() {
            return Err(CpdError::Divergence { step: step as usize });
        }
    }
    s.t = n as f64 * h;
    Ok(s)
}

/// Step-size rule and budget for [`reference_solution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePolicy {
    /// Overrides the automatic step when set.
    pub h_ref: Option<f64>,
    /// Maximum number of RK4 steps in the finer of the two runs.
    pub max_steps: u64,
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        Self {
            h_ref: None,
            max_steps: 50_000_000,
        }
    }
}

impl ReferencePolicy {
    /// `min(ε/200, 10⁻⁴, 2πε/(200 b₀))` unless overridden.
    pub fn step(&self, eps: f64, b0: f64) -> f64 {
        self.h_ref.unwrap_or_else(|| {
            let gyro = if b0 > 0.0 {
                2.0 * std::f64::consts::PI * eps / (200.0 * b0)
            } else {
                f64::INFINITY
            };
            (eps / 200.0).min(1e-4).min(gyro)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub state: ParticleState,
    /// Error metric between the runs with `n` and `2n` steps.
    pub estimate: f64,
    pub steps: u64,
}

/// RK4 with `n = ⌈T/h_ref⌉` and `2n` steps; returns the finer endpoint and
/// the difference between the two as an error estimate.
pub fn reference_solution(
    field: &dyn FieldModel,
    eps: f64,
    t_final: f64,
    initial: &ParticleState,
    policy: &ReferencePolicy,
) -> Result<Reference> {
    let h_target = policy.step(eps, field.magnetic(&initial.x).norm());
    let n = (t_final / h_target).ceil().max(1.0) as u64;
    if 2 * n > policy.max_steps {
        return Err(CpdError::BudgetExceeded {
            needed: 2 * n,
            cap: policy.max_steps,
        });
    }
    let coarse = integrate_steps(Baseline::Rk4, field, eps, t_final / n as f64, n, initial)?;
    let fine = integrate_steps(Baseline::Rk4, field, eps, t_final / (2 * n) as f64, 2 * n, initial)?;
    let mut state = fine;
    state.t = t_final;
    Ok(Reference {
        state,
        estimate: error_metric(&coarse, &fine, eps)?.err,
        steps: 2 * n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{GeneralField, UniformField};

    fn start() -> ParticleState {
        ParticleState::new(0.0, Vec3::new(1.0 / 3.0, 0.25, 0.5), Vec3::new(0.4, 2.0 / 3.0, 1.0))
    }

    #[test]
    fn rotate_solve_solves() {
        let r = Vec3::new(0.3, -1.0, 2.0);
        let c = Vec3::new(5.0, 0.1, -3.0);
        let u = rotate_solve(&r, &c);
        assert!((u - u.cross(&c) - r).norm() <= 1e-13);
    }

    #[test]
    fn boris_preserves_speed_in_uniform_field() {
        let field = UniformField {
            b: Vec3::new(0.0, 0.0, 1.0),
            e: Vec3::zeros(),
        };
        let s0 = ParticleState::new(0.0, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0));
        let s = integrate(Baseline::Boris, &field, 0.1, 0.01, 1.0, &s0).unwrap();
        assert!((s.v.norm() - 1.0).abs() <= 1e-13);
        let s1 = boris_step(&field, 0.1, &s0, 0.01).unwrap();
        assert!((s1.v.norm() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn boris_without_magnetic_field_is_verlet() {
        let field = UniformField {
            b: Vec3::zeros(),
            e: Vec3::new(0.0, 0.0, -1.0),
        };
        let s0 = ParticleState::new(0.0, Vec3::zeros(), Vec3::new(0.0, 0.0, 1.0));
        let s = integrate(Baseline::Boris, &field, 1.0, 0.1, 1.0, &s0).unwrap();
        // constant acceleration is integrated exactly
        assert!((s.x[2] - 0.5).abs() <= 1e-14);
        assert!(s.v[2].abs() <= 1e-14);
    }

    #[test]
    fn orders_in_h() {
        let eps = 1.0;
        let field = GeneralField;
        let exact = integrate(Baseline::Rk4, &field, eps, 1.0 / 2048.0, 1.0, &start()).unwrap();
        for (method, order) in [
            (Baseline::Boris, 2.0),
            (Baseline::Rk2, 2.0),
            (Baseline::CrankNicolson, 2.0),
            (Baseline::Rk4, 4.0),
        ] {
            let err = |n: u32| {
                let s = integrate(method, &field, eps, 1.0 / n as f64, 1.0, &start()).unwrap();
                error_metric(&s, &exact, eps).unwrap().err
            };
            let observed = (err(32) / err(64)).log2();
            assert!((observed - order).abs() < 0.3, "{method:?}: {observed}");
        }
    }

    #[test]
    fn reference_budget() {
        let policy = ReferencePolicy {
            h_ref: None,
            max_steps: 1000,
        };
        let r = reference_solution(&GeneralField, 1e-3, 1.0, &start(), &policy);
        assert!(matches!(r, Err(CpdError::BudgetExceeded { .. })));
        let policy = ReferencePolicy::default();
        assert!((policy.step(0.1, 2.0) - 1e-4).abs() < 1e-20);
        assert!((policy.step(1e-2, 2.0) - 5e-5).abs() < 1e-18);
        assert!((policy.step(1e-2, 10.0) - 2.0 * std::f64::consts::PI * 1e-2 / 2000.0).abs() < 1e-18);
    }

    #[test]
    fn reference_estimate_is_small() {
        let r = reference_solution(&GeneralField, 0.1, 1.0, &start(), &ReferencePolicy::default()).unwrap();
        assert!(r.estimate < 1e-12, "{}", r.estimate);
        assert_eq!(r.steps, 20_000);
    }
}
