//! End-to-end uniformly accurate solver.
//!
//! 1. linearise at `x₀` and build well-prepared initial data of order `r`;
//! 2. project onto `N_τ` Fourier modes;
//! 3. integrate `u' = Mu + F(u)` with the order-`r` exponential method;
//! 4. evaluate along the diagonal `τ = b tₙ/ε` and undo the filter.

use crate::expint::{tableau, PhiCache};
use crate::fields::{FieldId, FieldModel};
use crate::rotations::FastPhase;
use crate::spectral::{assemble_f, build_m, project_initial, CoefVector};
use crate::transform::{from_scaled, unfilter_at_phase, ParticleState};
use crate::twoscale::{split, TwoScaleSystem};
use crate::{CpdError, Result, Vec3};

/// Relative tolerance on `T/h` being an integer.
const STEP_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub field: FieldId,
    pub eps: f64,
    pub order: usize,
    pub h: f64,
    pub n_tau: usize,
    pub t_final: f64,
    pub x0: Vec3,
    pub v0: Vec3,
    /// Keep every `stride`-th step (the final state is always kept).
    pub stride: usize,
    /// Also record the internal stage states.
    pub dense_stages: bool,
}

impl SolveConfig {
    /// The standard test problem: `x₀ = (1/3, 1/4, 1/2)`, `v₀ = (2/5, 2/3, 1)`,
    /// `T = 1`, `N_τ = 64`.
    pub fn standard(field: FieldId, eps: f64, order: usize, h: f64) -> Self {
        Self {
            field,
            eps,
            order,
            h,
            n_tau: 64,
            t_final: 1.0,
            x0: standard_x0(),
            v0: standard_v0(),
            stride: usize::MAX,
            dense_stages: false,
        }
    }

    /// Number of steps; `T/h` must be an integer.
    pub fn n_steps(&self) -> Result<u64> {
        step_count(self.t_final, self.h)
    }
}

pub fn standard_x0() -> Vec3 {
    Vec3::new(1.0 / 3.0, 0.25, 0.5)
}

pub fn standard_v0() -> Vec3 {
    Vec3::new(0.4, 2.0 / 3.0, 1.0)
}

pub(crate) fn step_count(t_final: f64, h: f64) -> Result<u64> {
    if !(h > 0.0 && t_final >= 0.0 && h.is_finite() && t_final.is_finite()) {
        return Err(CpdError::Config(format!(
            "need h > 0 and T >= 0, got h={h}, T={t_final}"
        )));
    }
    let n = (t_final / h).round();
    if (n * h - t_final).abs() > STEP_COUNT_TOL * t_final.max(h) {
        return Err(CpdError::Config(format!("T/h = {} is not an integer", t_final / h)));
    }
    Ok(n as u64)
}

/// Samples of the physical trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub states: Vec<ParticleState>,
    /// `(stage index, state)` pairs, filled only with `dense_stages`.
    pub stages: Vec<(usize, ParticleState)>,
    pub steps: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> &ParticleState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Solves with one of the built-in fields.
pub fn solve_cpd(cfg: &SolveConfig) -> Result<Trajectory> {
    let field = cfg.field.build(cfg.eps)?;
    solve_with_field(cfg, field.as_ref())
}

/// Solves with any field; `cfg.field` is ignored.
pub fn solve_with_field(cfg: &SolveConfig, field: &dyn FieldModel) -> Result<Trajectory> {
    let n_steps = cfg.n_steps()?;
    if cfg.stride == 0 {
        return Err(CpdError::Config("stride must be positive".into()));
    }
    let tab = tableau(cfg.order)?;
    let system = TwoScaleSystem::new(field, &cfg.x0, cfg.eps, cfg.n_tau)?;
    let lin = system.lin().clone();
    let eps = cfg.eps;
    let u0 = system.initial_data(cfg.order, &cfg.x0, &cfg.v0)?;
    let generator = build_m(cfg.n_tau, lin.b, eps)?;
    let cache = PhiCache::new(&tab, cfg.h, &generator);
    let phase = FastPhase::from_linearization(&lin, eps);
    let n_tau = cfg.n_tau;

    let physical = |c: &CoefVector, t: f64, theta: f64| -> ParticleState {
        let (q, p) = split(&c.evaluate(theta));
        let (x, w) = unfilter_at_phase(theta, &q, &p, &lin);
        from_scaled(t, x, w, eps)
    };

    let mut c = project_initial(&system, &u0);
    let mut traj = Trajectory {
        steps: n_steps,
        ..Default::default()
    };
    traj.states.push(ParticleState::new(0.0, cfg.x0, cfg.v0));
    for n in 0..n_steps {
        let t_n = n as f64 * cfg.h;
        let mut stage_log = Vec::new();
        let next = cache.step(
            cfg.h,
            c.as_slice(),
            n as usize,
            |u| {
                let coefs = CoefVector::from_vec(n_tau, u.to_vec())?;
                Ok(assemble_f(&system, &coefs)?.into_vec())
            },
            |i, stage| {
                if cfg.dense_stages {
                    stage_log.push((i, stage.to_vec()));
                }
            },
        )?;
        for (i, stage) in stage_log {
            let t = t_n + tab.c[i] * cfg.h;
            let coefs = CoefVector::from_vec(n_tau, stage)?;
            traj.stages.push((i, physical(&coefs, t, phase.at(t))));
        }
        c = CoefVector::from_vec(n_tau, next)?;
        let k = n + 1;
        if k % cfg.stride as u64 == 0 || k == n_steps {
            let state = physical(&c, k as f64 * cfg.h, phase.at_step(k, cfg.h));
            if !state.is_finite() {
                return Err(CpdError::Divergence { step: n as usize });
            }
            traj.states.push(state);
        }
    }
    if let Some(last) = traj.states.last_mut() {
        // sampled time as the exact multiple
        last.t = n_steps as f64 * cfg.h;
    }
    Ok(traj)
}

/// `err = ‖xⁿ − x‖/‖x‖ + ε‖vⁿ − v‖/‖v‖`, with both parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetric {
    pub err: f64,
    pub err_x: f64,
    pub err_v_scaled: f64,
}

pub fn error_metric(numerical: &ParticleState, reference: &ParticleState, eps: f64) -> Result<ErrorMetric> {
    let nx = reference.x.norm();
    let nv = reference.v.norm();
    if nx == 0.0 || nv == 0.0 {
        return Err(CpdError::UndefinedMetric);
    }
    let err_x = (numerical.x - reference.x).norm() / nx;
    let err_v_scaled = eps * (numerical.v - reference.v).norm() / nv;
    Ok(ErrorMetric {
        err: err_x + err_v_scaled,
        err_x,
        err_v_scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::UniformField;

    #[test]
    fn step_count_validation() {
        assert_eq!(step_count(1.0, 0.1).unwrap(), 10);
        assert_eq!(step_count(1.0, 1.0 / 160.0).unwrap(), 160);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(1.0, 0.0).is_err());
    }

    #[test]
    fn metric() {
        let r = ParticleState::new(1.0, Vec3::new(3.0, 4.0, 0.0), Vec3::new(0.0, 2.0, 0.0));
        assert_eq!(error_metric(&r, &r, 0.1).unwrap().err, 0.0);
        let n = ParticleState::new(1.0, Vec3::new(3.0, 4.0, 0.5), Vec3::new(0.0, 2.0, 1.0));
        let m = error_metric(&n, &r, 0.1).unwrap();
        assert!((m.err_x - 0.1).abs() < 1e-15);
        assert!((m.err_v_scaled - 0.05).abs() < 1e-15);
        let z = ParticleState::new(1.0, Vec3::zeros(), Vec3::new(0.0, 2.0, 0.0));
        assert!(matches!(error_metric(&n, &z, 0.1), Err(CpdError::UndefinedMetric)));
    }

    #[test]
    fn uniform_field_returns_free_gyration() {
        let b = Vec3::new(0.0, 0.0, 1.0);
        let field = UniformField { b, e: Vec3::zeros() };
        let eps = 0.01;
        let mut cfg = SolveConfig::standard(FieldId::Custom, eps, 2, 0.1);
        cfg.n_tau = 8;
        cfg.stride = 1;
        let traj = solve_with_field(&cfg, &field).unwrap();
        assert_eq!(traj.states.len(), 11);
        let s = traj.final_state();
        assert!((s.v.norm() - cfg.v0.norm()).abs() <= 1e-12);
        assert!((s.x[2] - (cfg.x0[2] + cfg.v0[2])).abs() <= 1e-12);
    }

    #[test]
    fn dense_stages_are_opt_in() {
        let field = UniformField {
            b: Vec3::new(0.0, 0.0, 1.0),
            e: Vec3::zeros(),
        };
        let mut cfg = SolveConfig::standard(FieldId::Custom, 0.1, 3, 0.25);
        cfg.n_tau = 8;
        assert!(solve_with_field(&cfg, &field).unwrap().stages.is_empty());
        cfg.dense_stages = true;
        let traj = solve_with_field(&cfg, &field).unwrap();
        assert_eq!(traj.stages.len(), 4 * 2);
        assert!(traj
            .stages
            .iter()
            .all(|(_, s)| (s.v.norm() - cfg.v0.norm()).abs() < 1e-12));
    }
}
