//! Convergence and efficiency experiments.
//!
//! An [`ExperimentConfig`] (flat TOML) names a field, a list of methods and
//! the `ε` and `h` values to sweep. Every `(method, ε, h)` combination yields
//! one [`ResultRow`]; failures are recorded in the row rather than aborting
//! the sweep. Rows are written as CSV with the header [`CSV_HEADER`].

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::Deserialize;

use crate::baselines::{integrate, reference_solution, Baseline, Reference, ReferencePolicy};
use crate::expint::{psi_check, tableau};
use crate::fields::{FieldId, FieldModel, GeneralField};
use crate::rotations::{Linearization, Sign};
use crate::solver::{error_metric, solve_with_field, standard_v0, standard_x0, step_count, SolveConfig};
use crate::transform::ParticleState;
use crate::twoscale::{TauGridFunction, TwoScaleSystem, Vec6};
use crate::{CpdError, Mat3, Result, Vec3};

pub const CSV_HEADER: [&str; 11] = [
    "method",
    "eps",
    "h",
    "n_tau",
    "err",
    "err_x",
    "err_v_scaled",
    "cpu_seconds",
    "steps",
    "oracle_estimate",
    "error",
];

/// Points whose error is below this multiple of the reference error estimate
/// are left out of slope fits.
pub const FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "String")]
pub enum Method {
    /// Uniformly accurate exponential method of order 1 to 4.
    Mo(usize),
    Baseline(Baseline),
}

impl Method {
    pub fn id(&self) -> String {
        match self {
            Method::Mo(r) => format!("mo{r}"),
            Method::Baseline(b) => b.as_str().to_string(),
        }
    }

    /// Nominal order in `h`.
    pub fn order(&self) -> usize {
        match self {
            Method::Mo(r) => *r,
            Method::Baseline(Baseline::Rk4) => 4,
            Method::Baseline(_) => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for Method {
    type Err = CpdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mo1" => Ok(Method::Mo(1)),
            "mo2" => Ok(Method::Mo(2)),
            "mo3" => Ok(Method::Mo(3)),
            "mo4" => Ok(Method::Mo(4)),
            "boris" => Ok(Method::Baseline(Baseline::Boris)),
            "rk2" => Ok(Method::Baseline(Baseline::Rk2)),
            "cn" => Ok(Method::Baseline(Baseline::CrankNicolson)),
            "rk4" | "rk4ref" => Ok(Method::Baseline(Baseline::Rk4)),
            other => Err(CpdError::Config(format!("unknown method {other:?}"))),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = CpdError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OrderVsEps,
    OrderVsH,
    Efficiency,
}

fn default_n_tau() -> usize {
    64
}
fn default_t_final() -> f64 {
    1.0
}
fn default_x0() -> [f64; 3] {
    standard_x0().into()
}
fn default_v0() -> [f64; 3] {
    standard_v0().into()
}
fn default_repeats() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub field: FieldId,
    pub methods: Vec<Method>,
    pub eps: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(default = "default_n_tau")]
    pub n_tau: usize,
    #[serde(default = "default_t_final", alias = "T")]
    pub t_final: f64,
    #[serde(default = "default_x0")]
    pub x0: [f64; 3],
    #[serde(default = "default_v0")]
    pub v0: [f64; 3],
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CpdError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.eps.is_empty() || self.h.is_empty() {
            return Err(CpdError::Config("methods, eps and h must be non-empty".into()));
        }
        if self.field == FieldId::Custom {
            return Err(CpdError::Config("experiments need a built-in field".into()));
        }
        if self.repeats == 0 {
            return Err(CpdError::Config("repeats must be at least 1".into()));
        }
        if let Some(e) = self.eps.iter().find(|e| e.is_nan() || **e <= 0.0) {
            return Err(CpdError::Config(format!("eps must be positive, got {e}")));
        }
        crate::spectral::check_n_tau(self.n_tau)?;
        for &h in &self.h {
            step_count(self.t_final, h)?;
        }
        Ok(())
    }

    /// Single-parameter sweep with the standard initial data.
    pub fn sweep(kind: ExperimentKind, field: FieldId, methods: Vec<Method>, eps: Vec<f64>, h: Vec<f64>) -> Self {
        Self {
            kind,
            field,
            methods,
            eps,
            h,
            n_tau: default_n_tau(),
            t_final: default_t_final(),
            x0: default_x0(),
            v0: default_v0(),
            output: None,
            repeats: 1,
        }
    }
}

/// `h ∈ {1/10, 1/20, 1/40, 1/80, 1/160}`.
pub fn standard_h_values() -> Vec<f64> {
    [10.0, 20.0, 40.0, 80.0, 160.0].iter().map(|n| 1.0 / n).collect()
}

/// `ε ∈ {10⁻¹, 10^{−1.5}, 10⁻², 10^{−2.5}, 10⁻³}`.
pub fn standard_eps_values() -> Vec<f64> {
    [1.0, 1.5, 2.0, 2.5, 3.0].iter().map(|e: &f64| 10f64.powf(-e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub eps: f64,
    pub h: f64,
    pub n_tau: usize,
    pub err: f64,
    pub err_x: f64,
    pub err_v_scaled: f64,
    pub cpu_seconds: f64,
    pub steps: u64,
    pub oracle_estimate: f64,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(method: &Method, eps: f64, h: f64, n_tau: usize, oracle_estimate: f64, e: &CpdError) -> Self {
        Self {
            method: method.id(),
            eps,
            h,
            n_tau,
            err: f64::NAN,
            err_x: f64::NAN,
            err_v_scaled: f64::NAN,
            cpu_seconds: f64::NAN,
            steps: 0,
            oracle_estimate,
            error: Some(e.to_string()),
        }
    }

    /// Usable for a fit: no failure and clearly above the reference error.
    pub fn above_floor(&self) -> bool {
        self.error.is_none() && self.err.is_finite() && self.err >= FLOOR_FACTOR * self.oracle_estimate
    }
}

/// Reference solutions shared between experiments.
#[derive(Debug, Default)]
pub struct ReferenceCache {
    policy: ReferencePolicy,
    entries: Vec<(ReferenceKey, std::result::Result<Reference, String>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ReferenceKey {
    field: FieldId,
    eps: f64,
    t_final: f64,
    x0: [f64; 3],
    v0: [f64; 3],
}

impl ReferenceCache {
    pub fn new(policy: ReferencePolicy) -> Self {
        Self {
            policy,
            entries: Vec::new(),
        }
    }

    pub fn get(
        &mut self,
        field: FieldId,
        eps: f64,
        t_final: f64,
        x0: [f64; 3],
        v0: [f64; 3],
    ) -> std::result::Result<Reference, String> {
        let key = ReferenceKey {
            field,
            eps,
            t_final,
            x0,
            v0,
        };
        if let Some((_, r)) = self.entries.iter().find(|(k, _)| *k == key) {
            return r.clone();
        }
        let initial = ParticleState::new(0.0, Vec3::from(x0), Vec3::from(v0));
        let r = field
            .build(eps)
            .and_then(|f| reference_solution(f.as_ref(), eps, t_final, &initial, &self.policy))
            .map_err(|e| e.to_string());
        self.entries.push((key, r.clone()));
        r
    }
}

/// Runs `method` once and returns its final state and step count.
#[allow(clippy::too_many_arguments)]
pub fn run_method(
    method: Method,
    field: FieldId,
    eps: f64,
    h: f64,
    n_tau: usize,
    t_final: f64,
    x0: Vec3,
    v0: Vec3,
) -> Result<(ParticleState, u64)> {
    let model = field.build(eps)?;
    match method {
        Method::Mo(order) => {
            let cfg = SolveConfig {
                field,
                eps,
                order,
                h,
                n_tau,
                t_final,
                x0,
                v0,
                stride: usize::MAX,
                dense_stages: false,
            };
            let traj = solve_with_field(&cfg, model.as_ref())?;
            Ok((*traj.final_state(), traj.steps))
        }
        Method::Baseline(b) => {
            let s = integrate(b, model.as_ref(), eps, h, t_final, &ParticleState::new(0.0, x0, v0))?;
            Ok((s, step_count(t_final, h)?))
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with(cfg, &mut ReferenceCache::default())
}

/// Rows in `methods × eps × h` order; the CPU time is the minimum over
/// `repeats` identical runs.
pub fn run_experiment_with(cfg: &ExperimentConfig, refs: &mut ReferenceCache) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let (x0, v0) = (Vec3::from(cfg.x0), Vec3::from(cfg.v0));
    let mut rows = Vec::new();
    for method in &cfg.methods {
        for &eps in &cfg.eps {
            let reference = refs.get(cfg.field, eps, cfg.t_final, cfg.x0, cfg.v0);
            for &h in &cfg.h {
                let reference = match &reference {
                    Ok(r) => r,
                    Err(msg) => {
                        let e = CpdError::Config(format!("reference failed: {msg}"));
                        rows.push(ResultRow::failed(method, eps, h, cfg.n_tau, f64::NAN, &e));
                        continue;
                    }
                };
                let mut best = f64::INFINITY;
                let mut outcome = None;
                for _ in 0..cfg.repeats {
                    let start = Instant::now();
                    let r = run_method(*method, cfg.field, eps, h, cfg.n_tau, cfg.t_final, x0, v0);
                    best = best.min(start.elapsed().as_secs_f64());
                    let failed = r.is_err();
                    outcome = Some(r);
                    if failed {
                        break;
                    }
                }
                let row = match outcome
                    .expect("repeats >= 1")
                    .and_then(|(s, steps)| Ok((error_metric(&s, &reference.state, eps)?, steps)))
                {
                    Ok((m, steps)) => ResultRow {
                        method: method.id(),
                        eps,
                        h,
                        n_tau: cfg.n_tau,
                        err: m.err,
                        err_x: m.err_x,
                        err_v_scaled: m.err_v_scaled,
                        cpu_seconds: best,
                        steps,
                        oracle_estimate: reference.estimate,
                        error: None,
                    },
                    Err(e) => ResultRow::failed(method, eps, h, cfg.n_tau, reference.estimate, &e),
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CpdError::Io(std::io::Error::other(e));
    out.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        out.write_record([
            r.method.clone(),
            fmt_f64(r.eps),
            fmt_f64(r.h),
            r.n_tau.to_string(),
            fmt_f64(r.err),
            fmt_f64(r.err_x),
            fmt_f64(r.err_v_scaled),
            fmt_f64(r.cpu_seconds),
            r.steps.to_string(),
            fmt_f64(r.oracle_estimate),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

/// Least-squares line through `(log₁₀ x, log₁₀ err)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Non-positive or non-finite errors are skipped (and counted in
/// `excluded`); at least three usable points are required.
pub fn fit_slope(xs: &[f64], errs: &[f64]) -> Result<SlopeFit> {
    assert_eq!(xs.len(), errs.len(), "fit_slope: length mismatch");
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(errs)
        .filter(|(x, e)| **x > 0.0 && **e > 0.0 && e.is_finite() && x.is_finite())
        .map(|(x, e)| (x.log10(), e.log10()))
        .collect();
    let excluded = xs.len() - pts.len();
    if pts.len() < 3 {
        return Err(CpdError::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(CpdError::TooFewPoints(1));
    }
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        used: pts.len(),
        excluded,
    })
}

/// Which column a convergence fit runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Eps,
    H,
}

/// Fit over the rows that are above the reference floor; rows below it are
/// counted as excluded.
pub fn fit_rows(rows: &[&ResultRow], var: SweepVariable) -> Result<SlopeFit> {
    let usable: Vec<&&ResultRow> = rows.iter().filter(|r| r.above_floor()).collect();
    let xs: Vec<f64> = usable
        .iter()
        .map(|r| match var {
            SweepVariable::Eps => r.eps,
            SweepVariable::H => r.h,
        })
        .collect();
    let errs: Vec<f64> = usable.iter().map(|r| r.err).collect();
    let mut fit = fit_slope(&xs, &errs)?;
    fit.excluded += rows.len() - usable.len();
    Ok(fit)
}

/// One line of [`identity_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Stiff order conditions of the built-in tableaus and the algebraic
/// identities of the two-scale construction on the standard problem.
pub fn identity_suite() -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    let ys: Vec<f64> = (0..200).map(|i| -50.0 + 100.0 * i as f64 / 199.0).collect();
    for order in 1..=4 {
        let tab = tableau(order)?;
        out.push(IdentityCheck::new(
            format!("psi conditions {}", tab.name),
            psi_check(&tab, &ys).worst(),
            1e-12,
        ));
    }

    let field = GeneralField;
    let x0 = standard_x0();
    let v0 = standard_v0();
    let lin = Linearization::new(field.magnetic(&x0))?;
    let (mut orth, mut det, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let theta = -1e6 + 2e6 * i as f64 / 999.0 + 0.1 * i as f64;
        let s0 = lin.s0(theta, Sign::Plus);
        orth = orth.max((s0 * s0.transpose() - Mat3::identity()).abs().max());
        det = det.max((s0.determinant() - 1.0).abs());
        let s1 = lin.s1(theta, Sign::Plus);
        inv = inv.max((lin.b0_hat * s1 - (s0 - Mat3::identity())).abs().max());
    }
    out.push(IdentityCheck::new("rotation orthogonality", orth, 1e-13));
    out.push(IdentityCheck::new("rotation determinant", det, 1e-12));
    out.push(IdentityCheck::new("generator times s1 = s0 - I", inv, 1e-13));

    let eps = 1e-2;
    let system = TwoScaleSystem::new(&field, &x0, eps, 64)?;
    let g = TauGridFunction::sample(64, |t| {
        Vec6::from_fn(|j, _| {
            let j = j as f64;
            0.2 * j + (t * (j + 1.0)).sin() - 0.4 * (5.0 * t - j).cos() + 0.1 * (17.0 * t).sin()
        })
    })?;
    let mean = system.op_pi(&g);
    let centred = g.add_constant(&(-mean));
    out.push(IdentityCheck::new(
        "L A = I - Pi",
        system.op_l(&system.op_a(&g)).sub(&centred).max_abs(),
        1e-12,
    ));
    out.push(IdentityCheck::new(
        "A L = I - Pi",
        system.op_a(&system.op_l(&g)).sub(&centred).max_abs(),
        1e-12,
    ));
    out.push(IdentityCheck::new(
        "Pi A = 0",
        system.op_pi(&system.op_a(&g)).abs().max(),
        1e-12,
    ));

    let u_bar = Vec6::new(x0[0], x0[1], x0[2], eps * v0[0], eps * v0[1], eps * v0[2]);
    let pk = system
        .kappas(&u_bar, 3)?
        .iter()
        .map(|k| system.op_pi(k).abs().max())
        .fold(0.0, f64::max);
    out.push(IdentityCheck::new("Pi kappa_l = 0", pk, 1e-12));
    let mut node = 0.0f64;
    for order in 1..=4 {
        node = node.max((system.initial_data(order, &x0, &v0)?.at_zero() - u_bar).abs().max());
    }
    out.push(IdentityCheck::new("initial data at tau = 0", node, 1e-14));
    Ok(out)
}
