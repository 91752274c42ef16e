//! The two-scale reformulation and its averaging operators.
//!
//! The filtered pair `U = (q, p)` is lifted to `U(t, τ)` with a `2π`-periodic
//! fast variable. Writing `θ = b t/ε`, the lifted problem is
//!
//! ```text
//!     ∂_t U + (b/ε) ∂_τ U = f_τ(U),
//!     f_τ(U) = [ P∥p/ε + s₁(−τ) G ; s₀(−τ) G ],   G = F(q + s₁(τ) p, s₀(τ) p),
//!     F(x, w) = (B̂(x) − B̂₀) w/ε + ε E(x).
//! ```
//!
//! The `τ`-independent term `P∥p/ε` is the streaming along `B₀`, which the
//! filter does not absorb (see [`crate::rotations`]).
//!
//! The expansion parameter of the Chapman–Enskog correctors is therefore
//! `ε/b` ([`TwoScaleSystem::expansion_parameter`]). Correctors `κ₁, κ₂, κ₃`
//! are built from the mean `Π`, the derivative `L = ∂_τ` and the
//! pseudo-inverse `A = L⁻¹(I − Π)`, all applied spectrally.

use std::f64::consts::PI;

use nalgebra::{Matrix3x6, Matrix6, Vector6};
use num_complex::Complex64;

use crate::fields::{hat, FieldModel};
use crate::rotations::{Linearization, Rotations};
use crate::spectral::{check_n_tau, SpectralTransform};
use crate::{CpdError, Mat3, Result, Vec3};

pub type Vec6 = Vector6<f64>;
pub type Mat6 = Matrix6<f64>;

/// Node values of a `2π`-periodic function `τ ↦ ℝ⁶`, stored at
/// `τ_l = 2πl/N` for `l = −N/2 … N/2−1` (so `τ = 0` sits at index `N/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct TauGridFunction {
    values: Vec<Vec6>,
}

impl TauGridFunction {
    pub fn new(values: Vec<Vec6>) -> Result<Self> {
        check_n_tau(values.len())?;
        Ok(Self { values })
    }

    pub fn constant(n_tau: usize, value: Vec6) -> Result<Self> {
        Self::new(vec![value; n_tau])
    }

    /// Samples `g` at the grid nodes.
    pub fn sample(n_tau: usize, g: impl Fn(f64) -> Vec6) -> Result<Self> {
        check_n_tau(n_tau)?;
        Self::new((0..n_tau).map(|i| g(node(n_tau, i))).collect())
    }

    pub fn n_tau(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec6] {
        &self.values
    }

    pub fn node(&self, i: usize) -> f64 {
        node(self.n_tau(), i)
    }

    /// Value at `τ = 0`.
    pub fn at_zero(&self) -> Vec6 {
        self.values[self.n_tau() / 2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs().max()).fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Vec6, &Vec6) -> Vec6) -> Self {
        assert_eq!(self.n_tau(), other.n_tau(), "grid size mismatch");
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_constant(&self, c: &Vec6) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }
}

/// `τ_i = 2π(i − N/2)/N`.
pub fn node(n_tau: usize, i: usize) -> f64 {
    2.0 * PI * (i as f64 - (n_tau / 2) as f64) / n_tau as f64
}

/// A `τ`-independent state `Ū = (q̄, p̄)`.
pub type MeanState = Vec6;

/// Everything needed to evaluate `f_τ` and its derivatives at one node.
struct NodeDerivatives {
    f: Vec6,
    jac: Mat6,
    rot: Rotations,
    w: Vec3,
    jb: Mat3,
    hb: [Mat3; 3],
    he: [Mat3; 3],
}

/// Field, linearisation and grid for one `(field, x₀, ε, N_τ)`.
pub struct TwoScaleSystem<'f> {
    field: &'f dyn FieldModel,
    lin: Linearization,
    eps: f64,
    transform: SpectralTransform,
    node_rotations: Vec<Rotations>,
}

impl std::fmt::Debug for TwoScaleSystem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoScaleSystem")
            .field("lin", &self.lin)
            .field("eps", &self.eps)
            .field("n_tau", &self.n_tau())
            .finish()
    }
}

impl<'f> TwoScaleSystem<'f> {
    /// Linearises the magnetic field at `x0`.
    pub fn new(field: &'f dyn FieldModel, x0: &Vec3, eps: f64, n_tau: usize) -> Result<Self> {
        Self::with_linearization(field, Linearization::new(field.magnetic(x0))?, eps, n_tau)
    }

    pub fn with_linearization(field: &'f dyn FieldModel, lin: Linearization, eps: f64, n_tau: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CpdError::Config(format!("eps must be positive, got {eps}")));
        }
        let transform = SpectralTransform::new(n_tau)?;
        let node_rotations = (0..n_tau).map(|i| lin.rotations(node(n_tau, i))).collect();
        Ok(Self {
            field,
            lin,
            eps,
            transform,
            node_rotations,
        })
    }

    pub fn field(&self) -> &'f dyn FieldModel {
        self.field
    }

    pub fn lin(&self) -> &Linearization {
        &self.lin
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n_tau(&self) -> usize {
        self.transform.n_tau()
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.transform
    }

    /// `ε/b`, the small parameter in front of `∂_τ`.
    pub fn expansion_parameter(&self) -> f64 {
        self.eps / self.lin.b
    }

    /// `F(x, w) = (B̂(x) − B̂₀) w/ε + ε E(x)`.
    pub fn big_f(&self, x: &Vec3, w: &Vec3) -> Result<Vec3> {
        let db = self.field.magnetic(x) - self.lin.b0_vec;
        Ok(w.cross(&db) / self.eps + self.field.electric(x)? * self.eps)
    }

    fn f_with(&self, u: &Vec6, rot: &Rotations) -> Result<Vec6> {
        let (q, p) = split(u);
        let x = q + rot.s1_plus * p;
        let w = rot.s0_plus * p;
        let g = self.big_f(&x, &w)?;
        Ok(join(&(self.streaming(&p) + rot.s1_minus * g), &(rot.s0_minus * g)))
    }

    fn streaming(&self, p: &Vec3) -> Vec3 {
        self.lin.parallel * p / self.eps
    }

    /// `f_τ(U)` at an arbitrary phase.
    pub fn f_tau(&self, u: &Vec6, tau: f64) -> Result<Vec6> {
        self.f_with(u, &self.lin.rotations(tau))
    }

    /// `f_τ(U)` at grid node `i`, with cached rotations.
    pub fn f_tau_node(&self, u: &Vec6, i: usize) -> Result<Vec6> {
        self.f_with(u, &self.node_rotations[i])
    }

    fn derivatives_with(&self, u: &Vec6, rot: &Rotations) -> Result<NodeDerivatives> {
        let (q, p) = split(u);
        let x = q + rot.s1_plus * p;
        let w = rot.s0_plus * p;
        let bx = self.field.magnetic(&x);
        let jb = self.field.magnetic_jacobian(&x);
        let je = self.field.electric_jacobian(&x)?;
        let g = w.cross(&(bx - self.lin.b0_vec)) / self.eps + self.field.electric(&x)? * self.eps;
        // ∂G/∂x u = (w × (JB u))/ε + ε JE u
        let g_x = -hat(&w) * jb / self.eps + je * self.eps;
        let g_w = (hat(&bx) - self.lin.b0_hat) / self.eps;
        let g_q = g_x;
        let g_p = g_x * rot.s1_plus + g_w * rot.s0_plus;
        let mut dg = Matrix3x6::zeros();
        dg.fixed_view_mut::<3, 3>(0, 0).copy_from(&g_q);
        dg.fixed_view_mut::<3, 3>(0, 3).copy_from(&g_p);
        let mut jac = Mat6::zeros();
        jac.fixed_view_mut::<3, 6>(0, 0).copy_from(&(rot.s1_minus * dg));
        jac.fixed_view_mut::<3, 6>(3, 0).copy_from(&(rot.s0_minus * dg));
        let mut qp = jac.fixed_view_mut::<3, 3>(0, 3);
        qp += self.lin.parallel / self.eps;
        Ok(NodeDerivatives {
            f: join(&(self.streaming(&p) + rot.s1_minus * g), &(rot.s0_minus * g)),
            jac,
            rot: *rot,
            w,
            jb,
            hb: self.field.magnetic_hessian(&x),
            he: self.field.electric_hessian(&x)?,
        })
    }

    /// `∂_U f_τ(U)`.
    pub fn jac_f_tau(&self, u: &Vec6, tau: f64) -> Result<Mat6> {
        Ok(self.derivatives_with(u, &self.lin.rotations(tau))?.jac)
    }

    /// `∂²_U f_τ(U)[a, b]`; symmetric in `a, b`.
    pub fn hess_f_tau(&self, u: &Vec6, tau: f64, a: &Vec6, b: &Vec6) -> Result<Vec6> {
        let d = self.derivatives_with(u, &self.lin.rotations(tau))?;
        Ok(self.hessian_apply(&d, a, b))
    }

    fn hessian_apply(&self, d: &NodeDerivatives, a: &Vec6, b: &Vec6) -> Vec6 {
        let (qa, pa) = split(a);
        let (qb, pb) = split(b);
        let xa = qa + d.rot.s1_plus * pa;
        let xb = qb + d.rot.s1_plus * pb;
        let wa = d.rot.s0_plus * pa;
        let wb = d.rot.s0_plus * pb;
        let bilinear = |h: &[Mat3; 3]| Vec3::from_fn(|i, _| xa.dot(&(h[i] * xb)));
        let d2b = bilinear(&d.hb);
        let d2e = bilinear(&d.he);
        let g2 =
            d.w.cross(&d2b) / self.eps + d2e * self.eps + (wb.cross(&(d.jb * xa)) + wa.cross(&(d.jb * xb))) / self.eps;
        join(&(d.rot.s1_minus * g2), &(d.rot.s0_minus * g2))
    }

    fn node_derivatives(&self, u_bar: &MeanState) -> Result<Vec<NodeDerivatives>> {
        self.node_rotations
            .iter()
            .map(|rot| self.derivatives_with(u_bar, rot))
            .collect()
    }

    /// Mean over `τ`.
    pub fn op_pi(&self, g: &TauGridFunction) -> MeanState {
        g.values().iter().sum::<Vec6>() / g.n_tau() as f64
    }

    /// `∂_τ g`, spectrally. The unpaired mode `−N/2` is dropped so the result
    /// stays real.
    pub fn op_l(&self, g: &TauGridFunction) -> TauGridFunction {
        self.mode_multiplier(g, |k| Complex64::new(0.0, k as f64))
    }

    /// `A g = L⁻¹(I − Π) g`: mode `k ≠ 0` divided by `ik`, mean removed.
    pub fn op_a(&self, g: &TauGridFunction) -> TauGridFunction {
        self.mode_multiplier(g, |k| Complex64::new(0.0, -1.0 / k as f64))
    }

    fn mode_multiplier(&self, g: &TauGridFunction, m: impl Fn(i64) -> Complex64) -> TauGridFunction {
        let n = self.n_tau();
        let half = (n / 2) as i64;
        let mut coefs = self.transform.from_grid(g);
        for j in 0..6 {
            for k in -half..half {
                let factor = if k == 0 || k == -half {
                    Complex64::new(0.0, 0.0)
                } else {
                    m(k)
                };
                let v = coefs.get(j, k) * factor;
                coefs.set(j, k, v);
            }
        }
        let mut out = vec![Vec6::zeros(); n];
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..6 {
            self.transform.synthesize(coefs.component(j), &mut column);
            for (o, z) in out.iter_mut().zip(&column) {
                o[j] = z.re;
            }
        }
        TauGridFunction { values: out }
    }

    /// `κ₁, …, κ_m` at `Ū` for `m ≤ 3`.
    pub fn kappas(&self, u_bar: &MeanState, m: usize) -> Result<Vec<TauGridFunction>> {
        if m > 3 {
            return Err(CpdError::Config(format!(
                "correctors available up to order 3, asked for {m}"
            )));
        }
        let mut out = Vec::with_capacity(m);
        if m == 0 {
            return Ok(out);
        }
        let d = self.node_derivatives(u_bar)?;
        let n = self.n_tau();
        let grid = |f: &dyn Fn(usize, &NodeDerivatives) -> Vec6| TauGridFunction {
            values: d.iter().enumerate().map(|(i, di)| f(i, di)).collect(),
        };
        let j_of = |g: &TauGridFunction| grid(&|i, di| di.jac * g.values[i]);
        let j_const = |c: &Vec6| grid(&|_, di| di.jac * c);
        let a = |g: &TauGridFunction| self.op_a(g);

        let f = grid(&|_, di| di.f);
        let pf = self.op_pi(&f);
        let af = a(&f);
        out.push(af.clone());
        if m == 1 {
            return Ok(out);
        }
        let j_af = j_of(&af);
        let j_pf = j_const(&pf);
        let a_j_af = a(&j_af);
        let a2_j_pf = a(&a(&j_pf));
        out.push(a_j_af.sub(&a2_j_pf));
        if m == 2 {
            return Ok(out);
        }
        let h_af_af = grid(&|i, di| self.hessian_apply(di, &af.values[i], &af.values[i]));
        let h_pf_af = grid(&|i, di| self.hessian_apply(di, &pf, &af.values[i]));
        let h_pf_pf = grid(&|_, di| self.hessian_apply(di, &pf, &pf));
        let a_j_pf = a(&j_pf);
        let pi_j_pf = self.op_pi(&j_pf);
        let pi_j_af = self.op_pi(&j_af);
        let k3 = a(&j_of(&a_j_af))
            .sub(&a(&j_of(&a2_j_pf)))
            .add(&a(&h_af_af).scale(0.5))
            .sub(&a(&a(&h_pf_af)))
            .sub(&a(&a(&j_of(&a_j_pf))))
            .add(&a(&a(&a(&h_pf_pf))))
            .add(&a(&a(&a(&j_const(&pi_j_pf)))))
            .sub(&a(&a(&j_const(&pi_j_af))));
        debug_assert_eq!(k3.n_tau(), n);
        out.push(k3);
        Ok(out)
    }

    /// `κ_l(·, Ū)` for `l ∈ {1, 2, 3}`.
    pub fn kappa(&self, l: usize, u_bar: &MeanState) -> Result<TauGridFunction> {
        if l == 0 {
            return Err(CpdError::Config("corrector index starts at 1".into()));
        }
        Ok(self.kappas(u_bar, l)?.pop().expect("non-empty"))
    }

    /// Well-prepared initial data of order `r ∈ 1..=4` for `x(0) = x0`,
    /// `v(0) = v0`. The mean is fixed by iterating
    /// `Ū[j] = U₀ − Σ_{l=1}^{j} (ε/b)^l κ_l(0, Ū[j−l])`, and the profile is
    /// `Ū[r−1] + Σ_{l=1}^{r−1} (ε/b)^l κ_l(·, Ū[r−1−l])`, so `U(0, 0)`
    /// reproduces `(x0, εv0)`.
    pub fn initial_data(&self, order: usize, x0: &Vec3, v0: &Vec3) -> Result<TauGridFunction> {
        if !(1..=4).contains(&order) {
            return Err(CpdError::Config(format!("order must be in 1..=4, got {order}")));
        }
        let e = self.expansion_parameter();
        let u00 = join(x0, &(v0 * self.eps));
        let top = order - 1;
        // cache[m] holds κ_1..κ_{top−m} at Ū[m]
        let mut bars: Vec<MeanState> = vec![u00];
        let mut cache: Vec<Vec<TauGridFunction>> = Vec::new();
        for j in 1..=top {
            let m = j - 1;
            cache.push(self.kappas(&bars[m], top - m)?);
            let mut next = u00;
            for l in 1..=j {
                next -= cache[j - l][l - 1].at_zero() * e.powi(l as i32);
            }
            bars.push(next);
        }
        let mut u0 = TauGridFunction::constant(self.n_tau(), bars[top])?;
        for l in 1..=top {
            u0 = u0.add(&cache[top - l][l - 1].scale(e.powi(l as i32)));
        }
        Ok(u0)
    }
}

pub(crate) fn split(u: &Vec6) -> (Vec3, Vec3) {
    (u.fixed_rows::<3>(0).into_owned(), u.fixed_rows::<3>(3).into_owned())
}

pub(crate) fn join(q: &Vec3, p: &Vec3) -> Vec6 {
    Vec6::new(q[0], q[1], q[2], p[0], p[1], p[2])
}
