//! Explicit exponential Runge–Kutta methods for `u' = M u + F(u)` with a
//! diagonal `M`.
//!
//! Stage and weight coefficients are linear combinations of the functions
//! `φ_ρ(c z)`, where
//!
//! ```text
//!     φ₀(z) = e^z,   φ_ρ(z) = (φ_{ρ−1}(z) − 1/(ρ−1)!)/z,   φ_ρ(0) = 1/ρ!.
//! ```
//!
//! [`PhiCache`] evaluates every coefficient once for a given `(h, M)`; a step
//! is then only diagonal products and evaluations of `F`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{CpdError, Result};

/// Highest `ρ` supported by [`phi`].
pub const MAX_PHI: usize = 4;

// recurrence loses ~|z|^{-ρ} ulps, so φ₄ needs a wide Taylor disc
const TAYLOR_RADIUS: f64 = 1.0;
const TAYLOR_TERMS: usize = 24;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `φ₀(z) … φ₄(z)` given `e^z` (passed in so callers can supply a phase
/// computed with extra care).
pub fn phi_all_with_exp(z: Complex64, ez: Complex64) -> [Complex64; MAX_PHI + 1] {
    let mut out = [Complex64::new(0.0, 0.0); MAX_PHI + 1];
    out[0] = ez;
    if z.norm() <= TAYLOR_RADIUS {
        for (rho, o) in out.iter_mut().enumerate().skip(1) {
            // Σ_m z^m/(m+ρ)!, Horner from the top
            let mut acc = Complex64::new(0.0, 0.0);
            for m in (0..TAYLOR_TERMS).rev() {
                acc = acc * z + 1.0 / factorial(m + rho);
            }
            *o = acc;
        }
    } else {
        for rho in 1..=MAX_PHI {
            out[rho] = (out[rho - 1] - 1.0 / factorial(rho - 1)) / z;
        }
    }
    out
}

/// `φ_ρ(z)` for `ρ ≤ 4`.
///
/// ```
/// use cpd_core::expint::phi;
/// use num_complex::Complex64;
/// let z = Complex64::new(0.0, 0.0);
/// assert_eq!(phi(2, z), Complex64::new(0.5, 0.0));
/// ```
pub fn phi(rho: usize, z: Complex64) -> Complex64 {
    assert!(rho <= MAX_PHI, "phi_{rho} not supported");
    phi_all_with_exp(z, z.exp())[rho]
}

/// One term `weight · φ_ρ(node · z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiTerm {
    pub weight: f64,
    pub rho: usize,
    pub node: f64,
}

/// A finite linear combination of scaled `φ` functions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefFn(pub Vec<PhiTerm>);

impl CoefFn {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    /// `φ_ρ(node · z)`.
    pub fn phi(rho: usize, node: f64) -> Self {
        assert!(rho <= MAX_PHI);
        Self(vec![PhiTerm { weight: 1.0, rho, node }])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|t| t.weight == 0.0)
    }

    /// Merges equal `(ρ, node)` terms and drops zeros.
    fn normalized(mut self) -> Self {
        let mut out: Vec<PhiTerm> = Vec::new();
        for t in self.0.drain(..) {
            match out.iter_mut().find(|o| o.rho == t.rho && o.node == t.node) {
                Some(o) => o.weight += t.weight,
                None => out.push(t),
            }
        }
        out.retain(|t| t.weight != 0.0);
        Self(out)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_with(z, |s| (z * s).exp())
    }

    /// Evaluates with a caller-supplied `s ↦ e^{s z}`.
    pub fn eval_with(&self, z: Complex64, exp_scaled: impl Fn(f64) -> Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut memo: Vec<(f64, [Complex64; MAX_PHI + 1])> = Vec::new();
        for t in &self.0 {
            let phis = match memo.iter().find(|(n, _)| *n == t.node) {
                Some((_, p)) => *p,
                None => {
                    let p = phi_all_with_exp(z * t.node, exp_scaled(t.node));
                    memo.push((t.node, p));
                    p
                }
            };
            acc += phis[t.rho] * t.weight;
        }
        acc
    }
}

impl Add for CoefFn {
    type Output = CoefFn;
    fn add(mut self, rhs: CoefFn) -> CoefFn {
        self.0.extend(rhs.0);
        self.normalized()
    }
}

impl Sub for CoefFn {
    type Output = CoefFn;
    fn sub(self, rhs: CoefFn) -> CoefFn {
        self + (-rhs)
    }
}

impl Neg for CoefFn {
    type Output = CoefFn;
    fn neg(self) -> CoefFn {
        self * -1.0
    }
}

impl Mul<f64> for CoefFn {
    type Output = CoefFn;
    fn mul(mut self, s: f64) -> CoefFn {
        for t in &mut self.0 {
            t.weight *= s;
        }
        self.normalized()
    }
}

/// Butcher-like tableau of an explicit exponential Runge–Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTableau {
    pub name: &'static str,
    pub order: usize,
    pub c: Vec<f64>,
    /// `a[i][j]` for `j < i`; `a[0]` is empty.
    pub a: Vec<Vec<CoefFn>>,
    pub b: Vec<CoefFn>,
}

impl ExpTableau {
    /// Validates shape and the consistency conditions `ψ_ρ(0) = 0` for
    /// `ρ = 1..=order`.
    pub fn new(name: &'static str, order: usize, c: Vec<f64>, a: Vec<Vec<CoefFn>>, b: Vec<CoefFn>) -> Result<Self> {
        let s = c.len();
        if s == 0 || a.len() != s || b.len() != s || a.iter().enumerate().any(|(i, row)| row.len() != i) {
            return Err(CpdError::Config(format!(
                "{name}: tableau is not explicit with {s} stages"
            )));
        }
        if c[0] != 0.0 {
            return Err(CpdError::Config(format!("{name}: first node must be zero")));
        }
        if order == 0 || order > MAX_PHI {
            return Err(CpdError::Config(format!("{name}: order {order} not supported")));
        }
        let tab = Self { name, order, c, a, b };
        let zero = Complex64::new(0.0, 0.0);
        for rho in 1..=order {
            let r = tab.psi(rho, zero).norm();
            if r > 1e-13 {
                return Err(CpdError::Config(format!("{name}: psi_{rho}(0) = {r:e}")));
            }
        }
        Ok(tab)
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    /// `ψ_ρ(z) = φ_ρ(z) − Σ_i b_i(z) c_i^{ρ−1}/(ρ−1)!`.
    pub fn psi(&self, rho: usize, z: Complex64) -> Complex64 {
        let f = factorial(rho - 1);
        let sum: Complex64 = self
            .b
            .iter()
            .zip(&self.c)
            .map(|(bi, ci)| bi.eval(z) * ci.powi(rho as i32 - 1) / f)
            .sum();
        phi(rho, z) - sum
    }

    /// Internal-stage residual
    /// `ψ_{ρ,i}(z) = φ_ρ(c_i z) c_i^ρ − Σ_k a_ik(z) c_k^{ρ−1}/(ρ−1)!`.
    pub fn psi_stage(&self, rho: usize, i: usize, z: Complex64) -> Complex64 {
        let f = factorial(rho - 1);
        let sum: Complex64 = self.a[i]
            .iter()
            .zip(&self.c)
            .map(|(aik, ck)| aik.eval(z) * ck.powi(rho as i32 - 1) / f)
            .sum();
        phi(rho, z * self.c[i]) * self.c[i].powi(rho as i32) - sum
    }
}

fn p(rho: usize, node: f64) -> CoefFn {
    CoefFn::phi(rho, node)
}

/// Exponential Euler.
pub fn tableau_mo1() -> ExpTableau {
    ExpTableau::new("MO1", 1, vec![0.0], vec![vec![]], vec![p(1, 1.0)]).expect("MO1")
}

/// Exponential midpoint rule.
pub fn tableau_mo2() -> ExpTableau {
    ExpTableau::new(
        "MO2",
        2,
        vec![0.0, 0.5],
        vec![vec![], vec![p(1, 0.5) * 0.5]],
        vec![CoefFn::zero(), p(1, 1.0)],
    )
    .expect("MO2")
}

/// Three-stage method with `c = (0, 1/3, 2/3)`.
pub fn tableau_mo3() -> ExpTableau {
    let c2 = 1.0 / 3.0;
    let c3 = 2.0 / 3.0;
    let a32 = p(2, c3) * (4.0 / (9.0 * c2));
    ExpTableau::new(
        "MO3",
        3,
        vec![0.0, c2, c3],
        vec![vec![], vec![p(1, c2) * c2], vec![p(1, c3) * c3 - a32.clone(), a32]],
        vec![p(1, 1.0) - p(2, 1.0) * 1.5, CoefFn::zero(), p(2, 1.0) * 1.5],
    )
    .expect("MO3")
}

/// Five-stage stiff order-four method, `c = (0, 1/2, 1/2, 1, 1/2)`.
pub fn tableau_mo4() -> ExpTableau {
    let a52 = p(2, 0.5) * 0.5 - p(3, 1.0) + p(2, 1.0) * 0.25 - p(3, 0.5) * 0.5;
    let a54 = p(2, 0.5) * 0.25 - a52.clone();
    let a51 = p(1, 0.5) * 0.5 - a52.clone() * 2.0 - a54.clone();
    let a41 = p(1, 1.0) - p(2, 1.0) * 2.0;
    ExpTableau::new(
        "MO4",
        4,
        vec![0.0, 0.5, 0.5, 1.0, 0.5],
        vec![
            vec![],
            vec![p(1, 0.5) * 0.5],
            vec![p(1, 0.5) * 0.5 - p(2, 0.5), p(2, 0.5)],
            vec![a41, p(2, 1.0), p(2, 1.0)],
            vec![a51, a52.clone(), a52, a54],
        ],
        vec![
            p(1, 1.0) - p(2, 1.0) * 3.0 + p(3, 1.0) * 4.0,
            CoefFn::zero(),
            CoefFn::zero(),
            p(3, 1.0) * 4.0 - p(2, 1.0),
            p(2, 1.0) * 4.0 - p(3, 1.0) * 8.0,
        ],
    )
    .expect("MO4")
}

/// Tableau of order `r ∈ 1..=4`.
pub fn tableau(order: usize) -> Result<ExpTableau> {
    match order {
        1 => Ok(tableau_mo1()),
        2 => Ok(tableau_mo2()),
        3 => Ok(tableau_mo3()),
        4 => Ok(tableau_mo4()),
        _ => Err(CpdError::Config(format!("no exponential method of order {order}"))),
    }
}

/// Stiff order conditions of a tableau of order `r`: `ψ_ρ ≡ 0` on the
/// sample points for `ρ < r` (`ρ = 1` when `r = 1`) and `ψ_ρ(0) = 0` for
/// `ρ ≤ r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiReport {
    /// `(ρ, max |ψ_ρ(iy)|)` for the identically vanishing ones.
    pub identically: Vec<(usize, f64)>,
    /// `(ρ, |ψ_ρ(0)|)`.
    pub at_zero: Vec<(usize, f64)>,
}

impl PsiReport {
    pub fn worst(&self) -> f64 {
        self.identically
            .iter()
            .chain(&self.at_zero)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    }
}

pub fn psi_check(tab: &ExpTableau, ys: &[f64]) -> PsiReport {
    let zero = Complex64::new(0.0, 0.0);
    let at_zero = (1..=tab.order).map(|rho| (rho, tab.psi(rho, zero).norm())).collect();
    let identically = (1..tab.order.max(2))
        .map(|rho| {
            let worst = ys
                .iter()
                .map(|&y| tab.psi(rho, Complex64::new(0.0, y)).norm())
                .fold(0.0, f64::max);
            (rho, worst)
        })
        .collect();
    PsiReport { identically, at_zero }
}

/// A diagonal linear operator `M`, possibly with repeated blocks.
pub trait DiagonalGenerator {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries repeat with this period (`len()` if they do not).
    fn period(&self) -> usize {
        self.len()
    }

    fn entry(&self, d: usize) -> Complex64;

    /// `exp(s M_d)`.
    fn exp_scaled(&self, d: usize, s: f64) -> Complex64 {
        (self.entry(d) * s).exp()
    }
}

impl DiagonalGenerator for [Complex64] {
    fn len(&self) -> usize {
        <[Complex64]>::len(self)
    }

    fn entry(&self, d: usize) -> Complex64 {
        self[d]
    }
}

impl DiagonalGenerator for Vec<Complex64> {
    fn len(&self) -> usize {
        Vec::len(self)
    }

    fn entry(&self, d: usize) -> Complex64 {
        self[d]
    }
}

/// Coefficients of one tableau at one `(h, M)`, per distinct entry of `M`.
#[derive(Debug, Clone)]
pub struct PhiCache {
    len: usize,
    period: usize,
    stages: usize,
    exp_c: Vec<Vec<Complex64>>,
    exp_full: Vec<Complex64>,
    a: Vec<Vec<Option<Vec<Complex64>>>>,
    b: Vec<Option<Vec<Complex64>>>,
}

impl PhiCache {
    pub fn new<G: DiagonalGenerator + ?Sized>(tab: &ExpTableau, h: f64, m: &G) -> Self {
        let period = m.period();
        let eval = |f: &CoefFn| -> Option<Vec<Complex64>> {
            if f.is_zero() {
                return None;
            }
            Some(
                (0..period)
                    .map(|d| f.eval_with(m.entry(d) * h, |s| m.exp_scaled(d, s * h)))
                    .collect(),
            )
        };
        Self {
            len: m.len(),
            period,
            stages: tab.stages(),
            exp_c: tab
                .c
                .iter()
                .map(|&ci| (0..period).map(|d| m.exp_scaled(d, ci * h)).collect())
                .collect(),
            exp_full: (0..period).map(|d| m.exp_scaled(d, h)).collect(),
            a: tab.a.iter().map(|row| row.iter().map(eval).collect()).collect(),
            b: tab.b.iter().map(eval).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// One step `uⁿ ↦ uⁿ⁺¹`:
    ///
    /// ```text
    ///     Uᵢ = e^{cᵢhM} uⁿ + h Σ_{j<i} a_ij(hM) F(Uⱼ),
    ///     uⁿ⁺¹ = e^{hM} uⁿ + h Σᵢ bᵢ(hM) F(Uᵢ).
    /// ```
    ///
    /// `on_stage` sees every internal stage value. A non-finite stage or
    /// result is reported as [`CpdError::Divergence`] with `step`.
    pub fn step<F, S>(
        &self,
        h: f64,
        u: &[Complex64],
        step: usize,
        mut rhs: F,
        mut on_stage: S,
    ) -> Result<Vec<Complex64>>
    where
        F: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
        S: FnMut(usize, &[Complex64]),
    {
        assert_eq!(u.len(), self.len, "state length does not match the generator");
        let per = self.period;
        let mut forces: Vec<Vec<Complex64>> = Vec::with_capacity(self.stages);
        for i in 0..self.stages {
            let mut stage: Vec<Complex64> = u
                .iter()
                .enumerate()
                .map(|(d, ud)| self.exp_c[i][d % per] * ud)
                .collect();
            for (j, coef) in self.a[i].iter().enumerate() {
                if let Some(coef) = coef {
                    for (d, s) in stage.iter_mut().enumerate() {
                        *s += coef[d % per] * forces[j][d] * h;
                    }
                }
            }
            if i > 0 {
                on_stage(i, &stage);
            }
            let needed = self.b[i].is_some() || self.a.iter().skip(i + 1).any(|row| row[i].is_some());
            if !needed {
                forces.push(Vec::new());
                continue;
            }
            if !stage.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(CpdError::Divergence { step });
            }
            let f = rhs(&stage)?;
            forces.push(f);
        }
        let mut out: Vec<Complex64> = u
            .iter()
            .enumerate()
            .map(|(d, ud)| self.exp_full[d % per] * ud)
            .collect();
        for (i, coef) in self.b.iter().enumerate() {
            if let Some(coef) = coef {
                for (d, o) in out.iter_mut().enumerate() {
                    *o += coef[d % per] * forces[i][d] * h;
                }
            }
        }
        if !out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(CpdError::Divergence { step });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// `∫₀¹ e^{(1−θ)z} θ^{ρ−1}/(ρ−1)! dθ` by 50-point Gauss–Legendre.
    fn phi_quadrature(rho: usize, z: Complex64) -> Complex64 {
        let n = 50;
        // Golub–Welsch would need an eigen-solver; Newton on P_n instead
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=n {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            let theta = 0.5 * (x + 1.0);
            acc += (z * (1.0 - theta)).exp() * theta.powi(rho as i32 - 1) / factorial(rho - 1) * (0.5 * w);
        }
        acc
    }

    #[test]
    fn phi_values() {
        for rho in 0..=4 {
            let zero = Complex64::new(0.0, 0.0);
            assert_relative_eq!(phi(rho, zero).re, 1.0 / factorial(rho), epsilon = 1e-16);
        }
        let z = Complex64::new(1.0, 0.0);
        assert_relative_eq!(phi(1, z).re, std::f64::consts::E - 1.0, epsilon = 1e-15);
        let z = Complex64::new(0.0, std::f64::consts::PI);
        assert!((phi(1, z) - Complex64::new(0.0, 2.0 / std::f64::consts::PI)).norm() < 1e-15);
        for &(re, im) in &[
            (0.0, 1e-3),
            (0.0, 0.05),
            (0.0, 0.2),
            (0.0, 1.0 - 1e-9),
            (0.0, 1.0 + 1e-9),
            (0.7, -0.7),
            (0.0, 3.0),
            (-2.0, 10.0),
            (0.0, -40.0),
        ] {
            let z = Complex64::new(re, im);
            for rho in 1..=4 {
                let q = phi_quadrature(rho, z);
                assert!((phi(rho, z) - q).norm() <= 1e-13, "rho {rho} z {z}");
            }
        }
    }

    #[test]
    fn tableau_values_at_zero() {
        let zero = Complex64::new(0.0, 0.0);
        let m3 = tableau_mo3();
        let b: Vec<f64> = m3.b.iter().map(|f| f.eval(zero).re).collect();
        for (got, want) in b.iter().zip([0.25, 0.0, 0.75]) {
            assert!((got - want).abs() <= 1e-15);
        }
        let m4 = tableau_mo4();
        let b: Vec<f64> = m4.b.iter().map(|f| f.eval(zero).re).collect();
        for (got, want) in b.iter().zip([1.0 / 6.0, 0.0, 0.0, 1.0 / 6.0, 2.0 / 3.0]) {
            assert!((got - want).abs() <= 1e-15);
        }
        // classical row sums and the fourth-order condition Σ b_i a_ij c_j = 1/6
        for tab in [tableau_mo1(), tableau_mo2(), m3, m4] {
            for (i, row) in tab.a.iter().enumerate() {
                let sum: f64 = row.iter().map(|f| f.eval(zero).re).sum();
                assert!((sum - tab.c[i]).abs() <= 1e-15);
            }
            if tab.order >= 3 {
                let mut s = 0.0;
                for i in 0..tab.stages() {
                    let bi = tab.b[i].eval(zero).re;
                    for j in 0..i {
                        s += bi * tab.a[i][j].eval(zero).re * tab.c[j];
                    }
                }
                assert!((s - 1.0 / 6.0).abs() <= 1e-15, "{}", tab.name);
            }
        }
    }

    #[test]
    fn psi_identities() {
        let m4 = tableau_mo4();
        for &y in &[0.3, 2.0, -17.0] {
            let z = Complex64::new(0.0, y);
            let want = phi(4, z) + phi(2, z) / 12.0 - phi(3, z) / 2.0;
            assert!((m4.psi(4, z) - want).norm() <= 1e-13);
            for rho in 1..=3 {
                assert!(m4.psi(rho, z).norm() <= 1e-12);
            }
        }
        assert!(m4.psi(4, Complex64::new(0.0, 2.0)).norm() > 1e-3);
        // the exponential midpoint rule is only stiffly first order in ψ₂
        assert!(tableau_mo2().psi(2, Complex64::new(0.0, 2.0)).norm() > 1e-3);
        let ys: Vec<f64> = (0..200).map(|i| -50.0 + 100.0 * i as f64 / 199.0).collect();
        for order in 1..=4 {
            let tab = tableau(order).unwrap();
            let worst = psi_check(&tab, &ys).worst();
            assert!(worst <= 1e-12, "{} {worst:e}", tab.name);
            assert_eq!(psi_check(&tab, &ys).identically.len(), order.max(2) - 1);
            for i in 0..tab.stages() {
                assert!(tab.psi_stage(1, i, Complex64::new(0.0, 3.3)).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn inconsistent_tableau_is_rejected() {
        let bad = ExpTableau::new("bad", 1, vec![0.0], vec![vec![]], vec![CoefFn::phi(1, 1.0) * 0.9]);
        assert!(matches!(bad, Err(CpdError::Config(_))));
        let bad = ExpTableau::new(
            "bad",
            1,
            vec![0.0, 1.0],
            vec![vec![], vec![]],
            vec![CoefFn::phi(1, 1.0), CoefFn::zero()],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn exponential_euler_exact_for_constant_forcing() {
        let m = vec![
            Complex64::new(0.0, 3.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(-1.0, 0.0),
        ];
        let g = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-0.5, 0.5),
        ];
        let u0 = vec![
            Complex64::new(0.2, 0.1),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.3),
        ];
        let h = 0.3;
        let cache = PhiCache::new(&tableau_mo1(), h, &m);
        let mut u = u0.clone();
        for n in 0..10 {
            u = cache.step(h, &u, n, |_| Ok(g.clone()), |_, _| {}).unwrap();
        }
        let t = 10.0 * h;
        for d in 0..3 {
            let exact = (m[d] * t).exp() * u0[d] + ((m[d] * t).exp() - 1.0) / m[d] * g[d];
            assert!((u[d] - exact).norm() <= 1e-13);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let m = vec![Complex64::new(0.0, 1.0)];
        let cache = PhiCache::new(&tableau_mo2(), 0.1, &m);
        let r = cache.step(
            0.1,
            &[Complex64::new(1.0, 0.0)],
            7,
            |_| Ok(vec![Complex64::new(f64::NAN, 0.0)]),
            |_, _| {},
        );
        assert!(matches!(r, Err(CpdError::Divergence { step: 7 })));
    }

    /// `u' = iωu + u²·(small)` has a smooth, non-stiff solution; the observed
    /// order in `h` at large `ω` should match the tableau.
    #[test]
    fn scalar_surrogate_orders() {
        let omega = 50.0;
        let m = vec![Complex64::new(0.0, omega)];
        let force = |u: &[Complex64]| {
            Ok(vec![
                Complex64::new(0.3, 0.0) * u[0] * u[0].conj() + Complex64::new(0.1, 0.0),
            ])
        };
        let solve = |tab: &ExpTableau, steps: usize| {
            let h = 1.0 / steps as f64;
            let cache = PhiCache::new(tab, h, &m);
            let mut u = vec![Complex64::new(0.5, 0.0)];
            for n in 0..steps {
                u = cache.step(h, &u, n, force, |_, _| {}).unwrap();
            }
            u[0]
        };
        for order in 1..=4 {
            let tab = tableau(order).unwrap();
            let reference = solve(&tableau_mo4(), 4096);
            let e1 = (solve(&tab, 64) - reference).norm();
            let e2 = (solve(&tab, 128) - reference).norm();
            let observed = (e1 / e2).log2();
            assert!((observed - order as f64).abs() <= 0.3, "{}: {observed}", tab.name);
        }
    }
}
