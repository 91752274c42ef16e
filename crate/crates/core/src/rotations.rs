//! Closed forms of the free gyration about `B₀ = B(x₀)`.
//!
//! With `K = B̂₀` and `b = ‖B₀‖` the matrices
//!
//! ```text
//!     s₀(±θ) = exp(±(θ/b) K)             = I ± sin θ/b · K + (1 − cos θ)/b² · K²
//!     s₁(±θ) = (exp(±(θ/b) K) − I) K⁺   = ±sin θ/b · (I − P∥) + (1 − cos θ)/b² · K
//! ```
//!
//! `K` is singular along `B₀`, so the division uses the pseudo-inverse
//! `K⁺ = −K/b²`; `P∥ = B₀B₀ᵀ/b²` projects onto the field line. `s₁` then
//! acts only across the field and the free streaming along `B₀` is left to
//! the two-scale system.
//!
//! are evaluated at the reduced phase `θ = b t/ε (mod 2π)`, so every
//! dependence on the fast time is exactly `2π`-periodic whatever the value of
//! `b`. [`FastPhase`] computes that phase with compensated arithmetic; large
//! `t/ε` would otherwise lose all significant digits in a naive product.

use std::f64::consts::PI;

use crate::fields::hat;
use crate::{CpdError, Mat3, Result, Vec3};

const TAU_HI: f64 = std::f64::consts::TAU;
const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Orientation of the gyration: `Plus` is `exp(+θK/b)`, `Minus` its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The frozen magnetic field `B₀ = B(x₀)` and its derived matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub b0_vec: Vec3,
    pub b0_hat: Mat3,
    pub b: f64,
    pub b0_hat_sq: Mat3,
    /// `B₀B₀ᵀ/b²`.
    pub parallel: Mat3,
}

impl Linearization {
    pub fn new(b0_vec: Vec3) -> Result<Self> {
        let b = b0_vec.norm();
        if !b.is_finite() || b <= 0.0 {
            return Err(CpdError::ZeroField);
        }
        let b0_hat = hat(&b0_vec);
        Ok(Self {
            b0_vec,
            b0_hat,
            b,
            b0_hat_sq: b0_hat * b0_hat,
            parallel: b0_vec * b0_vec.transpose() / (b * b),
        })
    }

    /// `s₀(±θ)`; an orthogonal rotation with determinant one.
    pub fn s0(&self, theta: f64, sign: Sign) -> Mat3 {
        let (sin, one_minus_cos) = trig(theta);
        Mat3::identity()
            + self.b0_hat * (sign.value() * sin / self.b)
            + self.b0_hat_sq * (one_minus_cos / (self.b * self.b))
    }

    /// `s₁(±θ)`, satisfying `B̂₀ s₁(θ) = s₀(θ) − I` and `s₁(θ) B₀ = 0`.
    pub fn s1(&self, theta: f64, sign: Sign) -> Mat3 {
        let (sin, one_minus_cos) = trig(theta);
        (Mat3::identity() - self.parallel) * (sign.value() * sin / self.b)
            + self.b0_hat * (one_minus_cos / (self.b * self.b))
    }

    /// All four matrices at one phase.
    pub fn rotations(&self, theta: f64) -> Rotations {
        Rotations {
            s0_plus: self.s0(theta, Sign::Plus),
            s0_minus: self.s0(theta, Sign::Minus),
            s1_plus: self.s1(theta, Sign::Plus),
            s1_minus: self.s1(theta, Sign::Minus),
        }
    }
}

/// `(sin θ, 1 − cos θ)`, the latter without cancellation near zero.
fn trig(theta: f64) -> (f64, f64) {
    let half = (0.5 * theta).sin();
    (theta.sin(), 2.0 * half * half)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotations {
    pub s0_plus: Mat3,
    pub s0_minus: Mat3,
    pub s1_plus: Mat3,
    pub s1_minus: Mat3,
}

/// `hi + lo` reduced to `[−π, π)` modulo `2π`.
pub fn reduce_phase_parts(hi: f64, lo: f64) -> f64 {
    let k = ((hi + lo) / TAU_HI).round();
    let mut r = (-k).mul_add(TAU_HI, hi);
    r = r - k * TAU_LO + lo;
    if r >= PI {
        r -= TAU_HI;
    } else if r < -PI {
        r += TAU_HI;
    }
    r
}

/// `theta` reduced to `[−π, π)`.
pub fn reduce_phase(theta: f64) -> f64 {
    reduce_phase_parts(theta, 0.0)
}

/// Error-free product `a·b = p + e`.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// The gyration rate `ω = b/ε`, held as an unevaluated sum `hi + lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastPhase {
    hi: f64,
    lo: f64,
}

impl FastPhase {
    pub fn new(b: f64, eps: f64) -> Self {
        let hi = b / eps;
        let lo = (-hi).mul_add(eps, b) / eps;
        Self { hi, lo }
    }

    pub fn from_linearization(lin: &Linearization, eps: f64) -> Self {
        Self::new(lin.b, eps)
    }

    /// `ω` rounded to double precision.
    pub fn rate(&self) -> f64 {
        self.hi + self.lo
    }

    /// Reduced phase `b t/ε mod 2π`.
    pub fn at(&self, t: f64) -> f64 {
        let (p, e) = two_prod(t, self.hi);
        reduce_phase_parts(p, e + t * self.lo)
    }

    /// Reduced phase at `t = n·h` computed from the exact product `n·h·ω`
    /// (no rounding of `n·h` itself).
    pub fn at_step(&self, n: u64, h: f64) -> f64 {
        let (a, ea) = two_prod(h, self.hi);
        let ea = ea + h * self.lo;
        let nf = n as f64;
        let (p, e) = two_prod(nf, a);
        reduce_phase_parts(p, e + nf * ea)
    }
}
