//! Exact changes of variables `(x, v) ↔ (x, w) ↔ (q, p)`.
//!
//! `w = εv` is the scaled velocity; the filtered pair
//! `q = x + s₁(−θ) w`, `p = s₀(−θ) w` removes the free gyration about `B₀`.
//! All phases go through [`FastPhase`].

use crate::rotations::{FastPhase, Linearization, Sign};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

impl ParticleState {
    pub fn new(t: f64, x: Vec3, v: Vec3) -> Self {
        Self { t, x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().chain(self.v.iter()).all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredState {
    pub t: f64,
    pub q: Vec3,
    pub p: Vec3,
}

/// `(x, εv)`.
pub fn to_scaled(s: &ParticleState, eps: f64) -> (Vec3, Vec3) {
    (s.x, s.v * eps)
}

pub fn from_scaled(t: f64, x: Vec3, w: Vec3, eps: f64) -> ParticleState {
    ParticleState::new(t, x, w / eps)
}

pub fn to_filtered(t: f64, x: &Vec3, w: &Vec3, lin: &Linearization, eps: f64) -> FilteredState {
    let theta = FastPhase::from_linearization(lin, eps).at(t);
    filter_at_phase(t, theta, x, w, lin)
}

pub fn from_filtered(t: f64, q: &Vec3, p: &Vec3, lin: &Linearization, eps: f64) -> (Vec3, Vec3) {
    let theta = FastPhase::from_linearization(lin, eps).at(t);
    unfilter_at_phase(theta, q, p, lin)
}

/// Recovers `(x, v)` from the filtered variables: `x = q + s₁(θ)p`,
/// `v = s₀(θ)p/ε`.
pub fn reconstruct_xv(q: &Vec3, p: &Vec3, t: f64, lin: &Linearization, eps: f64) -> ParticleState {
    let (x, w) = from_filtered(t, q, p, lin, eps);
    from_scaled(t, x, w, eps)
}

pub(crate) fn filter_at_phase(t: f64, theta: f64, x: &Vec3, w: &Vec3, lin: &Linearization) -> FilteredState {
    FilteredState {
        t,
        q: x + lin.s1(theta, Sign::Minus) * w,
        p: lin.s0(theta, Sign::Minus) * w,
    }
}

pub(crate) fn unfilter_at_phase(theta: f64, q: &Vec3, p: &Vec3, lin: &Linearization) -> (Vec3, Vec3) {
    (q + lin.s1(theta, Sign::Plus) * p, lin.s0(theta, Sign::Plus) * p)
}
