//! Two-scale exponential integrators for three-dimensional charged-particle
//! dynamics under a strong magnetic field,
//!
//! ```text
//!     x' = v,    v' = v × B(x)/ε + E(x),    0 < ε ≪ 1,
//! ```
//!
//! with uniform accuracy `O(h^r)` (`r = 1..4`) in the stiffness parameter `ε`.
//!
//! The pipeline, module by module:
//!
//! * [`fields`]: magnetic/electric field models and their derivatives.
//! * [`rotations`]: closed forms of `exp(θ B̂₀/b)` and its `φ₁`-type companion,
//!   plus compensated reduction of the fast phase `b t/ε`.
//! * [`transform`]: `(x, v) ↔ (x, w = εv) ↔ (q, p)` filtered variables.
//! * [`twoscale`]: the two-scale right-hand side `f_τ`, averaging operators,
//!   Chapman–Enskog correctors and well-prepared initial data.
//! * [`spectral`]: Fourier pseudospectral discretisation in the fast variable.
//! * [`expint`]: φ-functions, the MO1-E … MO4-E tableaus and the stepper.
//! * [`solver`]: the end-to-end fully discrete scheme.
//! * [`baselines`]: Boris, RK2, Crank–Nicolson and the RK4 reference oracle.
//! * [`harness`]: convergence/efficiency experiments, CSV output, slope fits.

pub mod baselines;
pub mod error;
pub mod expint;
pub mod fields;
pub mod harness;
pub mod rotations;
pub mod solver;
pub mod spectral;
pub mod transform;
pub mod twoscale;

pub use error::{CpdError, Result};

/// Position/velocity vectors.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 real matrices.
pub type Mat3 = nalgebra::Matrix3<f64>;
