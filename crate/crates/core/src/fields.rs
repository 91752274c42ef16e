//! Electric and magnetic field models.
//!
//! A field supplies `B(x)` and `E(x)` and, optionally, their first and second
//! derivatives. Models without analytic derivatives fall back to central
//! finite differences ([`fd_jacobian`], [`fd_hessian`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};

use crate::{CpdError, Mat3, Result, Vec3};

/// Radius around the `x₃` axis inside which the built-in electric field is
/// undefined.
pub const AXIS_TOLERANCE: f64 = 1e-12;

/// `hat(b)` with `hat(b)·v = v × b`.
///
/// ```
/// use cpd_core::{fields::hat, Vec3};
/// let b = Vec3::new(1.0, 2.0, 3.0);
/// let v = Vec3::new(4.0, 5.0, 6.0);
/// assert_eq!(hat(&b) * v, v.cross(&b));
/// ```
pub fn hat(b: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, b[2], -b[1], //
        -b[2], 0.0, b[0], //
        b[1], -b[0], 0.0,
    )
}

/// A static electromagnetic field. Implementations must be deterministic.
///
/// Jacobians are laid out as `J[(i, j)] = ∂F_i/∂x_j`; Hessians are returned
/// per component, `H[i][(j, k)] = ∂²F_i/∂x_j∂x_k`.
pub trait FieldModel: Send + Sync {
    fn magnetic(&self, x: &Vec3) -> Vec3;

    fn electric(&self, x: &Vec3) -> Result<Vec3>;

    fn magnetic_jacobian(&self, x: &Vec3) -> Mat3 {
        fd_jacobian(|y| Ok(self.magnetic(y)), x).expect("magnetic field is total")
    }

    fn electric_jacobian(&self, x: &Vec3) -> Result<Mat3> {
        fd_jacobian(|y| self.electric(y), x)
    }

    fn magnetic_hessian(&self, x: &Vec3) -> [Mat3; 3] {
        fd_hessian(|y| Ok(self.magnetic(y)), x).expect("magnetic field is total")
    }

    fn electric_hessian(&self, x: &Vec3) -> Result<[Mat3; 3]> {
        fd_hessian(|y| self.electric(y), x)
    }
}

impl<F: FieldModel + ?Sized> FieldModel for &F {
    fn magnetic(&self, x: &Vec3) -> Vec3 {
        (**self).magnetic(x)
    }
    fn electric(&self, x: &Vec3) -> Result<Vec3> {
        (**self).electric(x)
    }
    fn magnetic_jacobian(&self, x: &Vec3) -> Mat3 {
        (**self).magnetic_jacobian(x)
    }
    fn electric_jacobian(&self, x: &Vec3) -> Result<Mat3> {
        (**self).electric_jacobian(x)
    }
    fn magnetic_hessian(&self, x: &Vec3) -> [Mat3; 3] {
        (**self).magnetic_hessian(x)
    }
    fn electric_hessian(&self, x: &Vec3) -> Result<[Mat3; 3]> {
        (**self).electric_hessian(x)
    }
}

impl<F: FieldModel + ?Sized> FieldModel for Box<F> {
    fn magnetic(&self, x: &Vec3) -> Vec3 {
        (**self).magnetic(x)
    }
    fn electric(&self, x: &Vec3) -> Result<Vec3> {
        (**self).electric(x)
    }
    fn magnetic_jacobian(&self, x: &Vec3) -> Mat3 {
        (**self).magnetic_jacobian(x)
    }
    fn electric_jacobian(&self, x: &Vec3) -> Result<Mat3> {
        (**self).electric_jacobian(x)
    }
    fn magnetic_hessian(&self, x: &Vec3) -> [Mat3; 3] {
        (**self).magnetic_hessian(x)
    }
    fn electric_hessian(&self, x: &Vec3) -> Result<[Mat3; 3]> {
        (**self).electric_hessian(x)
    }
}

fn fd_scale(x: &Vec3) -> f64 {
    x.norm().max(1.0)
}

/// Central-difference Jacobian of `f: ℝ³ → ℝᴷ` with step `ε_mach^{1/3}·max(1, ‖x‖)`.
pub fn fd_jacobian<const K: usize, F>(f: F, x: &Vec3) -> Result<SMatrix<f64, K, 3>>
where
    F: Fn(&Vec3) -> Result<SVector<f64, K>>,
{
    let delta = f64::EPSILON.cbrt() * fd_scale(x);
    let mut jac = SMatrix::<f64, K, 3>::zeros();
    for j in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += delta;
        xm[j] -= delta;
        // actual spacing after rounding
        let span = xp[j] - xm[j];
        let col = (f(&xp)? - f(&xm)?) / span;
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Central-difference Hessians of each component of `f: ℝ³ → ℝᴷ`, step
/// `ε_mach^{1/4}·max(1, ‖x‖)`.
pub fn fd_hessian<const K: usize, F>(f: F, x: &Vec3) -> Result<[Mat3; K]>
where
    F: Fn(&Vec3) -> Result<SVector<f64, K>>,
{
    let delta = f64::EPSILON.powf(0.25) * fd_scale(x);
    let shifted = |di: (usize, f64), dj: (usize, f64)| -> Result<SVector<f64, K>> {
        let mut y = *x;
        y[di.0] += di.1 * delta;
        y[dj.0] += dj.1 * delta;
        f(&y)
    };
    let centre = f(x)?;
    let mut hess = [Mat3::zeros(); K];
    for j in 0..3 {
        let pp = shifted((j, 1.0), (j, 0.0))?;
        let mm = shifted((j, -1.0), (j, 0.0))?;
        let d2 = (pp - centre * 2.0 + mm) / (delta * delta);
        for (c, h) in hess.iter_mut().enumerate() {
            h[(j, j)] = d2[c];
        }
        for k in (j + 1)..3 {
            let pp = shifted((j, 1.0), (k, 1.0))?;
            let pm = shifted((j, 1.0), (k, -1.0))?;
            let mp = shifted((j, -1.0), (k, 1.0))?;
            let mm = shifted((j, -1.0), (k, -1.0))?;
            let d2 = (pp - pm - mp + mm) / (4.0 * delta * delta);
            for (c, h) in hess.iter_mut().enumerate() {
                h[(j, k)] = d2[c];
                h[(k, j)] = d2[c];
            }
        }
    }
    Ok(hess)
}

/// `E = −∇U` for `U(x) = 1/√(x₁² + x₂²)`, i.e. `E = (x₁, x₂, 0)/r³`.
fn radial_electric(x: &Vec3) -> Result<Vec3> {
    let r = axis_distance(x)?;
    let r3 = r * r * r;
    Ok(Vec3::new(x[0] / r3, x[1] / r3, 0.0))
}

fn radial_electric_jacobian(x: &Vec3) -> Result<Mat3> {
    let r = axis_distance(x)?;
    let r3 = r.powi(3);
    let r5 = r.powi(5);
    let mut jac = Mat3::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            jac[(i, j)] = delta / r3 - 3.0 * x[i] * x[j] / r5;
        }
    }
    Ok(jac)
}

fn radial_electric_hessian(x: &Vec3) -> Result<[Mat3; 3]> {
    let r = axis_distance(x)?;
    let r5 = r.powi(5);
    let r7 = r.powi(7);
    let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut hess = [Mat3::zeros(); 3];
    for (i, h) in hess.iter_mut().enumerate().take(2) {
        for j in 0..2 {
            for k in 0..2 {
                h[(j, k)] =
                    -3.0 * (kd(i, j) * x[k] + kd(i, k) * x[j] + kd(j, k) * x[i]) / r5 + 15.0 * x[i] * x[j] * x[k] / r7;
            }
        }
    }
    Ok(hess)
}

fn axis_distance(x: &Vec3) -> Result<f64> {
    let r = x[0].hypot(x[1]);
    if r < AXIS_TOLERANCE || !r.is_finite() {
        return Err(CpdError::AxisSingularity(x[0], x[1], x[2]));
    }
    Ok(r)
}

/// Scalar potential `U(x) = 1/√(x₁² + x₂²)` of the built-in electric field.
pub fn radial_potential(x: &Vec3) -> Result<f64> {
    Ok(1.0 / axis_distance(x)?)
}

/// `B(x) = (cos x₂, 1 + sin x₃, cos x₁)` with the radial electric field.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeneralField;

/// `B(x) = (cos εx₂, 1 + sin εx₃, cos εx₁)`, the maximal-ordering scaling of
/// [`GeneralField`], with the same electric field.
#[derive(Debug, Clone, Copy)]
pub struct MaximalOrderingField {
    pub eps: f64,
}

/// Shorthand for [`GeneralField`].
pub fn builtin_general_field() -> GeneralField {
    GeneralField
}

/// Shorthand for [`MaximalOrderingField`]; `eps` must be positive.
pub fn builtin_maximal_ordering_field(eps: f64) -> Result<MaximalOrderingField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(CpdError::Config(format!("eps must be positive, got {eps}")));
    }
    Ok(MaximalOrderingField { eps })
}

fn trig_b(y: &Vec3) -> Vec3 {
    Vec3::new(y[1].cos(), 1.0 + y[2].sin(), y[0].cos())
}

fn trig_b_jacobian(y: &Vec3) -> Mat3 {
    Mat3::new(
        0.0,
        -y[1].sin(),
        0.0, //
        0.0,
        0.0,
        y[2].cos(), //
        -y[0].sin(),
        0.0,
        0.0,
    )
}

fn trig_b_hessian(y: &Vec3) -> [Mat3; 3] {
    let mut h = [Mat3::zeros(); 3];
    h[0][(1, 1)] = -y[1].cos();
    h[1][(2, 2)] = -y[2].sin();
    h[2][(0, 0)] = -y[0].cos();
    h
}

impl FieldModel for GeneralField {
    fn magnetic(&self, x: &Vec3) -> Vec3 {
        trig_b(x)
    }
    fn electric(&self, x: &Vec3) -> Result<Vec3> {
        radial_electric(x)
    }
    fn magnetic_jacobian(&self, x: &Vec3) -> Mat3 {
        trig_b_jacobian(x)
    }
    fn electric_jacobian(&self, x: &Vec3) -> Result<Mat3> {
        radial_electric_jacobian(x)
    }
    fn magnetic_hessian(&self, x: &Vec3) -> [Mat3; 3] {
        trig_b_hessian(x)
    }
    fn electric_hessian(&self, x: &Vec3) -> Result<[Mat3; 3]> {
        radial_electric_hessian(x)
    }
}

impl FieldModel for MaximalOrderingField {
    fn magnetic(&self, x: &Vec3) -> Vec3 {
        trig_b(&(x * self.eps))
    }
    fn electric(&self, x: &Vec3) -> Result<Vec3> {
        radial_electric(x)
    }
    fn magnetic_jacobian(&self, x: &Vec3) -> Mat3 {
        trig_b_jacobian(&(x * self.eps)) * self.eps
    }
    fn electric_jacobian(&self, x: &Vec3) -> Result<Mat3> {
        radial_electric_jacobian(x)
    }
    fn magnetic_hessian(&self, x: &Vec3) -> [Mat3; 3] {
        let e2 = self.eps * self.eps;
        trig_b_hessian(&(x * self.eps)).map(|h| h * e2)
    }
    fn electric_hessian(&self, x: &Vec3) -> Result<[Mat3; 3]> {
        radial_electric_hessian(x)
    }
}

/// Constant fields. Used for the exactly solvable helix tests.
#[derive(Debug, Clone, Copy)]
pub struct UniformField {
    pub b: Vec3,
    pub e: Vec3,
}

impl FieldModel for UniformField {
    fn magnetic(&self, _x: &Vec3) -> Vec3 {
        self.b
    }
    fn electric(&self, _x: &Vec3) -> Result<Vec3> {
        Ok(self.e)
    }
    fn magnetic_jacobian(&self, _x: &Vec3) -> Mat3 {
        Mat3::zeros()
    }
    fn electric_jacobian(&self, _x: &Vec3) -> Result<Mat3> {
        Ok(Mat3::zeros())
    }
    fn magnetic_hessian(&self, _x: &Vec3) -> [Mat3; 3] {
        [Mat3::zeros(); 3]
    }
    fn electric_hessian(&self, _x: &Vec3) -> Result<[Mat3; 3]> {
        Ok([Mat3::zeros(); 3])
    }
}

type VecFn = Box<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;

/// A user-defined field given only by `B` and `E`; all derivatives come from
/// finite differences.
pub struct CustomField {
    magnetic: VecFn,
    electric: VecFn,
}

impl CustomField {
    pub fn new<B, E>(magnetic: B, electric: E) -> Self
    where
        B: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
        E: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
    {
        Self {
            magnetic: Box::new(magnetic),
            electric: Box::new(electric),
        }
    }
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomField")
    }
}

impl FieldModel for CustomField {
    fn magnetic(&self, x: &Vec3) -> Vec3 {
        (self.magnetic)(x)
    }
    fn electric(&self, x: &Vec3) -> Result<Vec3> {
        Ok((self.electric)(x))
    }
}

/// Field selector used by configuration files and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldId {
    General,
    Maximal,
    /// Reserved for programmatic use; cannot be built from an id alone.
    Custom,
}

impl FieldId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldId::General => "general",
            FieldId::Maximal => "maximal",
            FieldId::Custom => "custom",
        }
    }

    /// Instantiates the built-in field for the given `eps`.
    pub fn build(&self, eps: f64) -> Result<Box<dyn FieldModel>> {
        match self {
            FieldId::General => Ok(Box::new(GeneralField)),
            FieldId::Maximal => Ok(Box::new(builtin_maximal_ordering_field(eps)?)),
            FieldId::Custom => Err(CpdError::Config(
                "field \"custom\" must be supplied programmatically".into(),
            )),
        }
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldId {
    type Err = CpdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "general" | "gsm" => Ok(FieldId::General),
            "maximal" | "moc" => Ok(FieldId::Maximal),
            "custom" => Ok(FieldId::Custom),
            other => Err(CpdError::Config(format!("unknown field id {other:?}"))),
        }
    }
}
