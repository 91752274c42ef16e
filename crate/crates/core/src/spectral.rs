//! Fourier pseudospectral discretisation in the fast variable.
//!
//! Grid nodes are `τ_l = 2πl/N` for `l = −N/2 … N/2−1` and coefficients are
//! indexed by modes `k = −N/2 … N/2−1`, with
//!
//! ```text
//!     Û_k = (1/N) Σ_l U(τ_l) e^{−ikτ_l},      U(τ) = Σ_k Û_k e^{ikτ}.
//! ```
//!
//! [`CoefVector`] stores `D = 6N` coefficients component-major (all modes of
//! component 1, then component 2, …). The transport `(b/ε)∂_τ` becomes the
//! diagonal generator `M` with entries `−ik·b/ε` ([`TransportGenerator`]).
//! The nonlinearity is assembled node by node ([`assemble_f`]); no `D × D`
//! matrix is ever formed.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::expint::DiagonalGenerator;
use crate::rotations::{reduce_phase_parts, FastPhase};
use crate::twoscale::{TauGridFunction, TwoScaleSystem, Vec6};
use crate::{CpdError, Result};

/// Imaginary residue tolerated when mapping coefficients back to real grid
/// values, relative to the largest grid magnitude (floored at one).
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

const MAGIC: &[u8; 8] = b"CPD2SCL1";

pub(crate) fn check_n_tau(n_tau: usize) -> Result<()> {
    if n_tau < 2 || !n_tau.is_power_of_two() {
        return Err(CpdError::Config(format!(
            "n_tau must be a power of two >= 2, got {n_tau}"
        )));
    }
    Ok(())
}

/// `6·N_τ` complex Fourier coefficients in component-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector {
    n_tau: usize,
    data: Vec<Complex64>,
}

impl CoefVector {
    pub fn zeros(n_tau: usize) -> Result<Self> {
        check_n_tau(n_tau)?;
        Ok(Self {
            n_tau,
            data: vec![Complex64::new(0.0, 0.0); 6 * n_tau],
        })
    }

    pub fn from_vec(n_tau: usize, data: Vec<Complex64>) -> Result<Self> {
        check_n_tau(n_tau)?;
        if data.len() != 6 * n_tau {
            return Err(CpdError::Config(format!(
                "coefficient vector of length {} does not match 6·{n_tau}",
                data.len()
            )));
        }
        Ok(Self { n_tau, data })
    }

    pub fn n_tau(&self) -> usize {
        self.n_tau
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Flat index of component `j` (0-based) and mode `k`.
    pub fn index(&self, j: usize, k: i64) -> usize {
        let half = (self.n_tau / 2) as i64;
        assert!(j < 6 && (-half..half).contains(&k), "mode ({j}, {k}) out of range");
        j * self.n_tau + (k + half) as usize
    }

    pub fn get(&self, j: usize, k: i64) -> Complex64 {
        self.data[self.index(j, k)]
    }

    pub fn set(&mut self, j: usize, k: i64, value: Complex64) {
        let i = self.index(j, k);
        self.data[i] = value;
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.n_tau..(j + 1) * self.n_tau]
    }

    /// Mode numbers in storage order.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let half = (self.n_tau / 2) as i64;
        -half..half
    }

    /// Deviation from the symmetry `Û_{−k} = conj(Û_k)` of a real field,
    /// relative to the largest coefficient. The unpaired mode `−N/2` is
    /// excluded.
    pub fn conjugate_symmetry_residual(&self) -> f64 {
        let scale = self.data.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let half = (self.n_tau / 2) as i64;
        let mut worst = 0.0f64;
        for j in 0..6 {
            for k in 0..half {
                let d = self.get(j, k) - self.get(j, -k).conj();
                worst = worst.max(d.norm());
            }
        }
        worst / scale
    }

    /// Evaluates the trigonometric interpolant at phase `theta` (real part;
    /// the unpaired mode `−N/2` contributes `Re(Û e^{−iNθ/2})`).
    pub fn evaluate(&self, theta: f64) -> Vec6 {
        let mut out = Vec6::zeros();
        let half = (self.n_tau / 2) as i64;
        // e^{ikθ} by recurrence from the reduced mode-one phase
        let base = Complex64::from_polar(1.0, theta);
        let mut phases = Vec::with_capacity(self.n_tau);
        let mut p = Complex64::from_polar(1.0, -(half as f64) * theta);
        for _ in 0..self.n_tau {
            phases.push(p);
            p *= base;
        }
        for (j, o) in out.iter_mut().enumerate() {
            let comp = self.component(j);
            *o = comp.iter().zip(&phases).map(|(c, e)| (c * e).re).sum();
        }
        out
    }

    /// Little-endian binary form: `"CPD2SCL1"`, `u32 n_tau`, `u32 0`, then
    /// `6·n_tau` `(re, im)` pairs of `f64`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n_tau as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for c in &self.data {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..8] != MAGIC {
            return Err(CpdError::Format("bad magic".into()));
        }
        let n_tau = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        check_n_tau(n_tau).map_err(|e| CpdError::Format(e.to_string()))?;
        let mut data = Vec::with_capacity(6 * n_tau);
        let mut buf = [0u8; 16];
        for _ in 0..6 * n_tau {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            data.push(Complex64::new(re, im));
        }
        Ok(Self { n_tau, data })
    }
}

/// Discrete Fourier transform pair between [`TauGridFunction`] and
/// [`CoefVector`], with `1/N` on analysis.
#[derive(Clone)]
pub struct SpectralTransform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralTransform").field("n", &self.n).finish()
    }
}

impl SpectralTransform {
    pub fn new(n_tau: usize) -> Result<Self> {
        check_n_tau(n_tau)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n: n_tau,
            forward: planner.plan_fft_forward(n_tau),
            inverse: planner.plan_fft_inverse(n_tau),
        })
    }

    pub fn n_tau(&self) -> usize {
        self.n
    }

    /// Node values (node order `l = −N/2…`) to mode coefficients (mode order
    /// `k = −N/2…`). Both orderings are the FFT's natural order rotated by
    /// `N/2`.
    pub fn analyze(&self, values: &[Complex64], coefs: &mut [Complex64]) {
        let n = self.n;
        let half = n / 2;
        let mut buf: Vec<Complex64> = (0..n).map(|m| values[(m + half) % n]).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / n as f64;
        for (i, c) in coefs.iter_mut().enumerate() {
            *c = buf[(i + half) % n] * scale;
        }
    }

    /// Inverse of [`analyze`](Self::analyze).
    pub fn synthesize(&self, coefs: &[Complex64], values: &mut [Complex64]) {
        let n = self.n;
        let half = n / 2;
        let mut buf: Vec<Complex64> = (0..n).map(|m| coefs[(m + half) % n]).collect();
        self.inverse.process(&mut buf);
        for (i, v) in values.iter_mut().enumerate() {
            *v = buf[(i + half) % n];
        }
    }

    pub fn from_grid(&self, g: &TauGridFunction) -> CoefVector {
        assert_eq!(g.n_tau(), self.n, "grid size mismatch");
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); 6 * n];
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..6 {
            for (c, v) in column.iter_mut().zip(g.values()) {
                *c = Complex64::new(v[j], 0.0);
            }
            self.analyze(&column, &mut data[j * n..(j + 1) * n]);
        }
        CoefVector { n_tau: n, data }
    }

    /// Back to real node values; fails if the imaginary residue of the paired
    /// modes exceeds [`IMAG_RESIDUE_TOL`].
    pub fn to_grid(&self, c: &CoefVector) -> Result<TauGridFunction> {
        assert_eq!(c.n_tau(), self.n, "grid size mismatch");
        let n = self.n;
        let mut values = vec![Vec6::zeros(); n];
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        let mut residue = 0.0f64;
        let mut scale = 1.0f64;
        let mut comp = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..6 {
            comp.copy_from_slice(c.component(j));
            // the unpaired mode −N/2 is (−1)^l on the nodes; its imaginary
            // part is not a symmetry defect
            comp[0].im = 0.0;
            self.synthesize(&comp, &mut column);
            for (v, z) in values.iter_mut().zip(&column) {
                v[j] = z.re;
                residue = residue.max(z.im.abs());
                scale = scale.max(z.re.abs());
            }
        }
        if residue.is_nan() || residue > IMAG_RESIDUE_TOL * scale {
            return Err(CpdError::CorruptedState { residue });
        }
        TauGridFunction::new(values)
    }
}

/// The diagonal transport generator, entry `−ik·b/ε` for every component.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportGenerator {
    n_tau: usize,
    phase: FastPhase,
    per_mode: Vec<Complex64>,
}

/// Builds `M` for `N_τ` modes, gyration strength `b` and stiffness `eps`.
pub fn build_m(n_tau: usize, b: f64, eps: f64) -> Result<TransportGenerator> {
    check_n_tau(n_tau)?;
    if !(eps > 0.0 && b > 0.0) {
        return Err(CpdError::Config(format!(
            "need eps > 0 and b > 0, got eps={eps}, b={b}"
        )));
    }
    let phase = FastPhase::new(b, eps);
    let rate = phase.rate();
    let half = (n_tau / 2) as i64;
    let per_mode = (-half..half).map(|k| Complex64::new(0.0, -(k as f64) * rate)).collect();
    Ok(TransportGenerator { n_tau, phase, per_mode })
}

impl TransportGenerator {
    pub fn n_tau(&self) -> usize {
        self.n_tau
    }

    /// Entry for component `j`, mode `k`.
    pub fn entry(&self, _j: usize, k: i64) -> Complex64 {
        let half = (self.n_tau / 2) as i64;
        self.per_mode[(k + half) as usize]
    }

    /// All `D` entries in [`CoefVector`] layout.
    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..6).flat_map(|_| self.per_mode.iter().copied()).collect()
    }

    /// Applies `exp(hM)`, i.e. shifts the represented function by `h·b/ε`.
    pub fn apply_exp(&self, h: f64, c: &CoefVector) -> CoefVector {
        let mut out = c.clone();
        for (d, v) in out.data.iter_mut().enumerate() {
            *v *= self.exp_scaled(d, h);
        }
        out
    }
}

impl DiagonalGenerator for TransportGenerator {
    fn len(&self) -> usize {
        6 * self.n_tau
    }

    fn period(&self) -> usize {
        self.n_tau
    }

    fn entry(&self, d: usize) -> Complex64 {
        self.per_mode[d % self.n_tau]
    }

    /// `exp(s·M_d)` through the compensated phase `s·b/ε mod 2π`.
    fn exp_scaled(&self, d: usize, s: f64) -> Complex64 {
        let half = (self.n_tau / 2) as i64;
        let k = (d % self.n_tau) as i64 - half;
        let step = self.phase.at(s);
        let angle = reduce_phase_parts(-(k as f64) * step, 0.0);
        Complex64::from_polar(1.0, angle)
    }
}

/// `U₀` on the grid to its coefficient vector.
pub fn project_initial(system: &TwoScaleSystem<'_>, u0: &TauGridFunction) -> CoefVector {
    system.transform().from_grid(u0)
}

/// The semi-discrete nonlinearity: synthesise node values, apply `f_τ` at
/// every node `τ_l`, analyse back.
pub fn assemble_f(system: &TwoScaleSystem<'_>, c: &CoefVector) -> Result<CoefVector> {
    let grid = system.transform().to_grid(c)?;
    let values = grid
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| system.f_tau_node(u, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(system.transform().from_grid(&TauGridFunction::new(values)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample_grid(n: usize) -> TauGridFunction {
        let values = (0..n)
            .map(|i| {
                let tau = 2.0 * PI * (i as f64 - (n / 2) as f64) / n as f64;
                Vec6::from_fn(|j, _| {
                    let j = j as f64;
                    (j + 1.0) * 0.1 + (tau * (j + 1.0)).cos() * 0.3 + (2.0 * tau - j).sin() * 0.2
                })
            })
            .collect();
        TauGridFunction::new(values).unwrap()
    }

    #[test]
    fn delta_mode_is_constant() {
        let t = SpectralTransform::new(8).unwrap();
        let mut c = CoefVector::zeros(8).unwrap();
        c.set(0, 0, Complex64::new(1.0, 0.0));
        let g = t.to_grid(&c).unwrap();
        for v in g.values() {
            assert_eq!(*v, Vec6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn parseval_and_inversion() {
        let n = 16;
        let t = SpectralTransform::new(n).unwrap();
        let g = sample_grid(n);
        let c = t.from_grid(&g);
        for j in 0..6 {
            let grid: f64 = g.values().iter().map(|v| v[j] * v[j]).sum::<f64>() / n as f64;
            let coef: f64 = c.component(j).iter().map(|z| z.norm_sqr()).sum();
            assert!((grid - coef).abs() <= 1e-12 * grid.max(1.0));
        }
        let back = t.to_grid(&c).unwrap();
        for (a, b) in back.values().iter().zip(g.values()) {
            assert!((a - b).abs().max() <= 1e-13);
        }
        assert!(c.conjugate_symmetry_residual() <= 1e-12);
    }

    #[test]
    fn imaginary_residue_is_rejected() {
        let t = SpectralTransform::new(8).unwrap();
        let mut c = CoefVector::zeros(8).unwrap();
        c.set(2, 1, Complex64::new(0.0, 1.0));
        assert!(matches!(t.to_grid(&c), Err(CpdError::CorruptedState { .. })));
    }

    #[test]
    fn transported_nyquist_mode_is_not_a_defect() {
        let t = SpectralTransform::new(8).unwrap();
        let mut c = CoefVector::zeros(8).unwrap();
        c.set(0, -4, Complex64::from_polar(0.5, 1.0));
        let g = t.to_grid(&c).unwrap();
        for (i, v) in g.values().iter().enumerate() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v[0] - sign * 0.5 * 1f64.cos()).abs() <= 1e-15);
        }
    }

    #[test]
    fn generator_entries() {
        let m = build_m(8, 2.0, 0.5).unwrap();
        assert_eq!(m.entry(3, 0), Complex64::new(0.0, 0.0));
        for k in 1..4 {
            assert_eq!(m.entry(0, k), m.entry(0, -k).conj());
            assert_eq!(m.entry(0, k), Complex64::new(0.0, -(k as f64) * 4.0));
        }
        let d = m.diagonal();
        assert_eq!(d.len(), 48);
        assert!(d.iter().all(|z| z.re == 0.0));
        assert_eq!(&d[..8], &d[40..]);
    }

    #[test]
    fn exp_m_shifts_the_function() {
        // g(τ) band-limited well below Nyquist, shifted by σ = h·b/ε
        let n = 16;
        let (b, eps, h) = (1.7, 0.01, 0.0123);
        let t = SpectralTransform::new(n).unwrap();
        let m = build_m(n, b, eps).unwrap();
        let g = |tau: f64| Vec6::from_fn(|j, _| (tau + j as f64).sin() + 0.5 * (3.0 * tau).cos());
        let grid = |shift: f64| {
            TauGridFunction::new(
                (0..n)
                    .map(|i| g(2.0 * PI * (i as f64 - (n / 2) as f64) / n as f64 - shift))
                    .collect(),
            )
            .unwrap()
        };
        let c = t.from_grid(&grid(0.0));
        let shifted = m.apply_exp(h, &c);
        let oracle = t.from_grid(&grid(h * b / eps));
        for (a, o) in shifted.as_slice().iter().zip(oracle.as_slice()) {
            assert!((a - o).norm() <= 1e-12);
        }
        let norm = |v: &CoefVector| v.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((norm(&shifted) - norm(&c)).abs() <= 1e-13);
    }

    #[test]
    fn evaluate_matches_grid_nodes() {
        let n = 16;
        let t = SpectralTransform::new(n).unwrap();
        let g = sample_grid(n);
        let c = t.from_grid(&g);
        for (i, v) in g.values().iter().enumerate() {
            let tau = 2.0 * PI * (i as f64 - (n / 2) as f64) / n as f64;
            assert!((c.evaluate(tau) - v).abs().max() <= 1e-13);
        }
    }

    #[test]
    fn serialization_layout() {
        let t = SpectralTransform::new(4).unwrap();
        let c = t.from_grid(&sample_grid(4));
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 16 + 6 * 4 * 16);
        assert_eq!(&bytes[..8], b"CPD2SCL1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 0);
        // second record is component 1, mode −1
        let re = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[40..48].try_into().unwrap());
        assert_eq!(Complex64::new(re, im), c.get(0, -1));
        assert_eq!(CoefVector::read_from(&bytes[..]).unwrap(), c);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(CoefVector::read_from(&bad[..]), Err(CpdError::Format(_))));
    }
}
