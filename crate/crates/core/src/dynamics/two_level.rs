//! Effective two-level spin dynamics in the frame rotating with the drive.
//!
//! Basis index 0 is |⇓⟩, index 1 is |⇑⟩; σz = diag(1, -1) so the Bloch
//! vector of |⇓⟩ is (0, 0, 1) and P⇑ = (1 - z)/2.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::lindblad::{evolve_lindblad_sampled, CMatrix, DensityMatrix, Tolerance};
use super::readout::{DOWN, UP};
use crate::error::{Error, Result};

/// Hz to rad/ns.
pub const HZ_TO_RAD_PER_NS: f64 = 2.0 * PI * 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn pauli() -> [Matrix2<Complex64>; 3] {
    [
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

pub fn bloch_from_rho(rho: &DensityMatrix) -> Vector3<f64> {
    let m = &rho.0;
    Vector3::new(2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re)
}

pub fn rho_from_bloch(r: &Vector3<f64>) -> DensityMatrix {
    let half = 0.5;
    DensityMatrix(CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(half * (1.0 + r.z), 0.0),
            Complex64::new(half * r.x, -half * r.y),
            Complex64::new(half * r.x, half * r.y),
            Complex64::new(half * (1.0 - r.z), 0.0),
        ],
    ))
}

/// Population of |⇑⟩ for a Bloch vector.
pub fn p_up(r: &Vector3<f64>) -> f64 {
    0.5 * (1.0 - r.z)
}

/// Rotation vector (rad/ns) of the RWA Hamiltonian
/// H = πΩ(cosφ σx + sinφ σy) + πδ σz with Ω, δ in Hz.
pub fn rwa_rotation_vector(omega_hz: f64, delta_hz: f64, phase: f64) -> Vector3<f64> {
    HZ_TO_RAD_PER_NS * Vector3::new(omega_hz * phase.cos(), omega_hz * phase.sin(), delta_hz)
}

/// Rotate `r` about `w` by |w|·t (right-handed, dr/dt = w × r).
pub fn rotate(r: &Vector3<f64>, w: &Vector3<f64>, t: f64) -> Vector3<f64> {
    let norm = w.norm();
    if norm == 0.0 || t == 0.0 {
        return *r;
    }
    let n = w / norm;
    let (s, c) = (norm * t).sin_cos();
    r * c + n.cross(r) * s + n * n.dot(r) * (1.0 - c)
}

/// SU(2) propagator of the RWA Hamiltonian for `t` ns.
pub fn rwa_unitary(omega_hz: f64, delta_hz: f64, phase: f64, t: f64) -> Matrix2<Complex64> {
    let w = rwa_rotation_vector(omega_hz, delta_hz, phase);
    let norm = w.norm();
    if norm == 0.0 {
        return Matrix2::identity();
    }
    let n = w / norm;
    let (s, c) = (0.5 * norm * t).sin_cos();
    let [sx, sy, sz] = pauli();
    Matrix2::identity().scale(c) - (sx.scale(n.x) + sy.scale(n.y) + sz.scale(n.z)) * (I * s)
}

/// Unitary RWA evolution of a 2×2 density matrix.
pub fn evolve_two_level_rwa(
    state: &DensityMatrix,
    omega_hz: f64,
    delta_hz: f64,
    phase: f64,
    t: f64,
) -> Result<DensityMatrix> {
    if state.dim() != 2 {
        return Err(Error::parameter("state", "expected a two-level density matrix"));
    }
    if omega_hz < 0.0 || t < 0.0 {
        return Err(Error::parameter("omega/t", "Rabi frequency and duration must be >= 0"));
    }
    let u = rwa_unitary(omega_hz, delta_hz, phase, t);
    let rho = Matrix2::from_fn(|i, j| state.0[(i, j)]);
    let out = u * rho * u.adjoint();
    Ok(DensityMatrix(CMatrix::from_fn(2, 2, |i, j| out[(i, j)])))
}

/// Closed-form chevron: P⇑ after time t from |⇓⟩ with φ = 0.
pub fn chevron_p_up(omega_hz: f64, delta_hz: f64, t: f64) -> f64 {
    let g2 = omega_hz * omega_hz + delta_hz * delta_hz;
    if g2 == 0.0 {
        return 0.0;
    }
    let s = (PI * g2.sqrt() * t * 1e-9).sin();
    omega_hz * omega_hz / g2 * s * s
}

/// P⇑ along `times` (ascending, ns) from the four-level integrator, starting
/// in |⇓⟩ with no dissipation. The Raman coupling is the adiabatically
/// eliminated one, acting inside the ground pair; the trion pair is carried
/// along uncoupled.
pub fn chevron_four_level(omega_hz: f64, delta_hz: f64, times: &[f64], tol: Tolerance) -> Result<Vec<f64>> {
    let half = 0.5 * HZ_TO_RAD_PER_NS;
    let mut h = CMatrix::zeros(4, 4);
    h[(DOWN, DOWN)] = Complex64::new(half * delta_hz, 0.0);
    h[(UP, UP)] = Complex64::new(-half * delta_hz, 0.0);
    h[(DOWN, UP)] = Complex64::new(half * omega_hz, 0.0);
    h[(UP, DOWN)] = Complex64::new(half * omega_hz, 0.0);
    let states = evolve_lindblad_sampled(&DensityMatrix::pure(4, DOWN), |_| h.clone(), &[], 0.0, times, tol)?;
    Ok(states.iter().map(|r| r.population(UP)).collect())
}

/// Linear Bloch equation dr/dt = M r + c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochGenerator {
    pub m: Matrix3<f64>,
    pub c: Vector3<f64>,
}

impl Default for BlochGenerator {
    fn default() -> Self {
        BlochGenerator { m: Matrix3::zeros(), c: Vector3::zeros() }
    }
}

impl BlochGenerator {
    pub fn precession(w: &Vector3<f64>) -> Self {
        BlochGenerator { m: w.cross_matrix(), c: Vector3::zeros() }
    }

    /// Collapse operator √(rate/2)·(n·σ) for a unit vector n: components
    /// perpendicular to n decay at `rate`.
    pub fn with_axis_dephasing(mut self, n: &Vector3<f64>, rate: f64) -> Self {
        let nn = n.normalize();
        self.m -= (Matrix3::identity() - nn * nn.transpose()) * rate;
        self
    }

    /// Longitudinal relaxation with rate `down` into |⇓⟩ and `up` into |⇑⟩.
    pub fn with_relaxation(mut self, down: f64, up: f64) -> Self {
        let total = down + up;
        self.m[(0, 0)] -= 0.5 * total;
        self.m[(1, 1)] -= 0.5 * total;
        self.m[(2, 2)] -= total;
        self.c.z += down - up;
        self
    }

    pub fn is_unitary(&self) -> bool {
        self.c == Vector3::zeros() && (self.m + self.m.transpose()).amax() == 0.0
    }

    pub fn propagator(&self, t: f64) -> AffineMap {
        if self.is_unitary() {
            // the generator is w× for some w
            let w = Vector3::new(self.m[(2, 1)], self.m[(0, 2)], self.m[(1, 0)]);
            return AffineMap::rotation(&w, t);
        }
        let mut a = Matrix4::zeros();
        a.fixed_view_mut::<3, 3>(0, 0).copy_from(&(self.m * t));
        a.fixed_view_mut::<3, 1>(0, 3).copy_from(&(self.c * t));
        let e = a.exp();
        AffineMap {
            m: e.fixed_view::<3, 3>(0, 0).into_owned(),
            c: e.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }
}

/// r ↦ M r + c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub m: Matrix3<f64>,
    pub c: Vector3<f64>,
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap { m: Matrix3::identity(), c: Vector3::zeros() }
    }

    pub fn rotation(w: &Vector3<f64>, t: f64) -> Self {
        let m = Matrix3::from_columns(&[
            rotate(&Vector3::x(), w, t),
            rotate(&Vector3::y(), w, t),
            rotate(&Vector3::z(), w, t),
        ]);
        AffineMap { m, c: Vector3::zeros() }
    }

    pub fn apply(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.m * r + self.c
    }

    /// `self` after `first`.
    pub fn after(&self, first: &AffineMap) -> AffineMap {
        AffineMap { m: self.m * first.m, c: self.m * first.c + self.c }
    }
}

/// Parameters of the lab-frame two-level drive
/// H = -πZ σz + 2πΩ[1 + cos(2π f_d t - φ)] σx with f_d = Z + δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabDrive {
    pub omega_hz: f64,
    pub delta_hz: f64,
    pub phase: f64,
    pub zeeman_hz: f64,
}

impl LabDrive {
    pub fn step_limit_ns(&self) -> f64 {
        1e9 / (20.0 * self.zeeman_hz.abs().max(self.omega_hz.abs()))
    }

    /// Hamiltonian (rad/ns) in the frame rotating at f_d, where the slow
    /// part is the RWA Hamiltonian.
    fn rotating_frame_h(&self, t: f64) -> Matrix2<Complex64> {
        let k = HZ_TO_RAD_PER_NS;
        let theta = k * (self.zeeman_hz + self.delta_hz) * t;
        let a = PI * self.omega_hz * 1e-9;
        let plus = Complex64::from_polar(a, -self.phase)
            + Complex64::from_polar(a, -(2.0 * theta - self.phase))
            + Complex64::from_polar(2.0 * a, -theta);
        let dz = PI * self.delta_hz * 1e-9;
        Matrix2::new(Complex64::new(dz, 0.0), plus, plus.conj(), Complex64::new(-dz, 0.0))
    }
}

/// Propagators at each sample time for the non-RWA drive, by fixed-step
/// fourth-order Runge-Kutta on the unitary with step at most `max_step` ns.
pub fn beyond_rwa_propagators(
    drive: &LabDrive,
    times: &[f64],
    max_step: f64,
) -> Result<Vec<Matrix2<Complex64>>> {
    let limit = drive.step_limit_ns();
    if !(max_step > 0.0) || max_step > limit {
        return Err(Error::IntegrationStep { step_ns: max_step, limit_ns: limit });
    }
    if times.iter().any(|&t| t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::parameter("times", "sample times must be ascending and >= 0"));
    }
    let f = |t: f64, u: &Matrix2<Complex64>| -> Matrix2<Complex64> { drive.rotating_frame_h(t) * u * (-I) };
    let mut u = Matrix2::<Complex64>::identity();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / max_step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                let ti = t + i as f64 * h;
                let k1 = f(ti, &u);
                let k2 = f(ti + 0.5 * h, &(u + k1 * Complex64::from(0.5 * h)));
                let k3 = f(ti + 0.5 * h, &(u + k2 * Complex64::from(0.5 * h)));
                let k4 = f(ti + h, &(u + k3 * Complex64::from(h)));
                u += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0);
            }
            t = target;
        }
        out.push(u);
    }
    Ok(out)
}

/// Non-RWA evolution of a two-level density matrix for `t` ns.
pub fn evolve_beyond_rwa(state: &DensityMatrix, drive: &LabDrive, t: f64, max_step: f64) -> Result<DensityMatrix> {
    let u = beyond_rwa_propagators(drive, &[t], max_step)?[0];
    let rho = Matrix2::from_fn(|i, j| state.0[(i, j)]);
    let out = u * rho * u.adjoint();
    Ok(DensityMatrix(CMatrix::from_fn(2, 2, |i, j| out[(i, j)])))
}

/// P⇑ trace from |⇓⟩ under the non-RWA drive.
pub fn beyond_rwa_trace(drive: &LabDrive, times: &[f64], max_step: f64) -> Result<Vec<f64>> {
    Ok(beyond_rwa_propagators(drive, times, max_step)?
        .iter()
        .map(|u| u[(1, 0)].norm_sqr())
        .collect())
}
