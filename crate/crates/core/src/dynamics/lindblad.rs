//! Adaptive Dormand-Prince 5(4) integration of the Lindblad master equation
//!
//! dρ/dt = -i[H(t), ρ] + Σ_k γ_k (L_k ρ L_k† - ½{L_k†L_k, ρ})
//!
//! with H in rad/ns and rates in 1/ns.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A collapse operator with its rate (1/ns).
#[derive(Debug, Clone)]
pub struct Dissipator {
    pub operator: CMatrix,
    pub rate: f64,
}

impl Dissipator {
    pub fn new(operator: CMatrix, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::parameter("dissipator.rate", format!("rate {rate} must be finite and >= 0")));
        }
        Ok(Dissipator { operator, rate })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step, ns.
    pub max_step: f64,
}

impl Tolerance {
    pub const ORACLE: Tolerance = Tolerance { rtol: 1e-8, atol: 1e-11, max_step: f64::INFINITY };
    pub const PRODUCTION: Tolerance = Tolerance { rtol: 1e-6, atol: 1e-9, max_step: f64::INFINITY };

    pub fn with_max_step(self, max_step: f64) -> Self {
        Tolerance { max_step, ..self }
    }
}

/// Hermitian, unit-trace, positive semidefinite density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub CMatrix);

impl DensityMatrix {
    pub fn pure(dim: usize, level: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(level, level)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn from_ket(ket: &[Complex64]) -> Self {
        let n = ket.len();
        DensityMatrix(CMatrix::from_fn(n, n, |i, j| ket[i] * ket[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks trace, Hermiticity and positivity at the given tolerance.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::Integrator(format!("trace {tr} deviates from 1")));
        }
        let h = self.hermiticity_error();
        if h > tol {
            return Err(Error::Integrator(format!("state not Hermitian ({h:e})")));
        }
        let m = self.min_eigenvalue();
        if m < -tol {
            return Err(Error::Integrator(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }
}

/// |i⟩⟨j| in dimension n.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

struct Prepared {
    ops: Vec<CMatrix>,
    ops_dag: Vec<CMatrix>,
    /// Σ γ L†L / 2
    anti: CMatrix,
}

fn prepare(dim: usize, dissipators: &[Dissipator]) -> Result<Prepared> {
    let mut ops = Vec::new();
    let mut ops_dag = Vec::new();
    let mut anti = CMatrix::zeros(dim, dim);
    for d in dissipators {
        if !(d.rate >= 0.0) {
            return Err(Error::parameter("dissipator.rate", format!("rate {} must be >= 0", d.rate)));
        }
        if d.operator.nrows() != dim || d.operator.ncols() != dim {
            return Err(Error::parameter("dissipator.operator", "dimension mismatch"));
        }
        if d.rate == 0.0 {
            continue;
        }
        let l = d.operator.scale(d.rate.sqrt());
        let ld = l.adjoint();
        anti += (&ld * &l).scale(0.5);
        ops.push(l);
        ops_dag.push(ld);
    }
    Ok(Prepared { ops, ops_dag, anti })
}

fn rhs(h: &CMatrix, p: &Prepared, rho: &CMatrix) -> CMatrix {
    // -i(Hρ - ρH) - {A, ρ} + Σ LρL†, with A = Σ L†L/2
    let k = h.map(|z| -I * z) - &p.anti;
    let mut out = &k * rho + rho * k.adjoint();
    for (l, ld) in p.ops.iter().zip(&p.ops_dag) {
        out += l * rho * ld;
    }
    out
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Evolve `rho` under `hamiltonian(t)` and `dissipators`, returning the state
/// at every entry of `times` (ascending, starting at or after `t0`).
pub fn evolve_lindblad_sampled<F>(
    rho: &DensityMatrix,
    hamiltonian: F,
    dissipators: &[Dissipator],
    t0: f64,
    times: &[f64],
    tol: Tolerance,
) -> Result<Vec<DensityMatrix>>
where
    F: Fn(f64) -> CMatrix,
{
    let dim = rho.dim();
    let prep = prepare(dim, dissipators)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::parameter("times", "sample times must be ascending and >= start"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut y = rho.0.clone();
    let mut t = t0;
    let mut h = 1e-3_f64.min(tol.max_step);
    let mut k1 = rhs(&hamiltonian(t), &prep, &y);
    let mut ks: Vec<CMatrix> = Vec::with_capacity(7);
    for &target in times {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            ks.clear();
            ks.push(k1.clone());
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in ks.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        ys += kj.scale(a * step);
                    }
                }
                let ts = t + C[s] * step;
                ks.push(rhs(&hamiltonian(ts), &prep, &ys));
                if s == 6 {
                    // FSAL: ys is the fifth-order solution
                    let mut err = CMatrix::zeros(dim, dim);
                    for (e, k) in E.iter().zip(&ks) {
                        if *e != 0.0 {
                            err += k.scale(e * step);
                        }
                    }
                    let mut norm = 0.0_f64;
                    for ((ev, yv), nv) in err.iter().zip(y.iter()).zip(ys.iter()) {
                        let sc = tol.atol + tol.rtol * yv.norm().max(nv.norm());
                        norm = norm.max(ev.norm() / sc);
                    }
                    if !norm.is_finite() {
                        return Err(Error::Integrator("non-finite error estimate".into()));
                    }
                    if norm <= 1.0 {
                        y = ys;
                        t = if last { target } else { t + step };
                        k1 = ks[6].clone();
                    }
                    let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                    // a clipped final step says little about the natural step size
                    if !(norm <= 1.0 && last) {
                        h = (step * factor).min(tol.max_step);
                    }
                    if h < 1e-14 * (1.0 + t.abs()) {
                        return Err(Error::Integrator(format!("step size underflow at t = {t} ns")));
                    }
                }
            }
        }
        out.push(DensityMatrix(y.clone()));
    }
    Ok(out)
}

/// Evolve `rho` for a duration `t` (ns).
pub fn evolve_lindblad<F>(
    rho: &DensityMatrix,
    hamiltonian: F,
    dissipators: &[Dissipator],
    t: f64,
    tol: Tolerance,
) -> Result<DensityMatrix>
where
    F: Fn(f64) -> CMatrix,
{
    if t < 0.0 {
        return Err(Error::parameter("t", "duration must be >= 0"));
    }
    let mut v = evolve_lindblad_sampled(rho, hamiltonian, dissipators, 0.0, &[t], tol)?;
    Ok(v.pop().expect("one sample"))
}

/// exp(-i H t) for Hermitian H.
pub fn unitary(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|e| (-I * e * t).exp()));
    let v = eig.eigenvectors;
    &v * phases * v.adjoint()
}
