//! Optical pumping on the four-level hole/trion system.
//!
//! Levels: 0 = |⇓⟩, 1 = |⇑⟩, 2 = |⇑⇓,↑⟩ (driven from |⇑⟩), 3 = |⇑⇓,↓⟩.
//! The pump is resonant with |⇑⟩ ↔ level 2; an optional weaker coupling of
//! |⇓⟩ to the same trion, detuned by the hole Zeeman splitting, limits the
//! steady-state spin polarization.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lindblad::{evolve_lindblad_sampled, ket_bra, CMatrix, DensityMatrix, Dissipator, Tolerance};
use super::two_level::{AffineMap, HZ_TO_RAD_PER_NS};
use super::SpinSystem;
use crate::analysis::fit::fit_exponential_decay;
use crate::error::{Error, Result};

pub const DOWN: usize = 0;
pub const UP: usize = 1;
pub const TRION_UP: usize = 2;
pub const TRION_DOWN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// Bright-state population before initialization.
    pub rho11_initial: f64,
    /// ρ22/(ρ11+ρ22) of the trion-excited fraction.
    pub theta: f64,
    /// Pump Rabi frequency on |⇑⟩ ↔ trion, Hz.
    pub pump_rabi_hz: f64,
    pub readout_duration_ns: f64,
    /// Counts per unit of integrated emission γx·ρ_trion.
    pub detection_scale: f64,
    /// Coupling of |⇓⟩ to the pumped trion relative to the pump transition.
    pub repump_ratio: f64,
    pub lower_bound: bool,
    /// Draw Poisson counts instead of expectation values.
    pub shot_noise: bool,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        ReadoutModel {
            rho11_initial: 1.0,
            theta: 0.0,
            pump_rabi_hz: 1.71e9,
            readout_duration_ns: 90.0,
            detection_scale: 1.0,
            repump_ratio: 0.0,
            lower_bound: true,
            shot_noise: false,
        }
    }
}

impl ReadoutModel {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.rho11_initial) {
            out.push(("readout.rho11_initial".into(), "must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            out.push(("readout.theta".into(), "must lie in [0, 1]".into()));
        }
        if self.pump_rabi_hz < 0.0 || self.readout_duration_ns < 0.0 || self.detection_scale < 0.0 {
            out.push(("readout".into(), "pump, duration and detection scale must be >= 0".into()));
        }
        out
    }
}

/// Initialization fidelity from the transient: with r = I_ss/I_peak,
/// F = 1 - ρ11·r + ρ11·Θ·(γx/γ0)·r, or 1 - r as a lower bound.
pub fn initialization_fidelity(
    i_peak: f64,
    i_ss: f64,
    rho11: f64,
    theta: f64,
    gamma_x: f64,
    gamma_total: f64,
    lower_bound: bool,
) -> Result<f64> {
    if i_peak == 0.0 || !i_peak.is_finite() {
        return Err(Error::parameter("i_peak", "peak intensity is zero; fidelity undefined"));
    }
    let r = i_ss / i_peak;
    if lower_bound {
        return Ok(1.0 - r);
    }
    Ok(1.0 - rho11 * r + rho11 * theta * (gamma_x / gamma_total) * r)
}

/// Pump Rabi frequency (Hz) giving a pumping 1/e time `init_time_ns` in the
/// rate-equation limit: rate = γy·ρ_trion with ρ_trion = s/(2(1+s)) and
/// saturation s = 2Ω²/γ0².
pub fn pump_rabi_for_init_time(system: &SpinSystem, init_time_ns: f64) -> Result<f64> {
    let rho = 1.0 / (init_time_ns * system.gamma_y);
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::parameter(
            "init_time",
            format!("{init_time_ns} ns is faster than the branching ratio allows"),
        ));
    }
    let s = 2.0 * rho / (1.0 - 2.0 * rho);
    let omega = system.gamma_total() * (s / 2.0).sqrt();
    Ok(omega / HZ_TO_RAD_PER_NS)
}

fn pump_hamiltonian(system: &SpinSystem, model: &ReadoutModel) -> CMatrix {
    let w = HZ_TO_RAD_PER_NS * model.pump_rabi_hz;
    let mut h = (ket_bra(4, UP, TRION_UP) + ket_bra(4, TRION_UP, UP)).scale(0.5 * w);
    if model.repump_ratio != 0.0 {
        h += (ket_bra(4, DOWN, TRION_UP) + ket_bra(4, TRION_UP, DOWN)).scale(0.5 * w * model.repump_ratio);
        h[(DOWN, DOWN)] = Complex64::new(-HZ_TO_RAD_PER_NS * system.zeeman_hz, 0.0);
    }
    h
}

fn trion_decays(system: &SpinSystem) -> Vec<Dissipator> {
    vec![
        Dissipator { operator: ket_bra(4, UP, TRION_UP), rate: system.gamma_x },
        Dissipator { operator: ket_bra(4, DOWN, TRION_UP), rate: system.gamma_y },
        Dissipator { operator: ket_bra(4, DOWN, TRION_DOWN), rate: system.gamma_x },
        Dissipator { operator: ket_bra(4, UP, TRION_DOWN), rate: system.gamma_y },
    ]
}

/// Four-level evolution under the pump, sampled at `times` (ns from 0).
pub fn pump_evolution(
    system: &SpinSystem,
    model: &ReadoutModel,
    rho0: &DensityMatrix,
    times: &[f64],
    tol: Tolerance,
) -> Result<Vec<DensityMatrix>> {
    let h = pump_hamiltonian(system, model);
    evolve_lindblad_sampled(rho0, |_| h.clone(), &trion_decays(system), 0.0, times, tol)
}

/// Detected signal rate (counts/ns) for a four-level state.
pub fn emission_rate(system: &SpinSystem, model: &ReadoutModel, rho: &DensityMatrix) -> f64 {
    model.detection_scale * system.gamma_x * rho.population(TRION_UP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitializationResult {
    pub times_ns: Vec<f64>,
    pub signal: Vec<f64>,
    pub i_peak: f64,
    pub i_ss: f64,
    /// 1/e time of the fitted transient, ns.
    pub init_time_ns: f64,
    pub fidelity: f64,
}

/// Pump a spin prepared with bright-state population ρ11(0) and return the
/// fluorescence transient and the fidelity formula evaluated on the fitted
/// peak and steady-state levels.
pub fn simulate_initialization(
    model: &ReadoutModel,
    system: &SpinSystem,
    duration_ns: f64,
) -> Result<InitializationResult> {
    if !(duration_ns > 0.0) {
        return Err(Error::parameter("duration", "must be positive"));
    }
    let n = 400;
    let times: Vec<f64> = (0..=n).map(|i| duration_ns * i as f64 / n as f64).collect();
    let mut rho0 = CMatrix::zeros(4, 4);
    rho0[(UP, UP)] = Complex64::new(model.rho11_initial, 0.0);
    rho0[(DOWN, DOWN)] = Complex64::new(1.0 - model.rho11_initial, 0.0);
    let states = pump_evolution(system, model, &DensityMatrix(rho0), &times, Tolerance::PRODUCTION)?;
    let signal: Vec<f64> = states.iter().map(|s| emission_rate(system, model, s)).collect();
    let peak_idx = signal
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let raw_peak = signal[peak_idx];
    if raw_peak <= 0.0 {
        return Err(Error::parameter("i_peak", "no fluorescence; fidelity undefined"));
    }
    let tail_t: Vec<f64> = times[peak_idx..].iter().map(|t| t - times[peak_idx]).collect();
    let fit = fit_exponential_decay(&tail_t, &signal[peak_idx..])?;
    let i_peak = fit.amplitude + fit.offset;
    let i_ss = fit.offset.max(0.0);
    let fidelity = initialization_fidelity(
        i_peak,
        i_ss,
        model.rho11_initial,
        model.theta,
        system.gamma_x,
        system.gamma_total(),
        model.lower_bound,
    )?;
    Ok(InitializationResult { times_ns: times, signal, i_peak, i_ss, init_time_ns: fit.tau, fidelity })
}

/// Effect of a pump window on the ground-state spin, linear in the incoming
/// Bloch vector r: the outgoing ground Bloch vector (any trion population
/// left at the end is allowed to decay) and the expected counts c0 + c·r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpWindow {
    pub map: AffineMap,
    pub counts_offset: f64,
    pub counts_gradient: Vector3<f64>,
}

impl PumpWindow {
    pub fn counts(&self, r: &Vector3<f64>) -> f64 {
        self.counts_offset + self.counts_gradient.dot(r)
    }

    pub fn compute(system: &SpinSystem, model: &ReadoutModel, duration_ns: f64) -> Result<PumpWindow> {
        if duration_ns < 0.0 {
            return Err(Error::parameter("duration", "must be >= 0"));
        }
        if duration_ns == 0.0 {
            return Ok(PumpWindow { map: AffineMap::identity(), counts_offset: 0.0, counts_gradient: Vector3::zeros() });
        }
        let n = 800;
        let times: Vec<f64> = (0..=n).map(|i| duration_ns * i as f64 / n as f64).collect();
        let h = pump_hamiltonian(system, model);
        let diss = trion_decays(system);
        let one = Complex64::new(0.5, 0.0);
        let half_i = Complex64::new(0.0, 0.5);
        // ρ = (I + r·σ)/2 on the ground block; evolve I/2 and σ_k/2
        let mut inputs = vec![CMatrix::zeros(4, 4); 4];
        inputs[0][(DOWN, DOWN)] = one;
        inputs[0][(UP, UP)] = one;
        inputs[1][(DOWN, UP)] = one;
        inputs[1][(UP, DOWN)] = one;
        inputs[2][(DOWN, UP)] = -half_i;
        inputs[2][(UP, DOWN)] = half_i;
        inputs[3][(DOWN, DOWN)] = one;
        inputs[3][(UP, UP)] = -one;
        let gx = system.gamma_x / system.gamma_total();
        let gy = system.gamma_y / system.gamma_total();
        let mut outs = Vec::with_capacity(4);
        let mut counts = Vec::with_capacity(4);
        for input in inputs {
            let tol = Tolerance { rtol: 1e-9, atol: 1e-12, max_step: f64::INFINITY };
            let states = evolve_lindblad_sampled(&DensityMatrix(input), |_| h.clone(), &diss, 0.0, &times, tol)?;
            let rates: Vec<f64> = states.iter().map(|s| emission_rate(system, model, s)).collect();
            counts.push(simpson(&rates, duration_ns / n as f64));
            let end = &states.last().expect("samples").0;
            let t_up = end[(TRION_UP, TRION_UP)].re;
            let t_down = end[(TRION_DOWN, TRION_DOWN)].re;
            let p_down = end[(DOWN, DOWN)].re + gy * t_up + gx * t_down;
            let p_up = end[(UP, UP)].re + gx * t_up + gy * t_down;
            let coh = end[(UP, DOWN)];
            outs.push(Vector3::new(2.0 * coh.re, 2.0 * coh.im, p_down - p_up));
        }
        let map = AffineMap { m: nalgebra::Matrix3::from_columns(&[outs[1], outs[2], outs[3]]), c: outs[0] };
        Ok(PumpWindow {
            map,
            counts_offset: counts[0],
            counts_gradient: Vector3::new(counts[1], counts[2], counts[3]),
        })
    }
}

fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    if n % 2 == 1 {
        // trapezoid fallback
        return h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n]));
    }
    let mut s = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}
