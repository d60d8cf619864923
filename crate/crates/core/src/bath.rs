//! Semiclassical nuclear bath: a scalar Overhauser detuning per shot,
//! Hartmann-Hahn resonances with the nuclear species, and feedback cooling.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::analysis::fit::{fit_damped_oscillation, Envelope};
use crate::dynamics::two_level::{p_up, rwa_rotation_vector, BlochGenerator};
use crate::dynamics::{laser_flip_rate, SpinSystem};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearSpecies {
    pub name: String,
    pub gyromagnetic_hz_per_t: f64,
    pub weight: f64,
}

impl NuclearSpecies {
    pub fn larmor_hz(&self, b_field_t: f64) -> f64 {
        self.gyromagnetic_hz_per_t * b_field_t
    }
}

/// In-115, As-75, Ga-69 and Ga-71 with tabulated gyromagnetic ratios.
pub fn default_species() -> Vec<NuclearSpecies> {
    [("In-115", 9.3856e6, 1.0), ("As-75", 7.3150e6, 1.0), ("Ga-69", 10.247e6, 0.6), ("Ga-71", 13.021e6, 0.4)]
        .into_iter()
        .map(|(n, g, w)| NuclearSpecies { name: n.into(), gyromagnetic_hz_per_t: g, weight: w })
        .collect()
}

/// Extra Gaussian component for heavy-tailed cooled distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTail {
    /// Probability of drawing from the wide component.
    pub weight: f64,
    /// Width of the wide component relative to `sigma_hz`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverhauserState {
    /// Offset of the two-photon detuning, Hz.
    pub mean_hz: f64,
    pub sigma_hz: f64,
    pub set_point_hz: f64,
    pub heavy_tail: Option<HeavyTail>,
}

impl Default for OverhauserState {
    fn default() -> Self {
        OverhauserState { mean_hz: 0.0, sigma_hz: sigma_for_t2star(28.0), set_point_hz: 0.0, heavy_tail: None }
    }
}

/// σ (Hz) of a Gaussian detuning spread giving Ramsey decay exp[-(t/T2*)²].
pub fn sigma_for_t2star(t2star_ns: f64) -> f64 {
    2f64.sqrt() / (2.0 * PI * t2star_ns * 1e-9)
}

/// Inverse of [`sigma_for_t2star`].
pub fn t2star_for_sigma(sigma_hz: f64) -> f64 {
    2f64.sqrt() / (2.0 * PI * sigma_hz) * 1e9
}

/// Quasistatic Overhauser detuning for one shot.
pub fn sample_overhauser<R: Rng + ?Sized>(state: &OverhauserState, rng: &mut R) -> f64 {
    if state.sigma_hz <= 0.0 {
        return state.mean_hz;
    }
    let mut sigma = state.sigma_hz;
    if let Some(tail) = state.heavy_tail {
        if rng.random::<f64>() < tail.weight {
            sigma *= tail.scale;
        }
    }
    let z: f64 = rand_distr::StandardNormal.sample(rng);
    state.mean_hz + sigma * z
}

/// √(Ω² + δ²) - ω_n, all in Hz.
pub fn hartmann_hahn_mismatch(omega_hz: f64, delta_hz: f64, species: &NuclearSpecies, b_field_t: f64) -> f64 {
    omega_hz.hypot(delta_hz) - species.larmor_hz(b_field_t)
}

/// Resonance-conditioned damping of driven spin oscillations, standing in
/// for spin-nuclear flip-flops near the Hartmann-Hahn condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhChannel {
    pub enabled: bool,
    /// Damping rate at exact resonance for unit species weight, 1/ns.
    pub peak_rate: f64,
    /// Lorentzian half width of each resonance, Hz.
    pub width_hz: f64,
}

impl Default for HhChannel {
    fn default() -> Self {
        HhChannel { enabled: true, peak_rate: 5e-3, width_hz: 1e6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoolingMode {
    RabiDrive,
    QuantumSensing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingProtocol {
    pub mode: CoolingMode,
    pub n_cycles: usize,
    pub tau_min_ns: f64,
    pub tau_max_ns: f64,
    /// Hartmann-Hahn drive length, ns.
    pub tc_ns: f64,
    /// Hartmann-Hahn drive Rabi frequency, Hz.
    pub omega_c_hz: f64,
    pub readout_ns: f64,
    pub flip_efficiency: f64,
    /// Overhauser change from one effective nuclear flip, Hz.
    pub flip_step_hz: f64,
    /// Back-to-back cooling runs that shape the bath seen by one
    /// measurement; the bath keeps its state between repetitions.
    pub blocks: usize,
}

impl Default for CoolingProtocol {
    fn default() -> Self {
        CoolingProtocol {
            mode: CoolingMode::QuantumSensing,
            n_cycles: 35,
            tau_min_ns: 10.0,
            tau_max_ns: 600.0,
            tc_ns: 60.0,
            omega_c_hz: 26e6,
            readout_ns: 90.0,
            flip_efficiency: 0.8,
            flip_step_hz: 0.6e6,
            blocks: 20,
        }
    }
}

impl CoolingProtocol {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.tau_min_ns > self.tau_max_ns {
            out.push((
                "protocol".into(),
                format!("tau_min {} ns exceeds tau_max {} ns", self.tau_min_ns, self.tau_max_ns),
            ));
        }
        if [self.tau_min_ns, self.tau_max_ns, self.tc_ns, self.readout_ns].iter().any(|&d| !(d > 0.0)) {
            out.push(("protocol".into(), "all durations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.flip_efficiency) {
            out.push(("protocol.flip_efficiency".into(), "must lie in [0, 1]".into()));
        }
        if self.blocks == 0 {
            out.push(("protocol.blocks".into(), "must be >= 1".into()));
        }
        if self.flip_step_hz < 0.0 {
            out.push(("protocol.flip_step".into(), "must be >= 0".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((path, reason)) => Err(Error::parameter(&path, reason)),
            None => Ok(()),
        }
    }

    /// Sensing time of cycle `k`, ramped linearly from tau_min to tau_max.
    pub fn tau_at(&self, k: usize) -> f64 {
        if self.n_cycles <= 1 {
            return self.tau_min_ns;
        }
        self.tau_min_ns + (self.tau_max_ns - self.tau_min_ns) * k as f64 / (self.n_cycles - 1) as f64
    }

    /// Direction of the nuclear correction given the sensed spin x component.
    pub fn correction(&self, offset_hz: f64, sensed_x: f64) -> f64 {
        match self.mode {
            CoolingMode::QuantumSensing => -self.flip_step_hz * sensed_x.signum() * (sensed_x != 0.0) as u8 as f64,
            CoolingMode::RabiDrive => -self.flip_step_hz * offset_hz.signum() * (offset_hz != 0.0) as u8 as f64,
        }
    }

    /// Probability that a cycle flips one effective nuclear unit.
    pub fn flip_probability(&self, offset_hz: f64) -> f64 {
        match self.mode {
            CoolingMode::QuantumSensing => self.flip_efficiency,
            CoolingMode::RabiDrive => self.flip_efficiency * offset_hz.abs() / self.omega_c_hz.hypot(offset_hz),
        }
    }

    /// One full cooling run on a single Overhauser value.
    pub fn cool_once<R: Rng + ?Sized>(&self, overhauser_hz: f64, set_point_hz: f64, rng: &mut R) -> f64 {
        let mut oh = overhauser_hz;
        for k in 0..self.n_cycles {
            oh = self.cycle(k, oh, set_point_hz, rng);
        }
        oh
    }

    /// `runs` consecutive cooling runs on one Overhauser value.
    pub fn cool_repeated<R: Rng + ?Sized>(&self, overhauser_hz: f64, set_point_hz: f64, runs: usize, rng: &mut R) -> f64 {
        (0..runs).fold(overhauser_hz, |oh, _| self.cool_once(oh, set_point_hz, rng))
    }

    fn cycle<R: Rng + ?Sized>(&self, k: usize, oh: f64, set_point_hz: f64, rng: &mut R) -> f64 {
        let offset = oh - set_point_hz;
        // x component after π/2 and free precession for τ
        let sensed = (2.0 * PI * offset * self.tau_at(k) * 1e-9).sin();
        if rng.random::<f64>() < self.flip_probability(offset) {
            oh + self.correction(offset, sensed)
        } else {
            oh
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingStep {
    pub cycle: usize,
    pub mean_hz: f64,
    pub sigma_hz: f64,
}

/// Ensemble cooling: `runs` walkers drawn from `state`, all cycles applied;
/// returns ensemble mean and σ before the first cycle and after each cycle.
pub fn run_cooling(protocol: &CoolingProtocol, state: &OverhauserState, runs: usize, seed: u64) -> Result<Vec<CoolingStep>> {
    protocol.validate()?;
    if protocol.tau_max_ns * 1e-9 * state.sigma_hz > 10.0 {
        log::warn!("tau_max·σ = {:.1}: sensing phase wraps, feedback sign becomes ambiguous", protocol.tau_max_ns * 1e-9 * state.sigma_hz);
    }
    let mut walkers: Vec<f64> = (0..runs)
        .map(|i| sample_overhauser(state, &mut stream(seed, 0, i as u64)))
        .collect();
    let mut rngs: Vec<_> = (0..runs).map(|i| stream(seed, 1, i as u64)).collect();
    let stats = |w: &[f64], cycle| {
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        CoolingStep { cycle, mean_hz: mean, sigma_hz: var.sqrt() }
    };
    let mut out = vec![stats(&walkers, 0)];
    for k in 0..protocol.n_cycles {
        for (oh, rng) in walkers.iter_mut().zip(rngs.iter_mut()) {
            *oh = protocol.cycle(k, *oh, state.set_point_hz, rng);
        }
        out.push(stats(&walkers, k + 1));
    }
    Ok(out)
}

/// Re-thermalization after a delay: σ relaxes towards `sigma_thermal_hz`
/// with time constant `tau_heat_ns` (infinite means no heating).
pub fn heating_delay_probe(state: &OverhauserState, sigma_thermal_hz: f64, tau_heat_ns: f64, delay_ns: f64) -> Result<OverhauserState> {
    if delay_ns < 0.0 {
        return Err(Error::parameter("delay", "must be >= 0"));
    }
    let frac = if tau_heat_ns.is_infinite() { 0.0 } else { 1.0 - (-delay_ns / tau_heat_ns).exp() };
    Ok(OverhauserState { sigma_hz: state.sigma_hz + (sigma_thermal_hz - state.sigma_hz) * frac, ..state.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearBath {
    pub species: Vec<NuclearSpecies>,
    pub b_field_t: f64,
    pub overhauser: OverhauserState,
    pub hh: HhChannel,
    /// Re-thermalization time constant, ns.
    pub tau_heat_ns: f64,
}

impl Default for NuclearBath {
    fn default() -> Self {
        NuclearBath {
            species: default_species(),
            b_field_t: 2.9,
            overhauser: OverhauserState::default(),
            hh: HhChannel::default(),
            tau_heat_ns: f64::INFINITY,
        }
    }
}

impl NuclearBath {
    /// Extra damping rate (1/ns) of a drive with Rabi frequency `omega_hz`
    /// at two-photon detuning `delta_hz`.
    pub fn hh_damping_rate(&self, omega_hz: f64, delta_hz: f64) -> f64 {
        if !self.hh.enabled || omega_hz == 0.0 {
            return 0.0;
        }
        self.species
            .iter()
            .map(|s| {
                let m = hartmann_hahn_mismatch(omega_hz, delta_hz, s, self.b_field_t) / self.hh.width_hz;
                self.hh.peak_rate * s.weight / (1.0 + m * m)
            })
            .sum()
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.overhauser.sigma_hz < 0.0 {
            out.push(("bath.sigma".into(), "must be >= 0".into()));
        }
        if self.hh.width_hz <= 0.0 || self.hh.peak_rate < 0.0 {
            out.push(("bath.hh".into(), "width must be positive and peak rate >= 0".into()));
        }
        if self.species.iter().any(|s| s.weight < 0.0) {
            out.push(("bath.species".into(), "weights must be >= 0".into()));
        }
        out
    }
}

/// Resonant Rabi oscillation Q-factor with Overhauser spread, laser flips
/// and the Hartmann-Hahn channel, fitted from `shots` Monte-Carlo shots.
/// The same seed gives common random numbers across drive strengths.
pub fn rabi_q_factor_with_bath(
    omega_hz: f64,
    bath: &NuclearBath,
    system: &SpinSystem,
    optical_detuning_hz: f64,
    shots: usize,
    seed: u64,
) -> Result<f64> {
    if shots < 1000 {
        return Err(Error::parameter("shots", "need at least 1000 shots"));
    }
    let periods = 12.0;
    let n_t = 240;
    let t_end = periods / (omega_hz * 1e-9);
    let times: Vec<f64> = (0..n_t).map(|i| t_end * i as f64 / (n_t - 1) as f64).collect();
    let mut signal = vec![0.0; n_t];
    let flip = laser_flip_rate(omega_hz, optical_detuning_hz, system);
    let hh = bath.hh_damping_rate(omega_hz, 0.0);
    let (down, up) = system.relaxation_rates();
    let dt = times[1] - times[0];
    for shot in 0..shots {
        let delta = sample_overhauser(&bath.overhauser, &mut stream(seed, 0, shot as u64));
        let w = rwa_rotation_vector(omega_hz, delta, 0.0);
        let step = BlochGenerator::precession(&w)
            .with_axis_dephasing(&Vector3::x(), flip + hh)
            .with_relaxation(down, up)
            .propagator(dt);
        let mut r = Vector3::z();
        for s in signal.iter_mut() {
            *s += p_up(&r);
            r = step.apply(&r);
        }
    }
    for s in signal.iter_mut() {
        *s /= shots as f64;
    }
    Ok(fit_damped_oscillation(&times, &signal, Envelope::Exponential)?.q_factor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_gaussian_decay, spearman};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn larmor_range() {
        for s in default_species() {
            let f = s.larmor_hz(2.9);
            assert!((20e6..=50e6).contains(&f), "{} {}", s.name, f);
        }
        assert!((default_species()[0].larmor_hz(2.9) - 27.2e6).abs() < 0.05e6);
    }

    #[test]
    fn t2star_identity() {
        assert!((sigma_for_t2star(28.0) / 8.04e6 - 1.0).abs() < 0.005);
        assert!((sigma_for_t2star(535.0) / 0.42e6 - 1.0).abs() < 0.01);
        assert_relative_eq!(t2star_for_sigma(sigma_for_t2star(77.0)), 77.0, max_relative = 1e-12);
    }

    #[test]
    fn monte_carlo_ramsey_envelope() {
        // visibility ⟨cos 2πδt⟩ against exp[-(t/T2*)²]
        let state = OverhauserState::default();
        let mut rng = stream(5, 0, 0);
        let samples: Vec<f64> = (0..100_000).map(|_| sample_overhauser(&state, &mut rng)).collect();
        let times: Vec<f64> = (0..60).map(|i| i as f64 * 1.5).collect();
        let vis: Vec<f64> = times
            .iter()
            .map(|&t| samples.iter().map(|d| (2.0 * PI * d * t * 1e-9).cos()).sum::<f64>() / samples.len() as f64)
            .collect();
        for (t, v) in times.iter().zip(&vis) {
            assert!((v - (-(t / 28.0f64).powi(2)).exp()).abs() < 0.02);
        }
        let fit = fit_gaussian_decay(&times, &vis).unwrap();
        assert!((fit.t2 / 28.0 - 1.0).abs() < 0.03, "{}", fit.t2);
    }

    #[test]
    fn zero_sigma_returns_mean() {
        let s = OverhauserState { mean_hz: 3e6, sigma_hz: 0.0, ..OverhauserState::default() };
        assert_eq!(sample_overhauser(&s, &mut stream(1, 0, 0)), 3e6);
    }

    #[test]
    fn hh_zero_crossing() {
        let in115 = &default_species()[0];
        assert_eq!(hartmann_hahn_mismatch(in115.larmor_hz(2.9), 0.0, in115, 2.9), 0.0);
        let wn = in115.larmor_hz(2.9);
        let delta = (wn * wn - 13.6e6f64.powi(2)).sqrt();
        assert!((delta - 23.6e6).abs() < 0.1e6, "{delta}");
        assert!(hartmann_hahn_mismatch(13.6e6, delta, in115, 2.9).abs() < 1.0);
    }

    #[test]
    fn cooling_inactive_without_flips() {
        let p = CoolingProtocol { flip_efficiency: 0.0, ..CoolingProtocol::default() };
        let traj = run_cooling(&p, &OverhauserState::default(), 200, 3).unwrap();
        assert_eq!(traj[0], CoolingStep { cycle: 0, ..traj[traj.len() - 1] });
    }

    #[test]
    fn feedback_sign() {
        let p = CoolingProtocol::default();
        // above the set point, first half-turn of phase: correction is negative
        let offset = 5e6;
        let sensed = (2.0 * PI * offset * 20e-9).sin();
        assert!(sensed > 0.0);
        assert!(p.correction(offset, sensed) < 0.0);
        let r = CoolingProtocol { mode: CoolingMode::RabiDrive, ..p };
        assert!(r.correction(offset, 0.0) < 0.0);
    }

    #[test]
    fn sensing_narrows_monotonically() {
        let p = CoolingProtocol::default();
        let traj = run_cooling(&p, &OverhauserState::default(), 1000, 11).unwrap();
        let cycles: Vec<f64> = traj.iter().map(|s| s.cycle as f64).collect();
        let sig: Vec<f64> = traj.iter().map(|s| s.sigma_hz).collect();
        assert!(spearman(&cycles, &sig) < -0.95);
        // the core collapses onto the set point while sparse tails remain
        let state = OverhauserState::default();
        let cooled: Vec<f64> = (0..2000)
            .map(|i| {
                let oh = sample_overhauser(&state, &mut stream(4, 0, i));
                p.cool_once(oh, 0.0, &mut stream(4, 1, i))
            })
            .collect();
        let core = cooled.iter().filter(|x| x.abs() < 0.5e6).count() as f64 / cooled.len() as f64;
        assert!(core > 0.5, "{core}");
    }

    #[test]
    fn tau_ramp_and_validation() {
        let p = CoolingProtocol::default();
        assert_eq!(p.tau_at(0), 10.0);
        assert_eq!(p.tau_at(34), 600.0);
        let bad = CoolingProtocol { tau_min_ns: 700.0, ..p };
        assert_eq!(bad.violations()[0].0, "protocol");
    }

    #[test]
    fn heating() {
        let s = OverhauserState { sigma_hz: 0.4e6, ..OverhauserState::default() };
        let same = heating_delay_probe(&s, 8e6, f64::INFINITY, 1e6).unwrap();
        assert_eq!(same.sigma_hz, 0.4e6);
        assert_eq!(heating_delay_probe(&s, 8e6, 1e6, 0.0).unwrap(), s);
        let moved = heating_delay_probe(&s, 8e6, 1e6, 1e6).unwrap();
        assert!(((moved.sigma_hz - 0.4e6) / 7.6e6 - 0.632).abs() < 1e-3);
    }

    #[test]
    fn q_from_flips_only() {
        let bath = NuclearBath {
            overhauser: OverhauserState { sigma_hz: 0.0, ..OverhauserState::default() },
            hh: HhChannel { enabled: false, ..HhChannel::default() },
            ..NuclearBath::default()
        };
        let sys = SpinSystem { flip_coefficient: 0.5e-4, ..SpinSystem::default() };
        let q = rabi_q_factor_with_bath(95e6, &bath, &sys, 320e9, 1000, 1).unwrap();
        assert!((30.0..=40.0).contains(&q), "{q}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mismatch_monotone(d1 in 0.0f64..1e9, d2 in 0.0f64..1e9, om in 0.0f64..100e6) {
            let s = &default_species()[1];
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(hartmann_hahn_mismatch(om, lo, s, 2.9) <= hartmann_hahn_mismatch(om, hi, s, 2.9));
            prop_assert_eq!(hartmann_hahn_mismatch(om, lo, s, 2.9), hartmann_hahn_mismatch(om, -lo, s, 2.9));
        }

        #[test]
        fn cooling_does_not_push_mean_away(mean in -6e6f64..6e6, seed in 0u64..1000) {
            for mode in [CoolingMode::QuantumSensing, CoolingMode::RabiDrive] {
                let p = CoolingProtocol { mode, ..CoolingProtocol::default() };
                let s = OverhauserState { mean_hz: mean, sigma_hz: 2e6, ..OverhauserState::default() };
                let traj = run_cooling(&p, &s, 400, seed).unwrap();
                let before = traj[0].mean_hz;
                let after = traj[traj.len() - 1].mean_hz;
                // allow three standard errors of the initial ensemble mean
                let tol = 3.0 * traj[0].sigma_hz / 20.0;
                prop_assert!(after.abs() <= before.abs() + tol, "{before} -> {after}");
            }
        }
    }
}
