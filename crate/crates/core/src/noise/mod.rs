//! Classical detuning noise: spectra, filter-function coherence for
//! free evolution, Hahn and CPMG timing, and time-domain realizations.
//!
//! Spectra are two-sided in angular frequency: S(ω) = ∫⟨δω(0)δω(τ)⟩e^{iωτ}dτ
//! with δω in rad/s, so the variance is (1/π)∫₀^∞ S dω and a Gaussian phase
//! φ gives visibility exp(-χ) with χ = ⟨φ²⟩/2.

pub mod filter;
pub mod trajectory;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use filter::{
    calibrate_amplitude, coherence_from_filter_function, coherence_with_relaxation, decoherence_exponent,
    t2_from_filter_function, PhaseStructure,
};
pub use trajectory::{
    ensemble_visibility, generate_noise_trajectory, generate_ou_sum, simulate_dd_sequence_timedomain,
    timedomain_visibility, NoiseTrajectory, TrajectoryKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    /// Power-law amplitude A in S(ω) = A/ω^β, units (rad/s)^(1+β).
    pub amplitude: f64,
    pub beta: f64,
    pub low_cutoff_hz: f64,
    pub high_cutoff_hz: f64,
    /// Flat level W in (rad/s)²/(rad/s), unbounded in frequency.
    pub white_level: Option<f64>,
    /// Shot-to-shot Gaussian offset σ, Hz.
    pub quasistatic_sigma_hz: f64,
}

impl Default for NoiseSpectrum {
    fn default() -> Self {
        NoiseSpectrum {
            amplitude: 0.0,
            beta: 0.45,
            low_cutoff_hz: 10.0,
            high_cutoff_hz: 100e6,
            white_level: None,
            quasistatic_sigma_hz: 0.0,
        }
    }
}

impl NoiseSpectrum {
    pub fn power_law(amplitude: f64, beta: f64) -> Self {
        NoiseSpectrum { amplitude, beta, ..NoiseSpectrum::default() }
    }

    pub fn white(level: f64) -> Self {
        NoiseSpectrum { amplitude: 0.0, white_level: Some(level), ..NoiseSpectrum::default() }
    }

    pub fn quasistatic(sigma_hz: f64) -> Self {
        NoiseSpectrum { amplitude: 0.0, quasistatic_sigma_hz: sigma_hz, ..NoiseSpectrum::default() }
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(0.0..=2.0).contains(&self.beta) {
            out.push(("noise.beta".into(), format!("{} outside [0, 2]", self.beta)));
        }
        if self.low_cutoff_hz < 0.0 || !(self.high_cutoff_hz > 0.0) || self.low_cutoff_hz >= self.high_cutoff_hz {
            out.push(("noise.cutoffs".into(), "need 0 <= low < high".into()));
        }
        if self.amplitude < 0.0 || self.white_level.is_some_and(|w| w < 0.0) || self.quasistatic_sigma_hz < 0.0 {
            out.push(("noise.amplitude".into(), "levels must be >= 0".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((path, reason)) => Err(Error::parameter(&path, reason)),
            None => Ok(()),
        }
    }

    /// Continuous part of S(ω), excluding the quasistatic offset.
    pub fn density(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let mut s = self.white_level.unwrap_or(0.0);
        if self.amplitude > 0.0 && w >= 2.0 * PI * self.low_cutoff_hz && w <= 2.0 * PI * self.high_cutoff_hz {
            s += self.amplitude / w.powf(self.beta);
        }
        s
    }

    /// (1/π)∫ S dω over [w0, w1] ⊂ [0, ∞) for the continuous part.
    pub fn band_variance(&self, w0: f64, w1: f64) -> f64 {
        let mut v = self.white_level.unwrap_or(0.0) * (w1 - w0) / PI;
        if self.amplitude > 0.0 {
            let a = w0.max(2.0 * PI * self.low_cutoff_hz);
            let b = w1.min(2.0 * PI * self.high_cutoff_hz);
            if b > a {
                let integral = if (self.beta - 1.0).abs() < 1e-12 {
                    (b / a).ln()
                } else {
                    (b.powf(1.0 - self.beta) - a.powf(1.0 - self.beta)) / (1.0 - self.beta)
                };
                v += self.amplitude * integral / PI;
            }
        }
        v
    }

    /// Same spectrum with the power-law and white parts scaled by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        NoiseSpectrum {
            amplitude: self.amplitude * k,
            white_level: self.white_level.map(|w| w * k),
            ..self.clone()
        }
    }
}

/// Timing pattern of π pulses inside a precession window of length T.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DdSequence {
    Free,
    Hahn,
    Cpmg(usize),
}

impl DdSequence {
    pub fn pulses(&self) -> usize {
        match *self {
            DdSequence::Free => 0,
            DdSequence::Hahn => 1,
            DdSequence::Cpmg(n) => n,
        }
    }

    /// π-pulse times as fractions of T, at (j - ½)/N.
    pub fn switch_fractions(&self) -> Vec<f64> {
        let n = self.pulses();
        (1..=n).map(|j| (j as f64 - 0.5) / n as f64).collect()
    }

    /// Interval boundaries in [0, T] with the toggling sign on each interval.
    pub fn intervals(&self, t: f64) -> Vec<(f64, f64, f64)> {
        let mut edges = vec![0.0];
        edges.extend(self.switch_fractions().into_iter().map(|f| f * t));
        edges.push(t);
        edges
            .windows(2)
            .enumerate()
            .map(|(k, w)| (w[0], w[1], if k % 2 == 0 { 1.0 } else { -1.0 }))
            .collect()
    }
}
