//! Time-domain noise realizations and toggled-phase accumulation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use super::{DdSequence, NoiseSpectrum};
use crate::error::{Error, Result};
use crate::rng::stream;

const LOW_MODES_PER_DECADE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryKind {
    Quasistatic,
    PowerLaw,
    OuSum,
}

/// Detuning samples δ(t_j), Hz, at t_j = j·dt_ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrajectory {
    pub dt_ns: f64,
    pub values_hz: Vec<f64>,
    pub kind: TrajectoryKind,
}

impl NoiseTrajectory {
    pub fn duration_ns(&self) -> f64 {
        (self.values_hz.len().saturating_sub(1)) as f64 * self.dt_ns
    }

    fn value_at(&self, t: f64) -> f64 {
        let x = t / self.dt_ns;
        let i = (x.floor() as usize).min(self.values_hz.len() - 2);
        let f = x - i as f64;
        self.values_hz[i] * (1.0 - f) + self.values_hz[i + 1] * f
    }

    /// ∫ δ dt over [a, b] for the piecewise-linear interpolant, Hz·ns.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let mut sum = 0.0;
        let mut t0 = a;
        let mut v0 = self.value_at(a);
        let mut j = (a / self.dt_ns).floor() as usize + 1;
        loop {
            let t1 = (j as f64 * self.dt_ns).min(b);
            let v1 = self.value_at(t1);
            sum += 0.5 * (v0 + v1) * (t1 - t0);
            if t1 >= b {
                return sum;
            }
            t0 = t1;
            v0 = v1;
            j += 1;
        }
    }
}

/// Reusable sampler for one spectrum and time grid.
pub struct NoiseGenerator {
    spectrum: NoiseSpectrum,
    dt_ns: f64,
    samples: usize,
    fft: Option<(Arc<dyn Fft<f64>>, Vec<f64>)>,
    /// (angular frequency rad/s, variance (rad/s)²) below the FFT grid.
    low_modes: Vec<(f64, f64)>,
}

impl NoiseGenerator {
    pub fn new(spectrum: &NoiseSpectrum, duration_ns: f64, dt_ns: f64) -> Result<Self> {
        spectrum.validate()?;
        if !(dt_ns > 0.0) || !(duration_ns >= 0.0) {
            return Err(Error::parameter("dt", "need dt > 0 and duration >= 0"));
        }
        if spectrum.amplitude > 0.0 {
            let nyquist_dt = 0.5e9 / spectrum.high_cutoff_hz;
            if dt_ns > nyquist_dt {
                return Err(Error::Aliasing { dt_ns, high_cutoff_hz: spectrum.high_cutoff_hz });
            }
            if dt_ns > 0.2 * nyquist_dt {
                log::warn!("dt = {dt_ns} ns is close to the aliasing limit {nyquist_dt} ns");
            }
        }
        let samples = (duration_ns / dt_ns).round() as usize + 1;
        let continuous = spectrum.amplitude > 0.0 || spectrum.white_level.is_some_and(|w| w > 0.0);
        let mut fft = None;
        let mut low_modes = Vec::new();
        if continuous {
            let n = (2 * samples).next_power_of_two().max(16);
            let dw = 2.0 * PI / (n as f64 * dt_ns * 1e-9);
            let variances = (1..=n / 2)
                .map(|k| {
                    let lo = (k as f64 - 0.5) * dw;
                    let hi = if k == n / 2 { k as f64 * dw } else { (k as f64 + 0.5) * dw };
                    spectrum.band_variance(lo, hi)
                })
                .collect();
            fft = Some((FftPlanner::new().plan_fft_inverse(n), variances));
            let floor = if spectrum.amplitude > 0.0 {
                (2.0 * PI * spectrum.low_cutoff_hz).max(1e-6 * dw)
            } else {
                1e-3 * dw
            };
            let top = 0.5 * dw;
            if floor < top {
                let m = ((top / floor).log10() * LOW_MODES_PER_DECADE).ceil().max(1.0) as usize;
                for i in 0..m {
                    let a = floor * (top / floor).powf(i as f64 / m as f64);
                    let b = floor * (top / floor).powf((i + 1) as f64 / m as f64);
                    low_modes.push(((a * b).sqrt(), spectrum.band_variance(a, b)));
                }
            }
        }
        Ok(NoiseGenerator { spectrum: spectrum.clone(), dt_ns, samples, fft, low_modes })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseTrajectory {
        let mut values = vec![0.0; self.samples];
        let mut kind = TrajectoryKind::Quasistatic;
        if let Some((plan, variances)) = &self.fft {
            kind = TrajectoryKind::PowerLaw;
            let n = plan.len();
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (k, v) in variances.iter().enumerate() {
                let sd = v.sqrt();
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                buf[k + 1] = Complex64::new(sd * a, -sd * b);
            }
            plan.process(&mut buf);
            for (x, c) in values.iter_mut().zip(&buf) {
                *x = c.re / (2.0 * PI);
            }
            for &(w, var) in &self.low_modes {
                let sd = var.sqrt() / (2.0 * PI);
                let za: f64 = StandardNormal.sample(rng);
                let zb: f64 = StandardNormal.sample(rng);
                let (a, b) = (sd * za, sd * zb);
                for (j, x) in values.iter_mut().enumerate() {
                    let th = w * j as f64 * self.dt_ns * 1e-9;
                    *x += a * th.cos() + b * th.sin();
                }
            }
        }
        if self.spectrum.quasistatic_sigma_hz > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            let offset = self.spectrum.quasistatic_sigma_hz * z;
            values.iter_mut().for_each(|x| *x += offset);
        }
        NoiseTrajectory { dt_ns: self.dt_ns, values_hz: values, kind }
    }
}

/// One realization of `spectrum` on [0, duration] with step `dt`.
pub fn generate_noise_trajectory<R: Rng + ?Sized>(
    spectrum: &NoiseSpectrum,
    duration_ns: f64,
    dt_ns: f64,
    rng: &mut R,
) -> Result<NoiseTrajectory> {
    Ok(NoiseGenerator::new(spectrum, duration_ns, dt_ns)?.sample(rng))
}

/// Power-law noise as a sum of Ornstein-Uhlenbeck processes with corner
/// rates spread log-uniformly between the cutoffs. Requires 0 < β < 2.
pub fn generate_ou_sum<R: Rng + ?Sized>(
    spectrum: &NoiseSpectrum,
    duration_ns: f64,
    dt_ns: f64,
    modes_per_decade: usize,
    rng: &mut R,
) -> Result<NoiseTrajectory> {
    spectrum.validate()?;
    if !(spectrum.beta > 0.0 && spectrum.beta < 2.0) || spectrum.low_cutoff_hz <= 0.0 {
        return Err(Error::parameter("noise.beta", "OU sum needs 0 < beta < 2 and a positive low cutoff"));
    }
    let (w0, w1) = (2.0 * PI * spectrum.low_cutoff_hz, 2.0 * PI * spectrum.high_cutoff_hz);
    let m = ((w1 / w0).log10() * modes_per_decade as f64).ceil().max(1.0) as usize;
    let spacing = (w1 / w0).ln() / m as f64;
    let c = spectrum.amplitude * spacing * (PI * (2.0 - spectrum.beta) / 2.0).sin() / PI;
    let dt = dt_ns * 1e-9;
    let samples = (duration_ns / dt_ns).round() as usize + 1;
    let mut values = vec![0.0; samples];
    for i in 0..=m {
        let rate = w0 * (spacing * i as f64).exp();
        let sd = (c * rate.powf(1.0 - spectrum.beta)).sqrt() / (2.0 * PI);
        let decay = (-rate * dt).exp();
        let kick = sd * (1.0 - decay * decay).sqrt();
        let z0: f64 = StandardNormal.sample(rng);
        let mut x = sd * z0;
        for v in values.iter_mut() {
            *v += x;
            let z: f64 = StandardNormal.sample(rng);
            x = x * decay + kick * z;
        }
    }
    Ok(NoiseTrajectory { dt_ns, values_hz: values, kind: TrajectoryKind::OuSum })
}

/// Toggled phase 2π∫s(t)δ(t)dt (radians) accumulated over a window of
/// length `t_ns`, with the trajectory linearly interpolated between samples.
pub fn simulate_dd_sequence_timedomain(traj: &NoiseTrajectory, seq: DdSequence, t_ns: f64) -> Result<f64> {
    if traj.values_hz.len() < 2 || traj.duration_ns() < t_ns * (1.0 - 1e-12) {
        return Err(Error::parameter("trajectory", format!("covers {} ns, need {t_ns} ns", traj.duration_ns())));
    }
    let t = t_ns.min(traj.duration_ns());
    let cycles: f64 = seq.intervals(t).into_iter().map(|(a, b, s)| s * traj.integral(a, b)).sum();
    Ok(2.0 * PI * cycles * 1e-9)
}

/// |⟨e^{iφ}⟩| over an ensemble of phases.
pub fn ensemble_visibility(phases: &[f64]) -> f64 {
    let n = phases.len() as f64;
    let (c, s) = phases.iter().fold((0.0, 0.0), |(c, s), p| (c + p.cos(), s + p.sin()));
    (c / n).hypot(s / n)
}

/// Monte-Carlo visibility at each window length in `t_ns`, one trajectory
/// per realization shared across window lengths.
pub fn timedomain_visibility(
    spectrum: &NoiseSpectrum,
    seq: DdSequence,
    t_ns: &[f64],
    dt_ns: f64,
    realizations: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let longest = t_ns.iter().cloned().fold(0.0, f64::max);
    let generator = NoiseGenerator::new(spectrum, longest, dt_ns)?;
    let phases: Vec<Vec<f64>> = (0..realizations)
        .into_par_iter()
        .map(|i| {
            let traj = generator.sample(&mut stream(seed, 0, i as u64));
            t_ns.iter().map(|&t| simulate_dd_sequence_timedomain(&traj, seq, t)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..t_ns.len())
        .map(|k| ensemble_visibility(&phases.iter().map(|p| p[k]).collect::<Vec<_>>()))
        .collect())
}
