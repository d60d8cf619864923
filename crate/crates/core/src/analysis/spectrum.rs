//! Discrete spectra of uniformly sampled traces (times in ns).

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::fit::{least_squares, Bound};
use crate::error::{Error, Result};

/// Sample spacing of a uniform grid, or an error naming the irregularity.
pub fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::parameter("times", "need at least two samples"));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::parameter("times", "times must increase"));
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::parameter(
                "times",
                format!("non-uniform grid at sample {i}; resample onto a uniform grid first"),
            ));
        }
    }
    Ok(dt)
}

fn padded_fft(y: &[f64], first_weight: f64, factor: usize) -> Vec<Complex64> {
    let n = (y.len() * factor).next_power_of_two();
    let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf[0] *= first_weight;
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Frequency (Hz) of the largest spectral peak, its magnitude and the median
/// magnitude as a noise floor.
pub fn dominant_frequency(t: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let dt = uniform_step(t)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let spec = padded_fft(&centered, 1.0, 8);
    let n = spec.len();
    let half: Vec<f64> = spec[..n / 2].iter().map(|z| z.norm()).collect();
    let (mut k, mut peak) = (1usize, 0.0);
    for (i, &m) in half.iter().enumerate().skip(1) {
        if m > peak {
            peak = m;
            k = i;
        }
    }
    // parabolic refinement
    let mut kf = k as f64;
    if k + 1 < half.len() {
        let (a, b, c) = (half[k - 1], half[k], half[k + 1]);
        let d = a - 2.0 * b + c;
        if d != 0.0 {
            kf += (0.5 * (a - c) / d).clamp(-0.5, 0.5);
        }
    }
    let mut sorted = half[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    Ok((kf / (n as f64 * dt) * 1e9, peak, floor))
}

/// Spectrum of a decay envelope: frequency axis (Hz, from 0) and amplitude
/// of the cosine transform with the mean removed.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSpectrum {
    pub freqs_hz: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// σ (Hz) of a Gaussian fitted to the central feature.
    pub width_hz: f64,
    /// Frequency of the largest non-DC amplitude.
    pub peak_hz: f64,
}

fn cosine_transform(y: &[f64], dt: f64) -> Vec<f64> {
    // even extension of a one-sided trace, trapezoid weight on t = 0
    let spec = padded_fft(y, 0.5, 16);
    spec[..spec.len() / 2].iter().map(|z| 2.0 * dt * z.re).collect()
}

pub fn envelope_fft(t: &[f64], v: &[f64]) -> Result<EnvelopeSpectrum> {
    let dt = uniform_step(t)?;
    if t.len() != v.len() {
        return Err(Error::parameter("visibilities", "length differs from times"));
    }
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let amplitude = cosine_transform(&centered, dt);
    let m = amplitude.len() * 2;
    let df = 1e9 / (m as f64 * dt);
    let freqs_hz: Vec<f64> = (0..amplitude.len()).map(|k| k as f64 * df).collect();
    let length_hz = 1e9 / (n as f64 * dt);
    let dc_bins = (length_hz / df).ceil() as usize;
    let peak_idx = (dc_bins..amplitude.len())
        .max_by(|&a, &b| amplitude[a].abs().total_cmp(&amplitude[b].abs()))
        .unwrap_or(0);
    let peak_hz = freqs_hz[peak_idx];
    // The width fit uses the transform before mean removal: subtracting a
    // constant over a finite window adds a truncation sinc that would bias σ.
    let raw = cosine_transform(v, dt);
    let width_hz = gaussian_width(&freqs_hz, &raw, dc_bins).unwrap_or(f64::NAN);
    Ok(EnvelopeSpectrum { freqs_hz, amplitude, width_hz, peak_hz })
}

fn gaussian_width(f: &[f64], a: &[f64], skip: usize) -> Result<f64> {
    let a0 = a[0];
    if !(a0 > 0.0) {
        return Err(Error::fit("spectral_width", "no central feature"));
    }
    // central lobe: up to where the amplitude first drops below 2% of the peak
    let end = a.iter().position(|&x| x < 0.02 * a0).unwrap_or(a.len()).max(skip + 6);
    let end = end.min(a.len());
    let half = a.iter().position(|&x| x < 0.5 * a0).unwrap_or(end);
    let sigma0 = (f[half.max(1)] / (2.0 * 2f64.ln()).sqrt()).max(f[1]);
    let scale = sigma0;
    let xs: Vec<f64> = f[skip..end].iter().map(|x| x / scale).collect();
    let ys: Vec<f64> = a[skip..end].iter().map(|y| y / a0).collect();
    let fit = least_squares(
        "spectral_width",
        &xs,
        &ys,
        &["height", "sigma"],
        &[1.0, 1.0],
        &[Bound::Positive, Bound::Positive],
        |p, x| p[0] * (-0.5 * (x / p[1]).powi(2)).exp(),
    )?;
    Ok(fit.values[1] * scale)
}

/// Amplitude spectrum (Hz axis, |X|·2/N) of a uniformly sampled trace with
/// the mean removed.
pub fn amplitude_spectrum(t: &[f64], y: &[f64], pad_factor: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let dt = uniform_step(t)?;
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let spec = padded_fft(&centered, 1.0, pad_factor.max(1));
    let m = spec.len();
    let freqs = (0..m / 2).map(|k| k as f64 * 1e9 / (m as f64 * dt)).collect();
    let amps = spec[..m / 2].iter().map(|z| 2.0 * z.norm() / n as f64).collect();
    Ok((freqs, amps))
}

/// Amplitude of the sinusoidal component at `freq_hz` by Hann-weighted
/// projection on the mean-removed trace. The window keeps strong tones
/// elsewhere in the spectrum from leaking into the estimate.
pub fn tone_amplitude(t: &[f64], y: &[f64], freq_hz: f64) -> f64 {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let w = 2.0 * PI * freq_hz * 1e-9;
    let (mut c, mut s, mut norm) = (0.0, 0.0, 0.0);
    for (i, (&ti, &yi)) in t.iter().zip(y).enumerate() {
        let hann = if n > 1 { 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos() } else { 1.0 };
        c += hann * (yi - mean) * (w * ti).cos();
        s += hann * (yi - mean) * (w * ti).sin();
        norm += hann;
    }
    2.0 * (c * c + s * s).sqrt() / norm
}
