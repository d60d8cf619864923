//! Filter-function coherence: χ(T) = (1/2π)∫₀^∞ S(ω)|Y(ω)|² dω, where
//! Y(ω) = ∫ s(t)e^{iωt}dt is the transform of the toggling function.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::{DdSequence, NoiseSpectrum};
use crate::error::{Error, Result};

/// Uniform segments per half-period of the slowest filter oscillation.
const SEGMENTS_PER_HALF_PERIOD: f64 = 2.0;
/// Upper edge of the resolved region, in multiples of 2π·(intervals)/T.
const RESOLVED_MULTIPLE: f64 = 50.0;
const LOG_SEGMENTS_PER_DECADE: f64 = 12.0;
const GL_ORDER: usize = 8;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

struct Toggling {
    /// (midpoint, length, sign) in seconds.
    pieces: Vec<(f64, f64, f64)>,
    /// Σ of squared jump coefficients; sets the high-frequency average of ω²|Y|².
    jump_power: f64,
}

impl Toggling {
    fn new(seq: DdSequence, t_s: f64) -> Self {
        let iv = seq.intervals(t_s);
        let pieces = iv.iter().map(|&(a, b, s)| (0.5 * (a + b), b - a, s)).collect();
        let m = iv.len();
        let sign = |k: isize| if k < 0 || k as usize >= m { 0.0 } else { iv[k as usize].2 };
        let jump_power = (0..=m as isize).map(|j| (sign(j - 1) - sign(j)).powi(2)).sum();
        Toggling { pieces, jump_power }
    }

    fn y_squared(&self, omega: f64) -> f64 {
        self.pieces
            .iter()
            .map(|&(mid, len, s)| Complex64::from_polar(s * len * sinc(0.5 * omega * len), omega * mid))
            .sum::<Complex64>()
            .norm_sqr()
    }

    fn area(&self) -> f64 {
        self.pieces.iter().map(|&(_, len, s)| s * len).sum()
    }
}

/// χ(T) for a sequence of total precession time `t_ns`.
pub fn decoherence_exponent(seq: DdSequence, spectrum: &NoiseSpectrum, t_ns: f64) -> Result<f64> {
    spectrum.validate()?;
    if !(t_ns >= 0.0) {
        return Err(Error::parameter("T", "must be >= 0"));
    }
    if t_ns == 0.0 {
        return Ok(0.0);
    }
    let t = t_ns * 1e-9;
    let tog = Toggling::new(seq, t);
    let y0 = tog.area();
    let static_part = 0.5 * (2.0 * PI * spectrum.quasistatic_sigma_hz * y0).powi(2);

    let has_power = spectrum.amplitude > 0.0;
    let white = spectrum.white_level.unwrap_or(0.0);
    if !has_power && white == 0.0 {
        return Ok(static_part);
    }
    let w_lo = 2.0 * PI * spectrum.low_cutoff_hz;
    let w_hi = 2.0 * PI * spectrum.high_cutoff_hz;
    let w_t = 2.0 * PI / t;

    let mut chi = static_part;
    // lowest breakpoint of the numerical grid
    let mut start = if white > 0.0 || w_lo == 0.0 { 1e-4 * w_t } else { w_lo };
    if w_lo == 0.0 && has_power {
        if spectrum.beta >= 1.0 && y0.abs() > 1e-9 * t {
            return Err(Error::CutoffRequired(format!(
                "beta = {} with zero low cutoff and nonzero DC filter weight",
                spectrum.beta
            )));
        }
        start = start.min(1e-6 * w_t);
        if spectrum.beta < 1.0 {
            chi += spectrum.amplitude * start.powf(1.0 - spectrum.beta) / (1.0 - spectrum.beta) * y0 * y0 / (2.0 * PI);
        }
    } else if white > 0.0 {
        let below = start.min(if has_power { w_lo } else { f64::INFINITY });
        chi += white * y0 * y0 * below / (2.0 * PI);
        start = below;
    }

    let resolved = RESOLVED_MULTIPLE * w_t * tog.pieces.len() as f64;
    let end = if white > 0.0 { resolved } else { resolved.min(w_hi) };

    let mut edges = Vec::new();
    if start < w_t.min(end) {
        let decades = (w_t.min(end) / start).log10();
        let n = (decades * LOG_SEGMENTS_PER_DECADE).ceil().max(1.0) as usize;
        edges.extend((0..n).map(|i| start * (w_t.min(end) / start).powf(i as f64 / n as f64)));
    }
    let uniform_from = start.max(w_t);
    if uniform_from < end {
        let step = PI / (SEGMENTS_PER_HALF_PERIOD * t);
        let n = ((end - uniform_from) / step).ceil() as usize;
        edges.extend((0..n).map(|i| uniform_from + i as f64 * step));
    }
    edges.push(end);
    for w in [w_lo, w_hi] {
        if w > start && w < end {
            edges.push(w);
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let nodes = gauss_legendre(GL_ORDER);
    let mut integral = 0.0;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(x, wgt) in &nodes {
            let w = mid + half * x;
            integral += wgt * half * spectrum.density(w) * tog.y_squared(w);
        }
    }
    chi += integral / (2.0 * PI);

    // beyond the resolved region ω²|Y|² averages to the jump power
    let tail_scale = tog.jump_power / (2.0 * PI);
    if has_power && w_hi > end {
        let a = end.max(w_lo);
        let p = 1.0 + spectrum.beta;
        chi += tail_scale * spectrum.amplitude * (a.powf(-p) - w_hi.powf(-p)) / p;
    }
    if white > 0.0 {
        chi += tail_scale * white / end;
    }
    Ok(chi)
}

/// Visibility exp(-χ(T)).
pub fn coherence_from_filter_function(seq: DdSequence, spectrum: &NoiseSpectrum, t_ns: f64) -> Result<f64> {
    Ok((-decoherence_exponent(seq, spectrum, t_ns)?).exp())
}

/// Visibility including the relaxation factor exp(-T/2T1).
pub fn coherence_with_relaxation(seq: DdSequence, spectrum: &NoiseSpectrum, t_ns: f64, t1_ns: f64) -> Result<f64> {
    Ok(coherence_from_filter_function(seq, spectrum, t_ns)? * (-t_ns / (2.0 * t1_ns)).exp())
}

/// 1/e time of the visibility, optionally including relaxation, ns.
pub fn t2_from_filter_function(seq: DdSequence, spectrum: &NoiseSpectrum, t1_ns: Option<f64>) -> Result<f64> {
    let total = |t: f64| -> Result<f64> {
        Ok(decoherence_exponent(seq, spectrum, t)? + t1_ns.map_or(0.0, |t1| t / (2.0 * t1)))
    };
    let mut hi = 1.0;
    while total(hi)? < 1.0 {
        hi *= 2.0;
        if hi > 1e15 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if total(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Power-law spectrum whose amplitude gives a 1/e time of `t2_ns` under `seq`.
pub fn calibrate_amplitude(
    beta: f64,
    low_cutoff_hz: f64,
    high_cutoff_hz: f64,
    seq: DdSequence,
    t2_ns: f64,
) -> Result<NoiseSpectrum> {
    let unit = NoiseSpectrum { amplitude: 1.0, beta, low_cutoff_hz, high_cutoff_hz, ..NoiseSpectrum::default() };
    let chi = decoherence_exponent(seq, &unit, t2_ns)?;
    if !(chi > 0.0) {
        return Err(Error::parameter("noise", "sequence is insensitive to this spectrum"));
    }
    Ok(unit.scaled(1.0 / chi))
}

/// Phase structure function V(τ) = Var(2π∫δ dt over a window of length τ),
/// tabulated on a log grid. Covariances between arbitrary windows follow
/// from V through the increment identity.
#[derive(Debug, Clone)]
pub struct PhaseStructure {
    log_tau: Vec<f64>,
    log_v: Vec<f64>,
    zero: bool,
}

impl PhaseStructure {
    const TAU_MIN_NS: f64 = 0.01;
    const PER_DECADE: f64 = 16.0;

    pub fn new(spectrum: &NoiseSpectrum, tau_max_ns: f64) -> Result<Self> {
        let top = tau_max_ns.max(1.0) * 1.01;
        let n = ((top / Self::TAU_MIN_NS).log10() * Self::PER_DECADE).ceil() as usize + 1;
        let mut log_tau = Vec::with_capacity(n);
        let mut log_v = Vec::with_capacity(n);
        let mut zero = true;
        for i in 0..n {
            let tau = Self::TAU_MIN_NS * (top / Self::TAU_MIN_NS).powf(i as f64 / (n - 1) as f64);
            let v = 2.0 * decoherence_exponent(DdSequence::Free, spectrum, tau)?;
            zero &= v == 0.0;
            log_tau.push(tau.ln());
            log_v.push(v.max(1e-300).ln());
        }
        Ok(PhaseStructure { log_tau, log_v, zero })
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// V(τ) in rad².
    pub fn variance(&self, tau_ns: f64) -> f64 {
        let tau = tau_ns.abs();
        if self.zero || tau == 0.0 {
            return 0.0;
        }
        let x = tau.ln();
        let last = self.log_tau.len() - 1;
        if x <= self.log_tau[0] {
            // slow noise dominates at short lags: V ∝ τ²
            return (self.log_v[0] + 2.0 * (x - self.log_tau[0])).exp();
        }
        let i = self.log_tau.partition_point(|&t| t < x).clamp(1, last);
        let f = (x - self.log_tau[i - 1]) / (self.log_tau[i] - self.log_tau[i - 1]);
        (self.log_v[i - 1] + f * (self.log_v[i] - self.log_v[i - 1])).exp()
    }

    /// Covariance of the phases accumulated over windows [a, b] (ns).
    pub fn window_covariance(&self, windows: &[(f64, f64)]) -> DMatrix<f64> {
        let k = windows.len();
        DMatrix::from_fn(k, k, |i, j| {
            let (a, b) = windows[i];
            let (c, d) = windows[j];
            0.5 * (self.variance(b - c) + self.variance(a - d) - self.variance(b - d) - self.variance(a - c))
        })
    }

    /// Factor L with L·Lᵀ = covariance, tolerant of tiny negative
    /// eigenvalues from interpolation.
    pub fn window_factor(&self, windows: &[(f64, f64)]) -> DMatrix<f64> {
        let cov = self.window_covariance(windows);
        let eig = cov.symmetric_eigen();
        let mut q = eig.eigenvectors;
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            q.column_mut(j).scale_mut(s);
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_power_law, fit_stretched_exponential};
    use proptest::prelude::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let gl = gauss_legendre(8);
        let s: f64 = gl.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn white_free_evolution_closed_form() {
        // χ = W T / 2 for free evolution under white noise
        let w = 1e4;
        for t_ns in [10.0, 1e3, 5e4] {
            let chi = decoherence_exponent(DdSequence::Free, &NoiseSpectrum::white(w), t_ns).unwrap();
            let exact = w * t_ns * 1e-9 / 2.0;
            assert!((chi / exact - 1.0).abs() < 1e-4, "{t_ns}: {chi} vs {exact}");
        }
        // white noise is not refocused: each interval adds independently
        let chi = decoherence_exponent(DdSequence::Cpmg(4), &NoiseSpectrum::white(w), 1e3).unwrap();
        assert!((chi / (w * 1e-6 / 2.0) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn static_noise_refocused() {
        let s = NoiseSpectrum::quasistatic(8e6);
        let v = coherence_from_filter_function(DdSequence::Hahn, &s, 500.0).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        // free evolution: Gaussian with T2* = √2/(2πσ)
        let t2 = crate::bath::t2star_for_sigma(8e6);
        let v = coherence_from_filter_function(DdSequence::Free, &s, t2).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn quasistatic_matches_bath_monte_carlo() {
        let s = NoiseSpectrum::quasistatic(8.04e6);
        let state = crate::bath::OverhauserState::default();
        let mut rng = crate::rng::stream(9, 0, 0);
        let d: Vec<f64> = (0..200_000).map(|_| crate::bath::sample_overhauser(&state, &mut rng)).collect();
        for t in [5.0, 15.0, 28.0, 45.0] {
            let mc = d.iter().map(|x| (2.0 * PI * x * t * 1e-9).cos()).sum::<f64>() / d.len() as f64;
            let ff = coherence_from_filter_function(DdSequence::Free, &s, t).unwrap();
            assert!((mc - ff).abs() < 0.01, "{t}: {mc} {ff}");
        }
    }

    #[test]
    fn divergent_free_evolution() {
        let s = NoiseSpectrum { low_cutoff_hz: 0.0, ..NoiseSpectrum::power_law(1.0, 1.2) };
        assert!(matches!(decoherence_exponent(DdSequence::Free, &s, 100.0), Err(Error::CutoffRequired(_))));
        assert!(decoherence_exponent(DdSequence::Hahn, &s, 100.0).is_ok());
    }

    #[test]
    fn converged_quadrature() {
        // halve the grid spacing by brute force and compare
        let s = calibrate_amplitude(0.45, 10.0, 100e6, DdSequence::Hahn, 20e3).unwrap();
        for seq in [DdSequence::Hahn, DdSequence::Cpmg(8)] {
            let chi = decoherence_exponent(seq, &s, 30e3).unwrap();
            let t = 30e-6;
            let tog = Toggling::new(seq, t);
            let (a, b) = (2.0 * PI * 10.0, 2.0 * PI * 2e9);
            let n = 4_000_000;
            let (la, lb) = (a.ln(), b.ln());
            let h = (lb - la) / n as f64;
            let direct: f64 = (0..n)
                .map(|i| {
                    let w = (la + (i as f64 + 0.5) * h).exp();
                    s.density(w) * tog.y_squared(w) * w * h
                })
                .sum::<f64>()
                / (2.0 * PI);
            assert!((chi / direct - 1.0).abs() < 1e-4, "{seq:?}: {chi} vs {direct}");
        }
    }

    #[test]
    fn cpmg_exponent_and_t1_cap() {
        let s = calibrate_amplitude(0.45, 10.0, 100e6, DdSequence::Hahn, 20e3).unwrap();
        let t2h = t2_from_filter_function(DdSequence::Hahn, &s, None).unwrap();
        assert!((t2h / 20e3 - 1.0).abs() < 1e-6);
        let ns = [1usize, 2, 4, 8, 16];
        let t2: Vec<f64> = ns.iter().map(|&n| t2_from_filter_function(DdSequence::Cpmg(n), &s, None).unwrap()).collect();
        let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let fit = fit_power_law(&x, &t2).unwrap();
        // finite-N value from an independent brute-force integral; the
        // asymptotic β/(1+β) = 0.310 is approached only for large N
        assert!((fit.exponent - 0.2826).abs() < 2e-3, "{}", fit.exponent);
        assert!((fit.exponent - 0.31).abs() < 0.03);
        for &n in &ns {
            let t2 = t2_from_filter_function(DdSequence::Cpmg(n), &s, Some(21e3)).unwrap();
            assert!(t2 <= 2.0 * 21e3);
        }
        // stretched exponent of the Hahn curve is 1 + β
        let t: Vec<f64> = (1..=40).map(|i| i as f64 * 1e3).collect();
        let v: Vec<f64> = t.iter().map(|&x| coherence_from_filter_function(DdSequence::Hahn, &s, x).unwrap()).collect();
        let f = fit_stretched_exponential(&t, &v).unwrap();
        assert!((f.alpha - 1.45).abs() < 0.02, "{}", f.alpha);
    }

    #[test]
    fn window_covariance_reproduces_cpmg() {
        let s = calibrate_amplitude(0.45, 10.0, 100e6, DdSequence::Hahn, 20e3).unwrap();
        let ps = PhaseStructure::new(&s, 50e3).unwrap();
        for (seq, t) in [(DdSequence::Hahn, 20e3), (DdSequence::Cpmg(4), 35e3), (DdSequence::Free, 3e3)] {
            let iv = seq.intervals(t);
            let windows: Vec<(f64, f64)> = iv.iter().map(|&(a, b, _)| (a, b)).collect();
            let signs: Vec<f64> = iv.iter().map(|x| x.2).collect();
            let c = ps.window_covariance(&windows);
            let mut var = 0.0;
            for i in 0..signs.len() {
                for j in 0..signs.len() {
                    var += signs[i] * signs[j] * c[(i, j)];
                }
            }
            let chi = decoherence_exponent(seq, &s, t).unwrap();
            assert!((0.5 * var / chi - 1.0).abs() < 5e-3, "{seq:?}: {} vs {chi}", 0.5 * var);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn t2_grows_with_pulses(beta in 0.1f64..1.5) {
            let s = calibrate_amplitude(beta, 10.0, 100e6, DdSequence::Hahn, 20e3).unwrap();
            let mut last = 0.0;
            for n in [1usize, 2, 4, 8] {
                let t2 = t2_from_filter_function(DdSequence::Cpmg(n), &s, None).unwrap();
                prop_assert!(t2 > last);
                last = t2;
            }
        }

        #[test]
        fn hahn_blind_to_static_offset(sigma in 0.0f64..50e6, t in 1.0f64..1e4) {
            let v = coherence_from_filter_function(DdSequence::Hahn, &NoiseSpectrum::quasistatic(sigma), t).unwrap();
            prop_assert!((v - 1.0).abs() < 1e-9);
        }
    }
}
