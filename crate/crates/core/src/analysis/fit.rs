//! Nonlinear least-squares fits on top of Levenberg-Marquardt.
//!
//! Times are in ns throughout; frequencies are reported in Hz.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::spectrum::dominant_frequency;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Free,
    Positive,
    Range(f64, f64),
}

impl Bound {
    fn to_external(self, u: f64) -> f64 {
        match self {
            Bound::Free => u,
            Bound::Positive => u.exp(),
            Bound::Range(lo, hi) => lo + (hi - lo) / (1.0 + (-u).exp()),
        }
    }

    fn to_internal(self, p: f64) -> f64 {
        match self {
            Bound::Free => p,
            Bound::Positive => p.max(1e-300).ln(),
            Bound::Range(lo, hi) => {
                let f = ((p - lo) / (hi - lo)).clamp(1e-9, 1.0 - 1e-9);
                (f / (1.0 - f)).ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// One-sigma uncertainties; infinite when the covariance is singular.
    pub errors: Vec<f64>,
    pub residual_norm: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.names.iter().position(|n| n == name).map(|i| (self.values[i], self.errors[i]))
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map(|v| v.0).unwrap_or(f64::NAN)
    }

    pub fn report(&self) -> String {
        let mut s = format!("model: {}\nconverged: {}\nresidual_norm: {:e}\n", self.model, self.converged, self.residual_norm);
        for ((n, v), e) in self.names.iter().zip(&self.values).zip(&self.errors) {
            s.push_str(&format!("{n}: {v:e} +/- {e:e}\n"));
        }
        s
    }
}

struct Problem<'a, F> {
    t: &'a [f64],
    y: &'a [f64],
    model: &'a F,
    bounds: &'a [Bound],
    u: DVector<f64>,
}

impl<F: Fn(&[f64], f64) -> f64> Problem<'_, F> {
    fn external(&self, u: &DVector<f64>) -> Vec<f64> {
        u.iter().zip(self.bounds).map(|(&x, b)| b.to_external(x)).collect()
    }

    fn residuals_at(&self, u: &DVector<f64>) -> DVector<f64> {
        let p = self.external(u);
        DVector::from_iterator(self.t.len(), self.t.iter().zip(self.y).map(|(&t, &y)| (self.model)(&p, t) - y))
    }
}

impl<F: Fn(&[f64], f64) -> f64> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_, F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.u.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.u.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.residuals_at(&self.u);
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.u.len();
        let mut j = DMatrix::zeros(self.t.len(), n);
        for k in 0..n {
            let h = 1e-7 * (1.0 + self.u[k].abs());
            let mut up = self.u.clone();
            up[k] += h;
            let mut dn = self.u.clone();
            dn[k] -= h;
            let col = (self.residuals_at(&up) - self.residuals_at(&dn)) / (2.0 * h);
            j.set_column(k, &col);
        }
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

/// Generic bounded least squares of `model(params, t)` against `y`.
pub fn least_squares<F>(
    name: &str,
    t: &[f64],
    y: &[f64],
    names: &[&str],
    init: &[f64],
    bounds: &[Bound],
    model: F,
) -> Result<FitResult>
where
    F: Fn(&[f64], f64) -> f64,
{
    if t.len() != y.len() {
        return Err(Error::fit(name, "x and y lengths differ"));
    }
    if t.len() <= init.len() {
        return Err(Error::fit(name, format!("{} points for {} parameters", t.len(), init.len())));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::fit(name, "non-finite input"));
    }
    let u0 = DVector::from_iterator(init.len(), init.iter().zip(bounds).map(|(&p, b)| b.to_internal(p)));
    let problem = Problem { t, y, model: &model, bounds, u: u0 };
    let (solved, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    let converged = report.termination.was_successful();
    if !converged && !matches!(report.termination, levenberg_marquardt::TerminationReason::LostPatience) {
        return Err(Error::fit(name, format!("{:?}", report.termination)));
    }
    let p = solved.external(&solved.u);
    let resid: Vec<f64> = t.iter().zip(y).map(|(&ti, &yi)| model(&p, ti) - yi).collect();
    let ssr: f64 = resid.iter().map(|r| r * r).sum();
    let dof = (t.len() - p.len()) as f64;
    // covariance in external parameters
    let mut jac = DMatrix::zeros(t.len(), p.len());
    for k in 0..p.len() {
        let h = 1e-6 * (p[k].abs() + 1e-12);
        let mut up = p.clone();
        up[k] += h;
        let mut dn = p.clone();
        dn[k] -= h;
        for (i, &ti) in t.iter().enumerate() {
            jac[(i, k)] = (model(&up, ti) - model(&dn, ti)) / (2.0 * h);
        }
    }
    let jtj = jac.transpose() * &jac;
    let errors = match jtj.clone().try_inverse() {
        Some(inv) => (0..p.len())
            .map(|k| {
                let v = inv[(k, k)] * ssr / dof;
                if v.is_finite() && v >= 0.0 {
                    v.sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect(),
        None => vec![f64::INFINITY; p.len()],
    };
    Ok(FitResult {
        model: name.to_string(),
        names: names.iter().map(|s| s.to_string()).collect(),
        values: p,
        errors,
        residual_norm: ssr.sqrt(),
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StretchedExp {
    pub amplitude: f64,
    /// 1/e time, ns; infinite when the data show no decay.
    pub t2: f64,
    pub alpha: f64,
    pub fit: FitResult,
}

fn first_crossing(t: &[f64], y: &[f64], level: f64) -> Option<f64> {
    for i in 1..t.len() {
        if y[i] <= level && y[i - 1] > level {
            let f = (y[i - 1] - level) / (y[i - 1] - y[i]);
            return Some(t[i - 1] + f * (t[i] - t[i - 1]));
        }
    }
    None
}

/// A·exp[-(t/T2)^α] with α in [0.3, 3], or fixed when `alpha` is given.
pub fn fit_stretched_exponential_with(t: &[f64], v: &[f64], alpha: Option<f64>) -> Result<StretchedExp> {
    const NAME: &str = "stretched_exponential";
    if t.len() < 8 {
        return Err(Error::fit(NAME, "need at least 8 points"));
    }
    if v.iter().any(|&x| !(-0.05..=1.05).contains(&x)) {
        return Err(Error::fit(NAME, "visibilities must lie in [-0.05, 1.05]"));
    }
    let span = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - t.iter().cloned().fold(f64::INFINITY, f64::min);
    let a0 = v.iter().take(3).cloned().fold(f64::NEG_INFINITY, f64::max);
    if a0 <= 0.0 {
        return Err(Error::fit(NAME, "no positive signal"));
    }
    let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    let last = v[v.len() - 1];
    if spread < 1e-9 || last > 0.98 * a0 {
        // no measurable decay
        let fit = FitResult {
            model: NAME.into(),
            names: vec!["amplitude".into(), "t2".into(), "alpha".into()],
            values: vec![a0, f64::INFINITY, alpha.unwrap_or(f64::NAN)],
            errors: vec![0.0, f64::INFINITY, f64::INFINITY],
            residual_norm: 0.0,
            converged: false,
        };
        return Ok(StretchedExp { amplitude: a0, t2: f64::INFINITY, alpha: alpha.unwrap_or(f64::NAN), fit });
    }
    let t2_0 = first_crossing(t, v, a0 / std::f64::consts::E).unwrap_or(span);
    let mut best: Option<FitResult> = None;
    let alpha_seeds: Vec<f64> = match alpha {
        Some(_) => vec![0.0],
        None => vec![1.0, 2.0, 0.6],
    };
    for seed in alpha_seeds {
        let res = match alpha {
            Some(a) => least_squares(
                NAME,
                t,
                v,
                &["amplitude", "t2"],
                &[a0, t2_0],
                &[Bound::Positive, Bound::Positive],
                move |p, x| p[0] * (-(x / p[1]).abs().powf(a)).exp(),
            ),
            None => least_squares(
                NAME,
                t,
                v,
                &["amplitude", "t2", "alpha"],
                &[a0, t2_0, seed],
                &[Bound::Positive, Bound::Positive, Bound::Range(0.3, 3.0)],
                |p, x| p[0] * (-(x / p[1]).abs().powf(p[2])).exp(),
            ),
        };
        if let Ok(r) = res {
            if best.as_ref().is_none_or(|b| r.residual_norm < b.residual_norm) {
                best = Some(r);
            }
        }
    }
    let mut fit = best.ok_or_else(|| Error::fit(NAME, "did not converge from any starting point"))?;
    if alpha.is_some() {
        fit.names.push("alpha".into());
        fit.values.push(alpha.unwrap_or(f64::NAN));
        fit.errors.push(0.0);
    }
    let (amplitude, t2, a) = (fit.values[0], fit.values[1], fit.values[2]);
    Ok(StretchedExp { amplitude, t2, alpha: a, fit })
}

pub fn fit_stretched_exponential(t: &[f64], v: &[f64]) -> Result<StretchedExp> {
    fit_stretched_exponential_with(t, v, None)
}

/// A·exp[-(t/T2)²].
pub fn fit_gaussian_decay(t: &[f64], v: &[f64]) -> Result<StretchedExp> {
    fit_stretched_exponential_with(t, v, Some(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Envelope {
    Exponential,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampedOscillation {
    pub frequency_hz: f64,
    /// Envelope 1/e time, ns; infinite for an undamped signal.
    pub t2_ns: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub phase: f64,
    pub fit: FitResult,
}

impl DampedOscillation {
    /// Q = 2·T2·f.
    pub fn q_factor(&self) -> f64 {
        q_factor(self.frequency_hz, self.t2_ns)
    }
}

pub fn q_factor(frequency_hz: f64, t2_ns: f64) -> f64 {
    2.0 * t2_ns * 1e-9 * frequency_hz
}

/// ½(1 + V(t_π)) for an exponential envelope evaluated at the half period,
/// which reduces to ½(1 + e^{-1/Q}).
pub fn pi_pulse_fidelity(q: f64) -> f64 {
    0.5 * (1.0 + (-1.0 / q).exp())
}

/// Offset + A·env(t - t₀)·cos(2πft + φ) with the envelope starting at the
/// first sample.
pub fn fit_damped_oscillation(t: &[f64], s: &[f64], envelope: Envelope) -> Result<DampedOscillation> {
    fit_damped_oscillation_from(t, s, envelope, t.first().copied().unwrap_or(0.0))
}

/// As [`fit_damped_oscillation`] with the envelope starting at `origin_ns`.
pub fn fit_damped_oscillation_from(t: &[f64], s: &[f64], envelope: Envelope, origin_ns: f64) -> Result<DampedOscillation> {
    const NAME: &str = "damped_oscillation";
    if t.len() < 8 || t.len() != s.len() {
        return Err(Error::fit(NAME, "need at least 8 paired points"));
    }
    let span = t[t.len() - 1] - t[0];
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let centered: Vec<f64> = s.iter().map(|v| v - mean).collect();
    let swing = centered.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(swing > 1e-12 * mean.abs().max(1e-300)) {
        return Err(Error::fit(NAME, "signal is flat"));
    }
    let (f0, peak, floor) = dominant_frequency(t, &centered)?;
    if !(peak >= 3.0 * floor) || f0 <= 0.0 {
        return Err(Error::fit(NAME, format!("no oscillation detected (peak {peak:e}, floor {floor:e})")));
    }
    if f0 * span < 3.0 {
        log::warn!("fewer than three oscillation periods in the fit window");
    }
    let f0_ghz = f0 * 1e-9;
    // envelope seed from the local extrema of the centred signal
    let mut ext_t = Vec::new();
    let mut ext_y = Vec::new();
    for i in 1..s.len() - 1 {
        let (a, b, c) = (centered[i - 1].abs(), centered[i].abs(), centered[i + 1].abs());
        if b >= a && b >= c && b > 0.0 {
            ext_t.push(t[i]);
            ext_y.push(b.ln());
        }
    }
    let mut tau0 = 10.0 * span;
    if ext_t.len() >= 3 {
        let n = ext_t.len() as f64;
        let mx = ext_t.iter().sum::<f64>() / n;
        let my = ext_y.iter().sum::<f64>() / n;
        let sxy: f64 = ext_t.iter().zip(&ext_y).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = ext_t.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        if slope < 0.0 {
            tau0 = (-1.0 / slope).min(10.0 * span);
        }
    }
    let amp0 = centered.iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-12);
    let env = move |x: f64, tau: f64| match envelope {
        Envelope::Exponential => (-x / tau).exp(),
        Envelope::Gaussian => (-(x / tau).powi(2)).exp(),
    };
    let model = move |p: &[f64], x: f64| p[4] + p[0] * env(x - p[5], p[2]) * (2.0 * PI * p[1] * x + p[3]).cos();
    let t0 = origin_ns;
    let mut best: Option<FitResult> = None;
    for phase0 in [0.0, PI / 2.0, PI, 1.5 * PI] {
        let res = least_squares(
            NAME,
            t,
            s,
            &["amplitude", "frequency", "t2", "phase", "offset"],
            &[amp0, f0_ghz, tau0, phase0, mean],
            &[Bound::Free, Bound::Positive, Bound::Positive, Bound::Free, Bound::Free],
            |p, x| model(&[p[0], p[1], p[2], p[3], p[4], t0], x),
        );
        if let Ok(r) = res {
            if best.as_ref().is_none_or(|b| r.residual_norm < b.residual_norm) {
                best = Some(r);
            }
        }
    }
    let mut fit = best.ok_or_else(|| Error::fit(NAME, "did not converge"))?;
    let (mut amp, f, mut tau, mut ph, off) = (fit.values[0], fit.values[1], fit.values[2], fit.values[3], fit.values[4]);
    if amp < 0.0 {
        amp = -amp;
        ph += PI;
    }
    ph = ph.rem_euclid(2.0 * PI);
    if tau > 1e3 * span {
        tau = f64::INFINITY;
    }
    fit.values = vec![amp, f * 1e9, tau, ph, off];
    fit.errors[1] *= 1e9;
    fit.names[1] = "frequency_hz".into();
    fit.names[2] = "t2_ns".into();
    Ok(DampedOscillation { frequency_hz: f * 1e9, t2_ns: tau, amplitude: amp, offset: off, phase: ph, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLaw {
    pub exponent: f64,
    pub exponent_err: f64,
    pub prefactor: f64,
    pub prefactor_err: f64,
}

/// y = prefactor·x^exponent by linear regression in log-log space.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLaw> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(Error::fit("power_law", "need at least 4 paired points"));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::parameter("power_law", "x and y must be positive"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::fit("power_law", "x values are all equal"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = ssr / (n - 2.0);
    let slope_err = (s2 / sxx).sqrt();
    let intercept_err = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let prefactor = intercept.exp();
    Ok(PowerLaw { exponent: slope, exponent_err: slope_err, prefactor, prefactor_err: prefactor * intercept_err })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpDecay {
    pub amplitude: f64,
    pub tau: f64,
    pub offset: f64,
    pub fit: FitResult,
}

/// A·exp(-t/τ) + C.
pub fn fit_exponential_decay(t: &[f64], y: &[f64]) -> Result<ExpDecay> {
    const NAME: &str = "exponential_decay";
    if t.len() < 4 || t.len() != y.len() {
        return Err(Error::fit(NAME, "need at least 4 paired points"));
    }
    let tail = (y.len() / 10).max(1);
    let c0 = y[y.len() - tail..].iter().sum::<f64>() / tail as f64;
    let a0 = y[0] - c0;
    if a0 == 0.0 {
        return Err(Error::fit(NAME, "no decay"));
    }
    let level = c0 + a0 / std::f64::consts::E;
    let tau0 = if a0 > 0.0 {
        first_crossing(t, y, level)
    } else {
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        first_crossing(t, &neg, -level)
    }
    .map(|x| x - t[0])
    .filter(|x| *x > 0.0)
    .unwrap_or(0.3 * (t[t.len() - 1] - t[0]));
    let t0 = t[0];
    let fit = least_squares(
        NAME,
        t,
        y,
        &["amplitude", "tau", "offset"],
        &[a0, tau0, c0],
        &[Bound::Free, Bound::Positive, Bound::Free],
        move |p, x| p[0] * (-(x - t0) / p[1]).exp() + p[2],
    )?;
    Ok(ExpDecay { amplitude: fit.values[0], tau: fit.values[1], offset: fit.values[2], fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(n: usize, end: f64) -> Vec<f64> {
        (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn stretched_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 0.005).unwrap();
        let t = grid(120, 2000.0);
        let v: Vec<f64> = t.iter().map(|&x| (-(x / 535.0f64).powf(1.15)).exp() + noise.sample(&mut rng)).collect();
        let r = fit_stretched_exponential(&t, &v).unwrap();
        assert!((r.t2 / 535.0 - 1.0).abs() < 0.02, "{}", r.t2);
        assert!((r.alpha - 1.15).abs() < 0.05, "{}", r.alpha);
    }

    #[test]
    fn gaussian_alpha() {
        let t = grid(80, 80.0);
        let v: Vec<f64> = t.iter().map(|&x| 0.9 * (-(x / 28.0f64).powi(2)).exp()).collect();
        let r = fit_stretched_exponential(&t, &v).unwrap();
        assert!((r.alpha - 2.0).abs() < 0.03);
        let g = fit_gaussian_decay(&t, &v).unwrap();
        assert_relative_eq!(g.t2, 28.0, max_relative = 1e-5);
    }

    #[test]
    fn constant_is_flagged() {
        let t = grid(20, 100.0);
        let r = fit_stretched_exponential(&t, &[0.7; 20]).unwrap();
        assert!(r.t2.is_infinite());
    }

    #[test]
    fn rabi_q() {
        let t = grid(400, 400.0);
        let s: Vec<f64> = t.iter().map(|&x| 0.5 - 0.5 * (-x / 184.0).exp() * (2.0 * PI * 0.095 * x).cos()).collect();
        let r = fit_damped_oscillation(&t, &s, Envelope::Exponential).unwrap();
        assert_relative_eq!(r.frequency_hz, 95e6, max_relative = 1e-6);
        assert!((r.q_factor() - 35.0).abs() < 1.0, "{}", r.q_factor());
        assert!((pi_pulse_fidelity(35.0) - 0.986).abs() < 5e-4);
    }

    #[test]
    fn undamped_cosine() {
        let t = grid(300, 100.0);
        let s: Vec<f64> = t.iter().map(|&x| (2.0 * PI * 0.05 * x).cos()).collect();
        let r = fit_damped_oscillation(&t, &s, Envelope::Exponential).unwrap();
        assert!(r.t2_ns.is_infinite());
        assert!(r.q_factor().is_infinite());
    }

    #[test]
    fn flat_signal_fails() {
        let t = grid(50, 100.0);
        assert!(fit_damped_oscillation(&t, &[0.3; 50], Envelope::Exponential).unwrap_err().is_fit());
    }

    #[test]
    fn power_law_exact() {
        let x: Vec<f64> = (1..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let r = fit_power_law(&x, &y).unwrap();
        assert!((r.exponent - 3.0).abs() < 1e-6);
        assert!(fit_power_law(&[1.0, 2.0, 0.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn exp_decay() {
        let t = grid(60, 30.0);
        let y: Vec<f64> = t.iter().map(|&x| 2.0 * (-x / 3.0).exp() + 0.1).collect();
        let r = fit_exponential_decay(&t, &y).unwrap();
        assert_relative_eq!(r.tau, 3.0, max_relative = 1e-6);
        assert_relative_eq!(r.offset, 0.1, max_relative = 1e-6);
    }

    #[test]
    fn generators_recovered() {
        // each fitter recovers its own generator in at least 95% of trials
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let trials = 40;
        let mut ok = [0usize; 3];
        for _ in 0..trials {
            let noise = Normal::new(0.0, 0.01).unwrap();
            let t2: f64 = rng.random_range(100.0..800.0);
            let alpha: f64 = rng.random_range(0.8..2.5);
            let t = grid(100, 3.0 * t2);
            let v: Vec<f64> = t.iter().map(|&x| (-(x / t2).powf(alpha)).exp() + noise.sample(&mut rng)).collect();
            if let Ok(r) = fit_stretched_exponential(&t, &v) {
                let (_, e) = r.fit.get("t2").unwrap();
                if (r.t2 - t2).abs() <= 3.0 * e {
                    ok[0] += 1;
                }
            }
            let f: f64 = rng.random_range(0.02..0.2);
            let tau: f64 = rng.random_range(50.0..400.0);
            let t = grid(300, 300.0);
            let s: Vec<f64> = t.iter().map(|&x| 0.5 + 0.5 * (-x / tau).exp() * (2.0 * PI * f * x).cos() + noise.sample(&mut rng)).collect();
            if let Ok(r) = fit_damped_oscillation(&t, &s, Envelope::Exponential) {
                let (_, e) = r.fit.get("frequency_hz").unwrap();
                if (r.frequency_hz - f * 1e9).abs() <= 3.0 * e {
                    ok[1] += 1;
                }
            }
            let k: f64 = rng.random_range(-3.0..3.0);
            let x: Vec<f64> = (1..30).map(|i| i as f64).collect();
            let y: Vec<f64> = x.iter().map(|v| v.powf(k) * (1.0 + noise.sample(&mut rng))).collect();
            if let Ok(r) = fit_power_law(&x, &y) {
                if (r.exponent - k).abs() <= 3.0 * r.exponent_err {
                    ok[2] += 1;
                }
            }
        }
        for c in ok {
            assert!(c as f64 >= 0.95 * trials as f64 - 1e-9, "{ok:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn q_scale_invariant(scale in 0.1f64..10.0) {
            let t = grid(300, 300.0);
            let s: Vec<f64> = t.iter().map(|&x| scale * (0.5 - 0.5 * (-x / 150.0).exp() * (2.0 * PI * 0.06 * x).cos())).collect();
            let r = fit_damped_oscillation(&t, &s, Envelope::Exponential).unwrap();
            prop_assert!((r.q_factor() - q_factor(60e6, 150.0)).abs() < 1e-3);
        }

        #[test]
        fn power_law_scale_invariant(c in 1e-3f64..1e3) {
            let x: Vec<f64> = (1..12).map(|i| i as f64 * 0.7).collect();
            let y: Vec<f64> = x.iter().map(|v| v.powf(-1.7) * (1.0 + 0.1 * (v * 3.1).sin())).collect();
            let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
            let a = fit_power_law(&x, &y).unwrap();
            let b = fit_power_law(&x, &yc).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
        }
    }
}
