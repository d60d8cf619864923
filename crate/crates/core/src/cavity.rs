//! One-sided Fabry-Perot microcavity in the Lorentzian near-resonance regime.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub finesse: f64,
    /// Full width at half maximum, Hz.
    pub linewidth_hz: f64,
    /// Splitting between the two orthogonal linear modes H and V, Hz.
    pub mode_splitting_hz: f64,
    /// Amplitude reflection coefficients (input, back mirror), if known.
    pub mirrors: Option<(f64, f64)>,
    pub resonance_frequency_hz: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            finesse: 500.0,
            linewidth_hz: 25e9,
            mode_splitting_hz: 50e9,
            mirrors: None,
            resonance_frequency_hz: 323e12,
        }
    }
}

/// F = π / (1 - r1·r2).
pub fn finesse_from_mirrors(r1: f64, r2: f64) -> Result<f64> {
    let product = r1 * r2;
    if !(0.0..1.0).contains(&product) || !(0.0..=1.0).contains(&r1) || !(0.0..=1.0).contains(&r2)
    {
        return Err(Error::InvalidMirror { product });
    }
    Ok(PI / (1.0 - product))
}

/// Input-mirror reflectivity giving `finesse` with a perfect back mirror.
pub fn mirrors_from_finesse(finesse: f64) -> Result<(f64, f64)> {
    if finesse < PI {
        return Err(Error::parameter(
            "finesse",
            format!("{finesse} is below the lossless-mirror minimum π"),
        ));
    }
    Ok((1.0 - PI / finesse, 1.0))
}

/// Input field amplitudes in the H and V modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub h: Complex64,
    pub v: Complex64,
}

impl JonesVector {
    /// |h| / |v|, which equals √(E_V/E_H) for the compensating input.
    pub fn amplitude_ratio(&self) -> f64 {
        self.h.norm() / self.v.norm()
    }

    /// Ellipticity angle magnitude deviation from circular: |π/4 - atan(|v|/|h|)|.
    pub fn ellipticity_error(&self) -> f64 {
        (PI / 4.0 - self.v.norm().atan2(self.h.norm())).abs()
    }
}

impl CavityParams {
    pub fn free_spectral_range_hz(&self) -> f64 {
        self.finesse * self.linewidth_hz
    }

    /// Resonant intensity build-up 8F/π.
    pub fn peak_enhancement(&self) -> f64 {
        8.0 * self.finesse / PI
    }

    /// Check the type invariants, returning (config path, message) pairs.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.finesse > 0.0) {
            out.push(("cavity.finesse".into(), "finesse must be positive".into()));
        }
        if !(self.linewidth_hz > 0.0) {
            out.push(("cavity.linewidth".into(), "linewidth must be positive".into()));
        }
        if self.mode_splitting_hz < 0.0 {
            out.push(("cavity.mode_splitting".into(), "splitting must be non-negative".into()));
        }
        if let Some((r1, r2)) = self.mirrors {
            match finesse_from_mirrors(r1, r2) {
                Ok(f) => {
                    if (f - self.finesse).abs() > 1e-3 * self.finesse {
                        out.push((
                            "cavity.mirrors".into(),
                            format!("mirrors imply finesse {f:.2}, configured {}", self.finesse),
                        ));
                    }
                }
                Err(e) => out.push(("cavity.mirrors".into(), e.to_string())),
            }
        }
        out
    }

    /// Intensity enhancement I_c/I_0 at optical detuning `detuning_hz` from the mode.
    pub fn intensity_enhancement(&self, detuning_hz: f64) -> Result<f64> {
        let limit = 0.5 * self.free_spectral_range_hz();
        if !detuning_hz.is_finite() || detuning_hz.abs() > limit {
            return Err(Error::OutOfModel { detuning_hz, limit_hz: limit });
        }
        let half_width = 0.5 * self.linewidth_hz;
        let hw2 = half_width * half_width;
        Ok(self.peak_enhancement() * hw2 / (hw2 + detuning_hz * detuning_hz))
    }

    /// Enhancement of the V mode, which sits `mode_splitting_hz` above H.
    pub fn enhancement_h_v(&self, detuning_hz: f64) -> Result<(f64, f64)> {
        Ok((
            self.intensity_enhancement(detuning_hz)?,
            self.intensity_enhancement(detuning_hz + self.mode_splitting_hz)?,
        ))
    }

    /// Input polarization that becomes circular after per-mode amplitude
    /// scaling by √E_H and √E_V. Normalized to unit intensity.
    pub fn polarization_compensation(&self, detuning_hz: f64) -> Result<JonesVector> {
        let (eh, ev) = self.enhancement_h_v(detuning_hz)?;
        let h = 1.0 / eh.sqrt();
        let v = 1.0 / ev.sqrt();
        let norm = (h * h + v * v).sqrt();
        Ok(JonesVector {
            h: Complex64::new(h / norm, 0.0),
            v: Complex64::new(0.0, v / norm),
        })
    }

    /// Positive detuning at which the enhancement equals one, closed form
    /// from the Lorentzian.
    pub fn unity_crossing_hz(&self) -> f64 {
        0.5 * self.linewidth_hz * (self.peak_enhancement() - 1.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_cavity() -> CavityParams {
        CavityParams { mode_splitting_hz: 0.0, ..CavityParams::default() }
    }

    #[test]
    fn mirror_finesse() {
        assert_relative_eq!(finesse_from_mirrors(0.0, 0.0).unwrap(), PI);
        let f = finesse_from_mirrors(0.993717, 1.0).unwrap();
        assert!((f - 500.0).abs() < 0.5, "{f}");
        assert!(matches!(finesse_from_mirrors(1.0, 1.0), Err(Error::InvalidMirror { .. })));
        assert!(finesse_from_mirrors(1.2, 0.5).is_err());
    }

    #[test]
    fn enhancement_values() {
        let c = reference_cavity();
        let e0 = c.intensity_enhancement(0.0).unwrap();
        assert_relative_eq!(e0, 4000.0 / PI, max_relative = 1e-12);
        let x450 = c.linewidth_hz * (2.0 * c.finesse / PI).sqrt();
        let e450 = c.intensity_enhancement(x450).unwrap();
        assert!((e450 - 1.0).abs() < 0.05, "{e450}");
        let e900 = c.intensity_enhancement(2.0 * x450).unwrap();
        assert!((e900 / (e450 / 4.0) - 1.0).abs() < 0.02);
        assert!(matches!(
            c.intensity_enhancement(7e12),
            Err(Error::OutOfModel { .. })
        ));
    }

    #[test]
    fn circular_when_degenerate() {
        let c = reference_cavity();
        let j = c.polarization_compensation(300e9).unwrap();
        assert_relative_eq!(j.h.norm(), j.v.norm(), max_relative = 1e-14);
        assert_relative_eq!((j.v / j.h).arg(), PI / 2.0);
        // far detuned (a high-finesse cavity keeps the point inside one FSR)
        let far = CavityParams { mode_splitting_hz: 50e9, finesse: 5000.0, ..reference_cavity() };
        let j = far.polarization_compensation(60e12).unwrap();
        assert!(j.ellipticity_error() < 1e-3);
    }

    #[test]
    fn split_mode_ratio() {
        let c = CavityParams::default();
        let j = c.polarization_compensation(280e9).unwrap();
        let eh = c.intensity_enhancement(280e9).unwrap();
        let ev = c.intensity_enhancement(330e9).unwrap();
        // The weaker V mode needs the larger input amplitude.
        assert_relative_eq!(j.amplitude_ratio(), (ev / eh).sqrt(), max_relative = 1e-12);
        assert!(j.v.norm() > j.h.norm());
        assert_relative_eq!(j.h.norm_sqr() + j.v.norm_sqr(), 1.0, max_relative = 1e-14);
        // after the cavity the two mode amplitudes are equal
        assert_relative_eq!(j.h.norm() * eh.sqrt(), j.v.norm() * ev.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn mirror_consistency_violation() {
        let mut c = reference_cavity();
        c.mirrors = Some((0.993717, 1.0));
        assert!(c.violations().is_empty());
        c.mirrors = Some((1.0, 1.0));
        assert_eq!(c.violations()[0].0, "cavity.mirrors");
    }

    fn bisect_crossing(c: &CavityParams) -> f64 {
        let (mut lo, mut hi) = (0.0, 0.5 * c.free_spectral_range_hz());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if c.intensity_enhancement(mid).unwrap() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    proptest! {
        #[test]
        fn lorentzian_tail(delta_in_widths in 5.0f64..40.0, finesse in 100.0f64..5000.0) {
            let c = CavityParams { finesse, ..reference_cavity() };
            let d = delta_in_widths * c.linewidth_hz;
            prop_assume!(2.0 * d < 0.5 * c.free_spectral_range_hz());
            let r = c.intensity_enhancement(2.0 * d).unwrap() / c.intensity_enhancement(d).unwrap();
            prop_assert!((0.24..=0.26).contains(&r));
        }

        #[test]
        fn even_in_detuning(d in 0.0f64..6e12) {
            let c = reference_cavity();
            prop_assert_eq!(c.intensity_enhancement(d).unwrap(), c.intensity_enhancement(-d).unwrap());
        }

        #[test]
        fn monotone_decrease(a in 0.0f64..6e12, b in 0.0f64..6e12) {
            let c = reference_cavity();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(c.intensity_enhancement(lo).unwrap() >= c.intensity_enhancement(hi).unwrap());
        }

        #[test]
        fn crossing_matches_closed_form(finesse in 100.0f64..5000.0) {
            let c = CavityParams { finesse, ..reference_cavity() };
            let root = bisect_crossing(&c);
            let closed = c.linewidth_hz * (2.0 * finesse / PI).sqrt();
            prop_assert!((root / closed - 1.0).abs() < 0.02);
        }

        #[test]
        fn mirror_round_trip(finesse in 3.2f64..1e5) {
            let (r1, r2) = mirrors_from_finesse(finesse).unwrap();
            let back = finesse_from_mirrors(r1, r2).unwrap();
            prop_assert!((back / finesse - 1.0).abs() < 1e-6);
        }
    }
}
