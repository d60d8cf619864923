//! Hole-spin and trion dynamics.

pub mod lindblad;
pub mod readout;
pub mod two_level;

use serde::{Deserialize, Serialize};

use crate::cavity::CavityParams;
use crate::error::{Error, Result};

/// Bohr magneton over Planck constant, Hz/T.
pub const BOHR_HZ_PER_TESLA: f64 = 13.996_245_0e9;
/// Planck over Boltzmann constant, K/Hz.
const H_OVER_K: f64 = 4.799_243_07e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    /// Hole Zeeman splitting, Hz.
    pub zeeman_hz: f64,
    pub g_factor: Option<f64>,
    pub b_field_t: f64,
    /// Trion (electron) splitting, Hz. Bookkeeping only; the default is an
    /// assumed electron g-factor of about 0.5.
    pub electron_zeeman_hz: f64,
    /// Trion decay rate into |⇑⟩, 1/ns.
    pub gamma_x: f64,
    /// Trion decay rate into |⇓⟩, 1/ns.
    pub gamma_y: f64,
    pub t1_ns: f64,
    pub temperature_k: f64,
    /// Laser-induced flip rate per MHz of spin Rabi frequency, 1/(ns·MHz).
    pub flip_coefficient: f64,
    /// Optional (optical detuning Hz, coefficient) table, linearly
    /// interpolated and clamped at the ends.
    pub flip_table: Option<Vec<(f64, f64)>>,
    /// Constant light-shift offset added to every two-photon detuning, Hz.
    pub stark_offset_hz: f64,
}

impl Default for SpinSystem {
    fn default() -> Self {
        let gamma0 = 20.0;
        SpinSystem {
            zeeman_hz: 5.8e9,
            g_factor: Some(0.143),
            b_field_t: 2.9,
            electron_zeeman_hz: 20.3e9,
            gamma_x: gamma0 * 10.0 / 11.0,
            gamma_y: gamma0 / 11.0,
            t1_ns: 21_000.0,
            temperature_k: 4.2,
            flip_coefficient: 0.5e-4,
            flip_table: None,
            stark_offset_hz: 0.0,
        }
    }
}

impl SpinSystem {
    pub fn gamma_total(&self) -> f64 {
        self.gamma_x + self.gamma_y
    }

    /// Zeeman splitting implied by the g-factor and field, if a g-factor is set.
    pub fn zeeman_from_g(&self) -> Option<f64> {
        self.g_factor.map(|g| g * BOHR_HZ_PER_TESLA * self.b_field_t)
    }

    /// (rate into |⇓⟩, rate into |⇑⟩) in 1/ns, summing to 1/T1 with a
    /// Boltzmann ratio at the configured temperature.
    pub fn relaxation_rates(&self) -> (f64, f64) {
        if !self.t1_ns.is_finite() || self.t1_ns <= 0.0 {
            return (0.0, 0.0);
        }
        let ratio = if self.temperature_k > 0.0 {
            (-H_OVER_K * self.zeeman_hz.abs() / self.temperature_k).exp()
        } else {
            0.0
        };
        let total = 1.0 / self.t1_ns;
        let down = total / (1.0 + ratio);
        (down, total - down)
    }

    /// Equilibrium Bloch z component under relaxation alone.
    pub fn thermal_z(&self) -> f64 {
        let (d, u) = self.relaxation_rates();
        if d + u == 0.0 {
            0.0
        } else {
            (d - u) / (d + u)
        }
    }

    pub fn flip_coefficient_at(&self, optical_detuning_hz: f64) -> f64 {
        match &self.flip_table {
            Some(table) if !table.is_empty() => {
                let x = optical_detuning_hz.abs();
                if x <= table[0].0 {
                    return table[0].1;
                }
                for w in table.windows(2) {
                    if x <= w[1].0 {
                        let f = (x - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                table[table.len() - 1].1
            }
            _ => self.flip_coefficient,
        }
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if let Some(z) = self.zeeman_from_g() {
            if (z - self.zeeman_hz).abs() > 5e-3 * self.zeeman_hz.abs() {
                out.push((
                    "spin.zeeman".into(),
                    format!("g-factor and field imply {:.4} GHz, configured {:.4} GHz", z * 1e-9, self.zeeman_hz * 1e-9),
                ));
            }
        }
        if !(self.gamma_x > 0.0) || !(self.gamma_y > 0.0) {
            out.push(("spin.branching".into(), "trion decay rates must be positive".into()));
        }
        if !(self.t1_ns > 0.0) {
            out.push(("spin.t1".into(), "T1 must be positive".into()));
        }
        if self.flip_coefficient < 0.0 {
            out.push(("spin.flip_coefficient".into(), "must be >= 0".into()));
        }
        if let Some(t) = &self.flip_table {
            if t.windows(2).any(|w| w[1].0 <= w[0].0) {
                out.push(("spin.flip_table".into(), "detunings must be strictly ascending".into()));
            }
        }
        out
    }
}

/// Laser-induced spin-flip rate (1/ns) while a Raman drive of spin Rabi
/// frequency `omega_hz` is on.
pub fn laser_flip_rate(omega_hz: f64, optical_detuning_hz: f64, system: &SpinSystem) -> f64 {
    system.flip_coefficient_at(optical_detuning_hz) * omega_hz.abs() * 1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamanDrive {
    /// Optical detuning from the trion, Hz.
    pub detuning_hz: f64,
    pub power_mw: f64,
    /// Microwave modulation frequency, Hz.
    pub mw_frequency_hz: f64,
    /// Microwave phase, rad; the qubit sees twice this.
    pub mw_phase: f64,
    /// Optical coupling per √mW at unit enhancement, Hz/√mW.
    pub calibration_c: f64,
}

impl RamanDrive {
    /// Two-photon detuning 2 f_mw - Z.
    pub fn two_photon_detuning(&self, system: &SpinSystem) -> f64 {
        2.0 * self.mw_frequency_hz - system.zeeman_hz + system.stark_offset_hz
    }

    pub fn qubit_phase(&self) -> f64 {
        (2.0 * self.mw_phase).rem_euclid(2.0 * std::f64::consts::PI)
    }

    /// Microwave frequency that puts the two-photon detuning at `delta_hz`.
    pub fn mw_for_detuning(system: &SpinSystem, delta_hz: f64) -> f64 {
        0.5 * (system.zeeman_hz + delta_hz)
    }
}

/// Calibration constant such that (`detuning_hz`, `power_mw`) gives `omega_hz`.
pub fn calibrate_coupling(cavity: &CavityParams, detuning_hz: f64, power_mw: f64, omega_hz: f64) -> Result<f64> {
    if detuning_hz == 0.0 {
        return Err(Error::ResonantDrive);
    }
    if !(power_mw > 0.0) {
        return Err(Error::parameter("power", "calibration power must be positive"));
    }
    let e = cavity.intensity_enhancement(detuning_hz)?;
    Ok((omega_hz * detuning_hz.abs() / (power_mw * e)).sqrt())
}

/// Default coupling: 95 MHz at 320 GHz detuning and 1 mW.
pub fn default_coupling(cavity: &CavityParams) -> f64 {
    calibrate_coupling(cavity, 320e9, 1.0, 95e6).unwrap_or(f64::NAN)
}

/// Spin Rabi frequency Ω/2π (Hz) = C²·P·E(Δ)/|Δ|.
pub fn spin_rabi_frequency(drive: &RamanDrive, cavity: &CavityParams) -> Result<f64> {
    if drive.detuning_hz == 0.0 {
        return Err(Error::ResonantDrive);
    }
    if !(drive.power_mw >= 0.0) {
        return Err(Error::parameter("power", "power must be >= 0"));
    }
    let e = cavity.intensity_enhancement(drive.detuning_hz)?;
    let omega = drive.calibration_c.powi(2) * drive.power_mw * e / drive.detuning_hz.abs();
    if drive.detuning_hz.abs() < 10.0 * omega {
        log::warn!(
            "optical detuning {:.3e} Hz is less than ten spin Rabi frequencies ({:.3e} Hz)",
            drive.detuning_hz,
            omega
        );
    }
    Ok(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn drive(detuning: f64, power: f64) -> RamanDrive {
        RamanDrive {
            detuning_hz: detuning,
            power_mw: power,
            mw_frequency_hz: 2.9e9,
            mw_phase: 0.0,
            calibration_c: default_coupling(&CavityParams::default()),
        }
    }

    #[test]
    fn calibrated_rabi() {
        let c = CavityParams::default();
        assert_relative_eq!(spin_rabi_frequency(&drive(320e9, 1.0), &c).unwrap(), 95e6, max_relative = 1e-12);
        assert_relative_eq!(spin_rabi_frequency(&drive(320e9, 2.0), &c).unwrap(), 190e6, max_relative = 1e-12);
        assert!(matches!(spin_rabi_frequency(&drive(0.0, 1.0), &c), Err(Error::ResonantDrive)));
    }

    #[test]
    fn cubic_rolloff() {
        let c = CavityParams::default();
        let xs: Vec<f64> = (0..=30).map(|i| (150e9 + i as f64 * 10e9).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| spin_rabi_frequency(&drive(x.exp(), 1.0), &c).unwrap().ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + 3.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn flip_rates() {
        let s = SpinSystem { flip_coefficient: 1e-4, ..SpinSystem::default() };
        assert_relative_eq!(laser_flip_rate(51.7e6, 320e9, &s), 5.17e-3, max_relative = 1e-12);
        assert_eq!(laser_flip_rate(0.0, 320e9, &s), 0.0);
        let t = SpinSystem { flip_table: Some(vec![(200e9, 0.5e-4), (400e9, 1.2e-4)]), ..s };
        assert_relative_eq!(t.flip_coefficient_at(300e9), 0.85e-4, max_relative = 1e-12);
        assert_eq!(t.flip_coefficient_at(900e9), 1.2e-4);
    }

    #[test]
    fn zeeman_consistency() {
        let s = SpinSystem::default();
        assert!(s.violations().is_empty(), "{:?}", s.violations());
        let bad = SpinSystem { zeeman_hz: 6.2e9, ..s };
        assert_eq!(bad.violations()[0].0, "spin.zeeman");
    }

    #[test]
    fn relaxation_split() {
        let s = SpinSystem::default();
        let (d, u) = s.relaxation_rates();
        assert_relative_eq!(d + u, 1.0 / 21_000.0, max_relative = 1e-12);
        assert!(d > u && u > 0.9 * d);
    }

    #[test]
    fn phase_doubling() {
        let mut d = drive(320e9, 1.0);
        d.mw_phase = std::f64::consts::FRAC_PI_4;
        assert_relative_eq!(d.qubit_phase(), std::f64::consts::FRAC_PI_2);
        let s = SpinSystem::default();
        d.mw_frequency_hz = RamanDrive::mw_for_detuning(&s, 30e6);
        assert_relative_eq!(d.two_photon_detuning(&s), 30e6, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn linear_in_power(p in 0.01f64..10.0, det in 100e9f64..1e12) {
            let c = CavityParams::default();
            let a = spin_rabi_frequency(&drive(det, p), &c).unwrap();
            let b = spin_rabi_frequency(&drive(det, 2.0 * p), &c).unwrap();
            prop_assert!((b / a - 2.0).abs() < 1e-12);
        }
    }
}
