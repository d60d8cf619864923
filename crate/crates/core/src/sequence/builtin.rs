//! Named protocols, generated as sequence text and parsed, so every builtin
//! is also a worked example of the text format (`builtin_text`).

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::{parse_sequence, PulseSequence};
use crate::bath::CoolingProtocol;
use crate::error::{Error, Result};
use crate::units::{parse_phase, parse_with_unit, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const BUILTINS: &[BuiltinInfo] = &[
    BuiltinInfo { name: "rabi", description: "resonant Rabi oscillation versus pulse length" },
    BuiltinInfo { name: "chevron", description: "pulse length versus two-photon detuning" },
    BuiltinInfo { name: "ramsey", description: "phase-alternated Ramsey fringes at a detuned drive" },
    BuiltinInfo { name: "hahn", description: "Hahn echo at constant init-to-readout spacing" },
    BuiltinInfo { name: "cpmg", description: "N-pulse CPMG with pi pulses about y" },
    BuiltinInfo { name: "t1", description: "pi pulse then a variable wait" },
    BuiltinInfo { name: "hh_scan", description: "Rabi traces across drive strengths for Q-factor dips" },
    BuiltinInfo { name: "cooling_ramsey", description: "Ramsey after sensing-based nuclear cooling, with artificial modulation" },
    BuiltinInfo { name: "cooled_chevron", description: "weak-drive chevron after nuclear cooling" },
    BuiltinInfo { name: "phase_sweep", description: "two pi/2 pulses versus microwave phase of the second" },
    BuiltinInfo { name: "init_fidelity", description: "cumulative readout counts versus window length" },
];

/// Knobs shared by the builtins; unset fields take protocol defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltinParams {
    pub omega_hz: Option<f64>,
    pub delta_hz: Option<f64>,
    pub delta_range_hz: Option<(f64, f64)>,
    pub delta_steps: Option<usize>,
    pub t_max_ns: Option<f64>,
    pub steps: Option<usize>,
    pub init_ns: f64,
    pub readout_ns: f64,
    pub n_pulses: usize,
    pub ramp_hz: f64,
    pub omega_range_hz: Option<(f64, f64)>,
    pub interleave: bool,
    pub cooling: CoolingProtocol,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        BuiltinParams {
            omega_hz: None,
            delta_hz: None,
            delta_range_hz: None,
            delta_steps: None,
            t_max_ns: None,
            steps: None,
            init_ns: 30.0,
            readout_ns: 90.0,
            n_pulses: 4,
            ramp_hz: 10e6,
            omega_range_hz: None,
            interleave: true,
            cooling: CoolingProtocol::default(),
        }
    }
}

fn range(text: &str, dim: Dimension, path: &str) -> Result<(f64, f64)> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| Error::config(path, format!("expected `<from>..<to>`, got `{text}`")))?;
    let p = |s: &str| parse_with_unit(s.trim(), dim).map_err(|e| Error::config(path, e.to_string()));
    Ok((p(a)?, p(b)?))
}

impl BuiltinParams {
    /// Rabi frequency of the control pulses, Hz.
    pub fn omega(&self) -> f64 {
        self.omega_hz.unwrap_or(95e6)
    }

    /// Set one knob from text with units; `path` is used in errors.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let path = format!("drive.{key}");
        let q = |dim| parse_with_unit(text, dim).map_err(|e| Error::config(&path, e.to_string()));
        let count = || text.parse::<usize>().map_err(|_| Error::config(&path, format!("expected an integer, got `{text}`")));
        match key {
            "omega" => self.omega_hz = Some(q(Dimension::FREQUENCY)?),
            "delta" => self.delta_hz = Some(q(Dimension::FREQUENCY)?),
            "delta_range" => self.delta_range_hz = Some(range(text, Dimension::FREQUENCY, &path)?),
            "omega_range" => self.omega_range_hz = Some(range(text, Dimension::FREQUENCY, &path)?),
            "delta_steps" => self.delta_steps = Some(count()?),
            "t_max" => self.t_max_ns = Some(q(Dimension::TIME)?),
            "steps" => self.steps = Some(count()?),
            "init" => self.init_ns = q(Dimension::TIME)?,
            "readout" => self.readout_ns = q(Dimension::TIME)?,
            "n_pulses" => self.n_pulses = count()?,
            "ramp" => self.ramp_hz = q(Dimension::FREQUENCY)?,
            "interleave" => {
                self.interleave = text.parse().map_err(|_| Error::config(&path, "expected true or false"))?
            }
            _ => return Err(Error::config(&path, "unknown drive setting")),
        }
        if self.steps == Some(0) || self.delta_steps == Some(0) {
            return Err(Error::config(&path, "step counts must be at least 1"));
        }
        Ok(())
    }
}

/// Fixed-precision formatting keeps the generated text stable.
fn ns(v: f64) -> String {
    format!("{v:.9}ns")
}

fn hz(v: f64) -> String {
    format!("{v:.6}Hz")
}

/// Sequence text of a builtin protocol.
pub fn builtin_text(name: &str, p: &BuiltinParams) -> Result<String> {
    let omega = p.omega();
    if !(omega > 0.0) {
        return Err(Error::config("drive.omega", "must be positive"));
    }
    let half = 1e9 / (4.0 * omega);
    let pi = 2.0 * half;
    let init = format!("init {}", ns(p.init_ns));
    let readout = format!("readout {}", ns(p.readout_ns));
    let interleave = if p.interleave { "interleave phase 0 pi\n" } else { "" };
    let mut s = String::new();
    match name {
        "rabi" | "chevron" => {
            let delta = p.delta_hz.unwrap_or(0.0);
            let _ = writeln!(s, "{init}\nraman @drive omega={} delta={} phase=0 t=0ns\n{readout}", hz(omega), hz(delta));
            if name == "chevron" || p.delta_range_hz.is_some() {
                let (a, b) = p.delta_range_hz.unwrap_or((-200e6, 200e6));
                let _ = writeln!(s, "sweep drive.delta from {} to {} steps {}", hz(a), hz(b), p.delta_steps.unwrap_or(41));
            }
            let (t_max, steps) = if name == "rabi" { (50.0, 251) } else { (30.0, 61) };
            let _ = writeln!(s, "sweep drive.t from 0 to {} steps {}", ns(p.t_max_ns.unwrap_or(t_max)), p.steps.unwrap_or(steps));
        }
        "ramsey" => {
            let delta = hz(p.delta_hz.unwrap_or(30e6));
            let _ = write!(
                s,
                "{init}\nraman omega={} delta={delta} phase=0 t={}\nwait @probe 0ns\nraman omega={} delta={delta} phase=0 t={}\n{readout}\n\
                 sweep probe.t from 0 to {} steps {}\n{interleave}",
                hz(omega),
                ns(half),
                hz(omega),
                ns(half),
                ns(p.t_max_ns.unwrap_or(200.0)),
                p.steps.unwrap_or(101)
            );
        }
        "hahn" | "cpmg" => {
            let n = if name == "hahn" { 1 } else { p.n_pulses };
            if n == 0 {
                return Err(Error::config("drive.n_pulses", "need at least one pulse"));
            }
            // pi pulses about y for CPMG (mw phase pi/4), about x for Hahn
            let pi_phase = if name == "hahn" { "0" } else { "pi/2" };
            let total = p.t_max_ns.unwrap_or(if name == "hahn" { 60_000.0 } else { 100_000.0 });
            let r = hz(omega);
            let _ = writeln!(s, "{init}\nraman omega={r} phase=0 t={}", ns(half));
            for j in 0..n {
                let _ = writeln!(s, "wait t=$T/{}", 2 * n);
                let _ = writeln!(s, "raman @pi{} omega={r} phase={pi_phase} t={}", j + 1, ns(pi));
                let _ = writeln!(s, "wait t=$T/{}", 2 * n);
            }
            // constant spacing between init and readout
            let _ = write!(
                s,
                "raman omega={r} phase=0 t={}\nwait @pad t={}-$T\n{readout}\nsweep $T from 0 to {} steps {}\n{interleave}",
                ns(half),
                ns(total),
                ns(total),
                p.steps.unwrap_or(31)
            );
        }
        "t1" => {
            let _ = write!(
                s,
                "{init}\nraman omega={} phase=0 t={}\nwait @delay 0ns\n{readout}\nsweep delay.t from 0 to {} steps {}\n",
                hz(omega),
                ns(pi),
                ns(p.t_max_ns.unwrap_or(100_000.0)),
                p.steps.unwrap_or(41)
            );
        }
        "hh_scan" => {
            let (a, b) = p.omega_range_hz.unwrap_or((20e6, 50e6));
            let _ = write!(
                s,
                "{init}\nraman @drive omega={} delta=0 phase=0 t=0ns\n{readout}\n\
                 sweep drive.omega from {} to {} steps {}\nsweep drive.t from 0 to {} steps {}\n",
                hz(a),
                hz(a),
                hz(b),
                p.delta_steps.unwrap_or(31),
                ns(p.t_max_ns.unwrap_or(600.0)),
                p.steps.unwrap_or(241)
            );
        }
        "cooling_ramsey" | "cooled_chevron" => {
            let c = &p.cooling;
            c.validate()?;
            for k in 0..c.n_cycles {
                let _ = writeln!(
                    s,
                    "{init} / raman omega={} phase=0 t={} / wait {} / hhdrive omega={} t={} / readout {} discard",
                    hz(omega),
                    ns(half),
                    ns(c.tau_at(k)),
                    hz(c.omega_c_hz),
                    ns(c.tc_ns),
                    ns(c.readout_ns)
                );
            }
            if name == "cooling_ramsey" {
                let _ = write!(
                    s,
                    "{init}\nraman omega={} phase=0 t={}\nwait @probe 0ns\nraman omega={} phase=0 ramp={} t={}\n{readout}\n\
                     sweep probe.t from 0 to {} steps {}\n{interleave}",
                    hz(omega),
                    ns(half),
                    hz(omega),
                    hz(p.ramp_hz),
                    ns(half),
                    ns(p.t_max_ns.unwrap_or(1500.0)),
                    p.steps.unwrap_or(151)
                );
            } else {
                let weak = p.omega_hz.unwrap_or(10e6);
                let (a, b) = p.delta_range_hz.unwrap_or((-30e6, 30e6));
                let _ = write!(
                    s,
                    "{init}\nraman @drive omega={} delta=0 phase=0 t=0ns\n{readout}\n\
                     sweep drive.delta from {} to {} steps {}\nsweep drive.t from 0 to {} steps {}\n",
                    hz(weak),
                    hz(a),
                    hz(b),
                    p.delta_steps.unwrap_or(31),
                    ns(p.t_max_ns.unwrap_or(200.0)),
                    p.steps.unwrap_or(41)
                );
            }
        }
        "phase_sweep" => {
            let two_pi = parse_phase("2pi").expect("literal");
            let _ = write!(
                s,
                "{init}\nraman omega={} phase=0 t={}\nraman @second omega={} mw_phase=0 t={}\n{readout}\n\
                 sweep second.mw_phase from 0 to {two_pi:.15} steps {}\n",
                hz(omega),
                ns(half),
                hz(omega),
                ns(half),
                p.steps.unwrap_or(73)
            );
        }
        "init_fidelity" => {
            let _ = write!(
                s,
                "init 0ns\nreadout @window 0ns\nsweep window.t from 0 to {} steps {}\n",
                ns(p.t_max_ns.unwrap_or(30.0)),
                p.steps.unwrap_or(121)
            );
        }
        other => return Err(Error::UnknownExperiment(other.to_string())),
    }
    Ok(s)
}

/// Parsed builtin protocol.
pub fn builtin_experiments(name: &str, params: &BuiltinParams) -> Result<PulseSequence> {
    parse_sequence(&builtin_text(name, params)?)
}
