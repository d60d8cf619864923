//! Monte-Carlo execution of a pulse sequence.
//!
//! Each shot draws one quasistatic Overhauser offset and one set of
//! correlated noise phases (one per wait window), then pushes a Bloch vector
//! through the elements. Raman pulses use the rotating-frame drive with
//! laser-flip and Hartmann-Hahn damping along the drive axis; waits precess
//! at the frame detuning plus the offset and pick up the noise phase; init
//! and readout apply the optical-pumping window.

use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::dsl::wrap_phase;
use super::result::{Axis, ExperimentResult, Metadata, PointResult};
use super::{Element, ElementKind, PulseSequence};
use crate::bath::{sample_overhauser, CoolingProtocol, NuclearBath};
use crate::cavity::CavityParams;
use crate::dynamics::readout::{PumpWindow, ReadoutModel};
use crate::dynamics::two_level::{
    bloch_from_rho, evolve_beyond_rwa, rho_from_bloch, rwa_rotation_vector, AffineMap, BlochGenerator, LabDrive,
};
use crate::dynamics::{default_coupling, laser_flip_rate, spin_rabi_frequency, RamanDrive, SpinSystem};
use crate::error::{Error, Result};
use crate::noise::{calibrate_amplitude, DdSequence, NoiseSpectrum, PhaseStructure};
use crate::rng::stream;

/// Every physical parameter a sequence run can touch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub cavity: CavityParams,
    pub spin: SpinSystem,
    pub bath: NuclearBath,
    pub cooling: CoolingProtocol,
    pub noise: NoiseSpectrum,
    pub noise_enabled: bool,
    pub readout: ReadoutModel,
    /// Optical detuning used when a Raman element gives only `power=`, Hz.
    pub optical_detuning_hz: f64,
    /// Optical coupling per √mW; `None` uses the 95 MHz at 320 GHz, 1 mW calibration.
    pub coupling: Option<f64>,
    /// Integrate Raman pulses in the lab frame without the rotating-wave
    /// approximation. Dissipation is not applied in this mode.
    pub beyond_rwa: bool,
    /// Replace the pumping map of `init` by a perfect |⇓⟩ preparation.
    pub ideal_init: bool,
}

/// Charge-noise default: 1/f^0.45 giving a 20 μs Hahn-echo 1/e time.
pub fn default_noise() -> NoiseSpectrum {
    calibrate_amplitude(0.45, 10.0, 100e6, DdSequence::Hahn, 20e3).unwrap_or_default()
}

impl Default for World {
    fn default() -> Self {
        World {
            cavity: CavityParams::default(),
            spin: SpinSystem::default(),
            bath: NuclearBath::default(),
            cooling: CoolingProtocol::default(),
            noise: default_noise(),
            noise_enabled: true,
            readout: ReadoutModel::default(),
            optical_detuning_hz: 320e9,
            coupling: None,
            beyond_rwa: false,
            ideal_init: false,
        }
    }
}

impl World {
    /// No bath spread, no flips, no T1, no noise and ideal initialization.
    pub fn noiseless() -> Self {
        let mut w = World::default();
        w.bath.overhauser.sigma_hz = 0.0;
        w.bath.hh.enabled = false;
        w.spin.flip_coefficient = 0.0;
        w.spin.flip_table = None;
        w.spin.t1_ns = f64::INFINITY;
        w.noise_enabled = false;
        w.ideal_init = true;
        w
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = self.cavity.violations();
        out.extend(self.spin.violations());
        out.extend(self.bath.violations());
        out.extend(self.cooling.violations());
        out.extend(self.noise.violations());
        out.extend(self.readout.violations());
        if self.optical_detuning_hz == 0.0 {
            out.push(("drive.detuning".into(), "optical detuning must be nonzero".into()));
        }
        out
    }

    fn coupling(&self) -> f64 {
        self.coupling.unwrap_or_else(|| default_coupling(&self.cavity))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pulse {
    Init { t: f64 },
    Raman { omega: f64, optical_detuning: f64, delta: f64, phase: f64, t: f64, ramp: f64 },
    Wait { t: f64, frame_delta: f64 },
    Readout { t: f64, record: bool },
    HhDrive { omega: f64, t: f64 },
    Barrier,
}

impl Pulse {
    fn duration(&self) -> f64 {
        match *self {
            Pulse::Init { t }
            | Pulse::Raman { t, .. }
            | Pulse::Wait { t, .. }
            | Pulse::Readout { t, .. }
            | Pulse::HhDrive { t, .. } => t,
            Pulse::Barrier => 0.0,
        }
    }
}

fn resolve(elements: &[Element], world: &World) -> Result<Vec<Pulse>> {
    let get = |e: &Element, f: &str, default: f64| e.fields.get(f).map_or(default, |v| v.constant);
    let mut pulses = Vec::with_capacity(elements.len());
    for e in elements {
        let t = get(e, "t", 0.0);
        if t < 0.0 {
            return Err(Error::Parse { line: e.line, message: "negative duration".into() });
        }
        pulses.push(match e.kind {
            ElementKind::Init => Pulse::Init { t },
            ElementKind::Wait => Pulse::Wait { t, frame_delta: 0.0 },
            ElementKind::Readout => Pulse::Readout { t, record: e.record },
            ElementKind::Barrier => Pulse::Barrier,
            ElementKind::HhDrive => Pulse::HhDrive { omega: get(e, "omega", 0.0), t },
            ElementKind::Raman => {
                let optical_detuning = get(e, "detuning", world.optical_detuning_hz);
                let omega = match e.fields.get("power") {
                    Some(p) => {
                        let drive = RamanDrive {
                            detuning_hz: optical_detuning,
                            power_mw: p.constant,
                            mw_frequency_hz: 0.0,
                            mw_phase: 0.0,
                            calibration_c: world.coupling(),
                        };
                        spin_rabi_frequency(&drive, &world.cavity)?
                    }
                    None => get(e, "omega", 0.0),
                };
                Pulse::Raman {
                    omega,
                    optical_detuning,
                    delta: get(e, "delta", 0.0) + world.spin.stark_offset_hz,
                    phase: wrap_phase(get(e, "phase", 0.0)),
                    t,
                    ramp: get(e, "ramp", 0.0),
                }
            }
        });
    }
    // waits precess in the frame of the most recent drive, or the next one
    let deltas: Vec<Option<f64>> = pulses
        .iter()
        .map(|p| match p {
            Pulse::Raman { delta, .. } => Some(*delta),
            _ => None,
        })
        .collect();
    let mut frame = deltas.iter().flatten().next().copied().unwrap_or(0.0);
    for (p, d) in pulses.iter_mut().zip(&deltas) {
        if let Some(d) = d {
            frame = *d;
        }
        if let Pulse::Wait { frame_delta, .. } = p {
            *frame_delta = frame;
        }
    }
    Ok(pulses)
}

/// Free precession about z for `t` ns at `delta_hz` plus an extra phase,
/// with longitudinal relaxation; closed form of the wait generator.
fn free_evolution(r: &Vector3<f64>, delta_hz: f64, extra_phase: f64, t: f64, down: f64, up: f64) -> Vector3<f64> {
    let angle = 2.0 * PI * delta_hz * t * 1e-9 + extra_phase;
    let (s, c) = angle.sin_cos();
    let total = down + up;
    let transverse = (-0.5 * total * t).exp();
    let z = if total > 0.0 {
        let z_eq = (down - up) / total;
        z_eq + (r.z - z_eq) * (-total * t).exp()
    } else {
        r.z
    };
    Vector3::new(transverse * (c * r.x - s * r.y), transverse * (s * r.x + c * r.y), z)
}

struct PointPlan<'a> {
    pulses: Vec<Pulse>,
    /// Cholesky-like factor of the wait-window phase covariance.
    noise_factor: Option<nalgebra::DMatrix<f64>>,
    /// Index of the Raman element that takes the interleave offsets.
    interleave_target: Option<usize>,
    world: &'a World,
    /// Whether the sequence contains Hartmann-Hahn cooling drives.
    cools: bool,
    pumps: &'a BTreeMap<u64, PumpWindow>,
}

impl PointPlan<'_> {
    fn pump(&self, t: f64) -> &PumpWindow {
        &self.pumps[&t.to_bits()]
    }

    /// One pass through the sequence; returns (recorded counts, z at the
    /// last recorded readout).
    fn run(&self, mut oh: f64, noise: &[f64], offset: f64, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
        let w = self.world;
        let (down, up) = w.spin.relaxation_rates();
        let mut r = Vector3::new(0.0, 0.0, 1.0 - 2.0 * w.readout.rho11_initial);
        let mut now = 0.0;
        let mut last_raman_end: Option<f64> = None;
        let mut wait_index = 0;
        let mut signal = 0.0;
        let mut z_record = f64::NAN;
        for (i, p) in self.pulses.iter().enumerate() {
            match *p {
                Pulse::Init { t } => {
                    r = if w.ideal_init { Vector3::z() } else { self.pump(t).map.apply(&r) };
                }
                Pulse::Raman { omega, optical_detuning, delta, phase, t, ramp } => {
                    let mut phi = phase;
                    if let Some(end) = last_raman_end {
                        phi += 2.0 * PI * ramp * (now - end) * 1e-9;
                    }
                    if self.interleave_target == Some(i) {
                        phi += offset;
                    }
                    r = if w.beyond_rwa {
                        let drive = LabDrive { omega_hz: omega, delta_hz: delta + oh, phase: phi, zeeman_hz: w.spin.zeeman_hz };
                        bloch_from_rho(&evolve_beyond_rwa(&rho_from_bloch(&r), &drive, t, drive.step_limit_ns())?)
                    } else {
                        let rot = rwa_rotation_vector(omega, delta + oh, phi);
                        let damping = laser_flip_rate(omega, optical_detuning, &w.spin) + w.bath.hh_damping_rate(omega, delta);
                        let axis = Vector3::new(phi.cos(), phi.sin(), 0.0);
                        let gen = BlochGenerator::precession(&rot).with_relaxation(down, up);
                        let gen = if damping > 0.0 { gen.with_axis_dephasing(&axis, damping) } else { gen };
                        let map: AffineMap = gen.propagator(t);
                        map.apply(&r)
                    };
                    last_raman_end = Some(now + t);
                }
                Pulse::Wait { t, frame_delta } => {
                    let extra = if t > 0.0 && self.noise_factor.is_some() {
                        let phase = noise[wait_index];
                        wait_index += 1;
                        phase
                    } else {
                        0.0
                    };
                    r = free_evolution(&r, frame_delta + oh, extra, t, down, up);
                }
                Pulse::Readout { t, record } => {
                    let pump = self.pump(t);
                    let mean = pump.counts(&r).max(0.0);
                    let counts = if w.readout.shot_noise && mean > 0.0 {
                        Poisson::new(mean).map_err(|e| Error::parameter("readout", e.to_string()))?.sample(rng)
                    } else {
                        mean
                    };
                    if record {
                        signal += counts;
                        z_record = r.z;
                    }
                    r = pump.map.apply(&r);
                }
                Pulse::HhDrive { omega, t } => {
                    let protocol = CoolingProtocol { omega_c_hz: omega, tc_ns: t, ..w.cooling.clone() };
                    let offset_hz = oh - w.bath.overhauser.set_point_hz;
                    if rng.random::<f64>() < protocol.flip_probability(offset_hz) {
                        oh += protocol.correction(offset_hz, r.x);
                    }
                }
                Pulse::Barrier => {}
            }
            now += p.duration();
        }
        Ok((signal, z_record))
    }
}

/// Run every sweep point of `seq` with `shots` shots each.
///
/// Points run in parallel on the current rayon pool; the random stream of
/// shot `s` at point `p` is `stream(seed, p, s)`, so results do not depend
/// on the thread count. Interleave variants share the stream of their shot
/// and are combined as Σ cos(p_k) S_k / Σ |cos p_k|, so `0 pi` gives the
/// half-difference of the two phase-alternated signals.
pub fn run_experiment(seq: &PulseSequence, world: &World, shots: usize, seed: u64) -> Result<ExperimentResult> {
    if shots == 0 {
        return Err(Error::parameter("shots", "need at least one shot"));
    }
    let n_points = seq.points();
    let plans: Vec<Vec<Pulse>> = (0..n_points)
        .map(|p| resolve(&seq.elements_at(p), world).map_err(|e| Error::AtSweepPoint { point: p, source: Box::new(e) }))
        .collect::<Result<_>>()?;

    let mut pumps = BTreeMap::new();
    for pulses in &plans {
        for p in pulses {
            if let Pulse::Init { t } | Pulse::Readout { t, .. } = *p {
                if !pumps.contains_key(&t.to_bits()) && !(world.ideal_init && matches!(p, Pulse::Init { .. })) {
                    pumps.insert(t.to_bits(), PumpWindow::compute(&world.spin, &world.readout, t)?);
                }
            }
        }
    }

    let has_waits = plans.iter().flatten().any(|p| matches!(p, Pulse::Wait { t, .. } if *t > 0.0));
    let structure = if world.noise_enabled && has_waits {
        world.noise.validate()?;
        let longest = plans.iter().map(|ps| ps.iter().map(Pulse::duration).sum::<f64>()).fold(0.0, f64::max);
        Some(PhaseStructure::new(&world.noise, longest)?).filter(|s| !s.is_zero())
    } else {
        None
    };

    let variants: Vec<f64> = if seq.interleave.is_empty() { vec![0.0] } else { seq.interleave.clone() };
    let weights: Vec<f64> = if variants.len() == 1 {
        vec![1.0]
    } else {
        let c: Vec<f64> = variants.iter().map(|p| p.cos()).collect();
        let norm: f64 = c.iter().map(|x| x.abs()).sum();
        if norm > 1e-12 {
            c.iter().map(|x| x / norm).collect()
        } else {
            vec![1.0 / variants.len() as f64; variants.len()]
        }
    };

    let points: Vec<PointResult> = plans
        .into_par_iter()
        .enumerate()
        .map(|(p, pulses)| {
            let windows: Vec<(f64, f64)> = {
                let mut now = 0.0;
                let mut out = Vec::new();
                for pulse in &pulses {
                    if let Pulse::Wait { t, .. } = pulse {
                        if *t > 0.0 {
                            out.push((now, now + t));
                        }
                    }
                    now += pulse.duration();
                }
                out
            };
            let plan = PointPlan {
                interleave_target: pulses.iter().rposition(|p| matches!(p, Pulse::Raman { .. })),
                noise_factor: structure.as_ref().filter(|_| !windows.is_empty()).map(|s| s.window_factor(&windows)),
                cools: pulses.iter().any(|p| matches!(p, Pulse::HhDrive { .. })),
                pulses,
                world,
                pumps: &pumps,
            };
            run_point(&plan, p, shots, seed, &variants, &weights, windows.len())
                .map_err(|e| Error::AtSweepPoint { point: p, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;

    let axes = seq
        .sweeps
        .iter()
        .map(|s| Axis { name: s.name.clone(), dim: s.dim, values: s.values.clone() })
        .collect::<Vec<_>>();
    let points = points
        .into_iter()
        .enumerate()
        .map(|(p, mut pr)| {
            pr.coords = seq.coords(p).iter().zip(&axes).map(|(&i, a)| a.values[i]).collect();
            pr
        })
        .collect();
    Ok(ExperimentResult {
        axes,
        points,
        metadata: Metadata {
            experiment: String::new(),
            seed,
            shots,
            config_hash: String::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn run_point(
    plan: &PointPlan,
    point: usize,
    shots: usize,
    seed: u64,
    variants: &[f64],
    weights: &[f64],
    n_windows: usize,
) -> Result<PointResult> {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut z_sum = 0.0;
    for shot in 0..shots {
        let mut rng = stream(seed, point as u64, shot as u64);
        let mut oh = sample_overhauser(&plan.world.bath.overhauser, &mut rng);
        if plan.cools {
            // earlier repetitions of this sequence have already cooled the bath
            let w = plan.world;
            oh = w.cooling.cool_repeated(oh, w.bath.overhauser.set_point_hz, w.cooling.blocks - 1, &mut rng);
        }
        let noise: Vec<f64> = match &plan.noise_factor {
            Some(l) => {
                let z = DVector::from_fn(n_windows, |_, _| StandardNormal.sample(&mut rng));
                (l * z).iter().copied().collect()
            }
            None => Vec::new(),
        };
        let mut s = 0.0;
        let mut zbar = 0.0;
        for (&offset, &weight) in variants.iter().zip(weights) {
            let mut vrng = rng.clone();
            let (signal, z) = plan.run(oh, &noise, offset, &mut vrng)?;
            s += weight * signal;
            zbar += z / variants.len() as f64;
        }
        sum += s;
        sum_sq += s * s;
        z_sum += zbar;
    }
    let n = shots as f64;
    let mean = sum / n;
    let var = if shots > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(PointResult { coords: Vec::new(), mean, stderr: (var / n).sqrt(), mean_z: z_sum / n })
}
