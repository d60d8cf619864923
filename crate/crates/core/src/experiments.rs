//! Named experiments as tables plus fit summaries.
//!
//! Builtins run through the sequence engine; a few figure panels are
//! computed directly from the physics modules (coupling scaling, CPMG
//! filter functions, cooled Overhauser distributions). Every output is an
//! [`ExperimentResult`] so the CSV format is shared.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::analysis::fit::{fit_stretched_exponential, least_squares, Bound, DampedOscillation, StretchedExp};
use crate::analysis::spectrum::{dominant_frequency, envelope_fft, tone_amplitude};
use crate::analysis::{fit_damped_oscillation, fit_damped_oscillation_from, fit_exponential_decay, fit_power_law, pi_pulse_fidelity, spearman, Envelope};
use crate::bath::{rabi_q_factor_with_bath, run_cooling, sample_overhauser, CoolingMode, CoolingProtocol, OverhauserState};
use crate::config::RunConfig;
use crate::dynamics::readout::initialization_fidelity;
use crate::dynamics::two_level::{beyond_rwa_trace, LabDrive};
use crate::dynamics::{default_coupling, spin_rabi_frequency, RamanDrive};
use crate::error::{Error, Result};
use crate::noise::filter::t2_from_filter_function;
use crate::noise::DdSequence;
use crate::rng::stream;
use crate::sequence::{
    builtin_experiments, run_experiment, Axis, BuiltinParams, ExperimentResult, FieldDim, Metadata, PointResult,
    PulseSequence, World, BUILTINS,
};

pub const FIGURE_SUITE: &str = "figure-suite";

/// Panels produced by `figure-suite`, in output order.
pub const FIGURE_PANELS: &[(&str, &str)] = &[
    ("fig1d_rabi", "Rabi oscillation at the calibrated drive"),
    ("fig1e_rabi_vs_detuning", "spin Rabi frequency versus optical detuning at fixed power"),
    ("fig1f_chevron", "Rabi chevron"),
    ("fig1g_rwa_breakdown", "lab-frame Rabi trace at 2 GHz drive"),
    ("fig2a_ramsey", "phase-alternated Ramsey fringes"),
    ("fig2b_hahn", "Hahn echo at constant spacing"),
    ("fig2c_cpmg_scaling", "CPMG coherence time versus pulse number"),
    ("fig3a_hh_q_factor", "Rabi Q-factor versus drive strength"),
    ("fig3b_cooling_ramsey", "Ramsey after sensing-based cooling"),
    ("fig3c_cooled_envelope", "Ramsey envelopes after drive and sensing cooling"),
    ("fig3d_alpha_vs_tau_max", "stretched-exponential fit versus maximum sensing time"),
    ("fig3e_cooled_chevron", "chevron after drive-based cooling"),
    ("fig3f_overhauser_width", "envelope spectra of thermal and cooled baths"),
    ("fig3g_sideband_chevron", "weak-drive chevron after sensing cooling"),
];

/// One table and its fit summary. A failed fit keeps the data.
#[derive(Debug, Clone)]
pub struct Output {
    pub name: String,
    pub result: ExperimentResult,
    pub fit: Result<String>,
}

/// Everything an experiment needs besides its name.
#[derive(Debug, Clone)]
pub struct Context {
    pub world: World,
    pub drive: BuiltinParams,
    pub shots: usize,
    pub seed: u64,
}

impl Context {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let seed = cfg.seed.ok_or_else(|| Error::config("seed", "a seed is required"))?;
        Ok(Context { world: cfg.world.clone(), drive: cfg.drive.clone(), shots: cfg.shots, seed })
    }
}

/// Run whatever the configuration names and stamp every table with the
/// experiment name and the configuration hash.
pub fn run_config(cfg: &RunConfig) -> Result<Vec<Output>> {
    let violations = cfg.violations();
    if let Some((path, reason)) = violations.into_iter().next() {
        return Err(Error::config(&path, reason));
    }
    let ctx = Context::from_config(cfg)?;
    let hash = cfg.config_hash()?;
    let name = cfg.experiment_name().ok_or_else(|| Error::config("experiment", "name an experiment or a sequence file"))?;
    let mut outputs = match cfg.sequence()? {
        Some(seq) => vec![run_sequence(&name, &seq, &ctx)?],
        None if name == FIGURE_SUITE => figure_suite(&ctx)?,
        None => vec![run_builtin(&name, &ctx)?],
    };
    for o in &mut outputs {
        o.result.metadata.experiment = o.name.clone();
        o.result.metadata.config_hash = hash.clone();
    }
    Ok(outputs)
}

pub fn run_builtin(name: &str, ctx: &Context) -> Result<Output> {
    let seq = builtin_experiments(name, &ctx.drive)?;
    let result = run_experiment(&seq, &ctx.world, ctx.shots, ctx.seed)?;
    let fit = fit_report(name, &result, &ctx.world, &ctx.drive);
    Ok(Output { name: name.to_string(), result, fit })
}

/// Run a parsed sequence; the context's shots and seed take precedence
/// over any set in the sequence text.
pub fn run_sequence(name: &str, seq: &PulseSequence, ctx: &Context) -> Result<Output> {
    let result = run_experiment(seq, &ctx.world, ctx.shots, ctx.seed)?;
    let fit = Ok(summary(&result));
    Ok(Output { name: name.to_string(), result, fit })
}

/// Fit summary for a builtin's table run in `world`.
pub fn fit_report(name: &str, r: &ExperimentResult, world: &World, drive: &BuiltinParams) -> Result<String> {
    match name {
        "rabi" => rabi_report(r),
        "chevron" | "cooled_chevron" => chevron_report(r),
        "ramsey" | "cooling_ramsey" => ramsey_report(r, drive.omega()),
        "hahn" | "cpmg" => echo_report(r, world.spin.t1_ns),
        "t1" => t1_report(r),
        "hh_scan" => hh_scan_report(r),
        "phase_sweep" => phase_report(r),
        "init_fidelity" => init_report(r),
        _ if BUILTINS.iter().any(|b| b.name == name) => Ok(summary(r)),
        _ => Err(Error::UnknownExperiment(name.to_string())),
    }
}

fn summary(r: &ExperimentResult) -> String {
    let m = r.means();
    let lo = m.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let axes: Vec<String> = r.axes.iter().map(|a| format!("{}[{}]", a.name, a.values.len())).collect();
    format!("model: none\npoints: {}\naxes: {}\nmean_min: {lo:e}\nmean_max: {hi:e}\n", m.len(), axes.join(" x "))
}

fn rows(r: &ExperimentResult) -> Result<(&Axis, &Axis, Vec<Vec<f64>>)> {
    let [outer, inner] = r.axes.as_slice() else {
        return Err(Error::fit("rows", "expected two sweep axes"));
    };
    let m = r.means();
    Ok((outer, inner, m.chunks(inner.values.len()).map(|c| c.to_vec()).collect()))
}

fn oscillation_lines(d: &DampedOscillation) -> String {
    format!(
        "{}frequency_hz: {:e}\nt2_ns: {:e}\nq_factor: {:e}\n",
        d.fit.report(),
        d.frequency_hz,
        d.t2_ns,
        d.q_factor()
    )
}

fn rabi_report(r: &ExperimentResult) -> Result<String> {
    let d = fit_damped_oscillation(r.axis_values(), &r.means(), Envelope::Exponential)?;
    let q = d.q_factor();
    Ok(format!("{}pi_pulse_fidelity: {:.6}\n", oscillation_lines(&d), pi_pulse_fidelity(q)))
}

/// Generalized Rabi frequency per detuning row and the resonant Ω from
/// f² = Ω² + δ².
fn chevron_report(r: &ExperimentResult) -> Result<String> {
    let (outer, inner, rows) = rows(r)?;
    let mut s = String::from("model: generalized_rabi\ndelta_hz,frequency_hz\n");
    let mut omega2 = Vec::new();
    for (&delta, row) in outer.values.iter().zip(&rows) {
        let (f, _, _) = dominant_frequency(&inner.values, row)?;
        let _ = writeln!(s, "{delta:e},{f:e}");
        omega2.push(f * f - delta * delta);
    }
    // rows far off resonance are barely modulated; use the central third
    let n = omega2.len();
    let mid = &omega2[n / 3..n - n / 3];
    let omega = (mid.iter().sum::<f64>() / mid.len() as f64).max(0.0).sqrt();
    let _ = writeln!(s, "omega_hz: {omega:e}");
    Ok(s)
}

/// Start of the Ramsey envelope relative to the swept wait: the spin also
/// dephases during the two π/2 pulses, which adds 4·t_π/2/π = 1/(πΩ) of
/// effective free evolution.
pub fn ramsey_envelope_origin(omega_hz: f64) -> f64 {
    -1e9 / (PI * omega_hz)
}

fn ramsey_report(r: &ExperimentResult, omega_hz: f64) -> Result<String> {
    let origin = ramsey_envelope_origin(omega_hz);
    let g = fit_damped_oscillation_from(r.axis_values(), &r.means(), Envelope::Gaussian, origin)?;
    Ok(format!("{}t2star_ns: {:e}\nenvelope_origin_ns: {origin:e}\n", oscillation_lines(&g), g.t2_ns))
}

fn normalized(m: &[f64]) -> Result<Vec<f64>> {
    let first = m.first().copied().unwrap_or(0.0);
    if !(first.abs() > 0.0) {
        return Err(Error::fit("stretched_exponential", "first point is zero; cannot normalise"));
    }
    Ok(m.iter().map(|v| v / first).collect())
}

/// Echo fits. With constant init-to-readout spacing the padding wait
/// shrinks as T grows, so relaxation adds a factor e^{T/2T1} to the raw
/// signal; `t2_ns` is the pure-dephasing fit with that factor removed.
fn echo_report(r: &ExperimentResult, t1_ns: f64) -> Result<String> {
    let t = r.axis_values();
    let raw = normalized(&r.means())?;
    let corrected: Vec<f64> = raw.iter().zip(t).map(|(v, x)| v * (-x / (2.0 * t1_ns)).exp()).collect();
    let fit_prefix = |v: &[f64]| {
        // shot noise on a fully decayed tail can leave the fit's valid range
        let used = v.iter().position(|x| !(-0.05..=1.05).contains(x)).unwrap_or(v.len());
        fit_stretched_exponential(&t[..used], &v[..used]).map(|f| (f, used))
    };
    let (f, used) = fit_prefix(&corrected)?;
    let raw_t2 = fit_prefix(&raw).map_or(f64::NAN, |(g, _)| g.t2);
    Ok(format!(
        "{}t2_ns: {:e}\nalpha: {:.4}\npoints_used: {used}\nt2_raw_ns: {raw_t2:e}\n",
        f.fit.report(),
        f.t2,
        f.alpha
    ))
}

fn t1_report(r: &ExperimentResult) -> Result<String> {
    let f = fit_exponential_decay(r.axis_values(), &r.means())?;
    Ok(format!("{}t1_ns: {:e}\n", f.fit.report(), f.tau))
}

/// Interior points lower than both neighbours.
pub fn local_minima(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i].is_finite() && y[i] < y[i - 1] && y[i] < y[i + 1])
        .map(|i| x[i])
        .collect()
}

fn hh_scan_report(r: &ExperimentResult) -> Result<String> {
    let (outer, inner, rows) = rows(r)?;
    let q: Vec<f64> = rows
        .iter()
        .map(|row| fit_damped_oscillation(&inner.values, row, Envelope::Exponential).map_or(f64::NAN, |d| d.q_factor()))
        .collect();
    if q.iter().all(|v| v.is_nan()) {
        return Err(Error::fit("damped_oscillation", "no drive strength could be fitted"));
    }
    let mut s = String::from("model: q_factor_per_row\nomega_hz,q_factor\n");
    for (o, qv) in outer.values.iter().zip(&q) {
        let _ = writeln!(s, "{o:e},{qv:e}");
    }
    let _ = writeln!(s, "local_minima_hz: {:?}", local_minima(&outer.values, &q));
    Ok(s)
}

/// Period of the signal in the swept phase, by a sinusoid fit seeded
/// from the dominant spectral peak.
pub fn phase_period(phase: &[f64], signal: &[f64]) -> Result<f64> {
    // the frequency helper takes ns and returns Hz, so rescale
    let (f, _, _) = dominant_frequency(phase, signal)?;
    if !(f > 0.0) {
        return Err(Error::fit("phase_period", "no modulation"));
    }
    let p0 = 1e9 / f;
    let n = signal.len() as f64;
    let mean = signal.iter().sum::<f64>() / n;
    let (c, s) = phase.iter().zip(signal).fold((0.0, 0.0), |(c, s), (&x, &y)| {
        let w = 2.0 * PI * x / p0;
        (c + (y - mean) * w.cos(), s + (y - mean) * w.sin())
    });
    let (amp, phi0) = (2.0 * c.hypot(s) / n, (-s).atan2(c));
    let fit = least_squares(
        "phase_period",
        phase,
        signal,
        &["offset", "amplitude", "period", "phase"],
        &[mean, amp, p0, phi0],
        &[Bound::Free, Bound::Free, Bound::Range(0.5 * p0, 2.0 * p0), Bound::Free],
        |p, x| p[0] + p[1] * (2.0 * PI * x / p[2] + p[3]).cos(),
    )?;
    Ok(fit.value("period"))
}

fn phase_report(r: &ExperimentResult) -> Result<String> {
    let p = phase_period(r.axis_values(), &r.means())?;
    Ok(format!("model: dominant_period\nperiod_rad: {p:.6}\nperiod_over_pi: {:.6}\n", p / PI))
}

/// Emission rate from cumulative counts, then the transient fit.
pub fn init_transient(t: &[f64], cumulative: &[f64]) -> Result<(f64, f64, f64)> {
    let n = t.len();
    if n < 8 {
        return Err(Error::fit("init_transient", "need at least 8 points"));
    }
    let rate: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (cumulative[b] - cumulative[a]) / (t[b] - t[a])
        })
        .collect();
    let peak = (0..n).max_by(|&a, &b| rate[a].total_cmp(&rate[b])).unwrap_or(0);
    let tail_t: Vec<f64> = t[peak..].iter().map(|x| x - t[peak]).collect();
    let f = fit_exponential_decay(&tail_t, &rate[peak..])?;
    Ok((f.amplitude + f.offset, f.offset.max(0.0), f.tau))
}

fn init_report(r: &ExperimentResult) -> Result<String> {
    let (i_peak, i_ss, tau) = init_transient(r.axis_values(), &r.means())?;
    let fidelity = initialization_fidelity(i_peak, i_ss, 1.0, 0.0, 1.0, 1.0, true)?;
    Ok(format!(
        "model: pumping_transient\ni_peak: {i_peak:e}\ni_ss: {i_ss:e}\ninit_time_ns: {tau:.4}\nfidelity_lower_bound: {fidelity:.6}\n"
    ))
}

fn meta(ctx: &Context, shots: usize) -> Metadata {
    Metadata {
        experiment: String::new(),
        seed: ctx.seed,
        shots,
        config_hash: String::new(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// One-axis table without per-point errors.
fn table(axis: &str, dim: FieldDim, x: &[f64], y: &[f64], metadata: Metadata) -> ExperimentResult {
    ExperimentResult {
        axes: vec![Axis { name: axis.into(), dim, values: x.to_vec() }],
        points: x
            .iter()
            .zip(y)
            .map(|(&c, &m)| PointResult { coords: vec![c], mean: m, stderr: 0.0, mean_z: f64::NAN })
            .collect(),
        metadata,
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64).collect()
}

/// Spin Rabi frequency versus optical detuning at 1 mW, with the power-law fit.
pub fn rabi_vs_detuning(ctx: &Context) -> Result<Output> {
    let w = &ctx.world;
    let c = w.coupling.unwrap_or_else(|| default_coupling(&w.cavity));
    let deltas = linspace(150e9, 450e9, 31);
    let omegas = deltas
        .iter()
        .map(|&d| {
            let drive = RamanDrive { detuning_hz: d, power_mw: 1.0, mw_frequency_hz: 0.0, mw_phase: 0.0, calibration_c: c };
            spin_rabi_frequency(&drive, &w.cavity)
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(&deltas, &omegas)
        .map(|p| format!("model: power_law\nexponent: {:.5} +/- {:.2e}\nprefactor: {:e}\n", p.exponent, p.exponent_err, p.prefactor));
    let result = table("detuning", FieldDim::Frequency, &deltas, &omegas, meta(ctx, 1));
    Ok(Output { name: "fig1e_rabi_vs_detuning".into(), result, fit })
}

/// Lab-frame P⇑ trace at a given drive, and the relative amplitude of the
/// component at the Zeeman frequency.
pub fn rwa_breakdown(omega_hz: f64, zeeman_hz: f64, t_end_ns: f64, samples: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let drive = LabDrive { omega_hz, delta_hz: 0.0, phase: 0.0, zeeman_hz };
    let t = linspace(0.0, t_end_ns, samples);
    let p = beyond_rwa_trace(&drive, &t, drive.step_limit_ns())?;
    let rabi = tone_amplitude(&t, &p, omega_hz);
    let fast = tone_amplitude(&t, &p, zeeman_hz);
    Ok((t, p, fast / rabi.max(f64::MIN_POSITIVE)))
}

fn rwa_breakdown_panel(ctx: &Context) -> Result<Output> {
    let z = ctx.world.spin.zeeman_hz;
    let (t, p, rel) = rwa_breakdown(2e9, z, 5.0, 1001)?;
    let fit = Ok(format!("model: tone_projection\nomega_hz: 2e9\nzeeman_hz: {z:e}\nrelative_amplitude_at_zeeman: {rel:e}\n"));
    let result = table("t", FieldDim::Time, &t, &p, meta(ctx, 1));
    Ok(Output { name: "fig1g_rwa_breakdown".into(), result, fit })
}

/// CPMG coherence times for N = 1..=16 with and without relaxation, and the
/// exponent of the pure-dephasing scaling.
pub fn cpmg_scaling(world: &World) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n: Vec<f64> = (1..=16).map(|k| k as f64).collect();
    let mut pure = Vec::new();
    let mut with_t1 = Vec::new();
    for k in 1..=16 {
        pure.push(t2_from_filter_function(DdSequence::Cpmg(k), &world.noise, None)?);
        with_t1.push(t2_from_filter_function(DdSequence::Cpmg(k), &world.noise, Some(world.spin.t1_ns))?);
    }
    Ok((n, pure, with_t1))
}

fn cpmg_panel(ctx: &Context) -> Result<Output> {
    let (n, pure, with_t1) = cpmg_scaling(&ctx.world)?;
    let fit = fit_power_law(&n, &pure).map(|p| {
        let t1 = ctx.world.spin.t1_ns;
        let max = with_t1.iter().cloned().fold(0.0, f64::max);
        format!(
            "model: power_law\ngamma: {:.5} +/- {:.2e}\nt2_hahn_ns: {:e}\nmax_t2_with_t1_ns: {max:e}\nt2_limit_2t1_ns: {:e}\n",
            p.exponent,
            p.exponent_err,
            p.prefactor,
            2.0 * t1
        )
    });
    let result = table("pulses", FieldDim::Count, &n, &with_t1, meta(ctx, 1));
    Ok(Output { name: "fig2c_cpmg_scaling".into(), result, fit })
}

/// Rabi Q-factor across drive strengths, with and without the
/// Hartmann-Hahn channel.
pub fn hh_q_scan(world: &World, omegas: &[f64], shots: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    use rayon::prelude::*;
    let mut ablated = world.bath.clone();
    ablated.hh.enabled = false;
    let q = |bath| -> Result<Vec<f64>> {
        omegas
            .par_iter()
            .map(|&o| rabi_q_factor_with_bath(o, bath, &world.spin, world.optical_detuning_hz, shots, seed))
            .collect()
    };
    Ok((q(&world.bath)?, q(&ablated)?))
}

fn hh_panel(ctx: &Context) -> Result<Output> {
    let w = &ctx.world;
    let omegas = linspace(20e6, 50e6, 61);
    let (q, q_off) = hh_q_scan(w, &omegas, ctx.shots.max(1000), ctx.seed)?;
    let mut s = String::from("model: q_factor_scan\n");
    let _ = writeln!(s, "local_minima_hz: {:?}", local_minima(&omegas, &q));
    let _ = writeln!(s, "local_minima_without_channel_hz: {:?}", local_minima(&omegas, &q_off));
    for sp in &w.bath.species {
        let _ = writeln!(s, "larmor_{}_hz: {:e}", sp.name, sp.larmor_hz(w.bath.b_field_t));
    }
    let _ = writeln!(s, "resonance_width_hz: {:e}", w.bath.hh.width_hz);
    let result = table("omega", FieldDim::Frequency, &omegas, &q, meta(ctx, ctx.shots.max(1000)));
    Ok(Output { name: "fig3a_hh_q_factor".into(), result, fit: Ok(s) })
}

/// Overhauser offsets (relative to the set point) after the protocol's
/// back-to-back cooling runs, one walker per measurement.
pub fn cooled_offsets(state: &OverhauserState, protocol: &CoolingProtocol, walkers: usize, seed: u64) -> Vec<f64> {
    (0..walkers)
        .map(|i| {
            let mut rng = stream(seed, 2, i as u64);
            let oh = sample_overhauser(state, &mut rng);
            protocol.cool_repeated(oh, state.set_point_hz, protocol.blocks, &mut rng) - state.set_point_hz
        })
        .collect()
}

/// Ensemble Ramsey visibility ⟨cos 2π·offset·τ⟩.
pub fn ramsey_coherence(offsets: &[f64], taus_ns: &[f64]) -> Vec<f64> {
    let n = offsets.len() as f64;
    taus_ns
        .iter()
        .map(|&t| offsets.iter().map(|o| (2.0 * PI * o * t * 1e-9).cos()).sum::<f64>() / n)
        .collect()
}

/// Thermal offsets relative to the set point.
pub fn thermal_offsets(state: &OverhauserState, walkers: usize, seed: u64) -> Vec<f64> {
    (0..walkers)
        .map(|i| sample_overhauser(state, &mut stream(seed, 2, i as u64)) - state.set_point_hz)
        .collect()
}

/// Stretched-exponential fit of an ensemble envelope up to its first zero
/// crossing; a narrowed distribution with sharp edges rings negative after.
pub fn fit_envelope(t: &[f64], v: &[f64]) -> Result<StretchedExp> {
    let end = v.iter().position(|&x| x <= 0.0).unwrap_or(v.len());
    fit_stretched_exponential(&t[..end], &v[..end])
}

fn walkers(ctx: &Context) -> usize {
    ctx.shots.max(4000)
}

fn envelope_lines(label: &str, f: &StretchedExp) -> String {
    format!("{label}_t2star_ns: {:e}\n{label}_alpha: {:.4}\n", f.t2, f.alpha)
}

fn cooled_envelope_panel(ctx: &Context) -> Result<Output> {
    let w = &ctx.world;
    let taus = linspace(0.0, 1500.0, 151);
    let modes = [CoolingMode::RabiDrive, CoolingMode::QuantumSensing];
    let mut points = Vec::new();
    let mut fits = Vec::new();
    for (k, mode) in modes.into_iter().enumerate() {
        let protocol = CoolingProtocol { mode, ..w.cooling.clone() };
        let v = ramsey_coherence(&cooled_offsets(&w.bath.overhauser, &protocol, walkers(ctx), ctx.seed), &taus);
        fits.push(fit_envelope(&taus, &v));
        for (&t, &m) in taus.iter().zip(&v) {
            points.push(PointResult { coords: vec![k as f64, t], mean: m, stderr: 0.0, mean_z: f64::NAN });
        }
    }
    let fit = match (&fits[0], &fits[1]) {
        (Ok(a), Ok(b)) => Ok(format!(
            "model: stretched_exponential\nmode_0: rabi_drive\nmode_1: quantum_sensing\n{}{}",
            envelope_lines("rabi_drive", a),
            envelope_lines("quantum_sensing", b)
        )),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    let result = ExperimentResult {
        axes: vec![
            Axis { name: "cooling_mode".into(), dim: FieldDim::Count, values: vec![0.0, 1.0] },
            Axis { name: "tau".into(), dim: FieldDim::Time, values: taus },
        ],
        points,
        metadata: meta(ctx, walkers(ctx)),
    };
    Ok(Output { name: "fig3c_cooled_envelope".into(), result, fit })
}

fn alpha_panel(ctx: &Context) -> Result<Output> {
    let w = &ctx.world;
    let tau_max = linspace(200.0, 1400.0, 13);
    let mut t2 = Vec::new();
    let mut s = String::from("model: stretched_exponential\ntau_max_ns,t2star_ns,alpha\n");
    let mut failed = None;
    for &tm in &tau_max {
        let protocol = CoolingProtocol { tau_max_ns: tm, ..w.cooling.clone() };
        let taus = linspace(0.0, 3.0 * tm.max(500.0), 151);
        let v = ramsey_coherence(&cooled_offsets(&w.bath.overhauser, &protocol, walkers(ctx), ctx.seed), &taus);
        match fit_envelope(&taus, &v) {
            Ok(f) => {
                let _ = writeln!(s, "{tm:e},{:e},{:.4}", f.t2, f.alpha);
                t2.push(f.t2);
            }
            Err(e) => {
                t2.push(f64::NAN);
                failed.get_or_insert(e);
            }
        }
    }
    let result = table("tau_max", FieldDim::Time, &tau_max, &t2, meta(ctx, walkers(ctx)));
    Ok(Output { name: "fig3d_alpha_vs_tau_max".into(), result, fit: failed.map_or(Ok(s), Err) })
}

/// σ of a Gaussian fitted to the spectrum of a fitted envelope, sampled on
/// eight 1/e times.
pub fn envelope_width(f: &StretchedExp) -> Result<f64> {
    let t = linspace(0.0, 8.0 * f.t2, 1024);
    let env: Vec<f64> = t.iter().map(|x| (-(x / f.t2).powf(f.alpha)).exp()).collect();
    Ok(envelope_fft(&t, &env)?.width_hz)
}

/// Thermal and cooled Ramsey envelopes, their fits and spectral widths.
pub struct WidthComparison {
    pub thermal: StretchedExp,
    pub cooled: StretchedExp,
    pub thermal_width_hz: f64,
    pub cooled_width_hz: f64,
    pub sigma_steps: Vec<f64>,
}

pub fn cooling_comparison(world: &World, walkers: usize, seed: u64) -> Result<WidthComparison> {
    let state = &world.bath.overhauser;
    let bare_t = linspace(0.0, 120.0, 121);
    let thermal = fit_envelope(&bare_t, &ramsey_coherence(&thermal_offsets(state, walkers, seed), &bare_t))?;
    let cooled_t = linspace(0.0, 2000.0, 201);
    let offsets = cooled_offsets(state, &world.cooling, walkers, seed);
    let cooled = fit_envelope(&cooled_t, &ramsey_coherence(&offsets, &cooled_t))?;
    let sigma_steps = run_cooling(&world.cooling, state, walkers, seed)?.iter().map(|s| s.sigma_hz).collect();
    Ok(WidthComparison {
        thermal_width_hz: envelope_width(&thermal)?,
        cooled_width_hz: envelope_width(&cooled)?,
        thermal,
        cooled,
        sigma_steps,
    })
}

fn width_panel(ctx: &Context) -> Result<Output> {
    let c = cooling_comparison(&ctx.world, walkers(ctx), ctx.seed)?;
    let cycles: Vec<f64> = (0..c.sigma_steps.len()).map(|k| k as f64).collect();
    let rho = spearman(&cycles, &c.sigma_steps);
    let fit = Ok(format!(
        "model: envelope_spectrum\n{}{}thermal_width_hz: {:e}\ncooled_width_hz: {:e}\nwidth_ratio: {:.3}\nsigma_spearman: {rho:.4}\n",
        envelope_lines("thermal", &c.thermal),
        envelope_lines("cooled", &c.cooled),
        c.thermal_width_hz,
        c.cooled_width_hz,
        c.thermal_width_hz / c.cooled_width_hz,
    ));
    let result = table("cycle", FieldDim::Count, &cycles, &c.sigma_steps, meta(ctx, walkers(ctx)));
    Ok(Output { name: "fig3f_overhauser_width".into(), result, fit })
}

fn engine_panel(ctx: &Context, panel: &str, builtin: &str, world: &World, drive: &BuiltinParams) -> Result<Output> {
    let seq = builtin_experiments(builtin, drive)?;
    let result = run_experiment(&seq, world, ctx.shots, ctx.seed)?;
    let fit = fit_report(builtin, &result, world, drive);
    Ok(Output { name: panel.into(), result, fit })
}

/// One output per figure panel, in [`FIGURE_PANELS`] order.
pub fn figure_suite(ctx: &Context) -> Result<Vec<Output>> {
    let w = &ctx.world;
    let d = &ctx.drive;
    let mut drive_cooled = w.clone();
    drive_cooled.cooling.mode = CoolingMode::RabiDrive;
    let mut strong = d.clone();
    strong.omega_hz = d.omega_hz.or(Some(w.cooling.omega_c_hz));
    log::info!("figure suite: {} panels", FIGURE_PANELS.len());
    Ok(vec![
        engine_panel(ctx, "fig1d_rabi", "rabi", w, d)?,
        rabi_vs_detuning(ctx)?,
        engine_panel(ctx, "fig1f_chevron", "chevron", w, d)?,
        rwa_breakdown_panel(ctx)?,
        engine_panel(ctx, "fig2a_ramsey", "ramsey", w, d)?,
        engine_panel(ctx, "fig2b_hahn", "hahn", w, d)?,
        cpmg_panel(ctx)?,
        hh_panel(ctx)?,
        engine_panel(ctx, "fig3b_cooling_ramsey", "cooling_ramsey", w, d)?,
        cooled_envelope_panel(ctx)?,
        alpha_panel(ctx)?,
        engine_panel(ctx, "fig3e_cooled_chevron", "cooled_chevron", &drive_cooled, &strong)?,
        width_panel(ctx)?,
        engine_panel(ctx, "fig3g_sideband_chevron", "cooled_chevron", w, d)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(shots: usize) -> Context {
        Context { world: World::default(), drive: BuiltinParams::default(), shots, seed: 11 }
    }

    #[test]
    fn minima_are_interior() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(local_minima(&x, &[3.0, 1.0, 2.0, 0.5, 0.0]), vec![1.0]);
    }

    #[test]
    fn transient_from_cumulative_counts() {
        let t = linspace(0.0, 30.0, 301);
        let c: Vec<f64> = t.iter().map(|x| 0.967 * 3.0 * (1.0 - (-x / 3.0).exp()) + 0.033 * x).collect();
        let (peak, ss, tau) = init_transient(&t, &c).unwrap();
        assert!((tau / 3.0 - 1.0).abs() < 0.02, "{tau}");
        assert!((1.0 - ss / peak - 0.967).abs() < 0.005);
    }

    #[test]
    fn detuning_exponent() {
        let o = rabi_vs_detuning(&ctx(1)).unwrap();
        assert!(o.fit.unwrap().contains("exponent: -2.9"));
    }

    #[test]
    fn phase_period_of_cos2() {
        let p = linspace(0.0, 2.0 * PI, 73);
        let y: Vec<f64> = p.iter().map(|x| (2.0 * x).cos()).collect();
        assert!((phase_period(&p, &y).unwrap() / PI - 1.0).abs() < 1e-6);
    }

    #[test]
    fn builtin_reports() {
        let c = ctx(200);
        let rabi = run_builtin("rabi", &c).unwrap();
        assert!(rabi.fit.unwrap().contains("q_factor"));
        let init = run_builtin("init_fidelity", &c).unwrap();
        assert!(init.fit.unwrap().contains("init_time_ns"));
    }
}
