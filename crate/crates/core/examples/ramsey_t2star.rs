//! Inhomogeneous dephasing from the quasistatic Overhauser field: direct
//! Monte-Carlo averaging over the bath, then phase-alternated Ramsey fringes
//! from the engine with finite pulses.
//!
//! `cargo run --release --example ramsey_t2star -- [shots]`

use holespin::analysis::{fit_damped_oscillation_from, fit_gaussian_decay, Envelope};
use holespin::bath::t2star_for_sigma;
use holespin::experiments::{ramsey_coherence, ramsey_envelope_origin, run_builtin, thermal_offsets, Context};
use holespin::sequence::{BuiltinParams, World};

fn main() -> holespin::Result<()> {
    let shots = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4000);
    let world = World::default();
    let bath = &world.bath.overhauser;
    println!("bath sigma {:.2} MHz, expected T2* {:.1} ns", bath.sigma_hz / 1e6, t2star_for_sigma(bath.sigma_hz));

    let taus: Vec<f64> = (0..=120).map(|k| k as f64).collect();
    let v = ramsey_coherence(&thermal_offsets(bath, 100_000, 7), &taus);
    println!("bath average over 1e5 draws: T2* {:.2} ns", fit_gaussian_decay(&taus, &v)?.t2);

    let ctx = Context { world, drive: BuiltinParams::default(), shots, seed: 7 };
    let out = run_builtin("ramsey", &ctx)?;
    let origin = ramsey_envelope_origin(ctx.drive.omega());
    let fit = fit_damped_oscillation_from(out.result.axis_values(), &out.result.means(), Envelope::Gaussian, origin)?;
    println!(
        "engine Ramsey at 30 MHz detuning, {shots} shots: fringe {:.3} MHz, T2* {:.1} ns",
        fit.frequency_hz / 1e6,
        fit.t2_ns
    );
    Ok(())
}
