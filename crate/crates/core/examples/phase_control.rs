//! Microwave phase control of the Raman drive: two π/2 pulses versus the
//! phase of the second (period π, since the qubit sees twice the microwave
//! phase), and phase-alternated Ramsey readout with zero mean projection.
//!
//! `cargo run --release --example phase_control -- [shots]`

use holespin::experiments::{phase_period, run_builtin, Context};
use holespin::sequence::{BuiltinParams, World};

fn main() -> holespin::Result<()> {
    let shots = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let ctx = Context { world: World::default(), drive: BuiltinParams::default(), shots, seed: 2 };
    let sweep = run_builtin("phase_sweep", &ctx)?;
    let period = phase_period(sweep.result.axis_values(), &sweep.result.means())?;
    println!("signal period in the microwave phase: {:.4} pi", period / std::f64::consts::PI);

    let ramsey = run_builtin("ramsey", &ctx)?;
    let z: Vec<f64> = ramsey.result.points.iter().map(|p| p.mean_z).collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let worst = z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    println!("interleaved Ramsey: mean z {mean:+.4}, largest |z| {worst:.4} over {} points", z.len());
    Ok(())
}
