//! Closed-form RWA chevron checked against the four-level integrator, then
//! the same map from the shot-based engine with its fitted Rabi frequency.
//!
//! `cargo run --release --example chevron_oracle -- [shots]`

use holespin::dynamics::lindblad::Tolerance;
use holespin::dynamics::two_level::{chevron_four_level, chevron_p_up};
use holespin::experiments::{run_builtin, Context};
use holespin::sequence::{BuiltinParams, World};

fn main() -> holespin::Result<()> {
    let shots = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let omega = 95e6;
    let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
    let mut worst = 0.0_f64;
    for k in 0..=20 {
        let delta = -200e6 + 20e6 * k as f64;
        let oracle = chevron_four_level(omega, delta, &times, Tolerance::ORACLE)?;
        for (t, p) in times.iter().zip(&oracle) {
            worst = worst.max((chevron_p_up(omega, delta, *t) - p).abs());
        }
    }
    println!("21 detunings x 101 times: max |closed form - integrator| = {worst:.2e}");

    let ctx = Context { world: World::default(), drive: BuiltinParams::default(), shots, seed: 1 };
    let out = run_builtin("chevron", &ctx)?;
    println!("engine chevron: {} points over {} axes", out.result.points.len(), out.result.axes.len());
    print!("{}", out.fit?);
    Ok(())
}
