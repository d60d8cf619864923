//! Optical-pumping initialization: the four-level fluorescence transient,
//! its 1/e time, and the fidelity formula, plus the same numbers recovered
//! from cumulative readout counts in the engine.
//!
//! `cargo run --release --example initialization`

use holespin::dynamics::readout::{initialization_fidelity, simulate_initialization};
use holespin::experiments::{run_builtin, Context};
use holespin::sequence::{BuiltinParams, World};

fn main() -> holespin::Result<()> {
    let world = World::default();
    let s = &world.spin;
    let sim = simulate_initialization(&world.readout, s, 30.0)?;
    println!("t_ns,counts_per_ns");
    for (t, c) in sim.times_ns.iter().zip(&sim.signal).step_by(20) {
        println!("{t:.2},{c:.4}");
    }
    println!("1/e time {:.3} ns, I_ss/I_peak {:.2e}, fidelity {:.5}", sim.init_time_ns, sim.i_ss / sim.i_peak, sim.fidelity);

    let lower = initialization_fidelity(1.0, 0.033, 1.0, 0.0, s.gamma_x, s.gamma_total(), true)?;
    let full = initialization_fidelity(1.0, 0.033, 1.0, 0.5, s.gamma_x, s.gamma_total(), false)?;
    println!("at I_ss/I_peak = 0.033: lower bound {lower:.4}, with theta = 0.5 {full:.4}");

    let ctx = Context { world, drive: BuiltinParams::default(), shots: 1000, seed: 4 };
    print!("{}", run_builtin("init_fidelity", &ctx)?.fit?);
    Ok(())
}
