//! Feedback cooling of the Overhauser field: the ensemble width cycle by
//! cycle, the Ramsey envelope before and after, and the spectral widths of
//! the fitted envelopes.
//!
//! `cargo run --release --example nuclear_cooling -- [walkers]`

use holespin::bath::run_cooling;
use holespin::experiments::cooling_comparison;
use holespin::sequence::World;

fn main() -> holespin::Result<()> {
    let walkers = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4000);
    let world = World::default();
    let p = &world.cooling;
    println!(
        "{} cycles, tau {}..{} ns, T_c {} ns at {} MHz, {} back-to-back runs",
        p.n_cycles,
        p.tau_min_ns,
        p.tau_max_ns,
        p.tc_ns,
        p.omega_c_hz / 1e6,
        p.blocks
    );
    println!("cycle,sigma_MHz");
    for step in run_cooling(p, &world.bath.overhauser, walkers, 3)?.iter().step_by(5) {
        println!("{},{:.3}", step.cycle, step.sigma_hz / 1e6);
    }
    let c = cooling_comparison(&world, walkers, 3)?;
    println!("thermal T2* {:.1} ns (alpha {:.2})", c.thermal.t2, c.thermal.alpha);
    println!("cooled  T2* {:.0} ns (alpha {:.2})", c.cooled.t2, c.cooled.alpha);
    println!(
        "envelope widths {:.2} MHz -> {:.3} MHz, ratio {:.1}",
        c.thermal_width_hz / 1e6,
        c.cooled_width_hz / 1e6,
        c.thermal_width_hz / c.cooled_width_hz
    );
    Ok(())
}
