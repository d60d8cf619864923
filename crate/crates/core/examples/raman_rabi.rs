//! Spin Rabi frequency of the two-colour Raman drive versus optical
//! detuning and laser power, and the fitted power law in the detuning.
//!
//! `cargo run --release --example raman_rabi`

use holespin::analysis::fit_power_law;
use holespin::dynamics::{default_coupling, spin_rabi_frequency, RamanDrive};
use holespin::sequence::World;

fn main() -> holespin::Result<()> {
    let world = World::default();
    let c = default_coupling(&world.cavity);
    let drive = |detuning_hz: f64, power_mw: f64| RamanDrive {
        detuning_hz,
        power_mw,
        mw_frequency_hz: RamanDrive::mw_for_detuning(&world.spin, 0.0),
        mw_phase: 0.0,
        calibration_c: c,
    };

    println!("detuning_GHz,omega_MHz");
    let mut deltas = Vec::new();
    let mut omegas = Vec::new();
    for k in 0..=12 {
        let d = 150e9 + 25e9 * k as f64;
        let o = spin_rabi_frequency(&drive(d, 1.0), &world.cavity)?;
        println!("{:.0},{:.3}", d / 1e9, o / 1e6);
        deltas.push(d);
        omegas.push(o);
    }
    let fit = fit_power_law(&deltas, &omegas)?;
    println!("omega ~ detuning^{:.3} (+/- {:.1e})", fit.exponent, fit.exponent_err);

    println!("power_mW,omega_MHz at 320 GHz");
    for p in [0.25, 0.5, 1.0, 2.0] {
        println!("{p},{:.2}", spin_rabi_frequency(&drive(320e9, p), &world.cavity)? / 1e6);
    }
    Ok(())
}
