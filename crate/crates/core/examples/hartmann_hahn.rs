//! Rabi Q-factor versus drive strength: dips where the dressed-state
//! splitting matches a nuclear Larmor frequency, gone once the
//! spin-nuclear channel is switched off.
//!
//! `cargo run --release --example hartmann_hahn -- [shots]`

use holespin::experiments::{hh_q_scan, local_minima};
use holespin::sequence::World;

fn main() -> holespin::Result<()> {
    let shots = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let world = World::default();
    for s in &world.bath.species {
        println!("{:>5} Larmor {:.2} MHz", s.name, s.larmor_hz(world.bath.b_field_t) / 1e6);
    }
    let omegas: Vec<f64> = (0..=60).map(|k| 20e6 + 0.5e6 * k as f64).collect();
    let (q, q_off) = hh_q_scan(&world, &omegas, shots, 5)?;
    println!("omega_MHz,q,q_without_channel");
    for ((o, a), b) in omegas.iter().zip(&q).zip(&q_off) {
        println!("{:.1},{a:.2},{b:.2}", o / 1e6);
    }
    let mhz = |v: Vec<f64>| v.iter().map(|x| x / 1e6).collect::<Vec<_>>();
    println!("dips at {:?} MHz", mhz(local_minima(&omegas, &q)));
    println!("dips without channel: {:?}", mhz(local_minima(&omegas, &q_off)));
    Ok(())
}
