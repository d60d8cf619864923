//! Lab-frame dynamics without the rotating-wave approximation: once the
//! Rabi frequency approaches the Zeeman splitting, P⇑ picks up a fast
//! component at the Zeeman frequency.
//!
//! `cargo run --release --example rwa_breakdown`

use holespin::experiments::rwa_breakdown;
use holespin::sequence::World;

fn main() -> holespin::Result<()> {
    let zeeman = World::default().spin.zeeman_hz;
    println!("omega_MHz,relative_tone_at_zeeman");
    for omega in [20e6, 100e6, 500e6, 1e9, 2e9] {
        // about four Rabi periods, sampled well above the Zeeman frequency
        let t_end = 4e9 / omega;
        let samples = ((t_end * zeeman * 1e-9 * 8.0) as usize).max(1001);
        let (_, _, rel) = rwa_breakdown(omega, zeeman, t_end, samples)?;
        println!("{:.0},{rel:.3e}", omega / 1e6);
    }
    Ok(())
}
