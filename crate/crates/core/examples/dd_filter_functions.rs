//! Dynamical decoupling under 1/f^β noise: CPMG coherence times from the
//! filter function, their scaling with pulse number, the relaxation cap,
//! and a time-domain Monte-Carlo cross-check.
//!
//! `cargo run --release --example dd_filter_functions -- [realizations]`

use holespin::analysis::fit_power_law;
use holespin::experiments::cpmg_scaling;
use holespin::noise::{coherence_from_filter_function, timedomain_visibility, DdSequence};
use holespin::sequence::World;

fn main() -> holespin::Result<()> {
    let realizations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let world = World::default();
    let (n, pure, with_t1) = cpmg_scaling(&world)?;
    println!("pulses,t2_us,t2_with_t1_us");
    for ((n, a), b) in n.iter().zip(&pure).zip(&with_t1) {
        println!("{n},{:.2},{:.2}", a / 1e3, b / 1e3);
    }
    let fit = fit_power_law(&n, &pure)?;
    println!("T2 ~ N^{:.3}; 2*T1 = {:.0} us", fit.exponent, 2.0 * world.spin.t1_ns / 1e3);

    // time-domain trajectories need a finite bandwidth
    let noise = holespin::noise::NoiseSpectrum { high_cutoff_hz: 20e6, ..world.noise.clone() };
    let times = [10e3, 20e3, 40e3];
    for seq in [DdSequence::Hahn, DdSequence::Cpmg(4)] {
        let mc = timedomain_visibility(&noise, seq, &times, 5.0, realizations, 3)?;
        for (t, m) in times.iter().zip(&mc) {
            let ff = coherence_from_filter_function(seq, &noise, *t)?;
            println!("{seq:?} T = {:>2.0} us: filter {ff:.3}, time domain {m:.3}", t / 1e3);
        }
    }
    Ok(())
}
