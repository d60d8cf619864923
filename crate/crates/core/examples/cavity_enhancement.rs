//! Intensity enhancement of the split-mode microcavity versus laser
//! detuning, where it crosses unity, and the input polarization that
//! restores circular light inside the cavity.
//!
//! `cargo run --release --example cavity_enhancement`

use holespin::cavity::{finesse_from_mirrors, CavityParams};

fn main() -> holespin::Result<()> {
    let cavity = CavityParams::default();
    println!("finesse {}, linewidth {:.1} GHz", cavity.finesse, cavity.linewidth_hz / 1e9);
    println!("peak enhancement {:.1} (8F/pi)", cavity.peak_enhancement());
    println!("unity crossing at {:.1} GHz", cavity.unity_crossing_hz() / 1e9);

    println!("detuning_GHz,enhancement,E_H,E_V,amplitude_ratio");
    for k in 0..=12 {
        let d = 50e9 * k as f64;
        let (eh, ev) = cavity.enhancement_h_v(d)?;
        let jones = cavity.polarization_compensation(d)?;
        println!("{:.0},{:.4},{eh:.4},{ev:.4},{:.4}", d / 1e9, cavity.intensity_enhancement(d)?, jones.amplitude_ratio());
    }

    // mirror reflectivities give the same finesse
    let r = 0.99686;
    println!("finesse from two mirrors with r = {r}: {:.0}", finesse_from_mirrors(r, r)?);
    Ok(())
}
