//! Writing an experiment in the pulse-sequence language: parse, run, write
//! the table as CSV and read it back.
//!
//! `cargo run --release --example sequence_dsl`

use holespin::sequence::{parse_sequence, run_experiment, ExperimentResult, World};

const TEXT: &str = "\
# detuned Rabi oscillation with a second pulse at a swept phase
shots 300
seed 12
init 30ns
raman @drive omega=95MHz delta=20MHz phase=0 t=5ns
raman @probe omega=95MHz mw_phase=0 t=2.6ns
readout 90ns
sweep drive.t from 0 to 20ns steps 5
sweep probe.mw_phase from 0 to pi steps 4
";

fn main() -> holespin::Result<()> {
    let seq = parse_sequence(TEXT)?;
    println!("{} elements, {} sweep points", seq.elements.len(), seq.points());
    let result = run_experiment(&seq, &World::default(), seq.shots.unwrap_or(100), seq.seed.unwrap_or(0))?;
    let csv = result.to_csv();
    print!("{csv}");
    let back = ExperimentResult::from_csv(&csv)?;
    assert_eq!(back.to_csv(), csv);
    println!("CSV round trip preserved {} points", back.points.len());

    match parse_sequence("init 30ns\nwait t=$T\n") {
        Err(e) => println!("bad input is rejected: {e}"),
        Ok(_) => unreachable!("an unbound sweep variable must not parse"),
    }
    Ok(())
}
