//! Every figure panel at reduced shots, printing each fit summary.
//!
//! `cargo run --release --example figure_suite -- [shots] [seed]`

use holespin::experiments::{figure_suite, Context};
use holespin::sequence::{BuiltinParams, World};

fn main() -> holespin::Result<()> {
    let mut args = std::env::args().skip(1);
    let shots = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let ctx = Context { world: World::default(), drive: BuiltinParams::default(), shots, seed };
    for out in figure_suite(&ctx)? {
        println!("== {} ({} points)", out.name, out.result.points.len());
        match out.fit {
            Ok(report) => print!("{report}"),
            Err(e) => println!("fit failed: {e}"),
        }
    }
    Ok(())
}
