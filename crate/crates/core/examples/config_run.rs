//! Driving a run from a TOML configuration with unit-suffixed values and
//! command-line style overrides, as the `holespin` binary does.
//!
//! `cargo run --release --example config_run`

use holespin::config::{parse_override, RunConfig};
use holespin::experiments::run_config;

const CONFIG: &str = r#"
experiment = "hahn"
seed = 21
shots = 300

[spin]
t1 = "21us"

[noise]
beta = 0.45
hahn_t2 = "20us"

[drive]
steps = 16
"#;

fn main() -> holespin::Result<()> {
    let overrides = vec![parse_override("drive.t_max=40us")?];
    let cfg = RunConfig::from_toml_str(CONFIG, None, &overrides)?;
    for (path, reason) in cfg.violations() {
        println!("violation {path}: {reason}");
    }
    println!("config hash {}", cfg.config_hash()?);
    for out in run_config(&cfg)? {
        println!("{}: {} points", out.name, out.result.points.len());
        print!("{}", out.fit?);
    }

    // a value without a unit is a configuration error naming the key
    let err = RunConfig::from_toml_str("[spin]\nt1 = \"21\"\n", None, &[]).unwrap_err();
    println!("rejected: {err}");
    Ok(())
}
