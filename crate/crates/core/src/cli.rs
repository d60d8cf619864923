//! Command-line front end: `run`, `validate`, `list-experiments`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics or parse
//! error, 4 fit error (tables are still written). Every failing exit ends
//! stderr with `ERROR <code> <context>`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_override, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{run_config, Output, FIGURE_PANELS, FIGURE_SUITE};
use crate::sequence::BUILTINS;

#[derive(Debug, Parser)]
#[command(name = "holespin", version, about = "Hole-spin microcavity simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a builtin experiment, `figure-suite`, or a sequence file.
    Run(RunArgs),
    /// Check a configuration without running any physics.
    Validate(ConfigArgs),
    /// Print the builtin experiments and figure panels.
    ListExperiments,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML configuration file; defaults apply without one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `spin.t1=21us`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Builtin name or `figure-suite`.
    #[arg(long, conflicts_with = "sequence")]
    pub experiment: Option<String>,
    /// Pulse-sequence file.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Random seed; required here or in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<usize>,
    /// Worker threads for the sweep (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    name: String,
    csv: String,
    fit: String,
    fit_ok: bool,
}

#[derive(Debug, Serialize)]
struct Manifest {
    experiment: String,
    config_hash: String,
    seed: u64,
    shots: usize,
    version: String,
    outputs: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        2
    } else if e.is_fit() {
        4
    } else {
        3
    }
}

fn load(args: &ConfigArgs) -> Result<RunConfig> {
    let overrides = args.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>>>()?;
    match &args.config {
        Some(p) => RunConfig::load(p, &overrides),
        None => RunConfig::from_toml_str("", None, &overrides),
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = load(&args.config)?;
    if let Some(e) = &args.experiment {
        cfg.experiment = Some(e.clone());
        cfg.sequence_file = None;
    }
    if let Some(s) = &args.sequence {
        cfg.sequence_file = Some(s.clone());
        cfg.experiment = None;
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(n) = args.shots {
        if n == 0 {
            return Err(Error::config("shots", "must be at least 1"));
        }
        cfg.shots = n;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    let name = cfg.experiment_name();
    match name.as_deref() {
        None => return Err(Error::config("experiment", "give --experiment or --sequence")),
        Some(n) if cfg.sequence_file.is_none() && n != FIGURE_SUITE && !BUILTINS.iter().any(|b| b.name == n) => {
            return Err(Error::config("experiment", format!("unknown experiment `{n}`; see list-experiments")));
        }
        _ => {}
    }
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Write tables, fit summaries and the manifest; returns the first fit error.
fn write_outputs(cfg: &RunConfig, outputs: &[Output], dir: &Path) -> Result<Option<Error>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut entries = Vec::new();
    let mut first_fit_error = None;
    for o in outputs {
        let csv = format!("{}.csv", o.name);
        let fit = format!("{}.fit.txt", o.name);
        write_file(&dir.join(&csv), &o.result.to_csv())?;
        let text = match &o.fit {
            Ok(report) => report.clone(),
            Err(e) => {
                first_fit_error.get_or_insert_with(|| e.clone());
                format!("fit failed: {e}\n")
            }
        };
        write_file(&dir.join(&fit), &text)?;
        entries.push(ManifestEntry { name: o.name.clone(), csv, fit, fit_ok: o.fit.is_ok() });
    }
    let manifest = Manifest {
        experiment: cfg.experiment_name().unwrap_or_default(),
        config_hash: cfg.config_hash()?,
        seed: cfg.seed.unwrap_or_default(),
        shots: cfg.shots,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    write_file(&dir.join(MANIFEST), &(json + "\n"))?;
    Ok(first_fit_error)
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve(args)?;
    if let Some(n) = args.threads {
        // the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let outputs = run_config(&cfg)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let fit_error = write_outputs(&cfg, &outputs, &dir)?;
    for o in &outputs {
        let _ = writeln!(out, "{}: {} points -> {}", o.name, o.result.points.len(), dir.join(format!("{}.csv", o.name)).display());
    }
    fit_error.map_or(Ok(()), Err)
}

fn cmd_validate(args: &ConfigArgs, out: &mut dyn Write) -> Result<()> {
    // report-only: a file that does not load is one more violation
    let v = match load(args) {
        Ok(cfg) => cfg.violations(),
        Err(Error::Config { path, reason }) => vec![(path, reason)],
        Err(e) => vec![(String::new(), e.to_string())],
    };
    for (path, reason) in &v {
        let _ = writeln!(out, "{path}: {reason}");
    }
    let _ = writeln!(out, "{} violation(s)", v.len());
    Ok(())
}

fn cmd_list(out: &mut dyn Write) {
    for b in BUILTINS {
        let _ = writeln!(out, "{:<16} {}", b.name, b.description);
    }
    let _ = writeln!(out, "{FIGURE_SUITE:<16} every figure panel below");
    for (name, what) in FIGURE_PANELS {
        let _ = writeln!(out, "  {name:<24} {what}");
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // help and version requests are not errors
            if !e.use_stderr() {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            let _ = writeln!(err, "ERROR 2 usage: {}", e.kind());
            return 2;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::ListExperiments => {
            cmd_list(out);
            Ok(())
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let context = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "ERROR {code} {context}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("holespin").chain(args.iter().copied()).map(String::from);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_names_every_builtin() {
        let (code, out, _) = call(&["list-experiments"]);
        assert_eq!(code, 0);
        assert!(BUILTINS.iter().all(|b| out.contains(b.name)));
        assert!(out.contains("figure-suite"));
    }

    #[test]
    fn missing_seed_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = call(&["run", "--experiment", "rabi", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.lines().last().unwrap().starts_with("ERROR 2 "));
    }

    #[test]
    fn unknown_experiment_and_bad_override() {
        let (code, _, err) = call(&["run", "--experiment", "nope", "--seed", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("list-experiments"));
        let (code, _, _) = call(&["run", "--experiment", "rabi", "--seed", "1", "--set", "spin.t1"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn validate_reports_paths() {
        let (code, out, _) = call(&["validate", "--set", "protocol.tau_min=700ns"]);
        assert_eq!(code, 0);
        assert!(out.lines().any(|l| l.starts_with("protocol")), "{out}");
        let (code, out, _) = call(&["validate", "--set", "cavity.mirrors=[1.0, 1.0]"]);
        assert_eq!(code, 0);
        assert!(out.contains("cavity.mirrors"), "{out}");
        let (_, out, _) = call(&["validate", "--set", "seed=3", "--set", "experiment=rabi"]);
        assert!(out.ends_with("0 violation(s)\n"), "{out}");
    }
}
