//! Run configuration: a TOML file with unit-suffixed values, resolved into a
//! [`World`] plus builtin knobs.
//!
//! ```toml
//! experiment = "ramsey"
//! shots = 2000
//! seed = 7
//!
//! [cavity]
//! finesse = 500
//! linewidth = "25GHz"
//!
//! [spin]
//! t1 = "21us"
//! flip_coefficient = "0.5e-4/ns/MHz"
//!
//! [drive]
//! delta = "30MHz"
//! ```
//!
//! Every dimensioned value needs a unit (a bare `0` is accepted). Unknown
//! keys are errors. Overrides given as `section.key=value` are applied to
//! the document before resolution, so they obey the same rules.
//!
//! The config hash is the SHA-256 of the canonical JSON form of the resolved
//! configuration (world, drive knobs, experiment or parsed sequence, shots,
//! seed). Formatting, comments and unit spelling do not change it; the
//! output directory and thread count are not part of it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use toml::{Table, Value as Toml};

use crate::bath::{sigma_for_t2star, CoolingMode, HeavyTail, NuclearSpecies};
use crate::cavity::finesse_from_mirrors;
use crate::error::{Error, Result};
use crate::noise::{calibrate_amplitude, DdSequence};
use crate::sequence::{parse_sequence, BuiltinParams, PulseSequence, World};
use crate::units::{parse_with_unit, Dimension, Quantity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub world: World,
    pub drive: BuiltinParams,
    /// Builtin name, `figure-suite`, or the stem of `sequence_file`.
    pub experiment: Option<String>,
    pub sequence_file: Option<PathBuf>,
    pub shots: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            world: World::default(),
            drive: BuiltinParams::default(),
            experiment: None,
            sequence_file: None,
            shots: 1000,
            seed: None,
            out: None,
        }
    }
}

/// Reads one TOML table, remembering which keys were consumed.
struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Toml::Table(t)) => Some(t),
            Some(_) => return Err(Error::config(name, "expected a table")),
        };
        Ok(Section { path: name.to_string(), table, used: BTreeSet::new() })
    }

    fn key(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a Toml> {
        let v = self.table?.get(key)?;
        self.used.insert(key.to_string());
        Some(v)
    }

    fn text(&mut self, key: &str) -> Result<Option<String>> {
        Ok(match self.get(key) {
            None => None,
            Some(Toml::String(s)) => Some(s.clone()),
            Some(Toml::Integer(i)) => Some(i.to_string()),
            Some(Toml::Float(f)) => Some(f.to_string()),
            Some(Toml::Boolean(b)) => Some(b.to_string()),
            Some(_) => return Err(Error::config(&self.key(key), "expected a scalar")),
        })
    }

    fn quantity(&mut self, key: &str, dim: Dimension) -> Result<Option<f64>> {
        let path = self.key(key);
        match self.text(key)? {
            None => Ok(None),
            Some(s) if s == "inf" && dim == Dimension::TIME => Ok(Some(f64::INFINITY)),
            Some(s) => parse_with_unit(&s, dim).map(Some).map_err(|e| Error::config(&path, e.to_string())),
        }
    }

    /// Rate written as a frequency (`20/ns`, `5/us`), returned in 1/ns.
    fn rate(&mut self, key: &str) -> Result<Option<f64>> {
        Ok(self.quantity(key, Dimension::FREQUENCY)?.map(|v| v * 1e-9))
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        let path = self.key(key);
        match self.get(key) {
            None => Ok(None),
            Some(Toml::Integer(i)) => Ok(Some(*i as f64)),
            Some(Toml::Float(f)) => Ok(Some(*f)),
            Some(Toml::String(s)) => Quantity::parse(s)
                .and_then(|q| q.dimensionless())
                .map(Some)
                .map_err(|e| Error::config(&path, e.to_string())),
            Some(_) => Err(Error::config(&path, "expected a number")),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        let path = self.key(key);
        match self.get(key) {
            None => Ok(None),
            Some(Toml::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(Error::config(&path, "expected a non-negative integer")),
        }
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>> {
        let path = self.key(key);
        match self.get(key) {
            None => Ok(None),
            Some(Toml::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Error::config(&path, "expected true or false")),
        }
    }

    /// Error on any key that was not consumed.
    fn finish(self) -> Result<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.used.contains(*k)) {
                return Err(Error::config(&self.key(k), "unknown key"));
            }
        }
        Ok(())
    }
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value {
            $target = v;
        }
    };
}

/// Insert `value` at dotted `key`, creating tables on the way. The value is
/// read as a TOML literal when possible and as a string otherwise.
fn apply_override(doc: &mut Table, key: &str, value: &str) -> Result<()> {
    let parsed = format!("v = {value}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Toml::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "malformed override key"));
    }
    let mut table = doc;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| Toml::Table(Table::new()));
        table = match entry {
            Toml::Table(t) => t,
            _ => return Err(Error::config(key, format!("`{p}` is not a table"))),
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

/// Split `key=value` as given to `--set`.
pub fn parse_override(text: &str) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::config(text, "override must look like key=value"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Read a config file; relative sequence paths resolve against its directory.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(&path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text, path.parent(), overrides)
    }

    pub fn from_toml_str(text: &str, base_dir: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: Table = text.parse().map_err(|e: toml::de::Error| Error::config("", e.message().to_string()))?;
        for (k, v) in overrides {
            apply_override(&mut doc, k, v)?;
        }
        let known = ["experiment", "sequence", "shots", "seed", "out", "cavity", "spin", "bath", "noise", "protocol", "readout", "drive"];
        if let Some(k) = doc.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::config(k, "unknown key"));
        }
        let mut cfg = RunConfig::default();
        let mut top = Section { path: String::new(), table: Some(&doc), used: BTreeSet::new() };
        cfg.experiment = top.text("experiment")?;
        if let Some(s) = top.text("sequence")? {
            let p = PathBuf::from(s);
            cfg.sequence_file = Some(match base_dir {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            });
        }
        set!(cfg.shots, top.count("shots")?);
        cfg.seed = match top.get("seed") {
            None => None,
            Some(Toml::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(_) => return Err(Error::config("seed", "expected a non-negative integer")),
        };
        cfg.out = top.text("out")?.map(PathBuf::from);
        if cfg.shots == 0 {
            return Err(Error::config("shots", "need at least one shot"));
        }

        let w = &mut cfg.world;

        let mut s = Section::new(&doc, "cavity")?;
        let finesse = s.number("finesse")?;
        set!(w.cavity.linewidth_hz, s.quantity("linewidth", Dimension::FREQUENCY)?);
        set!(w.cavity.mode_splitting_hz, s.quantity("mode_splitting", Dimension::FREQUENCY)?);
        set!(w.cavity.resonance_frequency_hz, s.quantity("resonance", Dimension::FREQUENCY)?);
        if let Some(m) = s.get("mirrors") {
            let pair = m.as_array().filter(|a| a.len() == 2).and_then(|a| Some((num(&a[0])?, num(&a[1])?)));
            w.cavity.mirrors = Some(pair.ok_or_else(|| Error::config("cavity.mirrors", "expected [r1, r2]"))?);
        }
        match (finesse, w.cavity.mirrors) {
            (Some(f), _) => w.cavity.finesse = f,
            (None, Some((r1, r2))) => {
                // an invalid pair is reported by validation
                if let Ok(f) = finesse_from_mirrors(r1, r2) {
                    w.cavity.finesse = f;
                }
            }
            _ => {}
        }
        s.finish()?;

        let mut s = Section::new(&doc, "spin")?;
        set!(w.spin.zeeman_hz, s.quantity("zeeman", Dimension::FREQUENCY)?);
        if let Some(g) = s.get("g_factor") {
            w.spin.g_factor = match g {
                Toml::String(t) if t == "none" => None,
                other => Some(num(other).ok_or_else(|| Error::config("spin.g_factor", "expected a number or \"none\""))?),
            };
        }
        set!(w.spin.b_field_t, s.quantity("b_field", Dimension::FIELD)?);
        set!(w.spin.electron_zeeman_hz, s.quantity("electron_zeeman", Dimension::FREQUENCY)?);
        set!(w.spin.gamma_x, s.rate("gamma_x")?);
        set!(w.spin.gamma_y, s.rate("gamma_y")?);
        set!(w.spin.t1_ns, s.quantity("t1", Dimension::TIME)?);
        if let Some(t) = s.text("temperature")? {
            w.spin.temperature_k = t
                .trim()
                .strip_suffix('K')
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::config("spin.temperature", format!("expected kelvin such as `4.2K`, got `{t}`")))?;
        }
        if let Some(k) = s.text("flip_coefficient")? {
            w.spin.flip_coefficient = flip_coefficient(&k).map_err(|e| Error::config("spin.flip_coefficient", e))?;
        }
        if let Some(rows) = s.get("flip_table") {
            let parse_row = |r: &Toml| -> Option<(f64, f64)> {
                let a = r.as_array().filter(|a| a.len() == 2)?;
                let d = parse_with_unit(a[0].as_str()?, Dimension::FREQUENCY).ok()?;
                Some((d, flip_coefficient(a[1].as_str()?).ok()?))
            };
            let table: Option<Vec<_>> = rows.as_array().map(|a| a.iter().map(parse_row).collect()).unwrap_or(None);
            w.spin.flip_table = Some(table.ok_or_else(|| {
                Error::config("spin.flip_table", "expected [[\"<detuning>\", \"<coefficient>\"], ...]")
            })?);
        }
        set!(w.spin.stark_offset_hz, s.quantity("stark_offset", Dimension::FREQUENCY)?);
        s.finish()?;

        let mut s = Section::new(&doc, "bath")?;
        w.bath.b_field_t = w.spin.b_field_t;
        set!(w.bath.overhauser.mean_hz, s.quantity("mean", Dimension::FREQUENCY)?);
        set!(w.bath.overhauser.set_point_hz, s.quantity("set_point", Dimension::FREQUENCY)?);
        match (s.quantity("sigma", Dimension::FREQUENCY)?, s.quantity("t2star", Dimension::TIME)?) {
            (Some(_), Some(_)) => return Err(Error::config("bath.sigma", "give sigma or t2star, not both")),
            (Some(v), None) => w.bath.overhauser.sigma_hz = v,
            (None, Some(t)) => w.bath.overhauser.sigma_hz = sigma_for_t2star(t),
            (None, None) => {}
        }
        match (s.number("heavy_tail_weight")?, s.number("heavy_tail_scale")?) {
            (Some(weight), Some(scale)) => w.bath.overhauser.heavy_tail = Some(HeavyTail { weight, scale }),
            (None, None) => {}
            _ => return Err(Error::config("bath.heavy_tail_weight", "weight and scale go together")),
        }
        set!(w.bath.hh.enabled, s.flag("hh_enabled")?);
        set!(w.bath.hh.peak_rate, s.rate("hh_peak_rate")?);
        set!(w.bath.hh.width_hz, s.quantity("hh_width", Dimension::FREQUENCY)?);
        set!(w.bath.tau_heat_ns, s.quantity("tau_heat", Dimension::TIME)?);
        if let Some(list) = s.get("species") {
            let parse_species = |t: &Toml| -> Option<NuclearSpecies> {
                let t = t.as_table()?;
                let gamma = Quantity::parse(t.get("gyromagnetic")?.as_str()?).ok()?.hz_per_tesla().ok()?;
                Some(NuclearSpecies {
                    name: t.get("name")?.as_str()?.to_string(),
                    gyromagnetic_hz_per_t: gamma,
                    weight: t.get("weight").map_or(Some(1.0), num)?,
                })
            };
            let species: Option<Vec<_>> = list.as_array().map(|a| a.iter().map(parse_species).collect()).unwrap_or(None);
            w.bath.species = species.ok_or_else(|| {
                Error::config("bath.species", "expected [[bath.species]] tables with name, gyromagnetic (e.g. \"9.3856MHz/T\") and weight")
            })?;
        }
        s.finish()?;

        let mut s = Section::new(&doc, "noise")?;
        set!(w.noise_enabled, s.flag("enabled")?);
        set!(w.noise.beta, s.number("beta")?);
        set!(w.noise.low_cutoff_hz, s.quantity("low_cutoff", Dimension::FREQUENCY)?);
        set!(w.noise.high_cutoff_hz, s.quantity("high_cutoff", Dimension::FREQUENCY)?);
        let amplitude = s.number("amplitude")?;
        let hahn_t2 = s.quantity("hahn_t2", Dimension::TIME)?;
        w.noise.white_level = s.number("white_level")?;
        set!(w.noise.quasistatic_sigma_hz, s.quantity("quasistatic_sigma", Dimension::FREQUENCY)?);
        s.finish()?;
        match (amplitude, hahn_t2) {
            (Some(_), Some(_)) => return Err(Error::config("noise.amplitude", "give amplitude or hahn_t2, not both")),
            (Some(a), None) => w.noise.amplitude = a,
            (None, t2) => {
                // shape errors are reported by validation, not here
                let shape_ok = w.noise.violations().iter().all(|(p, _)| p == "noise.amplitude");
                if shape_ok {
                    let t2 = t2.unwrap_or(20e3);
                    let cal = calibrate_amplitude(w.noise.beta, w.noise.low_cutoff_hz, w.noise.high_cutoff_hz, DdSequence::Hahn, t2)
                        .map_err(|e| Error::config("noise.hahn_t2", e.to_string()))?;
                    w.noise.amplitude = cal.amplitude;
                }
            }
        }

        let mut s = Section::new(&doc, "protocol")?;
        if let Some(m) = s.text("mode")? {
            w.cooling.mode = match m.as_str() {
                "quantum_sensing" => CoolingMode::QuantumSensing,
                "rabi_drive" => CoolingMode::RabiDrive,
                _ => return Err(Error::config("protocol.mode", "expected quantum_sensing or rabi_drive")),
            };
        }
        set!(w.cooling.n_cycles, s.count("n_cycles")?);
        set!(w.cooling.tau_min_ns, s.quantity("tau_min", Dimension::TIME)?);
        set!(w.cooling.tau_max_ns, s.quantity("tau_max", Dimension::TIME)?);
        set!(w.cooling.tc_ns, s.quantity("tc", Dimension::TIME)?);
        set!(w.cooling.omega_c_hz, s.quantity("omega_c", Dimension::FREQUENCY)?);
        set!(w.cooling.readout_ns, s.quantity("readout", Dimension::TIME)?);
        set!(w.cooling.flip_efficiency, s.number("flip_efficiency")?);
        set!(w.cooling.flip_step_hz, s.quantity("flip_step", Dimension::FREQUENCY)?);
        set!(w.cooling.blocks, s.count("blocks")?);
        s.finish()?;

        let mut s = Section::new(&doc, "readout")?;
        set!(w.readout.rho11_initial, s.number("rho11_initial")?);
        set!(w.readout.theta, s.number("theta")?);
        set!(w.readout.pump_rabi_hz, s.quantity("pump_rabi", Dimension::FREQUENCY)?);
        set!(w.readout.readout_duration_ns, s.quantity("duration", Dimension::TIME)?);
        set!(w.readout.detection_scale, s.number("detection_scale")?);
        set!(w.readout.repump_ratio, s.number("repump_ratio")?);
        set!(w.readout.lower_bound, s.flag("lower_bound")?);
        set!(w.readout.shot_noise, s.flag("shot_noise")?);
        set!(w.ideal_init, s.flag("ideal_init")?);
        s.finish()?;

        let mut s = Section::new(&doc, "drive")?;
        set!(w.optical_detuning_hz, s.quantity("detuning", Dimension::FREQUENCY)?);
        w.coupling = s.number("coupling")?;
        set!(w.beyond_rwa, s.flag("beyond_rwa")?);
        if let Some(t) = s.table {
            for k in t.keys() {
                if !s.used.contains(k) {
                    let text = s.text(k)?.expect("key exists");
                    cfg.drive.set(k, &text)?;
                }
            }
        }
        cfg.drive.cooling = cfg.world.cooling.clone();
        // the readout window length doubles as the builtin readout length
        if doc.get("readout").and_then(|r| r.get("duration")).is_some() && doc.get("drive").and_then(|d| d.get("readout")).is_none() {
            cfg.drive.readout_ns = cfg.world.readout.readout_duration_ns;
        }
        Ok(cfg)
    }

    /// Every invariant violation with its config path; no physics is run.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = self.world.violations();
        if self.experiment.is_none() && self.sequence_file.is_none() {
            out.push(("experiment".into(), "no experiment or sequence file given".into()));
        }
        if self.drive.init_ns < 0.0 || self.drive.readout_ns < 0.0 {
            out.push(("drive".into(), "init and readout lengths must be >= 0".into()));
        }
        if self.seed.is_none() {
            out.push(("seed".into(), "a seed is required".into()));
        }
        out
    }

    /// Experiment name used for output files.
    pub fn experiment_name(&self) -> Option<String> {
        self.experiment.clone().or_else(|| {
            self.sequence_file
                .as_ref()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
        })
    }

    /// Parsed sequence file, if one is configured.
    pub fn sequence(&self) -> Result<Option<PulseSequence>> {
        match &self.sequence_file {
            None => Ok(None),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::config("sequence", format!("{}: {e}", p.display())))?;
                parse_sequence(&text).map(Some)
            }
        }
    }

    /// Hex SHA-256 of the canonical resolved configuration.
    pub fn config_hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Canonical<'a> {
            world: &'a World,
            drive: &'a BuiltinParams,
            experiment: Option<String>,
            sequence: Option<PulseSequence>,
            shots: usize,
            seed: Option<u64>,
        }
        let canonical = Canonical {
            world: &self.world,
            drive: &self.drive,
            experiment: self.experiment.clone(),
            sequence: self.sequence()?,
            shots: self.shots,
            seed: self.seed,
        };
        // serde_json::Value maps are sorted, which fixes the key order
        let mut value = serde_json::to_value(&canonical).map_err(|e| Error::config("", e.to_string()))?;
        round_floats(&mut value);
        let bytes = serde_json::to_vec(&value).map_err(|e| Error::config("", e.to_string()))?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

/// Round every float to 12 significant digits so that equivalent unit
/// spellings (`21us`, `21000ns`) hash alike despite conversion round-off.
fn round_floats(v: &mut serde_json::Value) {
    use serde_json::Value as J;
    match v {
        J::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or_default();
            let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            if let Some(r) = serde_json::Number::from_f64(rounded) {
                *n = r;
            }
        }
        J::Array(items) => items.iter_mut().for_each(round_floats),
        J::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn num(v: &Toml) -> Option<f64> {
    match v {
        Toml::Integer(i) => Some(*i as f64),
        Toml::Float(f) => Some(*f),
        _ => None,
    }
}

/// `0.5e-4/ns/MHz` in 1/(ns·MHz).
fn flip_coefficient(text: &str) -> std::result::Result<f64, String> {
    let q = Quantity::parse(text).map_err(|e| e.to_string())?;
    if !text.contains('/') {
        return Err(format!("`{text}` needs a unit such as /ns/MHz"));
    }
    q.dimensionless().map(|si| si * 1e-3).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn load(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text, None, &[])
    }

    #[test]
    fn empty_config_is_the_default_world() {
        let mut cfg = load("").unwrap();
        cfg.seed = Some(1);
        cfg.experiment = Some("rabi".into());
        assert!(cfg.violations().is_empty(), "{:?}", cfg.violations());
        assert_eq!(cfg.world, World::default());
    }

    #[test]
    fn units_are_converted() {
        let cfg = load(
            "[cavity]\nlinewidth = \"25000MHz\"\n[spin]\nt1 = \"21us\"\ngamma_x = \"18/ns\"\ntemperature = \"4.2K\"\n\
             flip_coefficient = \"1e-4/ns/MHz\"\n[bath]\nt2star = \"28ns\"\n[protocol]\ntau_max = \"0.6us\"",
        )
        .unwrap();
        assert_relative_eq!(cfg.world.cavity.linewidth_hz, 25e9);
        assert_relative_eq!(cfg.world.spin.t1_ns, 21_000.0);
        assert_relative_eq!(cfg.world.spin.gamma_x, 18.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.world.spin.flip_coefficient, 1e-4, max_relative = 1e-12);
        assert_relative_eq!(cfg.world.bath.overhauser.sigma_hz, sigma_for_t2star(28.0));
        assert_relative_eq!(cfg.world.cooling.tau_max_ns, 600.0, max_relative = 1e-12);
    }

    #[test]
    fn missing_units_and_unknown_keys_are_config_errors() {
        for text in ["[cavity]\nlinewidth = 25", "[cavity]\nlinewidht = \"25GHz\"", "[spin]\nt1 = \"21MHz\"", "colour = 1"] {
            let e = load(text).unwrap_err();
            assert!(e.is_config(), "{text}: {e}");
        }
    }

    #[test]
    fn mirror_violation_is_reported() {
        let cfg = load("[cavity]\nmirrors = [1.0, 1.0]").unwrap();
        assert!(cfg.violations().iter().any(|(p, _)| p == "cavity.mirrors"));
    }

    #[test]
    fn tau_ordering_violation_is_reported() {
        let cfg = load("[protocol]\ntau_min = \"700ns\"").unwrap();
        assert!(cfg.violations().iter().any(|(p, _)| p == "protocol"));
    }

    #[test]
    fn hash_ignores_formatting_and_unit_spelling() {
        let a = load("seed = 7\n[cavity]\nlinewidth = \"25GHz\"").unwrap();
        let b = load("# comment\nseed   =   7\n\n[cavity]\nlinewidth = \"25000MHz\"\n").unwrap();
        let c = load("seed = 7\n[cavity]\nlinewidth = \"26GHz\"").unwrap();
        assert_eq!(a.config_hash().unwrap(), b.config_hash().unwrap());
        assert_ne!(a.config_hash().unwrap(), c.config_hash().unwrap());
        let mut d = a.clone();
        d.out = Some("elsewhere".into());
        assert_eq!(a.config_hash().unwrap(), d.config_hash().unwrap());
        d.seed = Some(8);
        assert_ne!(a.config_hash().unwrap(), d.config_hash().unwrap());
    }

    #[test]
    fn overrides() {
        let ov = vec![
            parse_override("drive.delta_range=-200MHz..200MHz").unwrap(),
            parse_override("noise.beta=0.6").unwrap(),
            parse_override("readout.shot_noise=true").unwrap(),
        ];
        let cfg = RunConfig::from_toml_str("", None, &ov).unwrap();
        assert_eq!(cfg.drive.delta_range_hz, Some((-200e6, 200e6)));
        assert_relative_eq!(cfg.world.noise.beta, 0.6);
        assert!(cfg.world.readout.shot_noise);
        assert!(RunConfig::from_toml_str("", None, &[parse_override("drive.bogus=1").unwrap()]).unwrap_err().is_config());
        assert!(parse_override("novalue").is_err());
    }
}
