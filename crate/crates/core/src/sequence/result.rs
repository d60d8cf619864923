//! Swept readout tables and their CSV form.
//!
//! Layout: `# key: value` metadata lines (experiment, seed, shots,
//! config_hash, version), then the header `<axis>_<unit>...,mean,stderr`
//! and one row per sweep point in row-major order (first axis slowest).
//! Floats are written with Rust's shortest round-trip formatting.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::FieldDim;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub dim: FieldDim,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub coords: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// Shot-averaged spin z at the recorded readout, before pumping.
    pub mean_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub seed: u64,
    pub shots: usize,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub axes: Vec<Axis>,
    pub points: Vec<PointResult>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    /// Values of the first axis, for one-dimensional scans.
    pub fn axis_values(&self) -> &[f64] {
        self.axes.first().map_or(&[], |a| a.values.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: {}", m.experiment);
        let _ = writeln!(out, "# seed: {}", m.seed);
        let _ = writeln!(out, "# shots: {}", m.shots);
        let _ = writeln!(out, "# config_hash: {}", m.config_hash);
        let _ = writeln!(out, "# version: {}", m.version);
        let mut header: Vec<String> = self.axes.iter().map(|a| format!("{}_{}", a.name, a.dim.unit())).collect();
        header.push("mean".into());
        header.push("stderr".into());
        let _ = writeln!(out, "{}", header.join(","));
        for p in &self.points {
            let mut row: Vec<String> = p.coords.iter().map(|v| v.to_string()).collect();
            row.push(p.mean.to_string());
            row.push(p.stderr.to_string());
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv). Axis values are recovered from
    /// the distinct coordinates of each column in first-seen order.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse { line, message: msg.to_string() };
        let mut meta = Metadata { experiment: String::new(), seed: 0, shots: 0, config_hash: String::new(), version: String::new() };
        let mut lines = text.lines().enumerate().peekable();
        while let Some((i, l)) = lines.peek().copied() {
            let Some(rest) = l.strip_prefix("# ") else { break };
            lines.next();
            let (k, v) = rest.split_once(": ").ok_or_else(|| bad(i + 1, "malformed metadata line"))?;
            match k {
                "experiment" => meta.experiment = v.into(),
                "seed" => meta.seed = v.parse().map_err(|_| bad(i + 1, "bad seed"))?,
                "shots" => meta.shots = v.parse().map_err(|_| bad(i + 1, "bad shots"))?,
                "config_hash" => meta.config_hash = v.into(),
                "version" => meta.version = v.into(),
                _ => {}
            }
        }
        let (hi, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || cols[cols.len() - 2..] != ["mean", "stderr"] {
            return Err(bad(hi + 1, "header must end with mean,stderr"));
        }
        let mut axes = Vec::new();
        for c in &cols[..cols.len() - 2] {
            let (name, unit) = c.rsplit_once('_').ok_or_else(|| bad(hi + 1, "axis column lacks a unit"))?;
            let dim = [FieldDim::Time, FieldDim::Frequency, FieldDim::Power, FieldDim::Phase, FieldDim::Count]
                .into_iter()
                .find(|d| d.unit() == unit)
                .ok_or_else(|| bad(hi + 1, "unknown axis unit"))?;
            axes.push(Axis { name: name.into(), dim, values: Vec::new() });
        }
        let mut points = Vec::new();
        for (i, l) in lines {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(i + 1, "non-numeric field"))?;
            if v.len() != cols.len() {
                return Err(bad(i + 1, "wrong column count"));
            }
            let n = axes.len();
            for (a, &x) in axes.iter_mut().zip(&v[..n]) {
                if !a.values.iter().any(|y| y.to_bits() == x.to_bits()) {
                    a.values.push(x);
                }
            }
            points.push(PointResult { coords: v[..n].to_vec(), mean: v[n], stderr: v[n + 1], mean_z: f64::NAN });
        }
        Ok(ExperimentResult { axes, points, metadata: meta })
    }
}
