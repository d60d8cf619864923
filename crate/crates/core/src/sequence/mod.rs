//! Pulse sequences: a line-oriented text format, builtin protocols and the
//! Monte-Carlo runner that composes the physics modules.

pub mod builtin;
pub mod dsl;
pub mod engine;
pub mod result;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use builtin::{builtin_experiments, builtin_text, BuiltinInfo, BuiltinParams, BUILTINS};
pub use dsl::parse_sequence;
pub use engine::{run_experiment, World};
pub use result::{Axis, ExperimentResult, Metadata, PointResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    Init,
    Raman,
    Wait,
    Readout,
    HhDrive,
    Barrier,
}

/// Physical dimension of a sequence field, with its internal unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldDim {
    /// ns
    Time,
    /// Hz
    Frequency,
    /// mW
    Power,
    /// rad
    Phase,
    /// Plain count, used by computed tables (cycles, pulse numbers).
    Count,
}

impl FieldDim {
    pub fn unit(&self) -> &'static str {
        match self {
            FieldDim::Time => "ns",
            FieldDim::Frequency => "Hz",
            FieldDim::Power => "mW",
            FieldDim::Phase => "rad",
            FieldDim::Count => "n",
        }
    }
}

impl ElementKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            ElementKind::Init => "init",
            ElementKind::Raman => "raman",
            ElementKind::Wait => "wait",
            ElementKind::Readout => "readout",
            ElementKind::HhDrive => "hhdrive",
            ElementKind::Barrier => "barrier",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "init" => ElementKind::Init,
            "raman" => ElementKind::Raman,
            "wait" => ElementKind::Wait,
            "readout" => ElementKind::Readout,
            "hhdrive" => ElementKind::HhDrive,
            "barrier" => ElementKind::Barrier,
            _ => return None,
        })
    }

    /// Fields accepted by this element and their dimensions.
    pub fn field_dim(&self, field: &str) -> Option<FieldDim> {
        use ElementKind::*;
        use FieldDim::*;
        match (self, field) {
            (Init | Raman | Wait | Readout | HhDrive, "t") => Some(Time),
            (Raman | HhDrive, "omega") => Some(Frequency),
            (Raman, "delta" | "detuning" | "ramp") => Some(Frequency),
            (Raman, "power") => Some(Power),
            (Raman, "phase") => Some(Phase),
            _ => None,
        }
    }
}

/// A field value affine in at most one sweep variable: constant + coef·$axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Value {
    pub constant: f64,
    pub coef: f64,
    pub axis: Option<String>,
}

impl Value {
    pub fn constant(v: f64) -> Self {
        Value { constant: v, coef: 0.0, axis: None }
    }

    pub fn eval(&self, vars: &BTreeMap<String, f64>) -> f64 {
        match &self.axis {
            Some(name) => self.constant + self.coef * vars.get(name).copied().unwrap_or(0.0),
            None => self.constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub label: Option<String>,
    pub fields: BTreeMap<String, Value>,
    /// Readouts contribute to the signal unless marked `discard`.
    pub record: bool,
    pub line: usize,
}

impl Element {
    pub fn matches(&self, selector: &str) -> bool {
        self.label.as_deref() == Some(selector) || self.kind.keyword() == selector
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepTarget {
    /// Overrides `field` on every element matching `selector`.
    Field { selector: String, field: String, values: Vec<f64> },
    /// Binds `$name` for field expressions.
    Variable { name: String, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// Column name: the first target as written.
    pub name: String,
    pub dim: FieldDim,
    /// Reported axis values (those of the first target), internal units.
    pub values: Vec<f64>,
    pub targets: Vec<SweepTarget>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub elements: Vec<Element>,
    pub sweeps: Vec<Sweep>,
    /// Phase offsets applied to the last Raman element, one run per offset.
    pub interleave: Vec<f64>,
    pub shots: Option<usize>,
    pub seed: Option<u64>,
}

impl PulseSequence {
    /// Number of sweep points, the product of all axis lengths.
    pub fn points(&self) -> usize {
        self.sweeps.iter().map(|s| s.values.len()).product()
    }

    /// Axis indices of point `p`; the first sweep varies slowest.
    pub fn coords(&self, mut p: usize) -> Vec<usize> {
        let mut idx = vec![0; self.sweeps.len()];
        for (k, s) in self.sweeps.iter().enumerate().rev() {
            idx[k] = p % s.values.len();
            p /= s.values.len();
        }
        idx
    }

    /// Element list with every sweep applied at point `p`.
    pub fn elements_at(&self, p: usize) -> Vec<Element> {
        let idx = self.coords(p);
        let mut vars = BTreeMap::new();
        let mut overrides = Vec::new();
        for (s, &i) in self.sweeps.iter().zip(&idx) {
            for t in &s.targets {
                match t {
                    SweepTarget::Variable { name, values } => {
                        vars.insert(name.clone(), values[i]);
                    }
                    SweepTarget::Field { selector, field, values } => overrides.push((selector, field, values[i])),
                }
            }
        }
        self.elements
            .iter()
            .map(|e| {
                let mut e = e.clone();
                for v in e.fields.values_mut() {
                    *v = Value::constant(v.eval(&vars));
                }
                for (sel, field, value) in &overrides {
                    if e.matches(sel) {
                        e.fields.insert((*field).clone(), Value::constant(*value));
                    }
                }
                e
            })
            .collect()
    }

    /// Sum of element durations at point `p`, ns, accumulated exactly in
    /// units of 2⁻⁶⁴ ns so that reordering cannot change the result.
    pub fn duration_at(&self, p: usize) -> f64 {
        let scale = 2f64.powi(64);
        let total: i128 = self
            .elements_at(p)
            .iter()
            .map(|e| (e.fields.get("t").map_or(0.0, |v| v.constant) * scale) as i128)
            .sum();
        total as f64 / scale
    }
}
