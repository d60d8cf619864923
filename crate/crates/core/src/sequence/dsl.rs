//! Line-oriented sequence text.
//!
//! ```text
//! # Ramsey with phase alternation
//! init 30ns
//! raman @first omega=95MHz delta=30MHz phase=0 t=2.63ns
//! wait 0ns
//! raman @second omega=95MHz delta=30MHz phase=0 t=2.63ns
//! readout 90ns
//! sweep wait.t from 0 to 200ns steps 101
//! interleave phase 0 pi
//! ```
//!
//! One statement per line; ` / ` also separates statements. Elements are
//! `init`, `raman`, `wait`, `readout`, `hhdrive` and `barrier`; a bare
//! quantity after the keyword sets `t`, `@name` labels the element, and
//! `readout ... discard` drops the counts from the signal. Raman drives take
//! either `omega=` or `power=` (with optional `detuning=`), plus `delta=`,
//! `phase=` (qubit frame) or `mw_phase=` (half the qubit phase), `t=` and
//! `ramp=` (a phase advance of 2π·ramp·(time since the previous Raman)).
//!
//! `sweep <sel>.<field> from <a> to <b> steps <n>` overrides the field on
//! every element whose label or keyword is `sel`; `sweep $name ...` binds a
//! variable usable in field expressions such as `t=$T/8` or `t=40us-$T`.
//! Further targets move in lockstep with `with <target> from <a> to <b>`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use super::{Element, ElementKind, FieldDim, PulseSequence, Sweep, SweepTarget, Value};
use crate::error::{Error, Result};
use crate::units::{parse_phase, parse_with_unit, Dimension, Quantity};

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field_dim_by_name(field: &str) -> Option<FieldDim> {
    Some(match field {
        "t" => FieldDim::Time,
        "omega" | "delta" | "detuning" | "ramp" => FieldDim::Frequency,
        "power" => FieldDim::Power,
        "phase" | "mw_phase" => FieldDim::Phase,
        _ => return None,
    })
}

fn parse_scalar(text: &str, dim: FieldDim) -> std::result::Result<f64, String> {
    match dim {
        FieldDim::Phase => parse_phase(text).ok_or_else(|| format!("`{text}` is not a phase")),
        FieldDim::Time => parse_with_unit(text, Dimension::TIME).map_err(|e| e.to_string()),
        FieldDim::Frequency => parse_with_unit(text, Dimension::FREQUENCY).map_err(|e| e.to_string()),
        FieldDim::Power => parse_with_unit(text, Dimension::POWER).map_err(|e| e.to_string()),
        FieldDim::Count => text.parse::<f64>().map_err(|_| format!("`{text}` is not a number")),
    }
}

/// Dimension implied by a written quantity, `None` for bare numbers.
fn written_dim(text: &str) -> std::result::Result<Option<FieldDim>, String> {
    match Quantity::parse(text) {
        Ok(q) if q.dim == Dimension::NONE => Ok(None),
        Ok(q) if q.dim == Dimension::TIME => Ok(Some(FieldDim::Time)),
        Ok(q) if q.dim == Dimension::FREQUENCY => Ok(Some(FieldDim::Frequency)),
        Ok(q) if q.dim == Dimension::POWER => Ok(Some(FieldDim::Power)),
        Ok(_) => Err(format!("`{text}` has a unit not usable in sequences")),
        Err(_) if parse_phase(text).is_some() => Ok(Some(FieldDim::Phase)),
        Err(e) => Err(e.to_string()),
    }
}

/// Split at top-level `+`/`-`, keeping the sign with each term and leaving
/// exponents such as `1e-3` intact.
fn split_terms(text: &str) -> Vec<(f64, String)> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in text.chars() {
        let exponent = matches!(prev, Some('e' | 'E')) && is_mantissa(&cur[..cur.len() - 1]);
        if (c == '+' || c == '-') && !exponent {
            if !cur.is_empty() {
                terms.push((sign, std::mem::take(&mut cur)));
            }
            sign = if c == '-' { -1.0 } else { 1.0 };
        } else {
            cur.push(c);
        }
        prev = Some(c);
    }
    if !cur.is_empty() || terms.is_empty() {
        terms.push((sign, cur));
    }
    terms
}

/// True when `head` ends in a bare number, so a following `e-` is an exponent.
fn is_mantissa(head: &str) -> bool {
    let tail: String = head.chars().rev().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    let before = head[..head.len() - tail.len()].chars().last();
    tail.chars().any(|c| c.is_ascii_digit()) && !before.is_some_and(|c| c.is_alphabetic() || c == '$' || c == '_')
}

/// `$name`, `k*$name`, `$name*k` or `$name/k`.
fn parse_variable_term(term: &str) -> std::result::Result<(f64, String), String> {
    let bad = || format!("cannot read `{term}` as a multiple of a sweep variable");
    let number = |s: &str| s.parse::<f64>().map_err(|_| bad());
    if let Some((a, b)) = term.split_once('*') {
        if let Some(name) = b.strip_prefix('$') {
            return Ok((number(a)?, name.to_string()));
        }
        if let Some(name) = a.strip_prefix('$') {
            return Ok((number(b)?, name.to_string()));
        }
        return Err(bad());
    }
    if let Some((a, b)) = term.split_once('/') {
        let name = a.strip_prefix('$').ok_or_else(bad)?;
        return Ok((1.0 / number(b)?, name.to_string()));
    }
    let name = term.strip_prefix('$').ok_or_else(bad)?;
    Ok((1.0, name.to_string()))
}

fn parse_value(text: &str, dim: FieldDim, vars: &HashMap<String, FieldDim>) -> std::result::Result<Value, String> {
    if !text.contains('$') {
        return parse_scalar(text, dim).map(Value::constant);
    }
    let mut value = Value::constant(0.0);
    for (sign, term) in split_terms(text) {
        if term.contains('$') {
            if value.axis.is_some() {
                return Err(format!("`{text}` uses more than one variable term"));
            }
            let (coef, name) = parse_variable_term(&term)?;
            match vars.get(&name) {
                None => return Err(format!("unknown sweep variable `${name}`")),
                Some(d) if *d != dim => {
                    return Err(format!("`${name}` is measured in {}, the field needs {}", d.unit(), dim.unit()))
                }
                Some(_) => {}
            }
            value.coef = sign * coef;
            value.axis = Some(name);
        } else {
            value.constant += sign * parse_scalar(&term, dim)?;
        }
    }
    Ok(value)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

struct Statement {
    line: usize,
    words: Vec<String>,
}

fn statements(text: &str) -> Vec<Statement> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        for part in content.split(" / ") {
            let words: Vec<String> = part.split_whitespace().map(str::to_string).collect();
            if !words.is_empty() {
                out.push(Statement { line: i + 1, words });
            }
        }
    }
    out
}

/// Parsed but unresolved sweep target.
struct TargetSpec {
    text: String,
    dim: FieldDim,
    values: Vec<f64>,
}

fn parse_target(line: usize, target: &str, a: &str, b: &str, steps: usize) -> Result<TargetSpec> {
    let dim = if let Some(name) = target.strip_prefix('$') {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err(line, format!("bad variable name `{target}`")));
        }
        let da = written_dim(a).map_err(|m| err(line, m))?;
        let db = written_dim(b).map_err(|m| err(line, m))?;
        match (da, db) {
            (Some(x), Some(y)) if x != y => return Err(err(line, format!("`{a}` and `{b}` differ in dimension"))),
            (Some(x), _) | (None, Some(x)) => x,
            (None, None) => FieldDim::Phase,
        }
    } else {
        let (_, field) = target
            .split_once('.')
            .ok_or_else(|| err(line, format!("sweep target `{target}` must be `<element>.<field>` or `$name`")))?;
        field_dim_by_name(field).ok_or_else(|| err(line, format!("sweep over missing field `{target}`")))?
    };
    let from = parse_scalar(a, dim).map_err(|m| err(line, m))?;
    let to = parse_scalar(b, dim).map_err(|m| err(line, m))?;
    Ok(TargetSpec { text: target.to_string(), dim, values: linspace(from, to, steps) })
}

fn parse_sweep(st: &Statement) -> Result<(Vec<TargetSpec>, usize)> {
    let w = &st.words;
    let usage = || err(st.line, "expected `sweep <target> from <a> to <b> steps <n> [with <target> from <a> to <b>]...`");
    if w.len() < 8 || w[2] != "from" || w[4] != "to" || w[6] != "steps" {
        return Err(usage());
    }
    let steps: usize = w[7].parse().map_err(|_| err(st.line, format!("bad step count `{}`", w[7])))?;
    if steps == 0 {
        return Err(err(st.line, "steps must be at least 1"));
    }
    let mut targets = vec![parse_target(st.line, &w[1], &w[3], &w[5], steps)?];
    let mut rest = &w[8..];
    while !rest.is_empty() {
        if rest.len() < 6 || rest[0] != "with" || rest[2] != "from" || rest[4] != "to" {
            return Err(usage());
        }
        targets.push(parse_target(st.line, &rest[1], &rest[3], &rest[5], steps)?);
        rest = &rest[6..];
    }
    Ok((targets, st.line))
}

fn parse_element(
    kind: ElementKind,
    st: &Statement,
    vars: &HashMap<String, FieldDim>,
    used: &mut Vec<String>,
) -> Result<Element> {
    let line = st.line;
    let mut el = Element { kind, label: None, fields: BTreeMap::new(), record: true, line };
    for word in &st.words[1..] {
        if let Some(label) = word.strip_prefix('@') {
            if label.is_empty() || ElementKind::from_keyword(label).is_some() {
                return Err(err(line, format!("bad label `{word}`")));
            }
            el.label = Some(label.to_string());
            continue;
        }
        if word == "discard" && kind == ElementKind::Readout {
            el.record = false;
            continue;
        }
        let (key, text) = match word.split_once('=') {
            Some((k, v)) => (k, v),
            None => ("t", word.as_str()),
        };
        let (field, scale) = if key == "mw_phase" && kind == ElementKind::Raman { ("phase", 2.0) } else { (key, 1.0) };
        let dim = kind
            .field_dim(field)
            .ok_or_else(|| err(line, format!("`{}` has no field `{key}`", kind.keyword())))?;
        if el.fields.contains_key(field) {
            return Err(err(line, format!("field `{field}` given twice")));
        }
        let mut value = parse_value(text, dim, vars).map_err(|m| err(line, m))?;
        value.constant *= scale;
        value.coef *= scale;
        if let Some(name) = &value.axis {
            used.push(name.clone());
        }
        if field == "t" && value.axis.is_none() && value.constant < 0.0 {
            return Err(err(line, format!("negative duration `{text}`")));
        }
        el.fields.insert(field.to_string(), value);
    }
    if kind != ElementKind::Barrier && !el.fields.contains_key("t") {
        return Err(err(line, format!("`{}` needs a duration", kind.keyword())));
    }
    match kind {
        ElementKind::Raman => match (el.fields.contains_key("omega"), el.fields.contains_key("power")) {
            (true, true) => return Err(err(line, "give either omega= or power=, not both")),
            (false, false) => return Err(err(line, "raman needs omega= or power=")),
            _ => {}
        },
        ElementKind::HhDrive if !el.fields.contains_key("omega") => {
            return Err(err(line, "hhdrive needs omega="));
        }
        _ => {}
    }
    Ok(el)
}

/// Parse sequence text. Errors carry the 1-based line number.
pub fn parse_sequence(text: &str) -> Result<PulseSequence> {
    let stmts = statements(text);
    let last_line = text.lines().count().max(1);

    // sweeps first: variables may be used before they are declared
    let mut vars: HashMap<String, FieldDim> = HashMap::new();
    let mut sweep_specs = Vec::new();
    for st in stmts.iter().filter(|s| s.words[0] == "sweep") {
        let (targets, line) = parse_sweep(st)?;
        for t in &targets {
            if let Some(name) = t.text.strip_prefix('$') {
                if vars.insert(name.to_string(), t.dim).is_some() {
                    return Err(err(line, format!("variable `{}` swept twice", t.text)));
                }
            }
        }
        sweep_specs.push((targets, line));
    }

    let mut seq = PulseSequence { elements: Vec::new(), sweeps: Vec::new(), interleave: Vec::new(), shots: None, seed: None };
    let mut used = Vec::new();
    let mut interleave_line = 0;
    for st in &stmts {
        let keyword = st.words[0].as_str();
        if let Some(kind) = ElementKind::from_keyword(keyword) {
            seq.elements.push(parse_element(kind, st, &vars, &mut used)?);
            continue;
        }
        match keyword {
            "sweep" => {}
            "interleave" => {
                if st.words.len() < 4 || st.words[1] != "phase" {
                    return Err(err(st.line, "expected `interleave phase <p1> <p2> ...`"));
                }
                if !seq.interleave.is_empty() {
                    return Err(err(st.line, "interleave given twice"));
                }
                for w in &st.words[2..] {
                    seq.interleave.push(parse_phase(w).ok_or_else(|| err(st.line, format!("`{w}` is not a phase")))?);
                }
                interleave_line = st.line;
            }
            "shots" | "seed" => {
                let v: u64 = st
                    .words
                    .get(1)
                    .and_then(|w| w.parse().ok())
                    .filter(|_| st.words.len() == 2)
                    .ok_or_else(|| err(st.line, format!("expected `{keyword} <integer>`")))?;
                if keyword == "shots" {
                    if v == 0 {
                        return Err(err(st.line, "shots must be at least 1"));
                    }
                    seq.shots = Some(v as usize);
                } else {
                    seq.seed = Some(v);
                }
            }
            other => return Err(err(st.line, format!("unknown keyword `{other}`"))),
        }
    }

    if !seq.elements.iter().any(|e| e.kind == ElementKind::Readout && e.record) {
        return Err(err(last_line, "no readout element"));
    }
    if let Some(first) = seq.elements.iter().position(|e| e.kind == ElementKind::Raman) {
        let inits = seq.elements[..first].iter().filter(|e| e.kind == ElementKind::Init).count();
        if inits != 1 {
            return Err(err(
                seq.elements[first].line,
                format!("expected exactly one init before the first raman, found {inits}"),
            ));
        }
    } else if !seq.elements.iter().any(|e| e.kind == ElementKind::Init) {
        return Err(err(seq.elements[0].line, "sequence has no init element"));
    }
    if !seq.interleave.is_empty() && !seq.elements.iter().any(|e| e.kind == ElementKind::Raman) {
        return Err(err(interleave_line, "interleave needs a raman element"));
    }

    for (specs, line) in sweep_specs {
        let mut targets = Vec::new();
        for spec in &specs {
            if let Some(name) = spec.text.strip_prefix('$') {
                if !used.iter().any(|u| u == name) {
                    return Err(err(line, format!("sweep variable `{}` is never used", spec.text)));
                }
                targets.push(SweepTarget::Variable { name: name.to_string(), values: spec.values.clone() });
                continue;
            }
            let (selector, field) = spec.text.split_once('.').expect("checked in parse_target");
            let (internal, scale) = if field == "mw_phase" { ("phase", 2.0) } else { (field, 1.0) };
            let exists = seq
                .elements
                .iter()
                .any(|e| e.matches(selector) && e.kind.field_dim(internal).is_some() && (field != "mw_phase" || e.kind == ElementKind::Raman));
            if !exists {
                return Err(err(line, format!("sweep over missing field `{}`", spec.text)));
            }
            if internal == "t" && spec.values.iter().any(|&v| v < 0.0) {
                return Err(err(line, format!("negative duration in sweep of `{}`", spec.text)));
            }
            targets.push(SweepTarget::Field {
                selector: selector.to_string(),
                field: internal.to_string(),
                values: spec.values.iter().map(|v| v * scale).collect(),
            });
        }
        let first = &specs[0];
        seq.sweeps.push(Sweep {
            name: first.text.trim_start_matches('$').to_string(),
            dim: first.dim,
            values: first.values.clone(),
            targets,
            line,
        });
    }

    for (i, sweep) in seq.sweeps.iter().enumerate() {
        if seq.sweeps[..i].iter().any(|s| s.name == sweep.name) {
            return Err(err(sweep.line, format!("`{}` swept twice", sweep.name)));
        }
    }

    // expressions may still go negative inside a sweep range
    for p in 0..seq.points() {
        for e in seq.elements_at(p) {
            if e.fields.get("t").is_some_and(|v| v.constant < 0.0) {
                return Err(err(e.line, format!("duration becomes negative at sweep point {p}")));
            }
        }
    }
    Ok(seq)
}

/// Qubit-frame phase normalized to [0, 2π).
pub(crate) fn wrap_phase(phase: f64) -> f64 {
    phase.rem_euclid(2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_element_sequence() {
        let seq = parse_sequence("init 30ns / raman omega=95MHz delta=0 phase=0 t=5.26ns / readout 90ns").unwrap();
        assert_eq!(seq.elements.len(), 3);
        assert!(seq.sweeps.is_empty());
        assert_eq!(seq.points(), 1);
        let raman = &seq.elements[1];
        assert_eq!(raman.kind, ElementKind::Raman);
        assert_relative_eq!(raman.fields["omega"].constant, 95e6);
        assert_relative_eq!(raman.fields["t"].constant, 5.26, epsilon = 1e-12);
    }

    #[test]
    fn empty_input_has_no_readout() {
        match parse_sequence("") {
            Err(Error::Parse { message, .. }) => assert_eq!(message, "no readout element"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ramsey_script() {
        let text = "init 30ns\nraman omega=95MHz t=2.63ns\nwait 0ns\nraman omega=95MHz t=2.63ns\nreadout 90ns\n\
                    sweep wait.t from 0 to 200ns steps 101\ninterleave phase 0 pi\n";
        let seq = parse_sequence(text).unwrap();
        assert_eq!(seq.points(), 101);
        assert_eq!(seq.sweeps[0].values.len(), 101);
        assert_relative_eq!(seq.sweeps[0].values[100], 200.0);
        assert_eq!(seq.interleave, vec![0.0, PI]);
    }

    #[test]
    fn errors_cite_lines() {
        let cases = [
            ("init 30ns\nfrobnicate\nreadout 90ns", 2, "unknown keyword"),
            ("init 30ns\nwait -5ns\nreadout 90ns", 2, "negative duration"),
            ("init 30ns\nreadout 90ns\nsweep wait.t from 0 to 1ns steps 3", 3, "missing field"),
            ("raman omega=1MHz t=1ns\nreadout 90ns", 1, "exactly one init"),
            ("init 30ns\nwait 5\nreadout 90ns", 2, "unit"),
        ];
        for (text, line, fragment) in cases {
            match parse_sequence(text) {
                Err(Error::Parse { line: l, message }) => {
                    assert_eq!(l, line, "{text}: {message}");
                    assert!(message.contains(fragment), "{text}: {message}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn variable_expressions() {
        let text = "init 30ns\nraman omega=95MHz t=1ns\nwait @a t=$T/2\nwait @b t=40us-$T\nreadout 90ns\n\
                    sweep $T from 0 to 10us steps 3";
        let seq = parse_sequence(text).unwrap();
        let els = seq.elements_at(2);
        assert_relative_eq!(els[2].fields["t"].constant, 5000.0);
        assert_relative_eq!(els[3].fields["t"].constant, 30_000.0);
        assert_eq!(seq.sweeps[0].name, "T");
        assert!(parse_sequence("init 1ns\nwait t=$T\nreadout 1ns\nsweep $T from 0 to 1MHz steps 2").is_err());
        assert!(parse_sequence("init 1ns\nwait t=$X\nreadout 1ns").is_err());
    }

    #[test]
    fn lockstep_and_mw_phase() {
        let text = "init 30ns\nraman omega=95MHz t=2ns\nraman @second omega=95MHz mw_phase=pi/4 t=2ns\nreadout 90ns\n\
                    sweep second.mw_phase from 0 to pi steps 5 with raman.t from 1ns to 3ns";
        let seq = parse_sequence(text).unwrap();
        assert_relative_eq!(seq.elements[2].fields["phase"].constant, PI / 2.0);
        let els = seq.elements_at(4);
        assert_relative_eq!(els[2].fields["phase"].constant, 2.0 * PI);
        assert_relative_eq!(els[1].fields["t"].constant, 3.0);
        assert_relative_eq!(seq.sweeps[0].values[4], PI);
    }

    #[test]
    fn row_major_coordinates() {
        let text = "init 30ns\nraman omega=95MHz delta=0 t=2ns\nreadout 90ns\n\
                    sweep raman.delta from -1MHz to 1MHz steps 3\nsweep raman.t from 0 to 3ns steps 4";
        let seq = parse_sequence(text).unwrap();
        assert_eq!(seq.points(), 12);
        assert_eq!(seq.coords(5), vec![1, 1]);
        assert_eq!(seq.coords(11), vec![2, 3]);
    }

    #[test]
    fn comments_and_exponents() {
        let seq = parse_sequence("# header\ninit 3e1ns # pump\nwait 1e-3us\nreadout 90ns").unwrap();
        assert_relative_eq!(seq.elements[0].fields["t"].constant, 30.0);
        assert_eq!(split_terms("1e-3us-$T").len(), 2);
        assert_eq!(split_terms("$T*1e-3").len(), 1);
        assert_eq!(split_terms("T1e-3").len(), 2);
    }
}
