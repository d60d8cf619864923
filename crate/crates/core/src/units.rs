//! Unit-suffixed scalars such as `25GHz`, `60ns`, `9.386MHz/T` or
//! `1e-4/ns/MHz`.
//!
//! Internally the crate works in a fixed convention: frequencies in Hz,
//! durations in ns, rates in 1/ns, magnetic field in tesla and optical power
//! in mW. A [`Quantity`] carries an SI value together with its dimension so
//! that callers can ask for exactly the dimension they expect.

use std::fmt;
use std::str::FromStr;

/// Exponents of (second, tesla, watt).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Dimension {
    pub time: i8,
    pub field: i8,
    pub power: i8,
}

impl Dimension {
    pub const NONE: Dimension = Dimension { time: 0, field: 0, power: 0 };
    pub const TIME: Dimension = Dimension { time: 1, field: 0, power: 0 };
    pub const FREQUENCY: Dimension = Dimension { time: -1, field: 0, power: 0 };
    pub const FIELD: Dimension = Dimension { time: 0, field: 1, power: 0 };
    pub const POWER: Dimension = Dimension { time: 0, field: 0, power: 1 };
    pub const GYROMAGNETIC: Dimension = Dimension { time: -1, field: -1, power: 0 };

    fn mul(self, other: Dimension, sign: i8) -> Dimension {
        Dimension {
            time: self.time + sign * other.time,
            field: self.field + sign * other.field,
            power: self.power + sign * other.power,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = match *self {
            Dimension::NONE => Some("dimensionless"),
            Dimension::TIME => Some("time"),
            Dimension::FREQUENCY => Some("frequency"),
            Dimension::FIELD => Some("magnetic field"),
            Dimension::POWER => Some("power"),
            Dimension::GYROMAGNETIC => Some("frequency per tesla"),
            _ => None,
        };
        match named {
            Some(n) => f.write_str(n),
            None => write!(f, "s^{} T^{} W^{}", self.time, self.field, self.power),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("`{0}` is not a number with a unit")]
    Malformed(String),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("expected {expected}, got {found}")]
    WrongDimension { expected: Dimension, found: Dimension },
    #[error("missing unit on `{0}`")]
    MissingUnit(String),
}

/// A scalar with an SI value and a dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub si: f64,
    pub dim: Dimension,
}

fn unit_factor(symbol: &str) -> Option<(f64, Dimension)> {
    use Dimension as D;
    let entry = match symbol {
        "s" => (1.0, D::TIME),
        "ms" => (1e-3, D::TIME),
        "us" | "μs" | "µs" => (1e-6, D::TIME),
        "ns" => (1e-9, D::TIME),
        "ps" => (1e-12, D::TIME),
        "Hz" => (1.0, D::FREQUENCY),
        "kHz" => (1e3, D::FREQUENCY),
        "MHz" => (1e6, D::FREQUENCY),
        "GHz" => (1e9, D::FREQUENCY),
        "THz" => (1e12, D::FREQUENCY),
        "T" => (1.0, D::FIELD),
        "mT" => (1e-3, D::FIELD),
        "W" => (1.0, D::POWER),
        "mW" => (1e-3, D::POWER),
        "uW" | "μW" | "µW" => (1e-6, D::POWER),
        "nW" => (1e-9, D::POWER),
        _ => return None,
    };
    Some(entry)
}

impl FromStr for Quantity {
    type Err = UnitError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let s = text.trim();
        let split = s
            .char_indices()
            .find(|&(i, c)| {
                // the exponent marker of a float is part of the number
                let exp_marker = (c == 'e' || c == 'E')
                    && s[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+');
                !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || exp_marker)
                    || (i > 0 && (c == '-' || c == '+') && !matches!(&s[i - 1..i], "e" | "E"))
            })
            .map(|(i, _)| i)
            .unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| UnitError::Malformed(text.to_string()))?;
        let unit = unit.trim();
        if unit.is_empty() {
            return Ok(Quantity { si: value, dim: Dimension::NONE });
        }
        let mut si = value;
        let mut dim = Dimension::NONE;
        let mut sign = 1i8;
        let mut token = String::new();
        let apply = |tok: &str, sign: i8, si: &mut f64, dim: &mut Dimension| {
            let (f, d) = unit_factor(tok).ok_or_else(|| UnitError::UnknownUnit(tok.to_string()))?;
            if sign > 0 {
                *si *= f;
            } else {
                *si /= f;
            }
            *dim = dim.mul(d, sign);
            Ok::<(), UnitError>(())
        };
        for c in unit.chars() {
            match c {
                '/' | '*' => {
                    if !token.is_empty() {
                        apply(&token, sign, &mut si, &mut dim)?;
                        token.clear();
                    }
                    sign = if c == '/' { -1 } else { 1 };
                }
                c if c.is_whitespace() => {}
                c => token.push(c),
            }
        }
        if token.is_empty() {
            return Err(UnitError::Malformed(text.to_string()));
        }
        apply(&token, sign, &mut si, &mut dim)?;
        Ok(Quantity { si, dim })
    }
}

impl Quantity {
    pub fn parse(text: &str) -> Result<Self, UnitError> {
        text.parse()
    }

    fn expect(&self, dim: Dimension) -> Result<f64, UnitError> {
        if self.dim == dim {
            Ok(self.si)
        } else {
            Err(UnitError::WrongDimension { expected: dim, found: self.dim })
        }
    }

    pub fn hz(&self) -> Result<f64, UnitError> {
        self.expect(Dimension::FREQUENCY)
    }

    pub fn ns(&self) -> Result<f64, UnitError> {
        self.expect(Dimension::TIME).map(|s| s * 1e9)
    }

    pub fn tesla(&self) -> Result<f64, UnitError> {
        self.expect(Dimension::FIELD)
    }

    pub fn mw(&self) -> Result<f64, UnitError> {
        self.expect(Dimension::POWER).map(|w| w * 1e3)
    }

    pub fn hz_per_tesla(&self) -> Result<f64, UnitError> {
        self.expect(Dimension::GYROMAGNETIC)
    }

    pub fn dimensionless(&self) -> Result<f64, UnitError> {
        self.expect(Dimension::NONE)
    }
}

/// Parse `text` requiring an explicit unit of the given dimension and return
/// the value in the crate's internal unit for that dimension.
pub fn parse_with_unit(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let q = Quantity::parse(text)?;
    if q.dim == Dimension::NONE && dim != Dimension::NONE {
        // a bare zero is unambiguous
        if q.si == 0.0 {
            return Ok(0.0);
        }
        return Err(UnitError::MissingUnit(text.to_string()));
    }
    let v = q.expect(dim)?;
    Ok(match dim {
        Dimension::TIME => v * 1e9,
        Dimension::POWER => v * 1e3,
        _ => v,
    })
}

/// Parse a phase in radians: `0`, `1.57`, `pi`, `pi/2`, `3pi/2`, `-pi/4`, `0.5*pi`.
pub fn parse_phase(text: &str) -> Option<f64> {
    let s = text.trim().replace(' ', "");
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let coeff = num.strip_suffix("pi")?.trim_end_matches('*');
    let c = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    Some(c * std::f64::consts::PI / den)
}
