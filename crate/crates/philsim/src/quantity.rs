//! Physical quantities in scenario files.
//!
//! A quantity is either a bare number in SI base units or a string of a
//! number followed by an optionally prefixed unit: `"1 ms"`, `"5kHz"`,
//! `"0.5 ohm"`, `"90 deg"`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Frequency,
    Voltage,
    Resistance,
    Inductance,
    Capacitance,
    Angle,
    Ratio,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::Voltage => "voltage",
            Dimension::Resistance => "resistance",
            Dimension::Inductance => "inductance",
            Dimension::Capacitance => "capacitance",
            Dimension::Angle => "angle",
            Dimension::Ratio => "dimensionless number",
        }
    }

    /// Unit symbols accepted for this dimension with their scale to SI.
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Time => &[("s", 1.0)],
            Dimension::Frequency => &[("Hz", 1.0)],
            Dimension::Voltage => &[("V", 1.0)],
            Dimension::Resistance => &[("ohm", 1.0), ("Ω", 1.0)],
            Dimension::Inductance => &[("H", 1.0)],
            Dimension::Capacitance => &[("F", 1.0)],
            Dimension::Angle => &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)],
            Dimension::Ratio => &[],
        }
    }
}

const ALL: [Dimension; 7] = [
    Dimension::Time,
    Dimension::Frequency,
    Dimension::Voltage,
    Dimension::Resistance,
    Dimension::Inductance,
    Dimension::Capacitance,
    Dimension::Angle,
];

const PREFIXES: [(char, i32); 9] = [
    ('p', -12),
    ('n', -9),
    ('u', -6),
    ('µ', -6),
    ('μ', -6),
    ('m', -3),
    ('k', 3),
    ('M', 6),
    ('G', 9),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantityError {
    #[error("cannot read a number from \"{0}\"")]
    Number(String),
    #[error("unknown unit '{unit}' in \"{text}\"")]
    UnknownUnit { unit: String, text: String },
    #[error("unit mismatch: expected a {expected} but \"{text}\" is a {found}")]
    Mismatch {
        expected: &'static str,
        found: &'static str,
        text: String,
    },
    #[error("value {0} is not finite")]
    NotFinite(f64),
}

/// A scenario value before its dimension is known.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    /// Value in SI units, checking the unit against `dim`.
    pub fn resolve(&self, dim: Dimension) -> Result<f64, QuantityError> {
        let v = match self {
            Quantity::Number(v) => *v,
            Quantity::Text(t) => parse(t, dim)?,
        };
        if !v.is_finite() {
            return Err(QuantityError::NotFinite(v));
        }
        Ok(v)
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

fn parse(text: &str, dim: Dimension) -> Result<f64, QuantityError> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (number, unit) = match t.find(char::is_whitespace) {
        Some(i) => (t[..i].trim(), t[i..].trim()),
        None => split_glued(t).ok_or_else(|| QuantityError::Number(text.into()))?,
    };
    let bad = || QuantityError::Number(text.into());
    number.parse::<f64>().map_err(|_| bad())?;
    if let Some((exp, scale)) = scale_of(unit, dim) {
        return shifted(number, exp).ok_or_else(bad).map(|v| v * scale);
    }
    match ALL.iter().find(|d| scale_of(unit, **d).is_some()) {
        Some(found) => Err(QuantityError::Mismatch {
            expected: dim.name(),
            found: found.name(),
            text: text.into(),
        }),
        None => Err(QuantityError::UnknownUnit {
            unit: unit.into(),
            text: text.into(),
        }),
    }
}

/// Splits `"5kHz"` into `("5", "kHz")`: the unit starts after the last
/// character that can end a number.
fn split_glued(t: &str) -> Option<(&str, &str)> {
    let i = t.rfind(|c: char| c.is_ascii_digit() || c == '.')?;
    let (n, u) = t.split_at(i + 1);
    (!u.is_empty()).then_some((n, u))
}

/// `number * 10^exp` rounded once, so `"10 us"` is exactly `1e-5`.
fn shifted(number: &str, exp: i32) -> Option<f64> {
    let (mantissa, e) = match number.find(['e', 'E']) {
        Some(i) => (&number[..i], number[i + 1..].parse::<i32>().ok()?),
        None => (number, 0),
    };
    format!("{mantissa}e{}", e + exp).parse().ok()
}

/// Decimal prefix exponent and unit scale of `unit` in `dim`.
fn scale_of(unit: &str, dim: Dimension) -> Option<(i32, f64)> {
    for &(sym, scale) in dim.units() {
        if unit == sym {
            return Some((0, scale));
        }
        if let Some(p) = unit.strip_suffix(sym) {
            let mut cs = p.chars();
            if let (Some(c), None) = (cs.next(), cs.next()) {
                if let Some(&(_, e)) = PREFIXES.iter().find(|(pc, _)| *pc == c) {
                    return Some((e, scale));
                }
            }
        }
    }
    None
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Quantity::Number(v) => s.serialize_f64(*v),
            Quantity::Text(t) => s.serialize_str(t),
        }
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Quantity;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"1 ms\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Quantity, E> {
                Ok(Quantity::Number(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Quantity, E> {
                Ok(Quantity::Number(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Quantity, E> {
                Ok(Quantity::Number(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
                Ok(Quantity::Text(v.into()))
            }
        }
        d.deserialize_any(V)
    }
}
