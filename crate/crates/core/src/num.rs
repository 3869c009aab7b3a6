//! Number formatting helpers shared by the JSON schemas.
//!
//! Coordinates travel as decimal strings so that every `f64` round-trips
//! bit-exactly. Report scalars are plain JSON numbers, except that infinite
//! values (a gap constant of `+inf`, say) are written as the strings `"inf"`
//! and `"-inf"`, which JSON numbers cannot express.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Shortest round-trip decimal representation of `x`.
pub fn format_decimal(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_decimal(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" | "-Infinity" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("not a decimal number `{t}`: {e}")),
    }
}

/// An `f64` serialized as a decimal string; accepts strings or numbers on input.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_decimal(self.0))
    }
}

struct NumberVisitor;

impl Visitor<'_> for NumberVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a decimal string or a JSON number")
    }
    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse_decimal(v).map_err(E::custom)
    }
    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }
    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }
    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(NumberVisitor).map(Decimal)
    }
}

/// A report scalar: a JSON number when finite, `"inf"`/`"-inf"` otherwise,
/// `null` for NaN.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_str(&format_decimal(self.0))
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Option::<Decimal>::deserialize(d)?;
        Ok(Real(v.map_or(f64::NAN, |x| x.0)))
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real(x)
    }
}

pub(crate) fn decimals(v: &[f64]) -> Vec<Decimal> {
    v.iter().copied().map(Decimal).collect()
}

pub(crate) fn floats(v: &[Decimal]) -> Vec<f64> {
    v.iter().map(|d| d.0).collect()
}
