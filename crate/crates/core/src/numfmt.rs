//! Stable text forms for numbers in emitted files.
//!
//! Floats are written with 17 significant digits in scientific notation (this
//! round-trips every `f64` exactly) and rationals as `"p/q"`.

use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serializer};

pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn parse_f64(s: &str) -> Result<f64, std::num::ParseFloatError> {
    s.trim().parse()
}

/// `#[serde(with = "crate::numfmt::f64_text")]`
pub mod f64_text {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&sig17(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Num(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => parse_f64(&t).map_err(serde::de::Error::custom),
            Repr::Num(x) => Ok(x),
        }
    }
}

/// `#[serde(with = "crate::numfmt::rational_text")]`
pub mod rational_text {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational(q))
    }
}
