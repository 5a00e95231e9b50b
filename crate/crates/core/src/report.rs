//! Serialization helpers shared by the reports.

use std::fmt::Display;

use num_rational::BigRational;
use serde::{Serialize, Serializer};

/// Rounds to 15 significant digits.
pub fn round_sig15(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.14e}").parse().unwrap_or(v)
}

/// A float that serializes with at most 15 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig15(pub f64);

impl Serialize for Sig15 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(round_sig15(self.0))
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}

pub(crate) fn ser_rational<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

pub(crate) fn ser_rational_vec<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

pub(crate) fn ser_display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub(crate) fn ser_opt_display<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_opt_sig15<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => Sig15(*v).serialize(s),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_opt_sig15_vec<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_sig15_vec(v, s),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_sig15<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    Sig15(*v).serialize(s)
}

pub(crate) fn ser_sig15_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|&x| Sig15(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig15(0.1 + 0.2), 0.3);
        assert_eq!(round_sig15(1.0 / 3.0), 0.333333333333333);
        assert_eq!(round_sig15(0.0), 0.0);
    }
}
