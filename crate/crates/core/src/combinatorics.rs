//! Exact counts of distinct serializations.
//!
//! A word pairs a note element, an octave/duration token and an instrument,
//! so there are `|W| = n * od * i` distinct words. A score of `ms` words has
//! `|W|^ms` possible word sequences, and an ordered tuple of `k` scores has
//! `|W|^(ms * k)`. Instrument-change positions add nothing beyond the
//! instrument already counted in `W`.

use num_bigint::BigUint;
use num_traits::Pow;
use serde::Serialize;

use crate::spec::{distinct_counts, CompositionSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiplicityReport {
    pub n: u64,
    pub od: u64,
    pub i: u64,
    pub w: u64,
    pub ms: u64,
    pub k: u64,
    #[serde(serialize_with = "as_decimal")]
    pub per_stream: BigUint,
    #[serde(serialize_with = "as_decimal")]
    pub total: BigUint,
    pub decimal_digits_per_stream: usize,
    pub decimal_digits_total: usize,
}

fn as_decimal<S: serde::Serializer>(value: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_str_radix(10))
}

pub fn word_count(spec: &CompositionSpec) -> u64 {
    let (n, od, i) = distinct_counts(spec);
    n as u64 * od as u64 * i as u64
}

/// `w^ms`, exactly.
pub fn serialization_count(w: u64, ms: u64) -> BigUint {
    Pow::pow(BigUint::from(w), ms)
}

/// `w^(ms * k)`, exactly.
pub fn total_count(w: u64, ms: u64, k: u64) -> BigUint {
    match ms.checked_mul(k) {
        Some(exponent) => Pow::pow(BigUint::from(w), exponent),
        None => Pow::pow(serialization_count(w, ms), k),
    }
}

pub fn decimal_digits(value: &BigUint) -> usize {
    value.to_str_radix(10).len()
}

/// Short decimal form: `10^D` for exact powers of ten, the number itself
/// when it has at most 24 digits, otherwise a mantissa such as `1.2676e30`.
pub fn abbreviate(value: &BigUint) -> String {
    let digits = value.to_str_radix(10);
    if digits.len() <= 24 {
        return digits;
    }
    let exponent = digits.len() - 1;
    if digits[1..].bytes().all(|b| b == b'0') && &digits[..1] == "1" {
        return format!("10^{exponent}");
    }
    let mantissa = digits[1..5].trim_end_matches('0');
    if mantissa.is_empty() {
        format!("{}e{exponent}", &digits[..1])
    } else {
        format!("{}.{}e{exponent}", &digits[..1], mantissa)
    }
}

impl MultiplicityReport {
    pub fn new(spec: &CompositionSpec, ms: u64, k: u64) -> MultiplicityReport {
        let (n, od, i) = distinct_counts(spec);
        let (n, od, i) = (n as u64, od as u64, i as u64);
        let w = n * od * i;
        let per_stream = serialization_count(w, ms);
        let total = total_count(w, ms, k);
        MultiplicityReport {
            n,
            od,
            i,
            w,
            ms,
            k,
            decimal_digits_per_stream: decimal_digits(&per_stream),
            decimal_digits_total: decimal_digits(&total),
            per_stream,
            total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;
    use crate::RELAXING_SPEC;
    use num_traits::One;

    #[test]
    fn word_counts() {
        assert_eq!(word_count(&parse_spec(RELAXING_SPEC).unwrap()), 100);
        assert_eq!(
            word_count(&parse_spec(r#"{{"t"},{"C"},{"q"},{"Oboe"}}"#).unwrap()),
            1
        );
        assert_eq!(
            word_count(&parse_spec(r#"{{"t"},{"A","C","C"},{"q"},{"Oboe"}}"#).unwrap()),
            2
        );
    }

    #[test]
    fn small_powers() {
        assert_eq!(serialization_count(7, 0), BigUint::one());
        assert_eq!(serialization_count(2, 3), BigUint::from(8u32));
        assert_eq!(total_count(2, 2, 2), BigUint::from(16u32));
        assert_eq!(total_count(5, 3, 1), serialization_count(5, 3));
    }

    #[test]
    fn relaxing_report() {
        let report = MultiplicityReport::new(&parse_spec(RELAXING_SPEC).unwrap(), 120, 3);
        assert_eq!((report.n, report.od, report.i, report.w), (4, 5, 5, 100));
        assert_eq!(report.per_stream, Pow::pow(BigUint::from(10u32), 240u32));
        assert_eq!(report.total, Pow::pow(BigUint::from(10u32), 720u32));
        assert_eq!(report.decimal_digits_per_stream, 241);
        assert_eq!(report.decimal_digits_total, 721);
        assert_eq!(abbreviate(&report.total), "10^720");
    }

    #[test]
    fn abbreviations() {
        assert_eq!(abbreviate(&BigUint::from(100u32)), "100");
        assert_eq!(abbreviate(&serialization_count(2, 100)), "1.2676e30");
        assert_eq!(abbreviate(&(serialization_count(10, 30) * 3u32)), "3e30");
    }
}
