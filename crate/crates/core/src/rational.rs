//! Exact rational numbers and their textual forms.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::ParseError;

/// Exact rational used throughout the crate.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.127` into an exact
/// rational. Exponent notation and non-terminating forms are refused.
pub fn parse_rat(text: &str) -> Result<Rat, ParseError> {
    let t = text.trim();
    let bad = || ParseError::Rational(text.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rat::new(n, d);
    Ok(if neg { -r } else { r })
}

/// Canonical `p/q` text (integers print without a denominator).
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    // numerator and denominator can be far outside f64 range for deep bisection
    let n = r.numer();
    let d = r.denom();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift = (nb.max(db) - 60).max(0);
    let nf = shrink(n, shift);
    let df = shrink(d, shift);
    nf / df
}

fn shrink(x: &BigInt, shift: i64) -> f64 {
    let v: BigInt = x >> (shift as usize);
    let s = v.to_string();
    s.parse::<f64>().unwrap_or(0.0)
}

/// Smallest rational with denominator at most `max_den` that is `>= x`.
pub fn round_up(x: &Rat, max_den: u64) -> Rat {
    let mut best: Option<Rat> = None;
    for d in 1..=max_den {
        let dd = BigInt::from(d);
        let scaled = x * Rat::from_integer(dd.clone());
        let n = scaled.ceil().to_integer();
        let cand = Rat::new(n, dd);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.unwrap_or_else(|| x.clone())
}

pub mod serde_rat {
    //! `p/q` string (de)serialization for [`Rat`](super::Rat).
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{fmt_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use serde::{Deserialize, Deserializer, Serializer};

        use super::super::{fmt_rat, parse_rat, Rat};

        pub fn serialize<S: Serializer>(rs: &[Rat], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(rs.iter().map(fmt_rat))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    pub mod matrix {
        use serde::{Deserialize, Deserializer, Serializer};

        use super::super::{fmt_rat, parse_rat, Rat};

        pub fn serialize<S: Serializer>(m: &[Vec<Rat>], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(m.iter().map(|row| row.iter().map(fmt_rat).collect::<Vec<_>>()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rat>>, D::Error> {
            let m = Vec::<Vec<String>>::deserialize(d)?;
            m.iter()
                .map(|row| row.iter().map(|s| parse_rat(s).map_err(serde::de::Error::custom)).collect())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rat("0.127").unwrap(), rat(127, 1000));
        assert_eq!(parse_rat("3/7").unwrap(), rat(3, 7));
        assert_eq!(parse_rat("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat("2").unwrap(), int(2));
        assert_eq!(parse_rat(".25").unwrap(), rat(1, 4));
    }

    #[test]
    fn float_forms_refused() {
        for s in ["1e-3", "0.1.2", "", "1/0", "abc", "0x10", "."] {
            assert!(parse_rat(s).is_err(), "{s}");
        }
    }

    #[test]
    fn round_up_small_denominator() {
        assert_eq!(round_up(&rat(69, 100), 100), rat(69, 100));
        let r = round_up(&rat(6999, 10000), 10);
        assert_eq!(r, rat(7, 10));
        assert!(round_up(&rat(1, 3), 2) >= rat(1, 3));
    }

    #[test]
    fn f64_conversion_of_huge_terms() {
        let big = Rat::new(BigInt::from(1) << 400usize, (BigInt::from(1) << 401usize) + 1);
        assert!((to_f64(&big) - 0.5).abs() < 1e-12);
    }
}
