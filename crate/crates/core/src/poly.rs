//! Integer-coefficient polynomials in λ.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::Rat;

/// Polynomial with arbitrary-precision integer coefficients; index `k` holds
/// the coefficient of `λ^k`. Trailing zeros are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntPoly { coeffs };
        p.trim();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn from_u64(coeffs: &[u64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    pub fn constant(c: i64) -> Self {
        IntPoly::from_i64(&[c])
    }

    /// `c·λ^k`.
    pub fn monomial(c: i64, k: usize) -> Self {
        let mut v = vec![BigInt::zero(); k + 1];
        v[k] = BigInt::from(c);
        IntPoly::new(v)
    }

    /// `1 - λ`.
    pub fn one_minus_lambda() -> Self {
        IntPoly::from_i64(&[1, -1])
    }

    /// `1 + λ`.
    pub fn one_plus_lambda() -> Self {
        IntPoly::from_i64(&[1, 1])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn all_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }

    /// Sum of coefficients, i.e. the value at λ = 1.
    pub fn coeff_sum(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    /// Lowest power with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Drops the factor `λ^k`; the low coefficients must be zero.
    pub fn shift_down(&self, k: usize) -> IntPoly {
        debug_assert!(self.coeffs.iter().take(k).all(|c| c.is_zero()));
        IntPoly::new(self.coeffs.iter().skip(k).cloned().collect())
    }

    /// Gcd of the coefficients (0 for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn div_exact(&self, d: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c / d).collect())
    }

    pub fn scale(&self, k: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + Rat::from_integer(c.clone());
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + big_to_f64(c);
        }
        acc
    }

    /// Value at `n/d` scaled by `d^deg`, i.e. the homogenized integer
    /// `Σ c_k n^k d^(deg-k)`.
    pub fn eval_homogeneous(&self, n: &BigInt, d: &BigInt, deg: usize) -> BigInt {
        let mut acc = BigInt::zero();
        let mut npow = BigInt::one();
        let mut dpows = Vec::with_capacity(deg + 1);
        let mut dp = BigInt::one();
        for _ in 0..=deg {
            dpows.push(dp.clone());
            dp *= d;
        }
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc += c * &npow * &dpows[deg - k];
            }
            npow *= n;
        }
        acc
    }

    /// Text form `a0 + a1*L + a2*L^2 + …`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Option<IntPoly> {
        let t = text.replace(' ', "");
        if t == "0" {
            return Some(IntPoly::zero());
        }
        let mut coeffs: Vec<BigInt> = vec![];
        let mut rest = t.as_str();
        while !rest.is_empty() {
            let neg = rest.starts_with('-');
            if rest.starts_with('+') || rest.starts_with('-') {
                rest = &rest[1..];
            }
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            rest = &rest[end..];
            let (c, k) = match term.split_once('*') {
                None if term == "L" => (BigInt::one(), 1),
                None => (term.parse::<BigInt>().ok()?, 0),
                Some((c, l)) => {
                    let k = match l.strip_prefix("L") {
                        Some("") => 1,
                        Some(pow) => pow.strip_prefix('^')?.parse::<usize>().ok()?,
                        None => return None,
                    };
                    (c.parse::<BigInt>().ok()?, k)
                }
            };
            if coeffs.len() <= k {
                coeffs.resize(k + 1, BigInt::zero());
            }
            coeffs[k] += if neg { -c } else { c };
        }
        Some(IntPoly::new(coeffs))
    }
}

pub(crate) fn big_to_f64(c: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            first = false;
            match k {
                0 => write!(f, "{mag}")?,
                1 => write!(f, "{mag}*L")?,
                _ => write!(f, "{mag}*L^{k}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for IntPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for IntPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        IntPoly::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad polynomial {s:?}")))
    }
}

impl Add for &IntPoly {
    type Output = IntPoly;
    fn add(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &IntPoly {
    type Output = IntPoly;
    fn sub(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Neg for &IntPoly {
    type Output = IntPoly;
    fn neg(self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;
    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }
}

impl std::iter::Sum for IntPoly {
    fn sum<I: Iterator<Item = IntPoly>>(iter: I) -> IntPoly {
        iter.fold(IntPoly::zero(), |acc, p| &acc + &p)
    }
}
