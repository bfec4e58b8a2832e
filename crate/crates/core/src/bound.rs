//! μ(X) as an exact rational function of λ, and certified upper bounds of
//! such functions over λ-intervals.
//!
//! The interval bound splits the numerator by coefficient sign: on `[a, b]`
//! positive terms are evaluated at `b`, negative terms at `a`, and the
//! denominator (nonnegative coefficients only) at `a`. The result is an upper
//! bound of the function everywhere on the interval.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gibbs::{class_weights, ClassWeights};
use crate::lattice::BoundaryPair;
use crate::poly::IntPoly;
use crate::rational::{serde_rat, to_f64, Rat};

/// `num / den` with `den` having nonnegative coefficients, not identically zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RationalFunc {
    pub num: IntPoly,
    pub den: IntPoly,
}

impl RationalFunc {
    pub fn new(num: IntPoly, den: IntPoly) -> Result<Self> {
        if den.is_zero() || !den.all_nonnegative() {
            return Err(invalid(format!("denominator {den} must be nonzero with nonnegative coefficients")));
        }
        Ok(RationalFunc { num, den })
    }

    pub fn constant(r: &Rat) -> Self {
        RationalFunc {
            num: IntPoly::new(vec![r.numer().clone()]),
            den: IntPoly::new(vec![r.denom().clone()]),
        }
    }

    /// Divides both polynomials by the gcd of all their coefficients.
    pub fn reduce_content(self) -> Self {
        let g = num_integer::Integer::gcd(&self.num.content(), &self.den.content());
        if g.is_zero() || g.is_one() {
            return self;
        }
        RationalFunc { num: self.num.div_exact(&g), den: self.den.div_exact(&g) }
    }

    /// Exact value at λ. At λ = 0 with a vanishing denominator the common
    /// power of λ is cancelled (the λ → 0⁺ limit); `None` if that limit is
    /// infinite.
    pub fn eval(&self, lambda: &Rat) -> Option<Rat> {
        let deg = self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0));
        let (n, dd) = (lambda.numer(), lambda.denom());
        let d = self.den.eval_homogeneous(n, dd, deg);
        if !d.is_zero() {
            return Some(Rat::new(self.num.eval_homogeneous(n, dd, deg), d));
        }
        if !lambda.is_zero() {
            return None;
        }
        let k = self.den.valuation()?;
        match self.num.valuation() {
            None => Some(Rat::zero()),
            Some(j) if j > k => Some(Rat::zero()),
            Some(j) if j == k => Some(Rat::new(self.num.coeff(k), self.den.coeff(k))),
            Some(_) => None,
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }
}

impl fmt::Display for RationalFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

/// `((1−λ)c_i, (1+λ)c_i + c)` with integer content removed.
pub fn mu_func_from_weights(ci: &IntPoly, rest: &IntPoly) -> RationalFunc {
    let num = &IntPoly::one_minus_lambda() * ci;
    let den = &(&IntPoly::one_plus_lambda() * ci) + rest;
    RationalFunc { num, den }.reduce_content()
}

/// The two functions behind μ(X), for `i = B_X(s)` and `i = B'_X(s)`.
pub fn mu_funcs(x: &BoundaryPair) -> Result<[RationalFunc; 2]> {
    let cw = class_weights(x)?;
    Ok(mu_funcs_from(&cw))
}

pub fn mu_funcs_from(cw: &ClassWeights) -> [RationalFunc; 2] {
    let (i, j) = cw.pair;
    [mu_func_from_weights(cw.of(i), &cw.rest), mu_func_from_weights(cw.of(j), &cw.rest)]
}

/// μ(X) at a rational λ in [0, 1].
pub fn mu_eval(x: &BoundaryPair, lambda: &Rat) -> Result<Rat> {
    check_unit(lambda)?;
    let [f1, f2] = mu_funcs(x)?;
    let v1 = f1.eval(lambda).ok_or_else(|| invalid("μ undefined at this λ"))?;
    let v2 = f2.eval(lambda).ok_or_else(|| invalid("μ undefined at this λ"))?;
    Ok(v1.max(v2))
}

fn check_unit(lambda: &Rat) -> Result<()> {
    if lambda.is_negative() || *lambda > Rat::one() {
        return Err(invalid(format!("λ = {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// Sign-split upper bound of `f` on `[a, b]`.
pub fn sign_split_bound(f: &RationalFunc, a: &Rat, b: &Rat) -> Result<Rat> {
    if a.is_negative() || a > b || *b > Rat::one() {
        return Err(invalid(format!("bad interval [{a}, {b}]")));
    }
    let (num, den) = sign_split_parts(f, a, b);
    if den.is_zero() {
        return Err(invalid(format!("denominator vanishes at λ = {a}")));
    }
    Ok(num / den)
}

/// Numerator and denominator of the sign-split bound, computed on integers.
fn sign_split_parts(f: &RationalFunc, a: &Rat, b: &Rat) -> (Rat, Rat) {
    let (an, ad) = (a.numer(), a.denom());
    let (bn, bd) = (b.numer(), b.denom());
    let deg = f.num.degree().unwrap_or(0);
    let mut pos = BigInt::zero();
    let mut neg = BigInt::zero();
    let mut apow = BigInt::one();
    let mut bpow = BigInt::one();
    let mut adpow = vec![BigInt::one(); deg + 1];
    let mut bdpow = vec![BigInt::one(); deg + 1];
    for k in 1..=deg {
        adpow[k] = &adpow[k - 1] * ad;
        bdpow[k] = &bdpow[k - 1] * bd;
    }
    for (k, c) in f.num.coeffs().iter().enumerate() {
        if c.is_positive() {
            pos += c * &bpow * &bdpow[deg - k];
        } else if c.is_negative() {
            neg += c * &apow * &adpow[deg - k];
        }
        apow *= an;
        bpow *= bn;
    }
    let num = Rat::new(pos, bdpow[deg].clone()) + Rat::new(neg, adpow[deg].clone());
    let dd = f.den.degree().unwrap_or(0);
    let den = Rat::new(f.den.eval_homogeneous(an, ad, dd), num_traits::pow(ad.clone(), dd));
    (num, den)
}

fn sign_split_f64(f: &RationalFunc, a: f64, b: f64) -> f64 {
    let mut num = 0.0;
    let (mut ap, mut bp) = (1.0, 1.0);
    for c in f.num.coeffs() {
        let cf = crate::poly::big_to_f64(c);
        num += if cf > 0.0 { cf * bp } else { cf * ap };
        ap *= a;
        bp *= b;
    }
    num / f.den.eval_f64(a)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(with = "serde_rat")]
    pub a: Rat,
    #[serde(with = "serde_rat")]
    pub b: Rat,
    #[serde(with = "serde_rat")]
    pub bound: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertVerdict {
    Certified,
    /// Subdivision gave up. `worst` is the failing piece with the largest
    /// bound; `witness` is a point where `f` itself exceeds the target, if one
    /// was found.
    Unknown { worst: Piece, witness: Option<Witness> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "serde_rat")]
    pub lambda: Rat,
    #[serde(with = "serde_rat")]
    pub value: Rat,
}

/// Record of a `f ≤ target` check on `[a, b]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalBoundCert {
    #[serde(with = "serde_rat")]
    pub a: Rat,
    #[serde(with = "serde_rat")]
    pub b: Rat,
    #[serde(with = "serde_rat")]
    pub target: Rat,
    pub pieces: Vec<Piece>,
    pub verdict: CertVerdict,
}

impl IntervalBoundCert {
    pub fn is_certified(&self) -> bool {
        matches!(self.verdict, CertVerdict::Certified)
    }

    /// Largest recorded bound.
    pub fn max_bound(&self) -> Option<&Rat> {
        self.pieces.iter().map(|p| &p.bound).max()
    }
}

pub const DEFAULT_MAX_DEPTH: u32 = 40;

/// Cap on the number of pieces a single certificate may hold.
const MAX_PIECES: usize = 1 << 20;

/// Certifies `f ≤ target` on `[a, b]` by midpoint bisection.
pub fn certify_leq(f: &RationalFunc, target: &Rat, a: &Rat, b: &Rat, max_depth: u32) -> Result<IntervalBoundCert> {
    if a.is_negative() || a > b || *b > Rat::one() {
        return Err(invalid(format!("bad interval [{a}, {b}]")));
    }
    let target_f = to_f64(target);
    let mut pieces = Vec::new();
    let mut failed: Option<Piece> = None;
    let mut witness = None;
    // explicit stack, right child pushed first so pieces come out in order
    let mut stack: Vec<(Rat, Rat, u32)> = vec![(a.clone(), b.clone(), 0)];
    let two = Rat::from_integer(BigInt::from(2));
    while let Some((lo, hi, depth)) = stack.pop() {
        // floating-point prefilter only skips work on clear failures
        let approx = sign_split_f64(f, to_f64(&lo), to_f64(&hi));
        let clear_fail = approx.is_finite() && approx > target_f + 1e-9 * (1.0 + target_f.abs());
        let exact = if clear_fail { None } else { Some(sign_split_bound(f, &lo, &hi)?) };
        if let Some(bound) = &exact {
            if bound <= target {
                pieces.push(Piece { a: lo, b: hi, bound: bound.clone() });
                continue;
            }
        }
        // the piece fails; look for a point where f itself is too large
        for pt in [&lo, &hi] {
            if let Some(v) = f.eval(pt) {
                if v > *target {
                    witness = Some(Witness { lambda: pt.clone(), value: v });
                    break;
                }
            }
        }
        if witness.is_some() || depth >= max_depth || pieces.len() + stack.len() >= MAX_PIECES {
            let bound = match exact {
                Some(bd) => bd,
                None => sign_split_bound(f, &lo, &hi)?,
            };
            failed = Some(Piece { a: lo, b: hi, bound });
            break;
        }
        let mid = (&lo + &hi) / &two;
        stack.push((mid.clone(), hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    let verdict = match failed {
        None => CertVerdict::Certified,
        Some(worst) => CertVerdict::Unknown { worst, witness },
    };
    Ok(IntervalBoundCert { a: a.clone(), b: b.clone(), target: target.clone(), pieces, verdict })
}

/// Independent re-check: the pieces must tile `[a, b]` and each stored bound
/// must equal a fresh sign-split evaluation done with plain rational
/// arithmetic and lie at or below the target. Returns the verdict the record
/// supports.
pub fn recheck(f: &RationalFunc, cert: &IntervalBoundCert) -> bool {
    if !cert.is_certified() {
        return false;
    }
    let mut cursor = cert.a.clone();
    for p in &cert.pieces {
        if p.a != cursor || p.b < p.a {
            return false;
        }
        let mut num = Rat::zero();
        for (k, c) in f.num.coeffs().iter().enumerate() {
            let at = if c.is_negative() { &p.a } else { &p.b };
            num += Rat::from_integer(c.clone()) * num_traits::pow(at.clone(), k);
        }
        let den = f.den.eval(&p.a);
        if den.is_zero() {
            return false;
        }
        let bound = num / den;
        if bound != p.bound || bound > cert.target {
            return false;
        }
        cursor = p.b.clone();
    }
    cursor == cert.b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Edge, Region, Site};
    use crate::rational::{int, rat};
    use std::collections::BTreeMap;

    fn e(a: (i32, i32), b: (i32, i32)) -> Edge {
        Edge::new(Site::new(a.0, a.1), Site::new(b.0, b.1)).unwrap()
    }

    fn single(q: u8, spins: [u8; 3]) -> BoundaryPair {
        let others = BTreeMap::from([
            (e((0, 0), (-1, 0)), spins[0]),
            (e((0, 0), (0, 1)), spins[1]),
            (e((0, 0), (1, 0)), spins[2]),
        ]);
        BoundaryPair::from_spins(Region::new([Site::new(0, 0)]), e((0, 0), (0, -1)), q, (1, 2), &others)
    }

    fn decreasing() -> RationalFunc {
        RationalFunc::new(IntPoly::from_i64(&[1, -1]), IntPoly::from_i64(&[1, 1])).unwrap()
    }

    #[test]
    fn remark_example() {
        let x = single(6, [1, 2, 2]);
        let [f1, _] = mu_funcs(&x).unwrap();
        // (1-λ)λ / ((1+λ)λ + 4)
        assert_eq!(f1.num, IntPoly::from_i64(&[0, 1, -1]));
        assert_eq!(f1.den, IntPoly::from_i64(&[4, 1, 1]));
        assert_eq!(mu_eval(&x, &int(0)).unwrap(), int(0));
        assert_eq!(mu_eval(&x, &rat(1, 2)).unwrap(), rat(1, 19));
        assert_eq!(mu_eval(&x, &int(1)).unwrap(), int(0));
    }

    #[test]
    fn free_boundary_q2() {
        let x = single(2, [0, 0, 0]);
        let [f1, f2] = mu_funcs(&x).unwrap();
        assert_eq!(f1, decreasing());
        assert_eq!(f2, decreasing());
        assert_eq!(mu_eval(&x, &rat(1, 2)).unwrap(), rat(1, 3));
    }

    #[test]
    fn sign_split_examples() {
        let f = RationalFunc::new(IntPoly::from_i64(&[1, -1]), IntPoly::from_i64(&[2, 4])).unwrap();
        assert_eq!(sign_split_bound(&f, &int(0), &rat(1, 2)).unwrap(), rat(1, 2));
        let c = RationalFunc::constant(&rat(3, 7));
        assert_eq!(sign_split_bound(&c, &rat(1, 5), &rat(4, 5)).unwrap(), rat(3, 7));
        let g = decreasing();
        assert_eq!(sign_split_bound(&g, &rat(1, 3), &rat(1, 3)).unwrap(), g.eval(&rat(1, 3)).unwrap());
        assert!(sign_split_bound(&g, &rat(1, 2), &rat(1, 3)).is_err());
        let vanishing = RationalFunc::new(IntPoly::from_i64(&[0, 1]), IntPoly::from_i64(&[0, 1])).unwrap();
        assert!(sign_split_bound(&vanishing, &int(0), &int(1)).is_err());
    }

    #[test]
    fn certify_examples() {
        let g = decreasing();
        let cert = certify_leq(&g, &rat(1, 2), &rat(1, 3), &int(1), DEFAULT_MAX_DEPTH).unwrap();
        assert!(cert.is_certified());
        assert!(recheck(&g, &cert));

        let cert = certify_leq(&g, &rat(1, 3), &int(0), &int(1), DEFAULT_MAX_DEPTH).unwrap();
        match &cert.verdict {
            CertVerdict::Unknown { witness: Some(w), .. } => {
                assert_eq!(w.lambda, int(0));
                assert_eq!(w.value, int(1));
            }
            other => panic!("unexpected verdict {other:?}"),
        }
        assert!(!recheck(&g, &cert));

        let c = RationalFunc::constant(&rat(3, 7));
        let cert = certify_leq(&c, &(rat(3, 7) + rat(1, 1000)), &int(0), &int(1), 0).unwrap();
        assert!(cert.is_certified());
        assert_eq!(cert.pieces.len(), 1);
    }

    #[test]
    fn tampered_certificate_rejected() {
        let g = decreasing();
        let mut cert = certify_leq(&g, &rat(7, 10), &rat(1, 5), &int(1), DEFAULT_MAX_DEPTH).unwrap();
        assert!(recheck(&g, &cert));
        cert.pieces[0].bound = rat(1, 100);
        assert!(!recheck(&g, &cert));
    }

    #[test]
    fn limit_at_zero() {
        let f = RationalFunc::new(IntPoly::from_i64(&[0, 3, -1]), IntPoly::from_i64(&[0, 6, 1])).unwrap();
        assert_eq!(f.eval(&int(0)), Some(rat(1, 2)));
    }
}
