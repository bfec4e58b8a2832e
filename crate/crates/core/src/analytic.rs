//! Closed-form single-vertex bounds and the thresholds derived from them.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::poly::IntPoly;
use crate::rational::{rat, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeBoundParams {
    pub q: u32,
    pub delta: u32,
}

impl NodeBoundParams {
    pub fn new(q: u32, delta: u32) -> Result<Self> {
        if q < 3 {
            return Err(invalid(format!("the single-vertex bound needs q ≥ 3, got {q}")));
        }
        if delta == 0 {
            return Err(invalid("Δ must be at least 1"));
        }
        Ok(NodeBoundParams { q, delta })
    }

    pub fn lattice(q: u32) -> Result<Self> {
        Self::new(q, 4)
    }

    pub fn u(&self) -> u32 {
        (self.delta - 1) / (self.q - 2)
    }

    pub fn v(&self) -> u32 {
        (self.delta - 1) % (self.q - 2)
    }

    /// Numerator `1 − λ` and denominator
    /// `1 + λ + v λ^(u+1) + (q−2−v) λ^u` as integer polynomials.
    pub fn polys(&self) -> (IntPoly, IntPoly) {
        let (u, v) = (self.u() as usize, self.v() as i64);
        let den = &(&IntPoly::one_plus_lambda() + &IntPoly::monomial(v, u + 1))
            + &IntPoly::monomial(self.q as i64 - 2 - v, u);
        (IntPoly::one_minus_lambda(), den)
    }
}

fn check_lambda(lambda: &Rat) -> Result<()> {
    if lambda.is_negative() || *lambda > Rat::one() {
        return Err(invalid(format!("λ = {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// `(1−λ) / (1 + λ + v λ^(u+1) + (q−2−v) λ^u)`.
pub fn single_node_bound(params: NodeBoundParams, lambda: &Rat) -> Result<Rat> {
    check_lambda(lambda)?;
    let (num, den) = params.polys();
    Ok(num.eval(lambda) / den.eval(lambda))
}

/// Whether the single-vertex bound is strictly below 1/3, decided by the
/// sign of `den − 3·num` at λ.
pub fn threshold_check(q: u32, lambda: &Rat, delta: u32) -> Result<bool> {
    check_lambda(lambda)?;
    let (num, den) = NodeBoundParams::new(q, delta)?.polys();
    let gap = &den - &num.scale(&BigInt::from(3));
    let deg = gap.degree().unwrap_or(0);
    Ok(gap.eval_homogeneous(lambda.numer(), lambda.denom(), deg).is_positive())
}

/// `q > (1 − λ)(2Δ − 1)`.
pub fn general_graph_check(q: u32, delta: u32, lambda: &Rat) -> Result<bool> {
    check_lambda(lambda)?;
    if delta == 0 {
        return Err(invalid("Δ must be at least 1"));
    }
    let rhs = (Rat::one() - lambda) * Rat::from_integer(BigInt::from(2 * delta - 1));
    Ok(Rat::from_integer(BigInt::from(q)) > rhs)
}

/// Brackets the smallest λ at which `check` turns true, assuming it is
/// monotone on [0, 1]. `None` when it is already true at 0 or never true.
pub fn bracket_threshold(check: impl Fn(&Rat) -> Result<bool>, width: &Rat) -> Result<Option<(Rat, Rat)>> {
    let (mut lo, mut hi) = (Rat::zero(), Rat::one());
    if check(&lo)? || !check(&hi)? {
        return Ok(None);
    }
    let two = Rat::from_integer(BigInt::from(2));
    while &hi - &lo > *width {
        let mid = (&lo + &hi) / &two;
        if check(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some((lo, hi)))
}

/// Bracket of width 10⁻⁶ around the single-vertex threshold for `q`.
pub fn threshold_bracket(q: u32, delta: u32) -> Result<Option<(Rat, Rat)>> {
    bracket_threshold(|l| threshold_check(q, l, delta), &rat(1, 1_000_000))
}

/// The smallest λ allowed by the general-graph condition, `max(0, 1 − q/(2Δ−1))`
/// (the inequality is strict, so this λ itself is excluded when positive).
pub fn general_graph_boundary(q: u32, delta: u32) -> Rat {
    let b = Rat::one() - Rat::new(BigInt::from(q), BigInt::from(2 * delta - 1));
    if b.is_negative() {
        Rat::zero()
    } else {
        b
    }
}
