//! `μ_X ≤ target` on an interval for every boundary pair of one region.
//!
//! Every distinct μ function is covered by a dyadic tiling of `[a, b]`.
//! Tilings are shared: the certificate lists the distinct ones, coarsest
//! first, and each function is assigned the first listed tiling on which
//! every sign-split bound is at most the target. Floating point only steers
//! the search; every accepted piece is checked in exact arithmetic.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::engine::{horner, Assignment, FuncEntry, PairEngine, WeightPair};
use crate::bound::{certify_leq, sign_split_bound, CertVerdict, IntervalBoundCert, DEFAULT_MAX_DEPTH};
use crate::error::{invalid, Result};
use crate::lattice::{BoundaryPair, RegionSpec, Spin};
use crate::rational::{serde_rat, to_f64, Rat};

/// Deepest dyadic level a tiling may use.
pub const MAX_TILING_DEPTH: u32 = 60;

const MAX_OWN_PIECES: usize = 1 << 16;

/// Pairs sampled for the independent class-weight cross-check in [`recheck_region`].
const CROSS_CHECK_SAMPLES: usize = 48;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingUse {
    /// Dyadic depth of each piece, left to right.
    pub depths: Vec<u8>,
    /// Number of distinct functions assigned to this tiling.
    pub functions: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotValues {
    pub at_s: (Spin, Spin),
    pub vals: Vec<Spin>,
}

impl From<&Assignment> for SlotValues {
    fn from(a: &Assignment) -> Self {
        SlotValues { at_s: a.at_s, vals: a.vals.clone() }
    }
}

impl SlotValues {
    fn assignment(&self) -> Assignment {
        Assignment { at_s: self.at_s, vals: self.vals.clone() }
    }
}

/// Largest sign-split bound over all assigned pieces and where it occurs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorstPiece {
    #[serde(with = "serde_rat")]
    pub bound: Rat,
    #[serde(with = "serde_rat")]
    pub a: Rat,
    #[serde(with = "serde_rat")]
    pub b: Rat,
    pub pair: SlotValues,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionVerdict {
    Certified,
    /// Some function exceeds the target at a point.
    Refuted { pair: SlotValues, cert: IntervalBoundCert },
    /// Subdivision gave up without finding a violation.
    Unknown { pair: SlotValues, cert: IntervalBoundCert },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionBoundCert {
    pub region: RegionSpec,
    pub q: u8,
    #[serde(with = "serde_rat")]
    pub a: Rat,
    #[serde(with = "serde_rat")]
    pub b: Rat,
    #[serde(with = "serde_rat")]
    pub target: Rat,
    pub max_depth: u32,
    pub pairs: u64,
    pub functions: u64,
    /// SHA-256 over the sorted function list with pair counts.
    pub digest: String,
    pub tilings: Vec<TilingUse>,
    pub worst: Option<WorstPiece>,
    pub verdict: RegionVerdict,
}

impl RegionBoundCert {
    pub fn is_certified(&self) -> bool {
        matches!(self.verdict, RegionVerdict::Certified)
    }

    pub fn pair(&self, v: &SlotValues) -> BoundaryPair {
        let skel = crate::lattice::PairSkeleton::new(&self.region.region, self.region.s).expect("valid region");
        skel.pair(self.q, v.at_s, &v.vals)
    }
}

/// Piece `j` (in position units of `2^-MAX_TILING_DEPTH`) endpoints of a tiling.
fn positions(depths: &[u8]) -> Vec<(u64, u64)> {
    let mut pos = 0u64;
    depths
        .iter()
        .map(|&d| {
            let w = 1u64 << (MAX_TILING_DEPTH - d as u32);
            let p = (pos, pos + w);
            pos += w;
            p
        })
        .collect()
}

fn tiling_is_complete(depths: &[u8]) -> bool {
    depths.iter().all(|&d| d as u32 <= MAX_TILING_DEPTH)
        && depths.iter().map(|&d| 1u128 << (MAX_TILING_DEPTH - d as u32)).sum::<u128>() == 1u128 << MAX_TILING_DEPTH
}

struct Interval {
    a: Rat,
    b: Rat,
    af: f64,
    bf: f64,
}

impl Interval {
    fn point(&self, pos: u64) -> Rat {
        let scale = Rat::from_integer(BigInt::one() << MAX_TILING_DEPTH as usize);
        &self.a + (&self.b - &self.a) * Rat::from_integer(BigInt::from(pos)) / scale
    }

    fn point_f64(&self, pos: u64) -> f64 {
        self.af + (self.bf - self.af) * (pos as f64 / (1u64 << MAX_TILING_DEPTH) as f64)
    }
}

/// `tn^k · td^(D−k)` for `k = 0..=D` and `td^D`.
struct Powers {
    hom: Vec<BigInt>,
    dpow: BigInt,
}

/// Exact sign-split checks with endpoint powers cached by position.
struct Exact<'a> {
    iv: &'a Interval,
    deg: usize,
    tn: BigInt,
    td: BigInt,
    cache: RwLock<HashMap<u64, Arc<Powers>>>,
}

impl<'a> Exact<'a> {
    fn new(iv: &'a Interval, deg: usize, target: &Rat) -> Self {
        Exact { iv, deg, tn: target.numer().clone(), td: target.denom().clone(), cache: RwLock::new(HashMap::new()) }
    }

    fn powers(&self, pos: u64) -> Arc<Powers> {
        if let Some(p) = self.cache.read().expect("cache lock").get(&pos) {
            return p.clone();
        }
        let t = self.iv.point(pos);
        let (n, d) = (t.numer(), t.denom());
        let mut npow = vec![BigInt::one(); self.deg + 1];
        let mut dpow = vec![BigInt::one(); self.deg + 1];
        for k in 1..=self.deg {
            npow[k] = &npow[k - 1] * n;
            dpow[k] = &dpow[k - 1] * d;
        }
        let hom = (0..=self.deg).map(|k| &npow[k] * &dpow[self.deg - k]).collect();
        let p = Arc::new(Powers { hom, dpow: dpow[self.deg].clone() });
        self.cache.write().expect("cache lock").insert(pos, p.clone());
        p
    }

    /// Numerator and positive denominator of the sign-split bound, or `None`
    /// when the denominator vanishes.
    fn parts(&self, num: &[i64], den: &[i64], lo: u64, hi: u64) -> Option<(BigInt, BigInt)> {
        let (pa, pb) = (self.powers(lo), self.powers(hi));
        let mut pos = BigInt::zero();
        let mut neg = BigInt::zero();
        for (k, &c) in num.iter().enumerate() {
            if c > 0 {
                pos += &pb.hom[k] * c;
            } else if c < 0 {
                neg += &pa.hom[k] * (-c);
            }
        }
        let mut d = BigInt::zero();
        for (k, &c) in den.iter().enumerate() {
            if c != 0 {
                d += &pa.hom[k] * c;
            }
        }
        if !d.is_positive() {
            return None;
        }
        Some((pos * &pa.dpow - neg * &pb.dpow, d * &pb.dpow))
    }

    fn leq(&self, num: &[i64], den: &[i64], lo: u64, hi: u64) -> bool {
        match self.parts(num, den, lo, hi) {
            Some((n, d)) => n * &self.td <= &self.tn * d,
            None => false,
        }
    }

    fn bound(&self, num: &[i64], den: &[i64], lo: u64, hi: u64) -> Option<Rat> {
        self.parts(num, den, lo, hi).map(|(n, d)| Rat::new(n, d))
    }
}

fn split_f64(num: &[i64], den: &[i64], a: f64, b: f64) -> f64 {
    let (mut ap, mut bp, mut n) = (1.0, 1.0, 0.0);
    for &c in num {
        n += if c > 0 { c as f64 * bp } else { c as f64 * ap };
        ap *= a;
        bp *= b;
    }
    n / horner(den, a)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Filter {
    Pass,
    Fail,
    Unsure,
}

fn margin(target: f64) -> f64 {
    1e-9 * (1.0 + target.abs())
}

fn filter(bound: f64, target: f64) -> Filter {
    if !bound.is_finite() {
        Filter::Unsure
    } else if bound <= target - margin(target) {
        Filter::Pass
    } else if bound > target + margin(target) {
        Filter::Fail
    } else {
        Filter::Unsure
    }
}

/// Depths of a bisection certificate's pieces.
fn depths_of(cert: &IntervalBoundCert) -> Option<Vec<u8>> {
    let whole = &cert.b - &cert.a;
    cert.pieces
        .iter()
        .map(|p| {
            let ratio = &whole / (&p.b - &p.a);
            if !ratio.is_integer() {
                return None;
            }
            let r = ratio.to_integer();
            let d = r.bits() - 1;
            (d as u32 <= MAX_TILING_DEPTH && r == BigInt::one() << d as usize).then_some(d as u8)
        })
        .collect()
}

enum Own {
    Tiling(Vec<u8>),
    Failed(Box<IntervalBoundCert>),
}

struct Ctx<'a> {
    iv: &'a Interval,
    target: &'a Rat,
    tf: f64,
    max_depth: u32,
    exact: Exact<'a>,
}

impl Ctx<'_> {
    /// Adaptive tiling for one function, exact-checked, falling back to
    /// exact bisection when floating point cannot decide.
    fn own_tiling(&self, w: &WeightPair) -> Result<Own> {
        let (num, den) = w.mu_coeffs();
        if let Some(depths) = self.search(&num, &den) {
            if positions(&depths).iter().all(|&(lo, hi)| self.exact.leq(&num, &den, lo, hi)) {
                return Ok(Own::Tiling(depths));
            }
        }
        let cert = certify_leq(&w.func(), self.target, &self.iv.a, &self.iv.b, self.max_depth)?;
        match (&cert.verdict, depths_of(&cert)) {
            (CertVerdict::Certified, Some(d)) => Ok(Own::Tiling(d)),
            _ => Ok(Own::Failed(Box::new(cert))),
        }
    }

    fn search(&self, num: &[i64], den: &[i64]) -> Option<Vec<u8>> {
        let mut out = Vec::new();
        let mut stack = vec![(0u64, 0u32)];
        while let Some((lo, d)) = stack.pop() {
            let hi = lo + (1u64 << (MAX_TILING_DEPTH - d));
            let (xl, xh) = (self.iv.point_f64(lo), self.iv.point_f64(hi));
            match filter(split_f64(num, den, xl, xh), self.tf) {
                Filter::Pass => out.push(d as u8),
                Filter::Unsure if self.exact.leq(num, den, lo, hi) => out.push(d as u8),
                _ => {
                    let value_fails = |x: f64| filter(horner(num, x) / horner(den, x), self.tf) == Filter::Fail;
                    if d >= self.max_depth || value_fails(xl) || value_fails(xh) || out.len() + stack.len() > MAX_OWN_PIECES {
                        return None;
                    }
                    let mid = lo + (1u64 << (MAX_TILING_DEPTH - d - 1));
                    stack.push((mid, d + 1));
                    stack.push((lo, d + 1));
                }
            }
        }
        Some(out)
    }

    /// First tiling (by index) passing for this function, skipping `known`
    /// (already verified) and returning the f64 max bound on it.
    fn first_fit(&self, num: &[i64], den: &[i64], dict: &[Vec<(u64, u64)>], known: usize) -> Option<(usize, f64)> {
        'tiling: for (j, pieces) in dict.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for &(lo, hi) in pieces {
                let v = split_f64(num, den, self.iv.point_f64(lo), self.iv.point_f64(hi));
                if filter(v, self.tf) == Filter::Fail {
                    continue 'tiling;
                }
                best = best.max(v);
            }
            if j != known && !pieces.iter().all(|&(lo, hi)| self.exact.leq(num, den, lo, hi)) {
                continue;
            }
            return Some((j, best));
        }
        None
    }
}

fn check_interval(a: &Rat, b: &Rat, target: &Rat) -> Result<()> {
    if a.is_negative() || a >= b || *b > Rat::one() {
        return Err(invalid(format!("bad interval [{a}, {b}]")));
    }
    if !target.is_positive() {
        return Err(invalid("target must be positive"));
    }
    Ok(())
}

fn digest(entries: &[FuncEntry]) -> String {
    let mut h = Sha256::new();
    for e in entries {
        let (num, den) = e.weights.mu_coeffs();
        let trim = |v: &[i64]| v[..v.len() - v.iter().rev().take_while(|c| **c == 0).count()].to_vec();
        h.update(format!("{:?};{:?};{}\n", trim(&num), trim(&den), e.pairs));
    }
    hex::encode(h.finalize())
}

/// Certifies `μ_X ≤ target` on `[a, b]` for every canonical boundary pair
/// on `spec` with `q` spins.
pub fn certify_region_bound(spec: &RegionSpec, q: u8, a: &Rat, b: &Rat, target: &Rat, max_depth: u32) -> Result<RegionBoundCert> {
    check_interval(a, b, target)?;
    let max_depth = max_depth.min(MAX_TILING_DEPTH);
    let engine = PairEngine::new(&spec.region, spec.s, q)?;
    let entries = engine.distinct_funcs();
    let pairs = entries.iter().map(|e| e.pairs).sum::<u64>() / 2;
    let deg = entries.iter().map(|e| e.weights.mu_coeffs().0.len()).max().unwrap_or(1);
    let iv = Interval { a: a.clone(), b: b.clone(), af: to_f64(a), bf: to_f64(b) };
    let ctx = Ctx { iv: &iv, target, tf: to_f64(target), max_depth, exact: Exact::new(&iv, deg, target) };
    let mut cert = RegionBoundCert {
        region: spec.clone(),
        q,
        a: a.clone(),
        b: b.clone(),
        target: target.clone(),
        max_depth,
        pairs,
        functions: entries.len() as u64,
        digest: digest(&entries),
        tilings: Vec::new(),
        worst: None,
        verdict: RegionVerdict::Certified,
    };

    let own: Vec<Own> = entries.par_iter().map(|e| ctx.own_tiling(&e.weights)).collect::<Result<_>>()?;
    let failure = own
        .iter()
        .zip(&entries)
        .filter_map(|(o, e)| match o {
            Own::Failed(c) => Some((&**c, e)),
            Own::Tiling(_) => None,
        })
        .max_by(|(c1, _), (c2, _)| failure_rank(c1).cmp(&failure_rank(c2)));
    if let Some((c, e)) = failure {
        let pair = SlotValues::from(&e.witness);
        cert.verdict = match &c.verdict {
            CertVerdict::Unknown { witness: Some(_), .. } => RegionVerdict::Refuted { pair, cert: c.clone() },
            _ => RegionVerdict::Unknown { pair, cert: c.clone() },
        };
        return Ok(cert);
    }

    let mut dict: Vec<Vec<u8>> = own
        .iter()
        .map(|o| match o {
            Own::Tiling(d) => d.clone(),
            Own::Failed(_) => unreachable!("failures handled above"),
        })
        .collect();
    dict.par_sort_unstable_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    dict.dedup();
    let index: HashMap<&[u8], usize> = dict.iter().enumerate().map(|(i, d)| (d.as_slice(), i)).collect();
    let pieces: Vec<Vec<(u64, u64)>> = dict.iter().map(|d| positions(d)).collect();

    let fits: Vec<(usize, f64)> = entries
        .par_iter()
        .zip(&own)
        .map(|(e, o)| {
            let known = match o {
                Own::Tiling(d) => index[d.as_slice()],
                Own::Failed(_) => unreachable!("failures handled above"),
            };
            let (num, den) = e.weights.mu_coeffs();
            ctx.first_fit(&num, &den, &pieces[..=known], known).expect("own tiling always fits")
        })
        .collect();

    let mut counts = vec![0u64; dict.len()];
    for (j, _) in &fits {
        counts[*j] += 1;
    }
    cert.tilings = dict
        .into_iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(depths, functions)| TilingUse { depths, functions })
        .collect();
    cert.worst = worst_piece(&ctx, &entries, &fits, &pieces);
    Ok(cert)
}

/// Orders failures: refutations by violation size, then gave-up pieces by bound.
fn failure_rank(c: &IntervalBoundCert) -> (bool, Rat) {
    match &c.verdict {
        CertVerdict::Unknown { witness: Some(w), .. } => (true, w.value.clone()),
        CertVerdict::Unknown { worst, .. } => (false, worst.bound.clone()),
        CertVerdict::Certified => (false, Rat::zero()),
    }
}

fn worst_piece(ctx: &Ctx, entries: &[FuncEntry], fits: &[(usize, f64)], pieces: &[Vec<(u64, u64)>]) -> Option<WorstPiece> {
    let top = fits.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<WorstPiece> = None;
    for (e, &(j, m)) in entries.iter().zip(fits) {
        if m < top - 1e-9 * (1.0 + top.abs()) {
            continue;
        }
        let (num, den) = e.weights.mu_coeffs();
        for &(lo, hi) in &pieces[j] {
            let bound = ctx.exact.bound(&num, &den, lo, hi).expect("accepted pieces have positive denominators");
            if best.as_ref().is_none_or(|w| bound > w.bound) {
                best = Some(WorstPiece {
                    bound,
                    a: ctx.iv.point(lo),
                    b: ctx.iv.point(hi),
                    pair: SlotValues::from(&e.witness),
                });
            }
        }
    }
    best
}

/// Region bound with the default maximum bisection depth.
pub fn certify_region_bound_default(spec: &RegionSpec, q: u8, a: &Rat, b: &Rat, target: &Rat) -> Result<RegionBoundCert> {
    certify_region_bound(spec, q, a, b, target, DEFAULT_MAX_DEPTH)
}

/// Re-derives the verdict of `cert` independently of the search: the
/// function list is recomputed and compared by digest, a sample of pairs is
/// recomputed through the generic transfer sum, every function is
/// re-assigned to the stored tilings in exact arithmetic, and the sampled and
/// worst functions are re-bounded with plain rational sign-split bounds.
/// Returns `Ok(false)` on any disagreement.
pub fn recheck_region(cert: &RegionBoundCert) -> Result<bool> {
    check_interval(&cert.a, &cert.b, &cert.target)?;
    let engine = PairEngine::new(&cert.region.region, cert.region.s, cert.q)?;
    match &cert.verdict {
        RegionVerdict::Certified => {}
        RegionVerdict::Refuted { pair, cert: c } => {
            let x = engine.pair(&pair.assignment());
            let Some(w) = (match &c.verdict {
                CertVerdict::Unknown { witness, .. } => witness.clone(),
                CertVerdict::Certified => None,
            }) else {
                return Ok(false);
            };
            let value = crate::bound::mu_eval(&x, &w.lambda)?;
            return Ok(value == w.value && value > cert.target && cert.a <= w.lambda && w.lambda <= cert.b);
        }
        RegionVerdict::Unknown { pair, cert: c } => {
            let x = engine.pair(&pair.assignment());
            let funcs = crate::bound::mu_funcs(&x)?;
            return Ok(funcs
                .iter()
                .any(|f| certify_leq(f, &cert.target, &cert.a, &cert.b, cert.max_depth).is_ok_and(|r| r == *c)));
        }
    }

    let entries = engine.distinct_funcs();
    if digest(&entries) != cert.digest || entries.len() as u64 != cert.functions {
        return Ok(false);
    }
    let mut plain = 0u64;
    engine.skeleton.for_each_assignment(cert.q, true, |_, _| plain += 1);
    if plain != cert.pairs || entries.iter().map(|e| e.pairs).sum::<u64>() != 2 * plain {
        return Ok(false);
    }
    let step = (entries.len() / CROSS_CHECK_SAMPLES).max(1);
    for e in entries.iter().step_by(step) {
        let funcs = crate::bound::mu_funcs(&engine.pair(&e.witness))?;
        if !funcs.contains(&e.weights.func()) {
            return Ok(false);
        }
    }

    if !cert.tilings.iter().all(|t| tiling_is_complete(&t.depths)) {
        return Ok(false);
    }
    let deg = entries.iter().map(|e| e.weights.mu_coeffs().0.len()).max().unwrap_or(1);
    let iv = Interval { a: cert.a.clone(), b: cert.b.clone(), af: to_f64(&cert.a), bf: to_f64(&cert.b) };
    let exact = Exact::new(&iv, deg, &cert.target);
    let tf = to_f64(&cert.target);
    let tilings: Vec<Vec<(u64, u64)>> = cert.tilings.iter().map(|t| positions(&t.depths)).collect();
    let assigned: Vec<Option<(usize, f64)>> = entries
        .par_iter()
        .map(|e| {
            let (num, den) = e.weights.mu_coeffs();
            for (j, pieces) in tilings.iter().enumerate() {
                let approx: Vec<f64> = pieces
                    .iter()
                    .map(|&(lo, hi)| split_f64(&num, &den, iv.point_f64(lo), iv.point_f64(hi)))
                    .collect();
                // a clear floating-point failure can only skip a tiling, never accept one
                if approx.iter().any(|v| filter(*v, tf) == Filter::Fail) {
                    continue;
                }
                if pieces.iter().all(|&(lo, hi)| exact.leq(&num, &den, lo, hi)) {
                    return Some((j, approx.iter().cloned().fold(f64::NEG_INFINITY, f64::max)));
                }
            }
            None
        })
        .collect();
    let mut counts = vec![0u64; tilings.len()];
    let mut fits = Vec::with_capacity(assigned.len());
    for a in assigned {
        let Some(fit) = a else {
            return Ok(false);
        };
        counts[fit.0] += 1;
        fits.push(fit);
    }
    if counts.iter().zip(&cert.tilings).any(|(c, t)| *c != t.functions) {
        return Ok(false);
    }

    // plain sign-split bounds must agree with the cached integer evaluation
    let top = fits.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let near_top = |m: f64| m >= top - 1e-9 * (1.0 + top.abs());
    let mut worst: Option<Rat> = None;
    for (i, (e, &(j, m))) in entries.iter().zip(&fits).enumerate() {
        let sampled = i % step == 0;
        if !sampled && !near_top(m) {
            continue;
        }
        let (num, den) = e.weights.mu_coeffs();
        let f = e.weights.func();
        for &(lo, hi) in &tilings[j] {
            let Some(v) = exact.bound(&num, &den, lo, hi) else {
                return Ok(false);
            };
            if sign_split_bound(&f, &iv.point(lo), &iv.point(hi))? != v || v > cert.target {
                return Ok(false);
            }
            if near_top(m) && worst.as_ref().is_none_or(|w| v > *w) {
                worst = Some(v);
            }
        }
    }
    Ok(match (worst, &cert.worst) {
        (Some(v), Some(w)) => v == w.bound,
        (None, None) => true,
        _ => false,
    })
}
