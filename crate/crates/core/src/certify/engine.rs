//! Fast enumeration of boundary pairs on a fixed `(region, s)`.
//!
//! Class weights depend on a boundary pair only through how many boundary
//! edges of each spin touch each site. Canonical slot assignments are
//! therefore reduced to these per-site profiles, and each distinct profile
//! goes through a precompiled transfer sum once.

use std::collections::HashMap;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::bound::{mu_func_from_weights, RationalFunc};
use crate::error::{invalid, Error, Result};
use crate::gibbs::TransferPlan;
use crate::lattice::{BoundaryPair, Edge, PairSkeleton, Region, Site, Spin};
use crate::poly::IntPoly;
use crate::rational::Rat;

type Key = [u64; 4];

#[derive(Clone, Copy)]
struct Trans {
    from: u32,
    to: u32,
    x: u8,
    back: u8,
}

/// Site order for the transfer sum with, per position, the last position
/// holding one of its neighbours.
struct Order {
    sites: Vec<Site>,
    last_neighbour: Vec<usize>,
    f_pos: usize,
}

impl Order {
    fn from_sites(sites: Vec<Site>, f: Site) -> Self {
        let pos: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let last_neighbour = sites
            .iter()
            .enumerate()
            .map(|(i, v)| v.neighbours().iter().filter_map(|u| pos.get(u).copied()).fold(i, usize::max))
            .collect();
        Order { f_pos: pos[&f], sites, last_neighbour }
    }

    /// Number of transitions, `Σ q^(frontier + 1)`.
    fn cost(&self, q: u8) -> u128 {
        let mut active = 0u32;
        let mut total = 0u128;
        for step in 0..self.sites.len() {
            total = total.saturating_add((q as u128).saturating_pow(active + 1));
            active += 1;
            active -= (0..=step).filter(|&j| j != self.f_pos && self.last_neighbour[j] == step).count() as u32;
        }
        total
    }

    /// Cheapest order by exhaustive search for small regions, breadth-first
    /// from f otherwise.
    fn best(region: &Region, f: Site, q: u8) -> Self {
        let sites: Vec<Site> = region.sites().collect();
        let bfs = Order::from_sites(TransferPlan::new(region, f).order, f);
        if sites.len() > 8 {
            return bfs;
        }
        let mut best = (bfs.cost(q), bfs.sites.clone());
        let mut perm = sites.clone();
        permute(&mut perm, 0, &mut |p| {
            let c = Order::from_sites(p.to_vec(), f).cost(q);
            if c < best.0 {
                best = (c, p.to_vec());
            }
        });
        Order::from_sites(best.1, f)
    }
}

fn permute(v: &mut [Site], k: usize, visit: &mut impl FnMut(&[Site])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

/// Transfer sum over the region compiled to index arrays.
struct Compiled {
    q: usize,
    steps: Vec<Vec<Trans>>,
    sizes: Vec<usize>,
    /// Largest possible degree after each step.
    degree: Vec<usize>,
    /// Spin of f (0-based) in each final state.
    final_f: Vec<u8>,
    /// Coefficient slots per polynomial.
    width: usize,
}

impl Compiled {
    fn new(region: &Region, order: &Order, q: u8, width: usize) -> Result<Self> {
        let work = order.cost(q);
        if work > 50_000_000 {
            return Err(Error::SizeLimit { work, cap: 50_000_000 });
        }
        let sites = &order.sites;
        let interior = region.interior_edges();
        let mut active: Vec<usize> = vec![];
        let mut keys: Vec<Vec<Spin>> = vec![vec![]];
        let mut steps = Vec::with_capacity(sites.len());
        let mut sizes = Vec::with_capacity(sites.len());
        let mut degree = Vec::with_capacity(sites.len());
        let mut deg = 0;
        for (step, &u) in sites.iter().enumerate() {
            let back: Vec<usize> = active
                .iter()
                .enumerate()
                .filter_map(|(slot, &j)| {
                    let e = Edge::new(sites[j], u)?;
                    interior.contains(&e).then_some(slot)
                })
                .collect();
            deg += back.len() + u.neighbours().iter().filter(|v| !region.contains(**v)).count();
            degree.push(deg.min(width - 1));
            let mut next_active = active.clone();
            next_active.push(step);
            let keep: Vec<bool> =
                next_active.iter().map(|&j| j == order.f_pos || order.last_neighbour[j] > step).collect();
            let mut index: HashMap<Vec<Spin>, u32> = HashMap::new();
            let mut next_keys: Vec<Vec<Spin>> = Vec::new();
            let mut trans = Vec::with_capacity(keys.len() * q as usize);
            for (from, key) in keys.iter().enumerate() {
                for x in 1..=q {
                    let b = back.iter().filter(|&&slot| key[slot] == x).count() as u8;
                    let nkey: Vec<Spin> = key
                        .iter()
                        .chain(std::iter::once(&x))
                        .zip(&keep)
                        .filter_map(|(k, kp)| kp.then_some(*k))
                        .collect();
                    let to = *index.entry(nkey.clone()).or_insert_with(|| {
                        next_keys.push(nkey);
                        (next_keys.len() - 1) as u32
                    });
                    trans.push(Trans { from: from as u32, to, x: x - 1, back: b });
                }
            }
            active = next_active.into_iter().zip(&keep).filter_map(|(j, k)| k.then_some(j)).collect();
            keys = next_keys;
            sizes.push(keys.len());
            steps.push(trans);
        }
        let slot = active.iter().position(|&j| j == order.f_pos).expect("f stays active");
        let final_f = keys.iter().map(|k| k[slot] - 1).collect();
        Ok(Compiled { q: q as usize, steps, sizes, degree, final_f, width })
    }

    /// Class weight polynomials (coefficient vectors) given per-step boundary
    /// match counts `m[step * q + x]`.
    fn polys(&self, m: &[u8]) -> Vec<Vec<u64>> {
        let w = self.width;
        let mut cur = vec![0u64; w];
        cur[0] = 1;
        let mut live = 1;
        for (step, trans) in self.steps.iter().enumerate() {
            let mut next = vec![0u64; self.sizes[step] * w];
            for t in trans {
                let shift = (t.back + m[step * self.q + t.x as usize]) as usize;
                let len = live.min(w - shift);
                let src = &cur[t.from as usize * w..t.from as usize * w + len];
                let dst = &mut next[t.to as usize * w + shift..t.to as usize * w + shift + len];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += *s;
                }
            }
            cur = next;
            live = self.degree[step] + 1;
        }
        let mut out = vec![vec![0u64; w]; self.q];
        for (state, &x) in self.final_f.iter().enumerate() {
            for (d, s) in out[x as usize].iter_mut().zip(&cur[state * w..state * w + w]) {
                *d += *s;
            }
        }
        out
    }

    /// Proper-colouring counts per spin of f (the λ = 0 constant terms).
    fn counts(&self, m: &[u8]) -> Vec<u64> {
        let mut cur = vec![1u64];
        for (step, trans) in self.steps.iter().enumerate() {
            let mut next = vec![0u64; self.sizes[step]];
            for t in trans {
                if t.back == 0 && m[step * self.q + t.x as usize] == 0 {
                    next[t.to as usize] += cur[t.from as usize];
                }
            }
            cur = next;
        }
        let mut out = vec![0u64; self.q];
        for (state, &x) in self.final_f.iter().enumerate() {
            out[x as usize] += cur[state];
        }
        out
    }
}

/// A slot assignment with the spins on s; expands to a [`BoundaryPair`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub at_s: (Spin, Spin),
    pub vals: Vec<Spin>,
}

/// Class weights `(c_i, c)` behind one μ function, divided by their common
/// content, stored as `[len(c_i), c_i.., c..]` with trailing zeros trimmed.
/// Equal values give equal reduced μ functions and vice versa.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightPair(Box<[u32]>);

impl WeightPair {
    pub fn new(ci: &[u64], rest: &[u64]) -> Self {
        let trim = |v: &[u64]| v.len() - v.iter().rev().take_while(|c| **c == 0).count();
        let (ci, rest) = (&ci[..trim(ci)], &rest[..trim(rest)]);
        let g = ci.iter().chain(rest).fold(0u64, |g, &c| num_integer::gcd(g, c)).max(1);
        let mut v = Vec::with_capacity(1 + ci.len() + rest.len());
        v.push(ci.len() as u32);
        v.extend(ci.iter().chain(rest).map(|&c| u32::try_from(c / g).expect("weights fit in 32 bits")));
        WeightPair(v.into_boxed_slice())
    }

    pub fn ci(&self) -> &[u32] {
        &self.0[1..1 + self.0[0] as usize]
    }

    pub fn rest(&self) -> &[u32] {
        &self.0[1 + self.0[0] as usize..]
    }

    /// Coefficients of `(1−λ)c_i` and `(1+λ)c_i + c`.
    pub fn mu_coeffs(&self) -> (Vec<i64>, Vec<i64>) {
        let (ci, rest) = (self.ci(), self.rest());
        let len = (ci.len() + 1).max(rest.len());
        let mut num = vec![0i64; len];
        let mut den = vec![0i64; len];
        for (k, &c) in ci.iter().enumerate() {
            num[k] += c as i64;
            num[k + 1] -= c as i64;
            den[k] += c as i64;
            den[k + 1] += c as i64;
        }
        for (k, &c) in rest.iter().enumerate() {
            den[k] += c as i64;
        }
        (num, den)
    }

    pub fn func(&self) -> RationalFunc {
        let up = |v: &[u32]| IntPoly::new(v.iter().map(|&c| BigInt::from(c)).collect());
        mu_func_from_weights(&up(self.ci()), &up(self.rest()))
    }
}

/// One distinct μ function with the number of canonical pairs producing it
/// and the first such pair.
#[derive(Clone, Debug)]
pub struct FuncEntry {
    pub weights: WeightPair,
    pub pairs: u64,
    pub witness: Assignment,
}

pub struct PairEngine {
    pub skeleton: PairSkeleton,
    pub q: u8,
    compiled: Compiled,
    /// Per slot, the transfer steps (with multiplicity) of its edges.
    slot_steps: Vec<Vec<usize>>,
    nsteps: usize,
}

/// Depth of the slot prefix used to split work into branches.
const SPLIT_DEPTH: usize = 3;

impl PairEngine {
    pub fn new(region: &Region, s: Edge, q: u8) -> Result<Self> {
        if !(2..=crate::lattice::MAX_Q).contains(&q) {
            return Err(invalid(format!("q must be in 2..={}", crate::lattice::MAX_Q)));
        }
        let skeleton = PairSkeleton::new(region, s)?;
        let f = skeleton.f();
        let order = Order::best(region, f, q);
        let pos: HashMap<Site, usize> = order.sites.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let n = order.sites.len();
        if n * q as usize * 3 > 256 || n * 3 > 63 {
            return Err(invalid("region too large for the profile key"));
        }
        let width = region.interior_edges().len() + skeleton.edges.len() + 1;
        let compiled = Compiled::new(region, &order, q, width)?;
        let slot_steps = skeleton
            .slots
            .iter()
            .map(|slot| {
                slot.edges
                    .iter()
                    .map(|&i| {
                        let e = skeleton.edges[i];
                        let inside = if region.contains(e.a()) { e.a() } else { e.b() };
                        pos[&inside]
                    })
                    .collect()
            })
            .collect();
        Ok(PairEngine { skeleton, q, compiled, slot_steps, nsteps: n })
    }

    pub fn pair(&self, w: &Assignment) -> BoundaryPair {
        self.skeleton.pair(self.q, w.at_s, &w.vals)
    }

    fn profile(&self, vals: &[Spin], m: &mut [u8]) {
        m.iter_mut().for_each(|x| *x = 0);
        let q = self.q as usize;
        for (slot, &v) in vals.iter().enumerate() {
            if v > 0 {
                for &step in &self.slot_steps[slot] {
                    m[step * q + v as usize - 1] += 1;
                }
            }
        }
    }

    /// Packs a profile into a key that is invariant under the colour
    /// permutations preserving the class weights: any permutation of the
    /// colours off s, and the swap of the two colours on s.
    fn key(&self, m: &[u8], sets_only: bool) -> Key {
        let q = self.q as usize;
        let bits = if sets_only { 1 } else { 3 };
        let mut cols = [0u64; crate::lattice::MAX_Q as usize];
        for (step, row) in m.chunks(q).enumerate() {
            for (x, &c) in row.iter().enumerate() {
                let c = if sets_only { (c > 0) as u64 } else { c as u64 };
                cols[x] |= c << (step * bits);
            }
        }
        let cols = &mut cols[..q];
        cols[2..].sort_unstable();
        if cols[1] < cols[0] {
            cols.swap(0, 1);
        }
        let width = self.nsteps * bits;
        let mut k = [0u64; 4];
        for (x, &c) in cols.iter().enumerate() {
            let b = x * width;
            k[b / 64] |= c << (b % 64);
            if b % 64 + width > 64 {
                k[b / 64 + 1] |= c >> (64 - b % 64);
            }
        }
        k
    }

    /// Runs `work` on every branch of the canonical enumeration and returns
    /// the per-branch results in branch order.
    fn branches<T: Send>(&self, work: impl Fn(&[Spin]) -> T + Sync) -> Vec<T> {
        let prefixes = self.skeleton.canonical_prefixes(self.q, SPLIT_DEPTH);
        prefixes.par_iter().map(|p| work(p)).collect()
    }

    /// Number of canonical boundary pairs.
    pub fn count_pairs(&self) -> u64 {
        self.branches(|prefix| {
            let mut n = 0u64;
            self.skeleton.for_each_canonical_from(self.q, prefix, |_, _| n += 1);
            n
        })
        .into_iter()
        .sum()
    }

    /// Every distinct μ function over the canonical pairs, sorted by weights.
    pub fn distinct_funcs(&self) -> Vec<FuncEntry> {
        let parts = self.branches(|prefix| {
            let mut m = vec![0u8; self.nsteps * self.q as usize];
            let mut profiles: HashMap<Key, (u64, Assignment)> = HashMap::new();
            let mut order: Vec<Key> = Vec::new();
            self.skeleton.for_each_canonical_from(self.q, prefix, |at_s, vals| {
                self.profile(vals, &mut m);
                let k = self.key(&m, false);
                profiles
                    .entry(k)
                    .and_modify(|e| e.0 += 1)
                    .or_insert_with(|| {
                        order.push(k);
                        (1, Assignment { at_s, vals: vals.to_vec() })
                    });
            });
            let mut out: Vec<(WeightPair, u64, Assignment)> = Vec::with_capacity(2 * order.len());
            for k in order {
                let (count, w) = profiles.remove(&k).expect("recorded");
                self.profile(&w.vals, &mut m);
                let polys = self.compiled.polys(&m);
                for wp in self.weight_pairs(&polys, w.at_s) {
                    out.push((wp, count, w.clone()));
                }
            }
            out
        });
        let mut index: HashMap<WeightPair, usize> = HashMap::new();
        let mut entries: Vec<FuncEntry> = Vec::new();
        for (weights, count, witness) in parts.into_iter().flatten() {
            match index.get(&weights) {
                Some(&i) => entries[i].pairs += count,
                None => {
                    index.insert(weights.clone(), entries.len());
                    entries.push(FuncEntry { weights, pairs: count, witness });
                }
            }
        }
        drop(index);
        entries.par_sort_unstable_by(|x, y| x.weights.cmp(&y.weights));
        entries
    }

    fn weight_pairs(&self, polys: &[Vec<u64>], at_s: (Spin, Spin)) -> [WeightPair; 2] {
        let (a, b) = (at_s.0 as usize - 1, at_s.1 as usize - 1);
        let mut rest = vec![0u64; polys[0].len()];
        for (i, p) in polys.iter().enumerate() {
            if i != a && i != b {
                for (r, c) in rest.iter_mut().zip(p) {
                    *r += c;
                }
            }
        }
        [WeightPair::new(&polys[a], &rest), WeightPair::new(&polys[b], &rest)]
    }

    fn funcs_from(&self, polys: &[Vec<u64>], at_s: (Spin, Spin)) -> [RationalFunc; 2] {
        let [x, y] = self.weight_pairs(polys, at_s);
        [x.func(), y.func()]
    }

    /// Exact max of μ at λ = 0 (the λ → 0⁺ limit) with a maximizing pair.
    pub fn max_mu_at_zero(&self) -> (Rat, Assignment) {
        let zero = Rat::from_integer(BigInt::from(0));
        let parts = self.branches(|prefix| {
            let mut m = vec![0u8; self.nsteps * self.q as usize];
            let mut seen: HashMap<Key, ()> = HashMap::new();
            let mut best: Option<(Rat, Assignment)> = None;
            self.skeleton.for_each_canonical_from(self.q, prefix, |at_s, vals| {
                self.profile(vals, &mut m);
                if seen.insert(self.key(&m, true), ()).is_some() {
                    return;
                }
                let c = self.compiled.counts(&m);
                let (a, b) = (at_s.0 as usize - 1, at_s.1 as usize - 1);
                let rest: u64 = c.iter().enumerate().filter(|(i, _)| *i != a && *i != b).map(|(_, v)| v).sum();
                let val = if c[a] + rest == 0 || c[b] + rest == 0 {
                    // no proper colouring: fall back to the polynomial limit
                    let polys = self.compiled.polys(&m);
                    let fs = self.funcs_from(&polys, at_s);
                    let v0 = fs[0].eval(&zero).unwrap_or_else(|| zero.clone());
                    let v1 = fs[1].eval(&zero).unwrap_or_else(|| zero.clone());
                    v0.max(v1)
                } else {
                    let ca = Rat::new(c[a].into(), (c[a] + rest).into());
                    let cb = Rat::new(c[b].into(), (c[b] + rest).into());
                    ca.max(cb)
                };
                if best.as_ref().is_none_or(|(bv, _)| val > *bv) {
                    best = Some((val, Assignment { at_s, vals: vals.to_vec() }));
                }
            });
            best
        });
        parts
            .into_iter()
            .flatten()
            .fold(None::<(Rat, Assignment)>, |acc, (v, w)| match acc {
                Some((bv, bw)) if bv >= v => Some((bv, bw)),
                _ => Some((v, w)),
            })
            .expect("at least one boundary pair")
    }

    /// Exact max of μ at λ with a maximizing pair.
    pub fn max_mu_at(&self, lambda: &Rat) -> Result<(Rat, Assignment)> {
        if *lambda < Rat::from_integer(0.into()) || *lambda > Rat::from_integer(1.into()) {
            return Err(invalid(format!("λ = {lambda} outside [0, 1]")));
        }
        if *lambda == Rat::from_integer(0.into()) {
            return Ok(self.max_mu_at_zero());
        }
        let x = crate::rational::to_f64(lambda);
        let entries = self.distinct_funcs();
        let approx: Vec<f64> = entries
            .par_iter()
            .map(|e| {
                let (num, den) = e.weights.mu_coeffs();
                horner(&num, x) / horner(&den, x)
            })
            .collect();
        let top = approx.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut best: Option<(Rat, Assignment)> = None;
        for (e, a) in entries.iter().zip(&approx) {
            if *a < top - 1e-9 * (1.0 + top.abs()) {
                continue;
            }
            let v = e.weights.func().eval(lambda).ok_or_else(|| invalid("μ undefined"))?;
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, e.witness.clone()));
            }
        }
        best.ok_or_else(|| invalid("no boundary pairs"))
    }
}

pub(crate) fn horner(c: &[i64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k as f64)
}
