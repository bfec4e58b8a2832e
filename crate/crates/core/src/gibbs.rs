//! Exact Gibbs weights on small regions.
//!
//! Every weight is kept as an [`IntPoly`] in λ: the coefficient of `λ^k`
//! counts configurations with exactly `k` monochromatic edges. Sums run
//! through a frontier transfer over the sites, so the cost is governed by the
//! width of the frontier rather than by `q^|R|`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::lattice::{BoundaryConfig, BoundaryPair, Edge, Region, Site, Spin};
use crate::poly::IntPoly;
use crate::rational::Rat;

/// Spin assignment on every site of a region.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    pub spins: BTreeMap<Site, Spin>,
}

impl SpinConfig {
    pub fn get(&self, v: Site) -> Spin {
        self.spins.get(&v).copied().unwrap_or(0)
    }
}

/// Guard on the amount of work an exact sum may do.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Weighted-operation cap (states × spins summed over transfer steps).
    pub cap: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { cap: 100_000_000 }
    }
}

/// Class weights `c_1..c_q` of a boundary pair, together with the spins on s
/// and `c = Σ_{i∉C} c_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassWeights {
    pub c: Vec<IntPoly>,
    pub pair: (Spin, Spin),
    pub rest: IntPoly,
}

impl ClassWeights {
    /// Weight of spin `i` (1-based).
    pub fn of(&self, i: Spin) -> &IntPoly {
        &self.c[i as usize - 1]
    }
}

/// Number of monochromatic edges of `sigma` among `edges`. Edges with both
/// endpoints assigned compare the two spins; edges with one assigned endpoint
/// compare against the boundary spin, and free edges never match.
pub fn mon_count(sigma: &SpinConfig, edges: &BTreeSet<Edge>, b: &BoundaryConfig) -> usize {
    edges
        .iter()
        .filter(|e| {
            let (sa, sb) = (sigma.spins.get(&e.a()), sigma.spins.get(&e.b()));
            match (sa, sb) {
                (Some(x), Some(y)) => x == y,
                (Some(x), None) | (None, Some(x)) => {
                    let bs = b.get(e);
                    bs != 0 && bs == *x
                }
                (None, None) => false,
            }
        })
        .count()
}

/// Weight polynomial of each spin at `target`: entry `x-1` is the sum over
/// configurations with `σ(target) = x` of `λ^{mon}` over `E(R)` minus
/// `excluded`.
pub fn spin_polys(
    region: &Region,
    b: &BoundaryConfig,
    q: u8,
    target: Site,
    excluded: Option<Edge>,
    limits: Limits,
) -> Result<Vec<IntPoly>> {
    if !region.contains(target) {
        return Err(invalid(format!("site {target} is not in the region")));
    }
    let plan = TransferPlan::new(region, target);
    let work = plan.work(q);
    if work > limits.cap {
        return Err(Error::SizeLimit { work, cap: limits.cap });
    }
    let sites = &plan.order;
    let pos: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = sites.len();
    let qs = q as usize;

    // boundary matches per site and spin
    let mut bmatch = vec![vec![0usize; qs + 1]; n];
    for e in region.boundary_edges() {
        if Some(e) == excluded {
            continue;
        }
        let inside = if region.contains(e.a()) { e.a() } else { e.b() };
        let spin = b.get(&e);
        if spin != 0 && spin <= q {
            bmatch[pos[&inside]][spin as usize] += 1;
        }
    }
    let interior: BTreeSet<Edge> = region.interior_edges();

    // state key: spins of the active sites, in `active` order
    let mut active: Vec<usize> = vec![];
    let mut table: HashMap<Vec<Spin>, Vec<u128>> = HashMap::from([(vec![], vec![1u128])]);
    for (step, &u) in sites.iter().enumerate() {
        let back: Vec<(usize, usize)> = active
            .iter()
            .enumerate()
            .filter_map(|(slot, &j)| {
                let e = Edge::new(sites[j], u)?;
                (interior.contains(&e) && Some(e) != excluded).then_some((slot, j))
            })
            .collect();
        let mut next_active = active.clone();
        next_active.push(step);
        let keep: Vec<bool> = next_active
            .iter()
            .map(|&j| j == 0 || plan.last_neighbour[j] > step)
            .collect();
        let mut next: HashMap<Vec<Spin>, Vec<u128>> = HashMap::with_capacity(table.len() * qs);
        for (key, poly) in &table {
            for x in 1..=q {
                let shift = bmatch[step][x as usize] + back.iter().filter(|(slot, _)| key[*slot] == x).count();
                let mut nkey: Vec<Spin> = Vec::with_capacity(key.len() + 1);
                for (slot, &k) in key.iter().chain(std::iter::once(&x)).enumerate() {
                    if keep[slot] {
                        nkey.push(k);
                    }
                }
                let dst = next.entry(nkey).or_default();
                if dst.len() < poly.len() + shift {
                    dst.resize(poly.len() + shift, 0);
                }
                for (k, c) in poly.iter().enumerate() {
                    dst[k + shift] += c;
                }
            }
        }
        active = next_active.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(j, _)| j).collect();
        table = next;
    }
    let mut out = vec![IntPoly::zero(); qs];
    for (key, poly) in table {
        let x = key[0] as usize;
        let p = IntPoly::new(poly.into_iter().map(num_bigint::BigInt::from).collect());
        out[x - 1] = &out[x - 1] + &p;
    }
    Ok(out)
}

/// Site order and frontier bookkeeping for the transfer sum.
pub(crate) struct TransferPlan {
    pub(crate) order: Vec<Site>,
    /// For each position, the last position of a region neighbour (or itself).
    pub(crate) last_neighbour: Vec<usize>,
}

impl TransferPlan {
    pub(crate) fn new(region: &Region, target: Site) -> Self {
        // breadth-first from the target, then any other components
        let mut order = vec![target];
        let mut seen: BTreeSet<Site> = BTreeSet::from([target]);
        let mut head = 0;
        loop {
            while head < order.len() {
                let v = order[head];
                head += 1;
                for u in v.neighbours() {
                    if region.contains(u) && seen.insert(u) {
                        order.push(u);
                    }
                }
            }
            match region.sites().find(|v| !seen.contains(v)) {
                Some(v) => {
                    seen.insert(v);
                    order.push(v);
                }
                None => break,
            }
        }
        let pos: HashMap<Site, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let last_neighbour = order
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.neighbours()
                    .iter()
                    .filter_map(|u| pos.get(u).copied())
                    .max()
                    .unwrap_or(i)
                    .max(i)
            })
            .collect();
        TransferPlan { order, last_neighbour }
    }

    pub(crate) fn work(&self, q: u8) -> u128 {
        let mut active = 0u32;
        let mut total: u128 = 0;
        for step in 0..self.order.len() {
            total = total.saturating_add((q as u128).saturating_pow(active + 1));
            let retired = (0..step + 1)
                .filter(|&j| j != 0 && self.last_neighbour[j] == step)
                .count() as u32;
            active = active + 1 - retired.min(active + 1);
        }
        total
    }
}

/// Partition function of `region` under `b` as a polynomial in λ.
pub fn partition_poly(region: &Region, b: &BoundaryConfig, q: u8, excluded: Option<Edge>, limits: Limits) -> Result<IntPoly> {
    let first = region.sites().next().ok_or_else(|| invalid("empty region"))?;
    Ok(spin_polys(region, b, q, first, excluded, limits)?.into_iter().sum())
}

/// Class weights of a boundary pair (computed with `B_X`, ignoring `s`).
pub fn class_weights(x: &BoundaryPair) -> Result<ClassWeights> {
    class_weights_with(x, Limits::default())
}

pub fn class_weights_with(x: &BoundaryPair, limits: Limits) -> Result<ClassWeights> {
    let c = spin_polys(&x.region, &x.b, x.q, x.f(), Some(x.s), limits)?;
    let pair = x.spins_at_s();
    let rest = c
        .iter()
        .enumerate()
        .filter(|(i, _)| *i + 1 != pair.0 as usize && *i + 1 != pair.1 as usize)
        .map(|(_, p)| p.clone())
        .sum();
    Ok(ClassWeights { c, pair, rest })
}

/// Nonnegative integers proportional to the weights at λ.
///
/// At λ = 0 the constant terms are used; if they all vanish the lowest power
/// present in any weight is factored out first, which is the λ → 0⁺ limit.
pub fn weights_at(weights: &[IntPoly], lambda: &Rat) -> Result<Vec<BigInt>> {
    let vals: Vec<BigInt> = if lambda.is_zero() {
        let k = weights
            .iter()
            .filter_map(IntPoly::valuation)
            .min()
            .ok_or_else(|| invalid("all weights vanish"))?;
        weights.iter().map(|p| p.coeff(k)).collect()
    } else {
        let deg = weights.iter().filter_map(IntPoly::degree).max().unwrap_or(0);
        let (n, d) = (lambda.numer(), lambda.denom());
        weights.iter().map(|p| p.eval_homogeneous(n, d, deg)).collect()
    };
    if vals.iter().all(Zero::is_zero) {
        return Err(invalid("total weight is zero"));
    }
    Ok(vals)
}

/// Normalizes nonnegative weight polynomials into a distribution at λ.
pub fn distribution_at(weights: &[IntPoly], lambda: &Rat) -> Result<Vec<Rat>> {
    let vals = weights_at(weights, lambda)?;
    let total: BigInt = vals.iter().sum();
    Ok(vals.into_iter().map(|v| Rat::new(v, total.clone())).collect())
}

/// Exact law of the spin at `v` under π_B with every edge of E(R) counted.
pub fn marginal_at(region: &Region, b: &BoundaryConfig, q: u8, v: Site, lambda: &Rat) -> Result<Vec<Rat>> {
    if lambda.is_zero() || *lambda > Rat::one() || *lambda < Rat::zero() {
        return Err(invalid("marginal_at needs λ in (0, 1]"));
    }
    let polys = spin_polys(region, b, q, v, None, Limits::default())?;
    distribution_at(&polys, lambda)
}

/// Unnormalized f_X marginals under `B_X` and `B'_X` (s counted).
pub fn pair_marginal_weights(x: &BoundaryPair, lambda: &Rat) -> Result<(Vec<BigInt>, Vec<BigInt>)> {
    let cw = class_weights(x)?;
    let with_s = |spin: Spin| -> Vec<IntPoly> {
        cw.c
            .iter()
            .enumerate()
            .map(|(i, p)| if i + 1 == spin as usize { p * &IntPoly::monomial(1, 1) } else { p.clone() })
            .collect()
    };
    let (bs, bps) = cw.pair;
    Ok((weights_at(&with_s(bs), lambda)?, weights_at(&with_s(bps), lambda)?))
}

/// The f_X marginals under `B_X` and `B'_X` (s counted), any λ in [0, 1].
pub fn pair_marginals(x: &BoundaryPair, lambda: &Rat) -> Result<(Vec<Rat>, Vec<Rat>)> {
    let (a, b) = pair_marginal_weights(x, lambda)?;
    let norm = |v: Vec<BigInt>| {
        let total: BigInt = v.iter().sum();
        v.into_iter().map(|x| Rat::new(x, total.clone())).collect()
    };
    Ok((norm(a), norm(b)))
}

/// Every configuration of the region in site order with its weight exponent
/// (all of E(R) counted). Intended for tiny regions only.
pub fn joint_weights(region: &Region, b: &BoundaryConfig, q: u8, limits: Limits) -> Result<Vec<(SpinConfig, usize)>> {
    let sites: Vec<Site> = region.sites().collect();
    let total = (q as u128).saturating_pow(sites.len() as u32);
    if total > limits.cap {
        return Err(Error::SizeLimit { work: total, cap: limits.cap });
    }
    let edges = region.edge_set();
    let mut out = Vec::with_capacity(total as usize);
    let mut spins = vec![1u8; sites.len()];
    loop {
        let sigma = SpinConfig { spins: sites.iter().copied().zip(spins.iter().copied()).collect() };
        let m = mon_count(&sigma, &edges, b);
        out.push((sigma, m));
        let mut i = 0;
        loop {
            if i == spins.len() {
                return Ok(out);
            }
            if spins[i] < q {
                spins[i] += 1;
                break;
            }
            spins[i] = 1;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn origin() -> Region {
        Region::new([Site::new(0, 0)])
    }

    fn e(a: (i32, i32), b: (i32, i32)) -> Edge {
        Edge::new(Site::new(a.0, a.1), Site::new(b.0, b.1)).unwrap()
    }

    fn single_site_boundary(spins: [Spin; 4]) -> BoundaryConfig {
        // left, up, right, down
        BoundaryConfig::new(BTreeMap::from([
            (e((0, 0), (-1, 0)), spins[0]),
            (e((0, 0), (0, 1)), spins[1]),
            (e((0, 0), (1, 0)), spins[2]),
            (e((0, 0), (0, -1)), spins[3]),
        ]))
    }

    /// Brute-force weights for the oracle comparisons.
    fn brute_spin_polys(region: &Region, b: &BoundaryConfig, q: u8, target: Site, excluded: Option<Edge>) -> Vec<IntPoly> {
        let mut edges = region.edge_set();
        if let Some(x) = excluded {
            edges.remove(&x);
        }
        let mut counts = vec![vec![0u64; 64]; q as usize];
        for (sigma, _) in joint_weights(region, b, q, Limits::default()).unwrap() {
            let m = mon_count(&sigma, &edges, b);
            counts[sigma.get(target) as usize - 1][m] += 1;
        }
        counts.iter().map(|c| IntPoly::from_u64(c)).collect()
    }

    #[test]
    fn mon_count_cases() {
        let two = Region::new([Site::new(0, 0), Site::new(0, 1)]);
        let sigma = SpinConfig { spins: BTreeMap::from([(Site::new(0, 0), 1), (Site::new(0, 1), 1)]) };
        let interior = two.interior_edges();
        assert_eq!(mon_count(&sigma, &interior, &BoundaryConfig::free(&two)), 1);

        let single = SpinConfig { spins: BTreeMap::from([(Site::new(0, 0), 2)]) };
        let b = single_site_boundary([1, 2, 2, 0]);
        assert_eq!(mon_count(&single, &origin().edge_set(), &b), 2);
        let free = single_site_boundary([0, 0, 0, 0]);
        assert_eq!(mon_count(&single, &origin().edge_set(), &free), 0);
    }

    #[test]
    fn single_site_partition() {
        let b = single_site_boundary([1, 2, 0, 0]);
        assert_eq!(partition_poly(&origin(), &b, 2, None, Limits::default()).unwrap(), IntPoly::from_i64(&[0, 2]));
        let free = single_site_boundary([0; 4]);
        assert_eq!(partition_poly(&origin(), &free, 5, None, Limits::default()).unwrap(), IntPoly::constant(5));
    }

    #[test]
    fn class_weights_examples() {
        let s = e((0, 0), (0, -1));
        let others = BTreeMap::from([(e((0, 0), (-1, 0)), 3), (e((0, 0), (0, 1)), 4), (e((0, 0), (1, 0)), 5)]);
        let x = BoundaryPair::from_spins(origin(), s, 6, (1, 2), &others);
        let cw = class_weights(&x).unwrap();
        let l = IntPoly::monomial(1, 1);
        let one = IntPoly::constant(1);
        assert_eq!(cw.c, vec![one.clone(), one.clone(), l.clone(), l.clone(), l, one]);
        assert_eq!(cw.rest, IntPoly::from_i64(&[1, 3]));

        let others = BTreeMap::from([(e((0, 0), (-1, 0)), 1), (e((0, 0), (0, 1)), 2), (e((0, 0), (1, 0)), 2)]);
        let x = BoundaryPair::from_spins(origin(), s, 6, (1, 2), &others);
        let cw = class_weights(&x).unwrap();
        assert_eq!(cw.of(1), &IntPoly::monomial(1, 1));
        assert_eq!(cw.of(2), &IntPoly::monomial(1, 2));
        for i in 3..=6 {
            assert_eq!(cw.of(i), &IntPoly::constant(1));
        }
    }

    #[test]
    fn transfer_matches_brute_force() {
        let shapes: Vec<Vec<(i32, i32)>> = vec![
            vec![(0, 0), (0, 1)],
            vec![(0, 0), (1, 0), (0, 1), (1, 1)],
            vec![(0, 0), (-1, 0), (1, 0), (0, 1), (0, 2)],
            vec![(0, 0), (2, 0), (0, 1)],
            vec![(0, 0), (1, 0), (1, 1), (0, 1), (-1, 1)],
        ];
        for (k, shape) in shapes.iter().enumerate() {
            let region = Region::new(shape.iter().map(|&(x, y)| Site::new(x, y)));
            let mut b = BoundaryConfig::default();
            for (i, edge) in region.boundary_edges().into_iter().enumerate() {
                b.set(edge, ((i * 7 + k) % 4) as Spin);
            }
            let s = e((0, 0), (0, -1));
            for q in [2u8, 3] {
                let fast = spin_polys(&region, &b, q, Site::new(0, 0), Some(s), Limits::default()).unwrap();
                let slow = brute_spin_polys(&region, &b, q, Site::new(0, 0), Some(s));
                assert_eq!(fast, slow, "shape {k} q {q}");
                let z = partition_poly(&region, &b, q, None, Limits::default()).unwrap();
                assert_eq!(z.eval(&int(1)), int((q as i64).pow(region.len() as u32)));
                assert!(z.all_nonnegative());
                assert!(z.degree().unwrap() <= region.edge_set().len());
            }
        }
    }

    #[test]
    fn marginals() {
        let b = single_site_boundary([1, 2, 0, 0]);
        let m = marginal_at(&origin(), &b, 2, Site::new(0, 0), &rat(1, 2)).unwrap();
        assert_eq!(m, vec![rat(1, 2), rat(1, 2)]);
        let b = single_site_boundary([2, 2, 0, 0]);
        let m = marginal_at(&origin(), &b, 2, Site::new(0, 0), &rat(1, 2)).unwrap();
        assert_eq!(m, vec![rat(4, 5), rat(1, 5)]);
        let m = marginal_at(&origin(), &b, 3, Site::new(0, 0), &int(1)).unwrap();
        assert_eq!(m, vec![rat(1, 3); 3]);
        assert!(marginal_at(&origin(), &b, 3, Site::new(0, 0), &int(0)).is_err());
    }

    #[test]
    fn zero_temperature_limit() {
        // every spin is blocked once: the λ → 0⁺ law is uniform on the lowest power
        let b = single_site_boundary([1, 2, 0, 0]);
        let polys = spin_polys(&origin(), &b, 2, Site::new(0, 0), None, Limits::default()).unwrap();
        assert_eq!(distribution_at(&polys, &int(0)).unwrap(), vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn size_limit_guard() {
        let region = Region::new((0..6).flat_map(|x| (0..6).map(move |y| Site::new(x, y))));
        let b = BoundaryConfig::free(&region);
        let err = spin_polys(&region, &b, 6, Site::new(0, 0), None, Limits { cap: 1000 }).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
    }
}
