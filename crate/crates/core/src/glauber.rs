//! Heat-bath Glauber dynamics with a fixed vertex boundary.
//!
//! Heat-bath probabilities are exact rationals; sampling inverts a uniform
//! 64-bit draw through cumulative thresholds rounded down to multiples of
//! 2⁻⁶⁴, which is the only inexact step anywhere in this crate.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gibbs::{joint_weights, Limits, SpinConfig};
use crate::lattice::{BoundaryConfig, Region, Site, Spin, MAX_Q};
use crate::rational::{to_f64, Rat};

/// Largest state space the exact comparisons will enumerate.
pub const MAX_STATES: u128 = 10_000;

/// Spins on the outer vertex boundary of a region; 0 is free.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexBoundary {
    pub spins: BTreeMap<Site, Spin>,
}

impl VertexBoundary {
    pub fn new(region: &Region, spins: BTreeMap<Site, Spin>, q: u8) -> Result<Self> {
        let domain = region.vertex_boundary();
        if spins.keys().copied().collect::<std::collections::BTreeSet<_>>() != domain {
            return Err(invalid("vertex boundary must assign exactly the outer boundary sites"));
        }
        if let Some((v, s)) = spins.iter().find(|(_, &s)| s > q) {
            return Err(invalid(format!("spin {s} at ({}, {}) exceeds q = {q}", v.x, v.y)));
        }
        Ok(VertexBoundary { spins })
    }

    pub fn constant(region: &Region, spin: Spin) -> Self {
        VertexBoundary { spins: region.vertex_boundary().into_iter().map(|v| (v, spin)).collect() }
    }

    pub fn get(&self, v: Site) -> Spin {
        self.spins.get(&v).copied().unwrap_or(0)
    }

    /// Copy with the spin at `v` replaced.
    pub fn with(&self, v: Site, spin: Spin) -> Self {
        let mut out = self.clone();
        out.spins.insert(v, spin);
        out
    }

    /// Each edge from a boundary site into the region carries that site's spin.
    pub fn to_edge_boundary(&self, region: &Region) -> BoundaryConfig {
        let mut b = BoundaryConfig::default();
        for e in region.boundary_edges() {
            let outside = if region.contains(e.a()) { e.b() } else { e.a() };
            b.set(e, self.get(outside));
        }
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainState {
    pub spins: Vec<Spin>,
    pub step: u64,
}

/// Exact heat-bath law `λ^{n_i} / Σ_k λ^{n_k}` from neighbour counts.
pub fn heat_bath_exact(counts: &[u8], lambda: &Rat) -> Vec<Rat> {
    let w: Vec<Rat> = counts.iter().map(|&n| num_traits::pow(lambda.clone(), n as usize)).collect();
    let total: Rat = w.iter().sum();
    w.into_iter().map(|x| x / &total).collect()
}

/// Cumulative thresholds `floor(2^64 · Σ_{k≤i} p_k)` for `i < q − 1`.
fn thresholds(counts: &[u8], lambda: &Rat) -> Vec<u64> {
    let p = heat_bath_exact(counts, lambda);
    let scale = BigInt::from(1u128 << 64);
    let mut acc = Rat::zero();
    let mut out = Vec::with_capacity(p.len().saturating_sub(1));
    for pi in &p[..p.len() - 1] {
        acc += pi;
        let t = (&acc * Rat::from_integer(scale.clone())).floor().to_integer();
        out.push(t.to_u64().unwrap_or(u64::MAX));
    }
    out
}

/// A region, boundary and λ compiled for fast single-site updates.
#[derive(Clone, Debug)]
pub struct HeatBath {
    pub q: u8,
    pub lambda: Rat,
    pub sites: Vec<Site>,
    /// Per site: neighbour indices inside the region, and boundary spins.
    inner: Vec<Vec<usize>>,
    outer: Vec<Vec<Spin>>,
    cache: HashMap<u64, Vec<u64>>,
}

impl HeatBath {
    pub fn new(region: &Region, boundary: &VertexBoundary, q: u8, lambda: &Rat) -> Result<Self> {
        if !(2..=MAX_Q).contains(&q) {
            return Err(invalid(format!("q must be in 2..={MAX_Q}")));
        }
        if !lambda.is_positive() || *lambda > Rat::one() {
            return Err(invalid("dynamics need λ in (0, 1]"));
        }
        if region.is_empty() {
            return Err(invalid("empty region"));
        }
        let sites: Vec<Site> = region.sites().collect();
        let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut inner = Vec::with_capacity(sites.len());
        let mut outer = Vec::with_capacity(sites.len());
        for v in &sites {
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for u in v.neighbours() {
                match index.get(&u) {
                    Some(&j) => ins.push(j),
                    None => outs.push(boundary.get(u)),
                }
            }
            inner.push(ins);
            outer.push(outs);
        }
        Ok(HeatBath { q, lambda: lambda.clone(), sites, inner, outer, cache: HashMap::new() })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn counts(&self, spins: &[Spin], i: usize) -> Vec<u8> {
        let mut n = vec![0u8; self.q as usize];
        for &j in &self.inner[i] {
            n[spins[j] as usize - 1] += 1;
        }
        for &b in &self.outer[i] {
            if b > 0 {
                n[b as usize - 1] += 1;
            }
        }
        n
    }

    /// Spin chosen at site `i` for the uniform draw `r`.
    pub fn resample(&mut self, spins: &[Spin], i: usize, r: u64) -> Spin {
        let n = self.counts(spins, i);
        let key = n.iter().fold(0u64, |k, &c| (k << 3) | c as u64);
        let lambda = &self.lambda;
        let t = self.cache.entry(key).or_insert_with(|| thresholds(&n, lambda));
        (t.iter().position(|&ti| r < ti).unwrap_or(t.len()) + 1) as Spin
    }

    pub fn initial(&self, spin: Spin) -> ChainState {
        ChainState { spins: vec![spin; self.len()], step: 0 }
    }

    pub fn config(&self, state: &ChainState) -> SpinConfig {
        SpinConfig { spins: self.sites.iter().copied().zip(state.spins.iter().copied()).collect() }
    }

    /// Index of a state in base q over the site order.
    pub fn state_index(&self, spins: &[Spin]) -> usize {
        spins.iter().rev().fold(0usize, |acc, &s| acc * self.q as usize + (s as usize - 1))
    }
}

/// Seeded generator for stream `stream` of a master seed.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One heat-bath update: uniform site, then a new spin from its conditional law.
pub fn glauber_step(hb: &mut HeatBath, state: &mut ChainState, rng: &mut impl RngCore) {
    let i = (rng.next_u64() % hb.len() as u64) as usize;
    let r = rng.next_u64();
    state.spins[i] = hb.resample(&state.spins, i, r);
    state.step += 1;
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationarityReport {
    pub steps: u64,
    pub samples: u64,
    pub states: usize,
    pub tv: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RunParams {
    pub steps: u64,
    pub sample_every: u64,
    pub burn_in: u64,
    pub seed: u64,
}

/// Exact Gibbs law over states in [`HeatBath::state_index`] order.
pub fn exact_joint(region: &Region, boundary: &VertexBoundary, q: u8, lambda: &Rat) -> Result<Vec<Rat>> {
    let total = (q as u128).saturating_pow(region.len() as u32);
    if total > MAX_STATES {
        return Err(Error::SizeLimit { work: total, cap: MAX_STATES });
    }
    let b = boundary.to_edge_boundary(region);
    let all = joint_weights(region, &b, q, Limits::default())?;
    let w: Vec<Rat> = all.iter().map(|(_, m)| num_traits::pow(lambda.clone(), *m)).collect();
    let z: Rat = w.iter().sum();
    Ok(w.into_iter().map(|x| x / &z).collect())
}

/// Runs one chain and compares its spaced samples with the exact law.
pub fn stationarity_test(
    region: &Region,
    boundary: &VertexBoundary,
    q: u8,
    lambda: &Rat,
    params: RunParams,
) -> Result<StationarityReport> {
    if params.sample_every == 0 {
        return Err(invalid("sampling interval must be positive"));
    }
    let exact = exact_joint(region, boundary, q, lambda)?;
    let mut hb = HeatBath::new(region, boundary, q, lambda)?;
    let mut rng = chain_rng(params.seed, 0);
    let mut state = hb.initial(1);
    for _ in 0..params.burn_in {
        glauber_step(&mut hb, &mut state, &mut rng);
    }
    let mut hist = vec![0u64; exact.len()];
    let mut samples = 0u64;
    for t in 1..=params.steps {
        glauber_step(&mut hb, &mut state, &mut rng);
        if t % params.sample_every == 0 {
            hist[hb.state_index(&state.spins)] += 1;
            samples += 1;
        }
    }
    let tv = 0.5
        * exact
            .iter()
            .zip(&hist)
            .map(|(p, &h)| (to_f64(p) - h as f64 / samples.max(1) as f64).abs())
            .sum::<f64>();
    Ok(StationarityReport { steps: params.steps, samples, states: exact.len(), tv })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayRow {
    pub step: u64,
    pub site: Site,
    pub rate: f64,
}

/// Two chains under the identity coupling, one per boundary; per-site
/// disagreement frequencies after burn-in, reported every `sample_every` steps.
pub fn disagreement_decay(
    region: &Region,
    b: &VertexBoundary,
    bp: &VertexBoundary,
    q: u8,
    lambda: &Rat,
    params: RunParams,
) -> Result<Vec<DecayRow>> {
    if params.sample_every == 0 {
        return Err(invalid("reporting interval must be positive"));
    }
    let mut h1 = HeatBath::new(region, b, q, lambda)?;
    let mut h2 = HeatBath::new(region, bp, q, lambda)?;
    let mut s1 = h1.initial(1);
    let mut s2 = h2.initial(1);
    let mut rng = chain_rng(params.seed, 0);
    let n = h1.len();
    let mut disagree = vec![0u64; n];
    let mut rows = Vec::new();
    for t in 1..=params.burn_in + params.steps {
        let i = (rng.next_u64() % n as u64) as usize;
        let r = rng.next_u64();
        s1.spins[i] = h1.resample(&s1.spins, i, r);
        s2.spins[i] = h2.resample(&s2.spins, i, r);
        if t <= params.burn_in {
            continue;
        }
        for (k, d) in disagree.iter_mut().enumerate() {
            if s1.spins[k] != s2.spins[k] {
                *d += 1;
            }
        }
        let done = t - params.burn_in;
        if done.is_multiple_of(params.sample_every) || done == params.steps {
            for (k, v) in h1.sites.iter().enumerate() {
                rows.push(DecayRow { step: done, site: *v, rate: disagree[k] as f64 / done as f64 });
            }
        }
    }
    Ok(rows)
}

pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("step,site_x,site_y,disagree_rate\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.6}", r.step, r.site.x, r.site.y, r.rate);
    }
    out
}

pub fn tv_csv(report: &StationarityReport) -> String {
    format!("tv_estimate,{:.6}\nsamples,{}\nstates,{}\n", report.tv, report.samples, report.states)
}

/// Rectangle `[x0, x0+w) × [y0, y0+h)`.
pub fn rectangle(x0: i32, y0: i32, w: i32, h: i32) -> Region {
    Region::new((0..w).flat_map(|dx| (0..h).map(move |dy| Site::new(x0 + dx, y0 + dy))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Edge;
    use crate::rational::{int, rat};

    #[test]
    fn kernel_examples() {
        assert_eq!(heat_bath_exact(&[4, 0], &rat(1, 2)), vec![rat(1, 17), rat(16, 17)]);
        assert_eq!(heat_bath_exact(&[3, 1, 0], &int(1)), vec![rat(1, 3); 3]);
        let single = Region::new([Site::new(0, 0)]);
        let hb = HeatBath::new(&single, &VertexBoundary::constant(&single, 0), 4, &rat(1, 3)).unwrap();
        assert_eq!(hb.counts(&[1], 0), vec![0; 4]);
        assert!(HeatBath::new(&single, &VertexBoundary::constant(&single, 0), 4, &int(0)).is_err());
    }

    #[test]
    fn thresholds_are_floors() {
        let t = thresholds(&[4, 0], &rat(1, 2));
        let want = BigInt::from(1u128 << 64) / BigInt::from(17);
        assert_eq!(BigInt::from(t[0]), want);
        assert_eq!(thresholds(&[0, 0], &int(1)), vec![1u64 << 63]);
    }

    #[test]
    fn edge_boundary_conversion() {
        let r = rectangle(0, 0, 2, 1);
        let vb = VertexBoundary::constant(&r, 2).with(Site::new(-1, 0), 3);
        let b = vb.to_edge_boundary(&r);
        assert_eq!(b.iter().count(), 6);
        assert_eq!(b.get(&Edge::new(Site::new(-1, 0), Site::new(0, 0)).unwrap()), 3);
        assert_eq!(b.get(&Edge::new(Site::new(1, 0), Site::new(1, 1)).unwrap()), 2);
        assert!(VertexBoundary::new(&r, BTreeMap::new(), 3).is_err());
    }

    #[test]
    fn single_step_matches_kernel() {
        let r = rectangle(0, 0, 1, 1);
        let vb = VertexBoundary::new(
            &r,
            BTreeMap::from([
                (Site::new(-1, 0), 1),
                (Site::new(1, 0), 1),
                (Site::new(0, 1), 2),
                (Site::new(0, -1), 0),
            ]),
            3,
        )
        .unwrap();
        let lam = rat(1, 3);
        let mut hb = HeatBath::new(&r, &vb, 3, &lam).unwrap();
        let p = heat_bath_exact(&hb.counts(&[1], 0), &lam);
        let mut rng = chain_rng(7, 0);
        let n = 100_000;
        let mut hist = [0u64; 3];
        for _ in 0..n {
            let mut st = hb.initial(1);
            glauber_step(&mut hb, &mut st, &mut rng);
            hist[st.spins[0] as usize - 1] += 1;
        }
        for (pi, h) in p.iter().zip(hist) {
            let pf = to_f64(pi);
            let sigma = (pf * (1.0 - pf) / n as f64).sqrt();
            assert!((h as f64 / n as f64 - pf).abs() <= 3.0 * sigma, "{pf} vs {h}");
        }
    }

    #[test]
    fn reproducible() {
        let r = rectangle(0, 0, 2, 2);
        let vb = VertexBoundary::constant(&r, 1);
        let run = || {
            let mut hb = HeatBath::new(&r, &vb, 3, &rat(1, 2)).unwrap();
            let mut st = hb.initial(1);
            let mut rng = chain_rng(42, 3);
            let mut trace = Vec::new();
            for _ in 0..1000 {
                glauber_step(&mut hb, &mut st, &mut rng);
                trace.push(st.spins.clone());
            }
            trace
        };
        assert_eq!(run(), run());
        let p = RunParams { steps: 5000, sample_every: 1000, burn_in: 0, seed: 9 };
        let vb2 = vb.with(Site::new(-1, 0), 2);
        let a = decay_csv(&disagreement_decay(&r, &vb, &vb2, 3, &rat(1, 2), p).unwrap());
        let b = decay_csv(&disagreement_decay(&r, &vb, &vb2, 3, &rat(1, 2), p).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn detailed_balance() {
        for region in [rectangle(0, 0, 1, 1), rectangle(0, 0, 2, 1)] {
            let vb = VertexBoundary::new(
                &region,
                region.vertex_boundary().into_iter().enumerate().map(|(k, v)| (v, (k % 4) as Spin)).collect(),
                3,
            )
            .unwrap();
            let lam = rat(2, 5);
            let pi = exact_joint(&region, &vb, 3, &lam).unwrap();
            let hb = HeatBath::new(&region, &vb, 3, &lam).unwrap();
            let n = hb.len();
            let states: Vec<Vec<Spin>> = (0..pi.len())
                .map(|mut idx| {
                    (0..n)
                        .map(|_| {
                            let s = (idx % 3) as Spin + 1;
                            idx /= 3;
                            s
                        })
                        .collect()
                })
                .collect();
            let kernel = |a: &[Spin], b: &[Spin]| -> Rat {
                let diff: Vec<usize> = (0..n).filter(|&i| a[i] != b[i]).collect();
                let site_prob = |i: usize| heat_bath_exact(&hb.counts(a, i), &lam)[b[i] as usize - 1].clone();
                match diff.len() {
                    0 => (0..n).map(site_prob).sum::<Rat>() / Rat::from_integer(BigInt::from(n)),
                    1 => site_prob(diff[0]) / Rat::from_integer(BigInt::from(n)),
                    _ => Rat::zero(),
                }
            };
            for (i, a) in states.iter().enumerate() {
                assert_eq!(hb.state_index(a), i);
                for (j, b) in states.iter().enumerate() {
                    assert_eq!(&pi[i] * kernel(a, b), &pi[j] * kernel(b, a));
                }
            }
        }
    }

    #[test]
    fn small_stationarity() {
        let r = rectangle(0, 0, 1, 1);
        let vb = VertexBoundary::constant(&r, 1);
        let p = RunParams { steps: 100_000, sample_every: 1, burn_in: 100, seed: 1 };
        assert!(stationarity_test(&r, &vb, 3, &rat(1, 2), p).unwrap().tv < 0.02);
        let r2 = rectangle(0, 0, 2, 2);
        let free = VertexBoundary::constant(&r2, 0);
        let p = RunParams { steps: 200_000, sample_every: 10, burn_in: 100, seed: 2 };
        let rep = stationarity_test(&r2, &free, 3, &int(1), p).unwrap();
        assert_eq!(rep.states, 81);
        assert!(rep.tv < 0.05, "{}", rep.tv);
    }

    #[test]
    fn identical_boundaries_never_disagree() {
        let r = rectangle(0, 0, 3, 3);
        let vb = VertexBoundary::constant(&r, 2);
        let p = RunParams { steps: 20_000, sample_every: 5000, burn_in: 0, seed: 5 };
        let rows = disagreement_decay(&r, &vb, &vb, 6, &rat(1, 10), p).unwrap();
        assert!(rows.iter().all(|row| row.rate == 0.0));
        let vb2 = vb.with(Site::new(-1, 0), 3);
        let p = RunParams { steps: 20_000, sample_every: 20_000, burn_in: 2000, seed: 5 };
        let rows = disagreement_decay(&r, &vb, &vb2, 6, &int(1), p).unwrap();
        assert!(rows.iter().all(|row| row.rate == 0.0));
    }

    #[test]
    fn disagreement_decays_with_distance() {
        let r = rectangle(0, 0, 3, 3);
        let vb = VertexBoundary::constant(&r, 1);
        let vb2 = vb.with(Site::new(-1, 0), 2);
        let p = RunParams { steps: 400_000, sample_every: 400_000, burn_in: 1000, seed: 11 };
        let rows = disagreement_decay(&r, &vb, &vb2, 6, &rat(1, 10), p).unwrap();
        let rate = |v: Site| rows.iter().find(|row| row.site == v).unwrap().rate;
        assert!(rate(Site::new(2, 2)) < rate(Site::new(0, 0)));
    }
}
