//! Optimal couplings at the distinguished vertex, the subregion comparison of
//! ν against μ, and the recursive coupling tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bound::mu_eval;
use crate::error::{invalid, Error, Result};
use crate::gibbs::{pair_marginal_weights, pair_marginals};
use crate::lattice::{BoundaryConfig, BoundaryPair, Edge, Region, Site, Spin};
use crate::rational::{fmt_rat, serde_rat, Rat};

fn check_lambda(lambda: &Rat) -> Result<()> {
    if lambda.is_negative() || *lambda > Rat::one() {
        return Err(invalid(format!("λ = {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// Total-variation distance between the f_X marginals under `B_X` and `B'_X`.
pub fn nu_exact(x: &BoundaryPair, lambda: &Rat) -> Result<Rat> {
    check_lambda(lambda)?;
    let (a, b) = pair_marginal_weights(x, lambda)?;
    let (ta, tb): (BigInt, BigInt) = (a.iter().sum(), b.iter().sum());
    let diff: BigInt = a.iter().zip(&b).map(|(ai, bi)| (ai * &tb - bi * &ta).abs()).sum();
    Ok(Rat::new(diff, ta * tb * 2))
}

pub fn total_variation(p: &[Rat], pp: &[Rat]) -> Rat {
    let sum: Rat = p.iter().zip(pp).map(|(a, b)| (a - b).abs()).sum();
    sum / Rat::from_integer(2.into())
}

/// `p[c-1][c'-1]`: probability that the first sample has spin `c` and the
/// second `c'` at f_X.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    #[serde(with = "crate::rational::serde_rat::matrix")]
    pub p: Vec<Vec<Rat>>,
}

impl CouplingMatrix {
    pub fn q(&self) -> usize {
        self.p.len()
    }

    pub fn get(&self, c: Spin, cp: Spin) -> &Rat {
        &self.p[c as usize - 1][cp as usize - 1]
    }

    pub fn row_sums(&self) -> Vec<Rat> {
        self.p.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<Rat> {
        (0..self.q()).map(|j| self.p.iter().map(|row| &row[j]).sum()).collect()
    }

    /// Mass off the diagonal.
    pub fn disagreement(&self) -> Rat {
        let mut acc = Rat::zero();
        for (i, row) in self.p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    acc += v;
                }
            }
        }
        acc
    }

    /// True when every entry is nonnegative and the margins are `pi`, `pip`.
    pub fn is_coupling_of(&self, pi: &[Rat], pip: &[Rat]) -> bool {
        self.p.iter().all(|row| row.iter().all(|v| !v.is_negative()))
            && self.row_sums() == pi
            && self.col_sums() == pip
    }
}

/// Diagonal minima, then residual rows filled into residual columns in
/// increasing spin order.
pub fn coupling_from_marginals(pi: &[Rat], pip: &[Rat]) -> CouplingMatrix {
    let q = pi.len();
    let mut p = vec![vec![Rat::zero(); q]; q];
    let mut src: Vec<Rat> = Vec::with_capacity(q);
    let mut dst: Vec<Rat> = Vec::with_capacity(q);
    for i in 0..q {
        let m = pi[i].clone().min(pip[i].clone());
        src.push(&pi[i] - &m);
        dst.push(&pip[i] - &m);
        p[i][i] = m;
    }
    let mut j = 0;
    for i in 0..q {
        while src[i].is_positive() {
            while j < q && !dst[j].is_positive() {
                j += 1;
            }
            if j == q {
                break;
            }
            let m = src[i].clone().min(dst[j].clone());
            p[i][j] += &m;
            src[i] -= &m;
            dst[j] -= &m;
        }
    }
    CouplingMatrix { p }
}

pub fn optimal_coupling(x: &BoundaryPair, lambda: &Rat) -> Result<CouplingMatrix> {
    check_lambda(lambda)?;
    let (pi, pip) = pair_marginals(x, lambda)?;
    Ok(coupling_from_marginals(&pi, &pip))
}

/// Spins tried on boundary edges that a subregion exposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completion {
    /// Spins in Q only: the edges are induced by a configuration of the
    /// removed sites.
    #[default]
    Colours,
    /// Spins in {0} ∪ Q.
    WithFree,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingBoundsReport {
    #[serde(with = "serde_rat")]
    pub nu: Rat,
    #[serde(with = "serde_rat")]
    pub mu: Rat,
    #[serde(with = "serde_rat")]
    pub max_mu_sub: Rat,
    #[serde(with = "serde_rat")]
    pub max_nu_sub: Rat,
    pub family_size: usize,
    pub holds: bool,
}

/// Compares ν(X) with μ over every boundary pair on `subregion` that agrees
/// with X on common edges.
pub fn verify_coupling_bounds(x: &BoundaryPair, subregion: &Region, lambda: &Rat, completion: Completion) -> Result<CouplingBoundsReport> {
    check_lambda(lambda)?;
    let f = x.f();
    if !subregion.contains(f) || subregion.sites().any(|v| !x.region.contains(v)) {
        return Err(invalid("subregion must lie inside the region and contain f_X"));
    }
    let family = subregion_family(x, subregion, completion)?;
    if family.is_empty() {
        return Err(invalid("no boundary pair on the subregion is consistent with X"));
    }
    let nu = nu_exact(x, lambda)?;
    let mu = mu_eval(x, lambda)?;
    let mut max_mu_sub = Rat::zero();
    let mut max_nu_sub = Rat::zero();
    for y in &family {
        max_mu_sub = max_mu_sub.max(mu_eval(y, lambda)?);
        max_nu_sub = max_nu_sub.max(nu_exact(y, lambda)?);
    }
    let holds = nu <= max_mu_sub;
    Ok(CouplingBoundsReport { nu, mu, max_mu_sub, max_nu_sub, family_size: family.len(), holds })
}

/// The family χ of boundary pairs on `subregion` inherited from X.
pub fn subregion_family(x: &BoundaryPair, subregion: &Region, completion: Completion) -> Result<Vec<BoundaryPair>> {
    let old: BTreeSet<Edge> = x.region.boundary_edges();
    let mut fixed = BTreeMap::new();
    let mut fresh = Vec::new();
    for e in subregion.boundary_edges() {
        if e == x.s {
            continue;
        }
        if old.contains(&e) {
            fixed.insert(e, x.b.get(&e));
        } else {
            fresh.push(e);
        }
    }
    let lo: Spin = match completion {
        Completion::Colours => 1,
        Completion::WithFree => 0,
    };
    let mut vals = vec![lo; fresh.len()];
    let mut out = Vec::new();
    loop {
        let mut others = fixed.clone();
        for (e, v) in fresh.iter().zip(&vals) {
            others.insert(*e, *v);
        }
        let y = BoundaryPair::from_spins(subregion.clone(), x.s, x.q, x.spins_at_s(), &others);
        if y.validate().is_ok() {
            out.push(y);
        }
        let mut i = 0;
        loop {
            if i == vals.len() {
                return Ok(out);
            }
            if vals[i] < x.q {
                vals[i] += 1;
                break;
            }
            vals[i] = lo;
            i += 1;
        }
    }
}

/// Edges from f_X into the region ordered left, up, right as seen with s_X
/// pointing down.
pub fn ordered_inner_edges(x: &BoundaryPair) -> Vec<Edge> {
    let f = x.f();
    let w = x.w();
    let d = (w.x - f.x, w.y - f.y);
    let left = (d.1, -d.0);
    [left, (-d.0, -d.1), (-left.0, -left.1)]
        .into_iter()
        .map(|(dx, dy)| f.offset(dx, dy))
        .filter(|v| x.region.contains(*v))
        .map(|v| Edge::new(f, v).expect("adjacent"))
        .collect()
}

/// The child pair `X_i(c, c')` (`i` is 0-based).
pub fn child_pair(x: &BoundaryPair, edges: &[Edge], i: usize, c: Spin, cp: Spin) -> BoundaryPair {
    let f = x.f();
    let region = x.region.without(f);
    let mut b = BoundaryConfig::default();
    for e in region.boundary_edges() {
        b.set(e, x.b.get(&e));
    }
    for (j, e) in edges.iter().enumerate() {
        b.set(*e, if j < i { cp } else { c });
    }
    let mut bp = b.clone();
    bp.set(edges[i], cp);
    BoundaryPair { region, s: edges[i], b, bp, q: x.q }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    #[serde(with = "serde_rat")]
    pub weight: Rat,
    /// `None` for a degenerate edge.
    pub name: Option<Site>,
    pub level: u32,
    #[serde(with = "serde_rat")]
    pub likelihood: Rat,
    pub child: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub edges: Vec<TreeEdge>,
}

/// Arena form of T_X; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingTree {
    pub nodes: Vec<TreeNode>,
    pub depth: u32,
    /// Whether some branch was cut at `depth`.
    pub truncated: bool,
}

pub const DEFAULT_MAX_NODES: usize = 2_000_000;

pub fn build_tree(x: &BoundaryPair, lambda: &Rat, depth: u32) -> Result<CouplingTree> {
    build_tree_with(x, lambda, depth, DEFAULT_MAX_NODES)
}

pub fn build_tree_with(x: &BoundaryPair, lambda: &Rat, depth: u32, max_nodes: usize) -> Result<CouplingTree> {
    check_lambda(lambda)?;
    x.validate()?;
    let mut tree = CouplingTree { nodes: vec![TreeNode::default()], depth, truncated: false };
    grow(&mut tree, 0, x, lambda, 0, &Rat::one(), max_nodes)?;
    Ok(tree)
}

fn push_node(tree: &mut CouplingTree, max_nodes: usize) -> Result<usize> {
    if tree.nodes.len() >= max_nodes {
        return Err(Error::SizeLimit { work: tree.nodes.len() as u128 + 1, cap: max_nodes as u128 });
    }
    tree.nodes.push(TreeNode::default());
    Ok(tree.nodes.len() - 1)
}

fn grow(
    tree: &mut CouplingTree,
    node: usize,
    x: &BoundaryPair,
    lambda: &Rat,
    level: u32,
    likelihood: &Rat,
    max_nodes: usize,
) -> Result<()> {
    if level >= tree.depth {
        tree.truncated = true;
        return Ok(());
    }
    let m = optimal_coupling(x, lambda)?;
    let edges = ordered_inner_edges(x);
    let f = x.f();
    for c in 1..=x.q {
        for cp in 1..=x.q {
            if c == cp {
                continue;
            }
            let weight = m.get(c, cp).clone();
            let ell = likelihood * &weight;
            let rc = push_node(tree, max_nodes)?;
            tree.nodes[node].edges.push(TreeEdge {
                weight,
                name: Some(f),
                level: level + 1,
                likelihood: ell.clone(),
                child: rc,
            });
            for i in 0..edges.len() {
                let sub = push_node(tree, max_nodes)?;
                tree.nodes[rc].edges.push(TreeEdge {
                    weight: Rat::one(),
                    name: None,
                    level: level + 1,
                    likelihood: ell.clone(),
                    child: sub,
                });
                let y = child_pair(x, &edges, i, c, cp);
                grow(tree, sub, &y, lambda, level + 1, &ell, max_nodes)?;
            }
        }
    }
    Ok(())
}

impl CouplingTree {
    pub fn edges(&self) -> impl Iterator<Item = &TreeEdge> {
        self.nodes.iter().flat_map(|n| n.edges.iter())
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.nodes.iter().map(|n| n.edges.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total likelihood of the named vertex `v`.
    pub fn cost(&self, v: Site) -> Rat {
        self.edges().filter(|e| e.name == Some(v)).map(|e| &e.likelihood).sum()
    }

    /// One edge per line, indented by depth.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(0, 0, &mut out);
        out
    }

    fn dump_node(&self, node: usize, indent: usize, out: &mut String) {
        for e in &self.nodes[node].edges {
            let name = match e.name {
                Some(v) => format!("({},{})", v.x, v.y),
                None => "·".to_string(),
            };
            let _ = writeln!(
                out,
                "{}({}, {}, {}, {})",
                "  ".repeat(indent),
                fmt_rat(&e.weight),
                name,
                e.level,
                fmt_rat(&e.likelihood)
            );
            self.dump_node(e.child, indent + 1, out);
        }
    }
}

/// Γ_d: total likelihood of the non-degenerate level-`d` edges.
pub fn gamma_d(tree: &CouplingTree, d: u32) -> Result<Rat> {
    if d == 0 {
        return Err(invalid("levels start at 1"));
    }
    if d > tree.depth && tree.truncated {
        return Err(invalid(format!("tree was cut at depth {}, level {d} requested", tree.depth)));
    }
    Ok(tree.edges().filter(|e| e.name.is_some() && e.level == d).map(|e| &e.likelihood).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_boundary_pairs;
    use crate::rational::{int, rat};

    fn e(a: (i32, i32), b: (i32, i32)) -> Edge {
        Edge::new(Site::new(a.0, a.1), Site::new(b.0, b.1)).unwrap()
    }

    fn origin_s() -> Edge {
        e((0, 0), (0, -1))
    }

    /// f at the origin, y above it, the five other boundary edges read
    /// clockwise from the lower-left: 1, 1, 1, 2, 2.
    pub(crate) fn two_site_example() -> BoundaryPair {
        let region = Region::new([Site::new(0, 0), Site::new(0, 1)]);
        let others = BTreeMap::from([
            (e((0, 0), (-1, 0)), 1),
            (e((0, 1), (-1, 1)), 1),
            (e((0, 1), (0, 2)), 1),
            (e((0, 1), (1, 1)), 2),
            (e((0, 0), (1, 0)), 2),
        ]);
        BoundaryPair::from_spins(region, origin_s(), 2, (1, 2), &others)
    }

    fn nu_and_coupling_agree(x: &BoundaryPair, lam: &Rat) {
        let (pi, pip) = pair_marginals(x, lam).unwrap();
        let m = coupling_from_marginals(&pi, &pip);
        assert!(m.is_coupling_of(&pi, &pip));
        for c in 0..pi.len() {
            assert_eq!(m.p[c][c], pi[c].clone().min(pip[c].clone()));
        }
        assert_eq!(m.disagreement(), nu_exact(x, lam).unwrap());
    }

    #[test]
    fn built_in_pair_matches() {
        assert_eq!(crate::lattice::two_site_example(), two_site_example());
        let x = two_site_example();
        assert_eq!(crate::lattice::parse_pair_file(&crate::lattice::write_pair_file(&x)).unwrap(), x);
    }

    #[test]
    fn two_site_counterexample() {
        let x = two_site_example();
        x.validate().unwrap();
        let lam = rat(1, 2);
        assert_eq!(nu_exact(&x, &lam).unwrap(), rat(30, 91));
        assert_eq!(optimal_coupling(&x, &lam).unwrap().disagreement(), rat(30, 91));
        nu_and_coupling_agree(&x, &lam);

        let sub = Region::new([Site::new(0, 0)]);
        let fam = subregion_family(&x, &sub, Completion::Colours).unwrap();
        assert_eq!(fam.len(), 2);
        for y in &fam {
            assert_eq!(nu_exact(y, &lam).unwrap(), rat(3, 10));
        }
        let rep = verify_coupling_bounds(&x, &sub, &lam, Completion::Colours).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.max_nu_sub, rat(3, 10));
        assert!(rep.max_nu_sub < rep.nu);
        assert!(rep.nu <= rep.mu);

        let with_free = verify_coupling_bounds(&x, &sub, &lam, Completion::WithFree).unwrap();
        assert_eq!(with_free.family_size, 3);
        assert!(with_free.holds);
        assert!(with_free.max_mu_sub >= rep.max_mu_sub);
    }

    #[test]
    fn full_subregion_is_claim_one() {
        let x = two_site_example();
        let rep = verify_coupling_bounds(&x, &x.region, &rat(1, 2), Completion::Colours).unwrap();
        assert_eq!(rep.family_size, 1);
        assert_eq!(rep.max_mu_sub, rep.mu);
        assert!(rep.holds);
        assert!(verify_coupling_bounds(&x, &Region::new([Site::new(0, 1)]), &rat(1, 2), Completion::Colours).is_err());
    }

    #[test]
    fn lambda_one_is_uniform() {
        let x = two_site_example();
        assert_eq!(nu_exact(&x, &int(1)).unwrap(), int(0));
        let m = optimal_coupling(&x, &int(1)).unwrap();
        assert_eq!(m.p, vec![vec![rat(1, 2), int(0)], vec![int(0), rat(1, 2)]]);
        let tree = build_tree(&x, &int(1), 3).unwrap();
        for d in 1..=3 {
            assert_eq!(gamma_d(&tree, d).unwrap(), int(0));
        }
    }

    #[test]
    fn single_site_free_q2() {
        let x = BoundaryPair::from_spins(Region::new([Site::new(0, 0)]), origin_s(), 2, (1, 2), &BTreeMap::new());
        let m = optimal_coupling(&x, &rat(1, 2)).unwrap();
        assert_eq!(m.p, vec![vec![rat(1, 3), int(0)], vec![rat(1, 3), rat(1, 3)]]);
        assert_eq!(nu_exact(&x, &rat(1, 2)).unwrap(), rat(1, 3));
    }

    #[test]
    fn leaf_tree() {
        let x = BoundaryPair::from_spins(Region::new([Site::new(0, 0)]), origin_s(), 4, (1, 3), &BTreeMap::new());
        let lam = rat(1, 5);
        let tree = build_tree(&x, &lam, 4).unwrap();
        assert_eq!(tree.len(), 12);
        assert!(!tree.truncated);
        assert_eq!(gamma_d(&tree, 1).unwrap(), nu_exact(&x, &lam).unwrap());
        assert_eq!(gamma_d(&tree, 7).unwrap(), int(0));
        assert_eq!(tree.cost(Site::new(0, 0)), nu_exact(&x, &lam).unwrap());
        assert_eq!(tree.dump().lines().count(), 12);
    }

    #[test]
    fn edge_order_left_up_right() {
        let region = Region::new([Site::new(0, 0), Site::new(-1, 0), Site::new(0, 1), Site::new(1, 0)]);
        let x = BoundaryPair::from_spins(region, origin_s(), 3, (1, 2), &BTreeMap::new());
        let es = ordered_inner_edges(&x);
        assert_eq!(es, vec![e((0, 0), (-1, 0)), e((0, 0), (0, 1)), e((0, 0), (1, 0))]);
        assert!(!es[0].is_perpendicular(&es[2]));
        // rotate so that s points right
        let g = crate::lattice::GeomMap::new(1, false, 0, 0);
        let y = g.apply_pair(&x);
        let mapped: Vec<Edge> = es.iter().map(|e| g.apply_edge(e)).collect();
        assert_eq!(ordered_inner_edges(&y), mapped);
        for i in 0..3 {
            for (c, cp) in [(1, 2), (3, 1)] {
                let child = child_pair(&x, &es, i, c, cp);
                child.validate().unwrap();
                assert_eq!(child.spins_at_s(), (c, cp));
                for (j, ej) in es.iter().enumerate() {
                    let want = if j < i { cp } else { c };
                    assert_eq!(child.b.get(ej), want);
                    assert_eq!(child.bp.get(ej), if j == i { cp } else { want });
                }
            }
        }
    }

    #[test]
    fn two_site_depth_two() {
        let x = two_site_example();
        let lam = rat(1, 3);
        let tree = build_tree(&x, &lam, 2).unwrap();
        assert_eq!(gamma_d(&tree, 1).unwrap(), nu_exact(&x, &lam).unwrap());
        // oracle: the only child lives on {y} with s = (f, y)
        let m = optimal_coupling(&x, &lam).unwrap();
        let y = Site::new(0, 1);
        let mut want = Rat::zero();
        for (c, cp) in [(1, 2), (2, 1)] {
            let others: BTreeMap<Edge, Spin> = [e((0, 1), (-1, 1)), e((0, 1), (0, 2)), e((0, 1), (1, 1))]
                .into_iter()
                .map(|ed| (ed, x.b.get(&ed)))
                .collect();
            let child = BoundaryPair::from_spins(Region::new([y]), e((0, 0), (0, 1)), 2, (c, cp), &others);
            want += m.get(c, cp) * nu_exact(&child, &lam).unwrap();
        }
        assert_eq!(gamma_d(&tree, 2).unwrap(), want);
        assert_eq!(tree.cost(y), want);
        assert!(gamma_d(&tree, 3).is_ok());
        let cut = build_tree(&x, &lam, 1).unwrap();
        assert!(cut.truncated);
        assert!(gamma_d(&cut, 2).is_err());
        assert!(build_tree_with(&x, &lam, 2, 5).is_err());
    }

    fn small_regions(max: usize) -> Vec<Region> {
        let f = Site::new(0, 0);
        let w = Site::new(0, -1);
        let mut seen = BTreeSet::new();
        let mut frontier = vec![Region::new([f])];
        while let Some(r) = frontier.pop() {
            if !seen.insert(r.clone()) || r.len() == max {
                continue;
            }
            for v in r.vertex_boundary() {
                if v != w {
                    let mut sites: Vec<Site> = r.sites().collect();
                    sites.push(v);
                    frontier.push(Region::new(sites));
                }
            }
        }
        seen.into_iter().collect()
    }

    #[test]
    fn nu_below_mu_small_regions() {
        let regions = small_regions(3);
        assert_eq!(regions.len(), 1 + 3 + 12);
        let lams = [int(0), rat(1, 3), rat(4, 5)];
        for r in &regions {
            for x in enumerate_boundary_pairs(r, origin_s(), 3, true).unwrap() {
                for lam in &lams {
                    let nu = nu_exact(&x, lam).unwrap();
                    assert!(nu <= mu_eval(&x, lam).unwrap(), "{x:?} at {lam}");
                }
            }
        }
    }

    mod props {
        use super::*;
        use crate::lattice::GeomMap;
        use proptest::prelude::*;

        fn two_site_pair() -> impl Strategy<Value = BoundaryPair> {
            (2u8..=4, 0usize..3, proptest::collection::vec(0u8..=4, 5), 0u8..4, 0u8..4)
                .prop_map(|(q, yi, spins, a, b)| {
                    let y = [Site::new(-1, 0), Site::new(0, 1), Site::new(1, 0)][yi];
                    let region = Region::new([Site::new(0, 0), y]);
                    let s = origin_s();
                    let edges: Vec<Edge> = region.boundary_edges().into_iter().filter(|ed| *ed != s).collect();
                    let others = edges.into_iter().zip(spins).map(|(ed, v)| (ed, v % (q + 1))).collect();
                    let a = a % q + 1;
                    let b = if b % q + 1 == a { a % q + 1 } else { b % q + 1 };
                    BoundaryPair::from_spins(region, s, q, (a, b), &others)
                })
                .prop_filter("boundary pair", |x| x.validate().is_ok())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn coupling_bounds_random(x in two_site_pair()) {
                let sub = Region::new([Site::new(0, 0)]);
                let rep = verify_coupling_bounds(&x, &sub, &rat(1, 3), Completion::Colours).unwrap();
                prop_assert!(rep.holds);
                prop_assert!(rep.nu <= rep.mu);
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]
            #[test]
            fn nu_symmetries(x in two_site_pair(), g in 0usize..8, seed in 0u64..1000) {
                let lam = rat(2, 7);
                let nu = nu_exact(&x, &lam).unwrap();
                nu_and_coupling_agree(&x, &lam);
                let map = GeomMap::dihedral().nth(g).unwrap();
                prop_assert_eq!(nu_exact(&map.apply_pair(&x), &lam).unwrap(), nu.clone());
                // a colour bijection preserving the spins on s up to order
                let q = x.q as usize;
                let mut perm: Vec<Spin> = (0..=x.q).collect();
                let mut st = seed;
                for i in (2..=q).rev() {
                    st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let j = 1 + (st >> 33) as usize % i;
                    perm.swap(i, j);
                }
                prop_assert_eq!(nu_exact(&x.permute_colors(&perm), &lam).unwrap(), nu.clone());
                prop_assert_eq!(nu_exact(&x.swapped(), &lam).unwrap(), nu);
            }
        }
    }
}
