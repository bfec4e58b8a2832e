//! Finite regions of Z², their edge boundaries, and boundary pairs.
//!
//! A boundary pair is a region together with a distinguished boundary edge
//! `s` (from `f` inside the region to `w` outside) and two edge-boundary
//! configurations that differ only at `s`. Boundary spins live in
//! `{0} ∪ {1..q}` with `0` meaning a free edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ParseError, Result};

pub type Spin = u8;

/// Largest spin count supported by the enumeration code.
pub const MAX_Q: u8 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Site {
        Site::new(self.x + dx, self.y + dy)
    }

    /// The four lattice neighbours: left, right, down, up.
    pub fn neighbours(self) -> [Site; 4] {
        [
            self.offset(-1, 0),
            self.offset(1, 0),
            self.offset(0, -1),
            self.offset(0, 1),
        ]
    }

    pub fn l1(self, other: Site) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn is_adjacent(self, other: Site) -> bool {
        self.l1(other) == 1
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// An undirected lattice edge, endpoints stored in site order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    a: Site,
    b: Site,
}

impl Edge {
    pub fn new(u: Site, v: Site) -> Option<Edge> {
        if !u.is_adjacent(v) {
            return None;
        }
        Some(if u < v { Edge { a: u, b: v } } else { Edge { a: v, b: u } })
    }

    pub fn a(&self) -> Site {
        self.a
    }

    pub fn b(&self) -> Site {
        self.b
    }

    pub fn touches(&self, v: Site) -> bool {
        self.a == v || self.b == v
    }

    /// The endpoint that is not `v`. `v` must be an endpoint.
    pub fn other(&self, v: Site) -> Site {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }

    pub fn is_perpendicular(&self, other: &Edge) -> bool {
        self.is_horizontal() != other.is_horizontal()
    }

    pub fn shared_vertex(&self, other: &Edge) -> Option<Site> {
        if other.touches(self.a) {
            Some(self.a)
        } else if other.touches(self.b) {
            Some(self.b)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// A finite, not necessarily connected, set of sites.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Region {
    sites: BTreeSet<Site>,
}

impl Region {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Self {
        Region { sites: sites.into_iter().collect() }
    }

    pub fn contains(&self, v: Site) -> bool {
        self.sites.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.sites.iter().copied()
    }

    pub fn without(&self, v: Site) -> Region {
        let mut sites = self.sites.clone();
        sites.remove(&v);
        Region { sites }
    }

    /// E(R): every lattice edge with at least one endpoint in the region.
    pub fn edge_set(&self) -> BTreeSet<Edge> {
        self.sites
            .iter()
            .flat_map(|&v| v.neighbours().into_iter().filter_map(move |u| Edge::new(v, u)))
            .collect()
    }

    pub fn interior_edges(&self) -> BTreeSet<Edge> {
        self.edge_set()
            .into_iter()
            .filter(|e| self.contains(e.a()) && self.contains(e.b()))
            .collect()
    }

    /// Edges with exactly one endpoint in the region.
    pub fn boundary_edges(&self) -> BTreeSet<Edge> {
        self.edge_set()
            .into_iter()
            .filter(|e| self.contains(e.a()) != self.contains(e.b()))
            .collect()
    }

    pub fn is_boundary_edge(&self, e: &Edge) -> bool {
        self.contains(e.a()) != self.contains(e.b())
    }

    /// ∂R: sites outside the region adjacent to it.
    pub fn vertex_boundary(&self) -> BTreeSet<Site> {
        self.sites
            .iter()
            .flat_map(|v| v.neighbours())
            .filter(|u| !self.contains(*u))
            .collect()
    }

    /// Sites reachable from `start` inside the region.
    pub fn component_of(&self, start: Site) -> Region {
        let mut seen = BTreeSet::new();
        if !self.contains(start) {
            return Region { sites: seen };
        }
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(v) = stack.pop() {
            for u in v.neighbours() {
                if self.contains(u) && seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        Region { sites: seen }
    }

    pub fn is_connected(&self) -> bool {
        match self.sites.iter().next() {
            None => true,
            Some(&v) => self.component_of(v).len() == self.len(),
        }
    }
}

impl FromIterator<Site> for Region {
    fn from_iter<T: IntoIterator<Item = Site>>(iter: T) -> Self {
        Region::new(iter)
    }
}

/// Spin on every boundary edge of a region.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryConfig {
    spins: BTreeMap<Edge, Spin>,
}

impl BoundaryConfig {
    pub fn new(spins: BTreeMap<Edge, Spin>) -> Self {
        BoundaryConfig { spins }
    }

    /// All boundary edges of `region` free.
    pub fn free(region: &Region) -> Self {
        BoundaryConfig { spins: region.boundary_edges().into_iter().map(|e| (e, 0)).collect() }
    }

    /// Spin on `e`; edges outside the domain read as free.
    pub fn get(&self, e: &Edge) -> Spin {
        self.spins.get(e).copied().unwrap_or(0)
    }

    pub fn set(&mut self, e: Edge, spin: Spin) {
        self.spins.insert(e, spin);
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, Spin)> + '_ {
        self.spins.iter().map(|(e, s)| (*e, *s))
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.spins.keys().copied()
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.spins.contains_key(e)
    }

    pub fn permute_colors(&self, perm: &[Spin]) -> BoundaryConfig {
        BoundaryConfig { spins: self.spins.iter().map(|(e, &s)| (*e, perm[s as usize])).collect() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("region is empty")]
    EmptyRegion,
    #[error("q must be between 2 and {MAX_Q}, got {0}")]
    BadQ(u8),
    #[error("distinguished edge {0} is not a boundary edge of the region")]
    SNotBoundary(Edge),
    #[error("configuration domain mismatch at edge {0}")]
    Domain(Edge),
    #[error("spin {spin} on edge {edge} is outside 0..={q}")]
    SpinRange { edge: Edge, spin: Spin, q: u8 },
    #[error("spins on s must lie in 1..=q, got ({0},{1})")]
    SpinAtSFree(Spin, Spin),
    #[error("configurations must differ at s")]
    SameAtS,
    #[error("configurations must agree off s, differ at {0}")]
    DifferOffS(Edge),
    #[error("perpendicular edges {e1} and {e2} at {vertex} differ in both configurations")]
    Perpendicular { vertex: Site, e1: Edge, e2: Edge },
}

/// A region with a distinguished boundary edge and two configurations that
/// differ only there.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub region: Region,
    pub s: Edge,
    pub b: BoundaryConfig,
    pub bp: BoundaryConfig,
    pub q: u8,
}

impl BoundaryPair {
    /// Builds a pair from the two spins on `s` and a common assignment of the
    /// remaining boundary edges (missing edges are free).
    pub fn from_spins(
        region: Region,
        s: Edge,
        q: u8,
        at_s: (Spin, Spin),
        others: &BTreeMap<Edge, Spin>,
    ) -> BoundaryPair {
        let mut b = BoundaryConfig::default();
        for e in region.boundary_edges() {
            b.set(e, others.get(&e).copied().unwrap_or(0));
        }
        let mut bp = b.clone();
        b.set(s, at_s.0);
        bp.set(s, at_s.1);
        BoundaryPair { region, s, b, bp, q }
    }

    /// f_X, the endpoint of `s` inside the region.
    pub fn f(&self) -> Site {
        if self.region.contains(self.s.a()) {
            self.s.a()
        } else {
            self.s.b()
        }
    }

    /// w_X, the endpoint of `s` outside the region.
    pub fn w(&self) -> Site {
        self.s.other(self.f())
    }

    pub fn spins_at_s(&self) -> (Spin, Spin) {
        (self.b.get(&self.s), self.bp.get(&self.s))
    }

    pub fn validate(&self) -> Result<(), Violation> {
        validate_boundary_pair(self)
    }

    /// Applies a colour permutation (`perm[0]` must be 0) to both configurations.
    pub fn permute_colors(&self, perm: &[Spin]) -> BoundaryPair {
        BoundaryPair {
            region: self.region.clone(),
            s: self.s,
            b: self.b.permute_colors(perm),
            bp: self.bp.permute_colors(perm),
            q: self.q,
        }
    }

    pub fn swapped(&self) -> BoundaryPair {
        BoundaryPair {
            region: self.region.clone(),
            s: self.s,
            b: self.bp.clone(),
            bp: self.b.clone(),
            q: self.q,
        }
    }
}

pub fn validate_boundary_pair(x: &BoundaryPair) -> Result<(), Violation> {
    if !(2..=MAX_Q).contains(&x.q) {
        return Err(Violation::BadQ(x.q));
    }
    if x.region.is_empty() {
        return Err(Violation::EmptyRegion);
    }
    if !x.region.is_boundary_edge(&x.s) {
        return Err(Violation::SNotBoundary(x.s));
    }
    let boundary = x.region.boundary_edges();
    for cfg in [&x.b, &x.bp] {
        for e in cfg.edges() {
            if !boundary.contains(&e) {
                return Err(Violation::Domain(e));
            }
        }
        for e in &boundary {
            if !cfg.contains_edge(e) {
                return Err(Violation::Domain(*e));
            }
            let spin = cfg.get(e);
            if spin > x.q {
                return Err(Violation::SpinRange { edge: *e, spin, q: x.q });
            }
        }
    }
    let (bs, bps) = x.spins_at_s();
    if bs == 0 || bps == 0 {
        return Err(Violation::SpinAtSFree(bs, bps));
    }
    if bs == bps {
        return Err(Violation::SameAtS);
    }
    for e in &boundary {
        if *e != x.s && x.b.get(e) != x.bp.get(e) {
            return Err(Violation::DifferOffS(*e));
        }
    }
    // perpendicular boundary edges meeting at an outside vertex
    for v in x.region.vertex_boundary() {
        let at_v: Vec<Edge> = v
            .neighbours()
            .into_iter()
            .filter(|u| x.region.contains(*u))
            .filter_map(|u| Edge::new(v, u))
            .collect();
        for (i, e1) in at_v.iter().enumerate() {
            for e2 in &at_v[i + 1..] {
                if e1.is_perpendicular(e2)
                    && x.b.get(e1) != x.b.get(e2)
                    && x.bp.get(e1) != x.bp.get(e2)
                {
                    return Err(Violation::Perpendicular { vertex: v, e1: *e1, e2: *e2 });
                }
            }
        }
    }
    Ok(())
}

/// A symmetry of Z² (quarter turns and a mirror) followed by a translation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeomMap {
    /// Counter-clockwise quarter turns, applied after the optional mirror.
    pub rot: u8,
    /// Mirror `x -> -x`, applied first.
    pub reflect: bool,
    pub tx: i32,
    pub ty: i32,
}

impl GeomMap {
    pub const IDENTITY: GeomMap = GeomMap { rot: 0, reflect: false, tx: 0, ty: 0 };

    pub fn new(rot: u8, reflect: bool, tx: i32, ty: i32) -> Self {
        GeomMap { rot: rot % 4, reflect, tx, ty }
    }

    /// The eight linear symmetries of the lattice (no translation).
    pub fn dihedral() -> impl Iterator<Item = GeomMap> {
        (0..8u8).map(|k| GeomMap::new(k % 4, k >= 4, 0, 0))
    }

    pub fn apply(&self, v: Site) -> Site {
        let (mut x, mut y) = (v.x, v.y);
        if self.reflect {
            x = -x;
        }
        for _ in 0..self.rot {
            (x, y) = (-y, x);
        }
        Site::new(x + self.tx, y + self.ty)
    }

    pub fn apply_edge(&self, e: &Edge) -> Edge {
        Edge::new(self.apply(e.a()), self.apply(e.b())).expect("isometries preserve adjacency")
    }

    pub fn apply_region(&self, r: &Region) -> Region {
        r.sites().map(|v| self.apply(v)).collect()
    }

    pub fn apply_config(&self, b: &BoundaryConfig) -> BoundaryConfig {
        BoundaryConfig::new(b.iter().map(|(e, s)| (self.apply_edge(&e), s)).collect())
    }

    pub fn apply_pair(&self, x: &BoundaryPair) -> BoundaryPair {
        BoundaryPair {
            region: self.apply_region(&x.region),
            s: self.apply_edge(&x.s),
            b: self.apply_config(&x.b),
            bp: self.apply_config(&x.bp),
            q: x.q,
        }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &GeomMap) -> GeomMap {
        let o = self.apply(first.apply(Site::new(0, 0)));
        let ex = self.apply(first.apply(Site::new(1, 0)));
        let ey = self.apply(first.apply(Site::new(0, 1)));
        let lin = |p: Site| Site::new(p.x - o.x, p.y - o.y);
        let (ex, ey) = (lin(ex), lin(ey));
        for g in GeomMap::dihedral() {
            if g.apply(Site::new(1, 0)) == ex && g.apply(Site::new(0, 1)) == ey {
                return GeomMap { tx: o.x, ty: o.y, ..g };
            }
        }
        unreachable!("composition of lattice symmetries is a lattice symmetry")
    }

    pub fn inverse(&self) -> GeomMap {
        let lin = GeomMap { tx: 0, ty: 0, ..*self };
        let inv_lin = GeomMap::dihedral()
            .find(|g| g.compose(&lin) == GeomMap::IDENTITY)
            .expect("dihedral group is closed");
        let t = inv_lin.apply(Site::new(self.tx, self.ty));
        GeomMap { tx: -t.x, ty: -t.y, ..inv_lin }
    }
}

/// A region with its distinguished edge, as stored in region files.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionSpec {
    pub label: Option<String>,
    pub region: Region,
    pub s: Edge,
}

impl RegionSpec {
    pub fn new(region: Region, f: Site, dir: (i32, i32)) -> Result<Self> {
        let w = f.offset(dir.0, dir.1);
        let s = Edge::new(f, w)
            .ok_or_else(|| crate::error::invalid(format!("direction {dir:?} is not a unit step")))?;
        if !region.contains(f) {
            return Err(crate::error::invalid(format!("f = {f} is not in the region")));
        }
        if region.contains(w) {
            return Err(crate::error::invalid(format!("w = {w} lies inside the region")));
        }
        Ok(RegionSpec { label: None, region, s })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn f(&self) -> Site {
        if self.region.contains(self.s.a()) {
            self.s.a()
        } else {
            self.s.b()
        }
    }

    pub fn w(&self) -> Site {
        self.s.other(self.f())
    }

    /// Unit step from f to w.
    pub fn dir(&self) -> (i32, i32) {
        let (f, w) = (self.f(), self.w());
        (w.x - f.x, w.y - f.y)
    }

    /// Moves the region so that f is the origin and s points down.
    pub fn normalized(&self) -> RegionSpec {
        let f = self.f();
        let to_origin = GeomMap::new(0, false, -f.x, -f.y);
        let down = Site::new(0, -1);
        let d = self.dir();
        let rot = GeomMap::dihedral()
            .filter(|g| !g.reflect)
            .find(|g| g.apply(Site::new(d.0, d.1)) == down)
            .expect("some rotation sends a unit step down");
        let g = rot.compose(&to_origin);
        RegionSpec { label: self.label.clone(), region: g.apply_region(&self.region), s: g.apply_edge(&self.s) }
    }
}

/// Parses a region file. Each block starts with `F <x> <y> S <dx> <dy>` and is
/// followed by one `<x> <y>` line per site. A comment of the form
/// `# name: <label>` labels the next block; other `#` text is ignored.
pub fn parse_region_file(text: &str) -> Result<Vec<RegionSpec>, ParseError> {
    struct Block {
        label: Option<String>,
        f: Site,
        dir: (i32, i32),
        line: usize,
        sites: Vec<Site>,
        seen: BTreeSet<Site>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut pending_label: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| ParseError::Line { line, msg };
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        if let Some(label) = comment.and_then(|c| c.trim().strip_prefix("name:")) {
            pending_label = Some(label.trim().to_string());
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let num = |t: &str| t.parse::<i32>().map_err(|_| err(format!("bad integer {t:?}")));
        if toks[0] == "F" {
            if toks.len() != 6 || toks[3] != "S" {
                return Err(err("header must be `F <x> <y> S <dx> <dy>`".into()));
            }
            let f = Site::new(num(toks[1])?, num(toks[2])?);
            let dir = (num(toks[4])?, num(toks[5])?);
            if dir.0.abs() + dir.1.abs() != 1 {
                return Err(err(format!("direction {dir:?} must be a unit lattice step")));
            }
            blocks.push(Block { label: pending_label.take(), f, dir, line, sites: vec![], seen: BTreeSet::new() });
        } else {
            let block = blocks.last_mut().ok_or_else(|| err("site before any `F` header".into()))?;
            if toks.len() != 2 {
                return Err(err("site lines are `<x> <y>`".into()));
            }
            let v = Site::new(num(toks[0])?, num(toks[1])?);
            if !block.seen.insert(v) {
                return Err(err(format!("duplicate site {v}")));
            }
            block.sites.push(v);
        }
    }
    if blocks.is_empty() {
        return Err(ParseError::Other("no region header found".into()));
    }
    blocks
        .into_iter()
        .map(|b| {
            let region = Region::new(b.sites);
            let spec = RegionSpec::new(region, b.f, b.dir)
                .map_err(|e| ParseError::Line { line: b.line, msg: e.to_string() })?;
            Ok(RegionSpec { label: b.label, ..spec })
        })
        .collect()
}

pub fn write_region_file(specs: &[RegionSpec]) -> String {
    let mut out = String::new();
    for spec in specs {
        if let Some(label) = &spec.label {
            out.push_str(&format!("# name: {label}\n"));
        }
        let f = spec.f();
        let (dx, dy) = spec.dir();
        out.push_str(&format!("F {} {} S {} {}\n", f.x, f.y, dx, dy));
        for v in spec.region.sites() {
            out.push_str(&format!("{} {}\n", v.x, v.y));
        }
    }
    out
}

/// Parses a boundary-pair file:
///
/// ```text
/// Q 2
/// F 0 0 S 0 -1 SPINS 1 2
/// 0 0
/// 0 1
/// E 0 0 -1 0 1
/// ```
///
/// `F` gives f, the step to w and the two spins on `s`; bare lines are
/// sites; `E x1 y1 x2 y2 c` sets a boundary edge. Unlisted edges are free.
pub fn parse_pair_file(text: &str) -> Result<BoundaryPair, ParseError> {
    let mut q: Option<u8> = None;
    type Head = (Site, (i32, i32), (Spin, Spin), usize);
    let mut head: Option<Head> = None;
    let mut sites = Vec::new();
    let mut spins: BTreeMap<Edge, Spin> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| ParseError::Line { line, msg };
        let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let num = |t: &str| t.parse::<i32>().map_err(|_| err(format!("bad integer {t:?}")));
        let spin = |t: &str| t.parse::<Spin>().map_err(|_| err(format!("bad spin {t:?}")));
        match toks[0] {
            "Q" if toks.len() == 2 => q = Some(toks[1].parse().map_err(|_| err(format!("bad q {:?}", toks[1])))?),
            "F" if toks.len() == 9 && toks[3] == "S" && toks[6] == "SPINS" => {
                let f = Site::new(num(toks[1])?, num(toks[2])?);
                head = Some((f, (num(toks[4])?, num(toks[5])?), (spin(toks[7])?, spin(toks[8])?), line));
            }
            "E" if toks.len() == 6 => {
                let u = Site::new(num(toks[1])?, num(toks[2])?);
                let v = Site::new(num(toks[3])?, num(toks[4])?);
                let e = Edge::new(u, v).ok_or_else(|| err(format!("{u} and {v} are not adjacent")))?;
                if spins.insert(e, spin(toks[5])?).is_some() {
                    return Err(err(format!("edge {u}-{v} listed twice")));
                }
            }
            _ if toks.len() == 2 => sites.push(Site::new(num(toks[0])?, num(toks[1])?)),
            _ => return Err(err(format!("unrecognised line {:?}", raw.trim()))),
        }
    }
    let q = q.ok_or_else(|| ParseError::Other("missing `Q <q>` line".into()))?;
    let (f, dir, at_s, line) = head.ok_or_else(|| ParseError::Other("missing `F ... SPINS ...` line".into()))?;
    let spec = RegionSpec::new(Region::new(sites), f, dir).map_err(|e| ParseError::Line { line, msg: e.to_string() })?;
    if let Some(e) = spins.keys().find(|e| !spec.region.is_boundary_edge(e) || **e == spec.s) {
        return Err(ParseError::Other(format!("{}-{} is not a boundary edge other than s", e.a(), e.b())));
    }
    let x = BoundaryPair::from_spins(spec.region, spec.s, q, at_s, &spins);
    x.validate().map_err(|v| ParseError::Other(v.to_string()))?;
    Ok(x)
}

pub fn write_pair_file(x: &BoundaryPair) -> String {
    let f = x.f();
    let w = x.w();
    let (c, cp) = x.spins_at_s();
    let mut out = format!("Q {}\nF {} {} S {} {} SPINS {} {}\n", x.q, f.x, f.y, w.x - f.x, w.y - f.y, c, cp);
    for v in x.region.sites() {
        out.push_str(&format!("{} {}\n", v.x, v.y));
    }
    for (e, c) in x.b.iter() {
        if e != x.s && c != 0 {
            out.push_str(&format!("E {} {} {} {} {}\n", e.a().x, e.a().y, e.b().x, e.b().y, c));
        }
    }
    out
}

/// The two-site configuration on which ν exceeds every single-site value.
pub fn two_site_example() -> BoundaryPair {
    parse_pair_file(TWO_SITE_EXAMPLE).expect("built-in pair parses")
}

pub const TWO_SITE_EXAMPLE: &str = include_str!("../data/two_site.pair");

/// Boundary edges other than `s`, grouped into classes forced to carry one
/// common spin by the perpendicular-edge rule.
#[derive(Clone, Debug)]
pub struct PairSkeleton {
    pub region: Region,
    pub s: Edge,
    /// Non-`s` boundary edges in canonical order.
    pub edges: Vec<Edge>,
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug)]
pub struct Slot {
    /// Indices into [`PairSkeleton::edges`].
    pub edges: Vec<usize>,
    /// Some edge of the slot is perpendicular to `s` at `w`, so its spin must
    /// be one of the two spins on `s`.
    pub tied_to_s: bool,
}

impl PairSkeleton {
    pub fn new(region: &Region, s: Edge) -> Result<Self> {
        if region.is_empty() || !region.is_boundary_edge(&s) {
            return Err(Violation::SNotBoundary(s).into());
        }
        let edges: Vec<Edge> = region.boundary_edges().into_iter().filter(|e| *e != s).collect();
        let index: BTreeMap<Edge, usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        // union-find over edge indices
        let mut parent: Vec<usize> = (0..edges.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            let mut j = i;
            while p[j] != r {
                let n = p[j];
                p[j] = r;
                j = n;
            }
            r
        }
        let mut tied = vec![false; edges.len()];
        for v in region.vertex_boundary() {
            let at_v: Vec<Edge> = v
                .neighbours()
                .into_iter()
                .filter(|u| region.contains(*u))
                .filter_map(|u| Edge::new(v, u))
                .collect();
            for (i, e1) in at_v.iter().enumerate() {
                for e2 in &at_v[i + 1..] {
                    if !e1.is_perpendicular(e2) {
                        continue;
                    }
                    match (*e1 == s, *e2 == s) {
                        (false, false) => {
                            let (a, b) = (find(&mut parent, index[e1]), find(&mut parent, index[e2]));
                            parent[a] = b;
                        }
                        (true, false) => tied[index[e2]] = true,
                        (false, true) => tied[index[e1]] = true,
                        (true, true) => unreachable!(),
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..edges.len() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut slots: Vec<Slot> = groups
            .into_values()
            .map(|members| Slot { tied_to_s: members.iter().any(|&i| tied[i]), edges: members })
            .collect();
        slots.sort_by_key(|s| s.edges[0]);
        Ok(PairSkeleton { region: region.clone(), s, edges, slots })
    }

    pub fn f(&self) -> Site {
        if self.region.contains(self.s.a()) {
            self.s.a()
        } else {
            self.s.b()
        }
    }

    /// Expands slot values into a full boundary pair.
    pub fn pair(&self, q: u8, at_s: (Spin, Spin), slot_values: &[Spin]) -> BoundaryPair {
        let mut others = BTreeMap::new();
        for (slot, &val) in self.slots.iter().zip(slot_values) {
            for &i in &slot.edges {
                others.insert(self.edges[i], val);
            }
        }
        BoundaryPair::from_spins(self.region.clone(), self.s, q, at_s, &others)
    }

    /// Visits every admissible slot assignment.
    ///
    /// Without canonicalization every unordered pair `{a < b}` of spins on `s`
    /// is visited with every assignment of the slots. With canonicalization
    /// the spins on `s` are `(1, 2)` and exactly one representative of each
    /// orbit under colour permutations that fix `{1, 2}` setwise is visited.
    pub fn for_each_assignment(&self, q: u8, canonicalize: bool, mut visit: impl FnMut((Spin, Spin), &[Spin])) {
        let n = self.slots.len();
        let mut vals = vec![0u8; n];
        if canonicalize {
            let mut scratch = vec![0u8; n];
            self.canonical_rec(q, 0, 2, &mut vals, &mut scratch, &mut visit);
        } else {
            for a in 1..=q {
                for b in a + 1..=q {
                    self.all_rec(q, (a, b), 0, &mut vals, &mut visit);
                }
            }
        }
    }

    /// Canonical assignments of the first `depth` slots, in visiting order.
    pub fn canonical_prefixes(&self, q: u8, depth: usize) -> Vec<Vec<Spin>> {
        let depth = depth.min(self.slots.len());
        let mut out = Vec::new();
        let mut vals = Vec::with_capacity(depth);
        self.prefix_rec(q, depth, 2, &mut vals, &mut out);
        out
    }

    fn prefix_rec(&self, q: u8, depth: usize, max_used: u8, vals: &mut Vec<Spin>, out: &mut Vec<Vec<Spin>>) {
        let i = vals.len();
        if i == depth {
            out.push(vals.clone());
            return;
        }
        let choices: Vec<Spin> = if self.slots[i].tied_to_s { vec![1, 2] } else { (0..=(max_used + 1).min(q)).collect() };
        for v in choices {
            vals.push(v);
            self.prefix_rec(q, depth, max_used.max(v), vals, out);
            vals.pop();
        }
    }

    /// Canonical assignments extending `prefix` (see [`Self::for_each_assignment`]).
    pub fn for_each_canonical_from(&self, q: u8, prefix: &[Spin], mut visit: impl FnMut((Spin, Spin), &[Spin])) {
        let n = self.slots.len();
        let mut vals = vec![0u8; n];
        vals[..prefix.len()].copy_from_slice(prefix);
        let max_used = prefix.iter().copied().max().unwrap_or(0).max(2);
        let mut scratch = vec![0u8; n];
        self.canonical_rec(q, prefix.len(), max_used, &mut vals, &mut scratch, &mut visit);
    }

    fn all_rec(&self, q: u8, at_s: (Spin, Spin), i: usize, vals: &mut Vec<Spin>, visit: &mut impl FnMut((Spin, Spin), &[Spin])) {
        if i == self.slots.len() {
            visit(at_s, vals);
            return;
        }
        if self.slots[i].tied_to_s {
            for v in [at_s.0, at_s.1] {
                vals[i] = v;
                self.all_rec(q, at_s, i + 1, vals, visit);
            }
        } else {
            for v in 0..=q {
                vals[i] = v;
                self.all_rec(q, at_s, i + 1, vals, visit);
            }
        }
    }

    fn canonical_rec(
        &self,
        q: u8,
        i: usize,
        max_used: u8,
        vals: &mut Vec<Spin>,
        scratch: &mut Vec<Spin>,
        visit: &mut impl FnMut((Spin, Spin), &[Spin]),
    ) {
        if i == self.slots.len() {
            if swap_image_not_smaller(vals, scratch) {
                visit((1, 2), vals);
            }
            return;
        }
        if self.slots[i].tied_to_s {
            for v in [1, 2] {
                vals[i] = v;
                self.canonical_rec(q, i + 1, max_used, vals, scratch, visit);
            }
            return;
        }
        let top = (max_used + 1).min(q);
        for v in 0..=top {
            vals[i] = v;
            self.canonical_rec(q, i + 1, max_used.max(v), vals, scratch, visit);
        }
    }
}

/// Relabels colours `>= 3` in order of first appearance.
pub fn relabel_first_appearance(vals: &mut [Spin]) {
    let mut map = [0u8; 256];
    let mut next = 3u8;
    for v in vals.iter_mut() {
        if *v >= 3 {
            if map[*v as usize] == 0 {
                map[*v as usize] = next;
                next += 1;
            }
            *v = map[*v as usize];
        }
    }
}

/// True when `vals` is lexicographically no larger than the canonical form of
/// its image under the swap `1 <-> 2`.
fn swap_image_not_smaller(vals: &[Spin], scratch: &mut [Spin]) -> bool {
    for (d, &v) in scratch.iter_mut().zip(vals) {
        *d = match v {
            1 => 2,
            2 => 1,
            x => x,
        };
    }
    relabel_first_appearance(scratch);
    vals <= &*scratch
}

/// All valid boundary pairs on `(region, s)` with `q` spins.
pub fn enumerate_boundary_pairs(region: &Region, s: Edge, q: u8, canonicalize: bool) -> Result<Vec<BoundaryPair>> {
    if !(2..=MAX_Q).contains(&q) {
        return Err(Violation::BadQ(q).into());
    }
    let skel = PairSkeleton::new(region, s)?;
    let mut out = Vec::new();
    skel.for_each_assignment(q, canonicalize, |at_s, vals| out.push(skel.pair(q, at_s, vals)));
    Ok(out)
}

pub fn apply_geometry(x: &BoundaryPair, g: &GeomMap) -> BoundaryPair {
    g.apply_pair(x)
}

/// Canonical colour form of a pair: spins on `s` become (1, 2) and the
/// remaining colours are relabelled by first appearance over the canonical
/// edge order, taking the smaller of the two orientations.
pub fn canonical_color_form(x: &BoundaryPair) -> Vec<Spin> {
    let (a, b) = x.spins_at_s();
    let edges: Vec<Edge> = x.region.boundary_edges().into_iter().filter(|e| *e != x.s).collect();
    let form = |first: Spin, second: Spin| {
        let mut vals: Vec<Spin> = edges
            .iter()
            .map(|e| {
                let v = x.b.get(e);
                if v == first {
                    1
                } else if v == second {
                    2
                } else if v == 0 {
                    0
                } else {
                    v + 100
                }
            })
            .collect();
        relabel_first_appearance(&mut vals);
        vals
    };
    form(a, b).min(form(b, a))
}
