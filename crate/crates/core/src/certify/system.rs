//! The recurrence system bounding Γ_d over classes of boundary pairs, its
//! constants, the induction check and the constant search.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::analytic::{single_node_bound, NodeBoundParams};
use crate::error::{invalid, ParseError, Result};
use crate::rational::{fmt_rat, parse_rat, round_up, serde_rat, to_f64, Rat};

pub const BUILTIN_SYSTEM: &str = include_str!("../../data/case_system.txt");
pub const BUILTIN_TABLE_Q6: &str = include_str!("../../data/constants_q6.txt");
pub const BUILTIN_TABLE_Q5: &str = include_str!("../../data/constants_q5.txt");
pub const BUILTIN_TABLE_Q4: &str = include_str!("../../data/constants_q4.txt");
pub const BUILTIN_TABLE_Q3: &str = include_str!("../../data/constants_q3.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    Gamma,
    V,
    W,
    U,
    S,
    T,
    R,
}

impl Class {
    pub const ALL: [Class; 7] = [Class::Gamma, Class::V, Class::W, Class::U, Class::S, Class::T, Class::R];

    fn parse(t: &str) -> Option<Class> {
        Some(match t {
            "Gamma" | "G" | "Γ" => Class::Gamma,
            "V" => Class::V,
            "W" => Class::W,
            "U" => Class::U,
            "S" => Class::S,
            "T" => Class::T,
            "R" => Class::R,
            _ => return None,
        })
    }

    /// Lower-case constant name used in transcripts (`1` for Γ).
    pub fn constant_name(self) -> &'static str {
        match self {
            Class::Gamma => "1",
            Class::V => "v",
            Class::W => "w",
            Class::U => "u",
            Class::S => "s",
            Class::T => "t",
            Class::R => "r",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Class::Gamma => "Gamma",
            Class::V => "V",
            Class::W => "W",
            Class::U => "U",
            Class::S => "S",
            Class::T => "T",
            Class::R => "R",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub mult: u32,
    pub class: Class,
    /// Level d−1 (`X'`) rather than level d.
    pub prev: bool,
}

/// One alternative `class <= [q_k *] (terms)`. No terms means the bound 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub class: Class,
    pub coeff: Option<usize>,
    pub terms: Vec<Term>,
}

impl Alternative {
    fn same_level(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| !t.prev)
    }

    fn is_pass_through(&self) -> bool {
        !self.terms.is_empty() && self.terms.iter().all(|t| !t.prev)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSystem {
    pub alternatives: Vec<Alternative>,
    /// Classes in same-level dependency order.
    pub order: Vec<Class>,
}

impl CaseSystem {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SYSTEM).expect("built-in case system parses")
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut alternatives = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let alt = parse_alternative(body).map_err(|msg| ParseError::Line { line, msg })?;
            alternatives.push(alt);
        }
        if alternatives.is_empty() {
            return Err(ParseError::Other("case system has no alternatives".into()));
        }
        let order = dependency_order(&alternatives)?;
        Ok(CaseSystem { alternatives, order })
    }

    pub fn classes(&self) -> impl Iterator<Item = Class> + '_ {
        self.order.iter().copied()
    }

    fn of(&self, c: Class) -> impl Iterator<Item = &Alternative> {
        self.alternatives.iter().filter(move |a| a.class == c)
    }
}

fn parse_alternative(body: &str) -> Result<Alternative, String> {
    let (lhs, rhs) = body.split_once("<=").ok_or("expected `CLASS <= ...`")?;
    let class = Class::parse(lhs.trim()).ok_or_else(|| format!("unknown class {:?}", lhs.trim()))?;
    let mut rhs = rhs.trim();
    let mut coeff = None;
    if let Some(rest) = rhs.strip_prefix('q') {
        let (k, rest) = rest.split_once('*').ok_or("expected `qK * ( ... )`")?;
        let k: usize = k.trim().parse().map_err(|_| format!("bad coefficient index {:?}", k.trim()))?;
        if !(1..=7).contains(&k) {
            return Err(format!("coefficient index {k} outside 1..=7"));
        }
        coeff = Some(k);
        rhs = rest.trim();
    }
    let inner = match rhs.strip_prefix('(') {
        Some(r) => r.strip_suffix(')').ok_or("unbalanced parentheses")?.trim(),
        None if coeff.is_some() => return Err("expected parentheses after the coefficient".into()),
        None => rhs,
    };
    let mut terms = Vec::new();
    if inner != "0" {
        for tok in inner.split('+') {
            let tok = tok.trim();
            let (mult, name) = match tok.split_once('*') {
                Some((m, n)) => (m.trim().parse::<u32>().map_err(|_| format!("bad multiplier {:?}", m.trim()))?, n.trim()),
                None => (1, tok),
            };
            let (name, prev) = match name.strip_suffix('\'') {
                Some(n) => (n, true),
                None => (name, false),
            };
            let c = Class::parse(name).ok_or_else(|| format!("unknown class {name:?}"))?;
            if mult == 0 {
                return Err("multiplier must be positive".into());
            }
            terms.push(Term { mult, class: c, prev });
        }
    }
    let alt = Alternative { class, coeff, terms };
    if alt.coeff.is_none() && alt.terms.iter().any(|t| t.prev) {
        return Err("level d−1 terms need a coefficient".into());
    }
    if alt.coeff.is_some() && alt.terms.iter().any(|t| !t.prev) {
        return Err("same-level terms cannot carry a coefficient".into());
    }
    Ok(alt)
}

/// Topological order of same-level references; among ready classes the one
/// defined last in the file goes first.
fn dependency_order(alts: &[Alternative]) -> Result<Vec<Class>, ParseError> {
    let mut seen: Vec<Class> = Vec::new();
    for c in alts.iter().map(|a| a.class).chain(alts.iter().flat_map(|a| a.terms.iter().map(|t| t.class))) {
        if !seen.contains(&c) {
            seen.push(c);
        }
    }
    let deps = |c: Class| -> Vec<Class> {
        alts.iter().filter(|a| a.class == c).flat_map(|a| a.same_level().map(|t| t.class)).collect()
    };
    let mut order: Vec<Class> = Vec::new();
    while order.len() < seen.len() {
        let next = seen
            .iter()
            .rev()
            .find(|c| !order.contains(c) && deps(**c).iter().all(|d| order.contains(d) && d != *c));
        match next {
            Some(c) => order.push(*c),
            None => return Err(ParseError::Other("same-level references form a cycle".into())),
        }
    }
    Ok(order)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassConstants {
    #[serde(with = "serde_rat")]
    pub v: Rat,
    #[serde(with = "serde_rat")]
    pub w: Rat,
    #[serde(with = "serde_rat")]
    pub u: Rat,
    #[serde(with = "serde_rat")]
    pub s: Rat,
    #[serde(with = "serde_rat")]
    pub t: Rat,
    #[serde(with = "serde_rat")]
    pub r: Rat,
}

impl ClassConstants {
    pub fn get(&self, c: Class) -> Rat {
        match c {
            Class::Gamma => Rat::one(),
            Class::V => self.v.clone(),
            Class::W => self.w.clone(),
            Class::U => self.u.clone(),
            Class::S => self.s.clone(),
            Class::T => self.t.clone(),
            Class::R => self.r.clone(),
        }
    }

    fn from_map(m: &BTreeMap<Class, Rat>) -> Self {
        let g = |c| m.get(&c).cloned().unwrap_or_else(Rat::zero);
        ClassConstants { v: g(Class::V), w: g(Class::W), u: g(Class::U), s: g(Class::S), t: g(Class::T), r: g(Class::R) }
    }

    fn all(&self) -> [&Rat; 6] {
        [&self.v, &self.w, &self.u, &self.s, &self.t, &self.r]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantTable {
    pub q: u8,
    #[serde(with = "serde_rat")]
    pub a: Rat,
    #[serde(with = "serde_rat")]
    pub b: Rat,
    #[serde(with = "serde_rat")]
    pub delta: Rat,
    #[serde(with = "serde_rat")]
    pub eps: Rat,
    #[serde(with = "serde_rat::vec")]
    pub p: Vec<Rat>,
    pub constants: Option<ClassConstants>,
}

impl ConstantTable {
    pub fn builtin(q: u8) -> Option<Self> {
        let text = match q {
            6 => BUILTIN_TABLE_Q6,
            5 => BUILTIN_TABLE_Q5,
            4 => BUILTIN_TABLE_Q4,
            3 => BUILTIN_TABLE_Q3,
            _ => return None,
        };
        Some(Self::parse(text).expect("built-in table parses"))
    }

    pub fn builtin_text(q: u8) -> Option<&'static str> {
        Some(match q {
            6 => BUILTIN_TABLE_Q6,
            5 => BUILTIN_TABLE_Q5,
            4 => BUILTIN_TABLE_Q4,
            3 => BUILTIN_TABLE_Q3,
            _ => return None,
        })
    }

    /// Parses whitespace-separated `key=value` tokens; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut kv: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("");
            for tok in body.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| ParseError::Line { line: idx + 1, msg: format!("expected key=value, got {tok:?}") })?;
                if kv.insert(k.to_string(), (v.to_string(), idx + 1)).is_some() {
                    return Err(ParseError::Line { line: idx + 1, msg: format!("duplicate key {k:?}") });
                }
            }
        }
        let take = |k: &str| kv.get(k).cloned().ok_or_else(|| ParseError::Other(format!("missing key {k:?}")));
        let num = |k: &str| -> Result<Rat, ParseError> {
            let (v, line) = take(k)?;
            parse_rat(&v).map_err(|_| ParseError::Line { line, msg: format!("{k}: not an exact rational: {v:?}") })
        };
        let (qv, qline) = take("q")?;
        let q: u8 = qv.parse().map_err(|_| ParseError::Line { line: qline, msg: format!("bad q {qv:?}") })?;
        let (iv, iline) = take("interval")?;
        let (a, b) = iv
            .split_once(',')
            .ok_or_else(|| ParseError::Line { line: iline, msg: "interval must be `a,b`".into() })?;
        let (a, b) = (parse_rat(a)?, parse_rat(b)?);
        let p = (1..=7).map(|i| num(&format!("p{i}"))).collect::<Result<Vec<_>, _>>()?;
        let names = ["v", "w", "u", "s", "t", "r"];
        let present = names.iter().filter(|n| kv.contains_key(**n)).count();
        let constants = match present {
            0 => None,
            6 => Some(ClassConstants { v: num("v")?, w: num("w")?, u: num("u")?, s: num("s")?, t: num("t")?, r: num("r")? }),
            _ => return Err(ParseError::Other("give all of v, w, u, s, t, r or none".into())),
        };
        let known = ["q", "interval", "delta", "eps", "p1", "p2", "p3", "p4", "p5", "p6", "p7"];
        if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str()) && !names.contains(&k.as_str())) {
            return Err(ParseError::Other(format!("unknown key {k:?}")));
        }
        let table = ConstantTable { q, a, b, delta: num("delta")?, eps: num("eps")?, p, constants };
        table.validate().map_err(|e| ParseError::Other(e.to_string()))?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_negative() || self.a > self.b || self.b > Rat::one() {
            return Err(invalid(format!("bad interval [{}, {}]", self.a, self.b)));
        }
        if !self.eps.is_positive() || self.eps >= Rat::one() {
            return Err(invalid("eps must lie in (0, 1)"));
        }
        if self.p.len() != 7 {
            return Err(invalid("need seven p values"));
        }
        if let Some(c) = &self.constants {
            if c.all().iter().any(|x| !x.is_positive() || **x > Rat::one()) {
                return Err(invalid("class constants must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// `q_i = p_i + δ`, 1-based.
    pub fn q_value(&self, i: usize) -> Rat {
        &self.p[i - 1] + &self.delta
    }

    pub fn q_values(&self) -> Vec<Rat> {
        (1..=7).map(|i| self.q_value(i)).collect()
    }

    /// Bound on Γ_1 from the single-site bound at the left end of the interval.
    pub fn base_value(&self) -> Result<Rat> {
        single_node_bound(NodeBoundParams::lattice(self.q as u32)?, &self.a)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "q={} interval={},{} delta={} eps={}\n",
            self.q,
            fmt_rat(&self.a),
            fmt_rat(&self.b),
            fmt_rat(&self.delta),
            fmt_rat(&self.eps)
        );
        let ps: Vec<String> = self.p.iter().enumerate().map(|(i, p)| format!("p{}={}", i + 1, fmt_rat(p))).collect();
        s += &ps.join(" ");
        s.push('\n');
        if let Some(c) = &self.constants {
            s += &format!(
                "v={} w={} u={} s={} t={} r={}\n",
                fmt_rat(&c.v),
                fmt_rat(&c.w),
                fmt_rat(&c.u),
                fmt_rat(&c.s),
                fmt_rat(&c.t),
                fmt_rat(&c.r)
            );
        }
        s
    }
}

/// One checked inequality with both sides exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inequality {
    pub label: String,
    pub class: Option<Class>,
    #[serde(with = "serde_rat")]
    pub lhs: Rat,
    #[serde(with = "serde_rat")]
    pub rhs: Rat,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InductionTranscript {
    pub base: Inequality,
    pub steps: Vec<Inequality>,
}

impl InductionTranscript {
    pub fn passed(&self) -> bool {
        self.base.holds && self.steps.iter().all(|i| i.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Inequality> {
        std::iter::once(&self.base).chain(&self.steps).filter(|i| !i.holds)
    }

    pub fn first_failure(&self) -> Option<&Inequality> {
        self.failures().next()
    }
}

fn combo_label(alt: &Alternative) -> String {
    let parts: Vec<String> = alt
        .terms
        .iter()
        .map(|t| if t.mult == 1 { t.class.constant_name().to_string() } else { format!("{}{}", t.mult, t.class.constant_name()) })
        .collect();
    parts.join("+")
}

fn label(alt: &Alternative) -> String {
    let c = alt.class.constant_name();
    let rhs_eps = if alt.class == Class::Gamma { "1-eps".to_string() } else { format!("{c}(1-eps)") };
    match alt.coeff {
        Some(k) if alt.terms.len() == 1 && alt.terms[0].mult == 1 => {
            format!("q{k}{} <= {rhs_eps}", alt.terms[0].class.constant_name())
        }
        Some(k) => format!("q{k}({}) <= {rhs_eps}", combo_label(alt)),
        None if alt.terms.is_empty() => format!("0 <= {c}"),
        None => format!("{} <= {c}", combo_label(alt)),
    }
}

/// Both sides of the induction step for one alternative:
/// `q_k Σ m·c' ≤ c(1−ε)` for level d−1 terms, `Σ m·c ≤ c` for same-level
/// pass-through, `0 ≤ c` for the empty bound.
fn sides(alt: &Alternative, qv: &[Rat], consts: &ClassConstants, eps: &Rat) -> (Rat, Rat) {
    let one_minus = Rat::one() - eps;
    let c = consts.get(alt.class);
    let sum: Rat = alt
        .terms
        .iter()
        .map(|t| Rat::from_integer(t.mult.into()) * consts.get(t.class))
        .fold(Rat::zero(), |a, b| a + b);
    if alt.terms.is_empty() {
        (Rat::zero(), c)
    } else if alt.is_pass_through() {
        (sum, c)
    } else {
        (&qv[alt.coeff.expect("level d−1 terms carry a coefficient") - 1] * sum, c * one_minus)
    }
}

/// Checks every inequality the induction on d needs, in exact arithmetic.
pub fn check_induction(system: &CaseSystem, table: &ConstantTable) -> Result<InductionTranscript> {
    let consts = table.constants.as_ref().ok_or_else(|| invalid("table has no class constants"))?;
    check_with(system, &table.q_values(), consts, &table.eps, &table.base_value()?)
}

/// [`check_induction`] with explicit q values, constants and base value.
pub fn check_with(system: &CaseSystem, qv: &[Rat], consts: &ClassConstants, eps: &Rat, base: &Rat) -> Result<InductionTranscript> {
    if qv.len() != 7 {
        return Err(invalid("need seven q values"));
    }
    let one_minus = Rat::one() - eps;
    let min = consts.all().into_iter().fold(Rat::one(), |m, x| m.min(x.clone()));
    let base_rhs = &min * &one_minus;
    let base = Inequality {
        label: format!("{} <= min(1,v,w,u,s,t,r)(1-eps)", fmt_rat(base)),
        class: None,
        holds: *base <= base_rhs,
        lhs: base.clone(),
        rhs: base_rhs,
    };
    let mut steps = Vec::new();
    for class in system.classes() {
        for alt in system.of(class) {
            let (lhs, rhs) = sides(alt, qv, consts, eps);
            steps.push(Inequality { label: label(alt), class: Some(class), holds: lhs <= rhs, lhs, rhs });
        }
    }
    Ok(InductionTranscript { base, steps })
}

/// Why no constants were found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Infeasible {
    pub binding: String,
    pub reason: String,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.reason, self.binding)
    }
}

const MAX_ITERATIONS: usize = 100_000;

/// Least class constants satisfying the system, found by fixed-point
/// iteration from the base-case floor, then rounded up to small-denominator
/// rationals and verified exactly.
pub fn find_constants(system: &CaseSystem, qv: &[Rat], eps: &Rat, base: &Rat) -> Result<std::result::Result<ClassConstants, Infeasible>> {
    if qv.len() != 7 {
        return Err(invalid("need seven q values"));
    }
    if !eps.is_positive() || *eps >= Rat::one() {
        return Err(invalid("eps must lie in (0, 1)"));
    }
    let qf: Vec<f64> = qv.iter().map(to_f64).collect();
    let keep = 1.0 - to_f64(eps);
    let floor = to_f64(base) / keep;
    let mut val: BTreeMap<Class, f64> = Class::ALL.iter().map(|c| (*c, 0.0)).collect();
    val.insert(Class::Gamma, 1.0);
    let mut argmax: BTreeMap<Class, String> = BTreeMap::new();
    let mut stable = false;
    for _ in 0..MAX_ITERATIONS {
        let mut change = 0.0f64;
        for class in system.classes().filter(|c| *c != Class::Gamma) {
            let mut best = (floor, "base case".to_string());
            for alt in system.of(class) {
                let sum: f64 = alt.terms.iter().map(|t| t.mult as f64 * val[&t.class]).sum();
                let v = match alt.coeff {
                    Some(k) => qf[k - 1] * sum / keep,
                    None => sum,
                };
                if v > best.0 {
                    best = (v, label(alt));
                }
            }
            change = change.max((best.0 - val[&class]).abs());
            val.insert(class, best.0);
            if best.0 > 1.0 {
                return Ok(Err(Infeasible {
                    binding: best.1,
                    reason: format!("constant for {class} exceeds its cap 1"),
                }));
            }
            argmax.insert(class, best.1);
        }
        if change < 1e-15 {
            stable = true;
            break;
        }
    }
    if !stable {
        return Ok(Err(Infeasible { binding: "iteration".into(), reason: "fixed point did not converge".into() }));
    }
    for alt in system.of(Class::Gamma) {
        let sum: f64 = alt.terms.iter().map(|t| t.mult as f64 * val[&t.class]).sum();
        let ok = match alt.coeff {
            Some(k) => qf[k - 1] * sum <= keep,
            None => sum <= 1.0,
        };
        if !ok {
            return Ok(Err(Infeasible { binding: label(alt), reason: "Gamma bound exceeds 1-eps".into() }));
        }
    }
    for max_den in [100u64, 1000, 10_000] {
        for inflate in [0.0, 1e-4, 1e-3, 3e-3, 1e-2, 3e-2] {
            let m: BTreeMap<Class, Rat> = val
                .iter()
                .map(|(c, v)| {
                    let x = Rat::from_float(v * (1.0 + inflate)).unwrap_or_else(Rat::one);
                    (*c, round_up(&x, max_den).min(Rat::one()))
                })
                .collect();
            let consts = ClassConstants::from_map(&m);
            if check_with(system, qv, &consts, eps, base)?.passed() {
                return Ok(Ok(consts));
            }
        }
    }
    Ok(Err(Infeasible {
        binding: "rounding".into(),
        reason: "no rounded constants pass the exact check".into(),
    }))
}

/// The table with constants filled in by [`find_constants`] when missing.
pub fn complete_table(system: &CaseSystem, table: &ConstantTable) -> Result<std::result::Result<ConstantTable, Infeasible>> {
    if table.constants.is_some() {
        return Ok(Ok(table.clone()));
    }
    let found = find_constants(system, &table.q_values(), &table.eps, &table.base_value()?)?;
    Ok(found.map(|c| ConstantTable { constants: Some(c), ..table.clone() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn q6() -> ConstantTable {
        ConstantTable::builtin(6).unwrap()
    }

    #[test]
    fn builtin_system_shape() {
        let sys = CaseSystem::builtin();
        assert_eq!(sys.alternatives.len(), 27);
        assert_eq!(sys.order, vec![Class::R, Class::T, Class::S, Class::U, Class::W, Class::V, Class::Gamma]);
        let per = |c| sys.of(c).count();
        assert_eq!([per(Class::Gamma), per(Class::V), per(Class::W), per(Class::U), per(Class::S), per(Class::T), per(Class::R)], [6, 7, 3, 4, 3, 2, 2]);
    }

    #[test]
    fn six_colour_ledger_passes() {
        let tr = check_induction(&CaseSystem::builtin(), &q6()).unwrap();
        assert!(tr.passed(), "{:?}", tr.first_failure());
        assert_eq!(tr.base.lhs, rat(1, 2));
        assert_eq!(tr.base.rhs, rat(7, 10) * rat(999, 1000));
        let find = |l: &str| tr.steps.iter().find(|i| i.label == l).unwrap_or_else(|| panic!("missing {l}"));
        let q = |i| q6().q_value(i);
        let keep = rat(999, 1000);
        assert_eq!(find("q1(1+2v) <= 1-eps").lhs, q(1) * (int(1) + rat(184, 100)));
        assert_eq!(find("q7(2w) <= 1-eps").rhs, keep.clone());
        assert_eq!(find("q7(w+s) <= t(1-eps)").lhs, q(7) * rat(162, 100));
        assert_eq!(find("q7w <= r(1-eps)").rhs, rat(7, 10) * &keep);
        assert_eq!(find("q2(r+1+t) <= v(1-eps)").lhs, q(2) * rat(24, 10));
        assert!(find("r <= t").holds && find("u <= 1").holds && find("0 <= r").holds);
    }

    #[test]
    fn mutation_of_q7() {
        let mut t = q6();
        t.p[6] = rat(1, 2) - &t.delta;
        let tr = check_induction(&CaseSystem::builtin(), &t).unwrap();
        let first = tr.first_failure().unwrap();
        assert_eq!(first.label, "q7(w+s) <= t(1-eps)");
        assert_eq!(first.lhs, rat(81, 100));
        assert_eq!(first.rhs, rat(6993, 10000));
    }

    #[test]
    fn each_inequality_is_decisive() {
        let tr = check_induction(&CaseSystem::builtin(), &q6()).unwrap();
        for i in 0..tr.steps.len() {
            let mut m = tr.clone();
            let ineq = &mut m.steps[i];
            ineq.rhs = &ineq.lhs - rat(1, 10);
            ineq.holds = ineq.lhs <= ineq.rhs;
            assert!(!m.passed());
            assert_eq!(m.failures().count(), 1);
        }
    }

    #[test]
    fn trivial_system() {
        let consts = ClassConstants { v: int(1), w: int(1), u: int(1), s: int(1), t: int(1), r: int(1) };
        let qv = vec![rat(1, 3); 7];
        let tr = check_with(&CaseSystem::builtin(), &qv, &consts, &Rat::zero(), &rat(1, 2)).unwrap();
        assert!(tr.passed());
    }

    #[test]
    fn search_six_colours() {
        let sys = CaseSystem::builtin();
        let t = q6();
        let c = find_constants(&sys, &t.q_values(), &t.eps, &t.base_value().unwrap()).unwrap().unwrap();
        assert!(check_with(&sys, &t.q_values(), &c, &t.eps, &rat(1, 2)).unwrap().passed());
        for x in c.all() {
            assert!(*x.denom() <= 100.into());
        }
    }

    #[test]
    fn search_fails_for_halves() {
        let sys = CaseSystem::builtin();
        let r = find_constants(&sys, &vec![rat(1, 2); 7], &rat(1, 1000), &rat(1, 2)).unwrap();
        assert!(r.is_err());
    }

    #[test]
    fn table_round_trip() {
        for q in 3..=6 {
            let t = ConstantTable::builtin(q).unwrap();
            assert_eq!(ConstantTable::parse(&t.to_text()).unwrap(), t);
        }
        assert!(ConstantTable::parse("q=6 interval=0,1 delta=1/1000 eps=1/1000").is_err());
        assert!(ConstantTable::parse(&(q6().to_text() + " x=1")).is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(CaseSystem::parse("X <= U").is_err());
        assert!(CaseSystem::parse("U <= q9 * ( V' )").is_err());
        assert!(CaseSystem::parse("U <= V'").is_err());
        assert!(CaseSystem::parse("U <= R\nR <= U").is_err());
        assert!(CaseSystem::parse("U <= q1 * ( V' + R )").is_err());
        let s = CaseSystem::parse("U <= q3 * ( 2*V' )\nU <= R\nR <= 0").unwrap();
        assert_eq!(s.alternatives[0].terms, vec![Term { mult: 2, class: Class::V, prev: true }]);
    }
}
