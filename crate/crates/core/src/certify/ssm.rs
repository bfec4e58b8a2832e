//! End-to-end certificates: region bounds for all seven regions, the
//! left-endpoint evaluation and the induction.

use serde::{Deserialize, Serialize};

use super::engine::PairEngine;
use super::region::{certify_region_bound, recheck_region, RegionBoundCert, RegionVerdict, SlotValues};
use crate::bound::DEFAULT_MAX_DEPTH;
use super::system::{check_induction, complete_table, CaseSystem, ConstantTable, InductionTranscript, Infeasible};
use crate::error::{invalid, Result};
use crate::lattice::{parse_region_file, RegionSpec};
use crate::rational::{fmt_rat, serde_rat, Rat};

pub const BUILTIN_REGIONS: &str = include_str!("../../data/regions.txt");

/// The seven built-in regions, in order Q1..Q7.
pub fn builtin_regions() -> Vec<RegionSpec> {
    parse_region_file(BUILTIN_REGIONS).expect("built-in regions parse")
}

/// Exact maximum of μ over the canonical boundary pairs of `spec`, with a
/// maximizing pair.
pub fn max_mu_at(spec: &RegionSpec, q: u8, lambda: &Rat) -> Result<(Rat, SlotValues)> {
    let (v, a) = PairEngine::new(&spec.region, spec.s, q)?.max_mu_at(lambda)?;
    Ok((v, SlotValues::from(&a)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeftValue {
    #[serde(with = "serde_rat")]
    pub lambda: Rat,
    #[serde(with = "serde_rat")]
    pub max_mu: Rat,
    pub pair: SlotValues,
    /// `max_mu ≤ q_i`.
    pub within_target: bool,
    /// `max_mu < p_i`.
    pub strictly_below_p: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub index: usize,
    pub left: LeftValue,
    pub cert: RegionBoundCert,
}

impl RegionEntry {
    pub fn passed(&self) -> bool {
        self.left.within_target && self.cert.is_certified()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SsmVerdict {
    Certified,
    Refuted { reason: String },
    Unknown { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsmCertificate {
    pub q: u8,
    #[serde(with = "serde_rat")]
    pub a: Rat,
    #[serde(with = "serde_rat")]
    pub b: Rat,
    /// Constants used, including any found by search.
    pub table: ConstantTable,
    pub constants_searched: bool,
    pub system: CaseSystem,
    pub regions: Vec<RegionEntry>,
    pub transcript: Option<InductionTranscript>,
    pub infeasible: Option<Infeasible>,
    pub verdict: SsmVerdict,
}

impl SsmCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == SsmVerdict::Certified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("bad certificate: {e}")))
    }
}

/// Options for [`certify_ssm_with`].
#[derive(Clone, Debug)]
pub struct SsmOptions {
    pub table: ConstantTable,
    pub system: CaseSystem,
    pub regions: Vec<RegionSpec>,
    pub max_depth: u32,
}

impl SsmOptions {
    pub fn builtin(q: u8) -> Result<Self> {
        let table = ConstantTable::builtin(q).ok_or_else(|| invalid(format!("no built-in constant table for q = {q}")))?;
        Ok(SsmOptions { table, system: CaseSystem::builtin(), regions: builtin_regions(), max_depth: DEFAULT_MAX_DEPTH })
    }
}

/// Certificate for `q` on `[a, b]` from the built-in table, system and regions.
pub fn certify_ssm(q: u8, a: &Rat, b: &Rat) -> Result<SsmCertificate> {
    certify_ssm_with(&SsmOptions::builtin(q)?, a, b, |_| {})
}

/// Runs the region bounds for every region against `q_i` on `[a, b]`, the
/// exact maximum at the table's left endpoint, and the induction.
/// `progress` sees each region entry as it completes.
pub fn certify_ssm_with(opts: &SsmOptions, a: &Rat, b: &Rat, mut progress: impl FnMut(&RegionEntry)) -> Result<SsmCertificate> {
    let table = &opts.table;
    if opts.regions.len() != 7 {
        return Err(invalid(format!("need seven regions, got {}", opts.regions.len())));
    }
    if a > b || *a < table.a || *b > table.b {
        return Err(invalid(format!(
            "[{}, {}] is not inside the table interval [{}, {}]",
            fmt_rat(a),
            fmt_rat(b),
            fmt_rat(&table.a),
            fmt_rat(&table.b)
        )));
    }
    let mut regions = Vec::with_capacity(7);
    for (i, spec) in opts.regions.iter().enumerate() {
        let target = table.q_value(i + 1);
        let cert = certify_region_bound(spec, table.q, a, b, &target, opts.max_depth)?;
        let left = left_value(spec, table, i)?;
        let entry = RegionEntry { index: i + 1, left, cert };
        progress(&entry);
        regions.push(entry);
    }
    let (filled, infeasible) = match complete_table(&opts.system, table)? {
        Ok(t) => (t, None),
        Err(e) => (table.clone(), Some(e)),
    };
    let transcript = match infeasible {
        None => Some(check_induction(&opts.system, &filled)?),
        Some(_) => None,
    };
    let verdict = verdict(&regions, transcript.as_ref(), infeasible.as_ref());
    Ok(SsmCertificate {
        q: table.q,
        a: a.clone(),
        b: b.clone(),
        constants_searched: table.constants.is_none(),
        table: filled,
        system: opts.system.clone(),
        regions,
        transcript,
        infeasible,
        verdict,
    })
}

fn left_value(spec: &RegionSpec, table: &ConstantTable, i: usize) -> Result<LeftValue> {
    let (max_mu, pair) = max_mu_at(spec, table.q, &table.a)?;
    Ok(LeftValue {
        lambda: table.a.clone(),
        within_target: max_mu <= table.q_value(i + 1),
        strictly_below_p: max_mu < table.p[i],
        max_mu,
        pair,
    })
}

fn verdict(regions: &[RegionEntry], transcript: Option<&InductionTranscript>, infeasible: Option<&Infeasible>) -> SsmVerdict {
    for r in regions {
        match &r.cert.verdict {
            RegionVerdict::Certified => {}
            RegionVerdict::Refuted { .. } => {
                return SsmVerdict::Refuted { reason: format!("region Q{} exceeds q{} on the interval", r.index, r.index) }
            }
            RegionVerdict::Unknown { .. } => {
                return SsmVerdict::Unknown { reason: format!("region Q{} not certified within the depth limit", r.index) }
            }
        }
        if !r.left.within_target {
            return SsmVerdict::Refuted {
                reason: format!("region Q{} has max μ {} > q{} at λ = {}", r.index, fmt_rat(&r.left.max_mu), r.index, fmt_rat(&r.left.lambda)),
            };
        }
    }
    if let Some(e) = infeasible {
        return SsmVerdict::Unknown { reason: format!("no class constants: {e}") };
    }
    match transcript.and_then(|t| t.first_failure()) {
        Some(f) => SsmVerdict::Refuted { reason: format!("induction fails at {}: {} > {}", f.label, fmt_rat(&f.lhs), fmt_rat(&f.rhs)) },
        None => SsmVerdict::Certified,
    }
}

/// Independent pass over a stored certificate: every region is rechecked,
/// the left-endpoint maxima and the transcript are recomputed, and the
/// verdict must come out identical.
pub fn recheck_ssm(cert: &SsmCertificate) -> Result<bool> {
    let table = &cert.table;
    if cert.regions.len() != 7 || cert.q != table.q {
        return Ok(false);
    }
    for (i, r) in cert.regions.iter().enumerate() {
        let c = &r.cert;
        if r.index != i + 1 || c.q != cert.q || c.a != cert.a || c.b != cert.b || c.target != table.q_value(i + 1) {
            return Ok(false);
        }
        if !recheck_region(c)? {
            return Ok(false);
        }
        if left_value(&c.region, table, i)? != r.left {
            return Ok(false);
        }
    }
    let transcript = match (&table.constants, &cert.infeasible) {
        (Some(_), None) => Some(check_induction(&cert.system, table)?),
        (None, Some(_)) => None,
        _ => return Ok(false),
    };
    if transcript != cert.transcript {
        return Ok(false);
    }
    Ok(verdict(&cert.regions, transcript.as_ref(), cert.infeasible.as_ref()) == cert.verdict)
}

/// `max μ(Q_i) < p_i` at the table's left endpoint, per region.
pub fn strict_upper_bounds(table: &ConstantTable, regions: &[RegionSpec]) -> Result<Vec<(Rat, bool)>> {
    regions
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let (v, _) = max_mu_at(spec, table.q, &table.a)?;
            let below = v < table.p[i];
            Ok((v, below))
        })
        .collect()
}
