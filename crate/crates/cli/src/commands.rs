use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use ssmcheck_core::analytic::{general_graph_check, threshold_check};
use ssmcheck_core::bound::mu_eval;
use ssmcheck_core::certify::region::{certify_region_bound, RegionVerdict};
use ssmcheck_core::certify::shapes::{reconstruct_regions, SearchCaps};
use ssmcheck_core::certify::ssm::{builtin_regions, certify_ssm_with, max_mu_at, recheck_ssm, SsmCertificate, SsmOptions, SsmVerdict};
use ssmcheck_core::certify::system::{check_induction, complete_table, CaseSystem, ConstantTable, InductionTranscript};
use ssmcheck_core::coupling::{build_tree, gamma_d, nu_exact, verify_coupling_bounds, Completion};
use ssmcheck_core::glauber::{decay_csv, disagreement_decay, rectangle, stationarity_test, tv_csv, RunParams, VertexBoundary};
use ssmcheck_core::lattice::{parse_pair_file, parse_region_file, two_site_example, write_pair_file, BoundaryPair};
use ssmcheck_core::rational::fmt_rat;
use ssmcheck_core::{Rat, Region, RegionSpec, Site};

use crate::args::*;
use crate::report::{Report, Status};

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_table(src: &Source, q: u8) -> Result<ConstantTable> {
    let table = match src {
        Source::Builtin => ConstantTable::builtin(q).ok_or_else(|| anyhow!("no built-in constant table for q = {q}"))?,
        Source::File(p) => ConstantTable::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
    };
    if table.q != q {
        bail!("constant table is for q = {}, not {q}", table.q);
    }
    Ok(table)
}

fn load_regions(src: &Source) -> Result<Vec<RegionSpec>> {
    Ok(match src {
        Source::Builtin => builtin_regions(),
        Source::File(p) => parse_region_file(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
    })
}

fn load_system(src: &Source) -> Result<CaseSystem> {
    Ok(match src {
        Source::Builtin => CaseSystem::builtin(),
        Source::File(p) => CaseSystem::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
    })
}

fn load_pair(src: &Source) -> Result<BoundaryPair> {
    Ok(match src {
        Source::Builtin => two_site_example(),
        Source::File(p) => parse_pair_file(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
    })
}

fn label(spec: &RegionSpec, i: usize) -> String {
    spec.label.clone().unwrap_or_else(|| format!("region {}", i + 1))
}

fn transcript_text(out: &mut String, t: &InductionTranscript) {
    for ineq in std::iter::once(&t.base).chain(&t.steps) {
        let mark = if ineq.holds { "ok  " } else { "FAIL" };
        let _ = writeln!(out, "  {mark} {:<28} {} <= {}", ineq.label, fmt_rat(&ineq.lhs), fmt_rat(&ineq.rhs));
    }
}

fn ssm_status(v: &SsmVerdict) -> Status {
    match v {
        SsmVerdict::Certified => Status::Certified,
        SsmVerdict::Refuted { .. } => Status::Refuted,
        SsmVerdict::Unknown { .. } => Status::Unknown,
    }
}

fn verdict_text(v: &SsmVerdict) -> String {
    match v {
        SsmVerdict::Certified => "certified".into(),
        SsmVerdict::Refuted { reason } => format!("refuted: {reason}"),
        SsmVerdict::Unknown { reason } => format!("unknown: {reason}"),
    }
}

pub fn certify(args: &CertifyArgs) -> Result<Report> {
    let table = load_table(&args.data.constants, args.q)?;
    let a = args.lambda_min.clone().unwrap_or_else(|| if table.a == Rat::from_integer(0.into()) { ssmcheck_core::rational::rat(1, 1000) } else { table.a.clone() });
    let b = args.lambda_max.clone().unwrap_or_else(|| table.b.clone());
    let opts = SsmOptions {
        table,
        system: load_system(&args.data.system)?,
        regions: load_regions(&args.data.regions)?,
        max_depth: args.max_depth,
    };
    let cert = certify_ssm_with(&opts, &a, &b, |e| {
        eprintln!(
            "Q{}: {} pairs, {} functions, {}",
            e.index,
            e.cert.pairs,
            e.cert.functions,
            if e.passed() { "ok" } else { "failed" }
        )
    })?;
    let path = args.certificate.clone().unwrap_or_else(|| PathBuf::from(format!("certificate-q{}.json", args.q)));
    fs::write(&path, cert.to_json()).with_context(|| format!("writing {}", path.display()))?;

    let mut text = format!("q = {} on [{}, {}]\n", cert.q, fmt_rat(&cert.a), fmt_rat(&cert.b));
    for r in &cert.regions {
        let _ = writeln!(
            text,
            "Q{}: target {}  pairs {}  functions {}  max at {} = {}  {}",
            r.index,
            fmt_rat(&r.cert.target),
            r.cert.pairs,
            r.cert.functions,
            fmt_rat(&r.left.lambda),
            fmt_rat(&r.left.max_mu),
            if r.passed() { "certified" } else { "FAILED" }
        );
    }
    if cert.constants_searched {
        text.push_str("constants found by search\n");
    }
    if let Some(t) = &cert.transcript {
        text.push_str("induction:\n");
        transcript_text(&mut text, t);
    }
    let _ = writeln!(text, "verdict: {}\ncertificate: {}", verdict_text(&cert.verdict), path.display());

    let regions: Vec<_> = cert
        .regions
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "target": fmt_rat(&r.cert.target),
                "pairs": r.cert.pairs,
                "functions": r.cert.functions,
                "digest": r.cert.digest,
                "certified": r.cert.is_certified(),
                "left": r.left,
            })
        })
        .collect();
    let data = json!({
        "certificate": path.display().to_string(),
        "q": cert.q,
        "a": fmt_rat(&cert.a),
        "b": fmt_rat(&cert.b),
        "table": cert.table,
        "regions": regions,
        "transcript": cert.transcript,
        "verdict": cert.verdict,
    });
    Ok(Report::new("certify", ssm_status(&cert.verdict), data, text))
}

pub fn recheck(args: &RecheckArgs) -> Result<Report> {
    let cert = SsmCertificate::from_json(&read(&args.certificate)?)?;
    let ok = recheck_ssm(&cert)?;
    let text = format!(
        "stored verdict: {}\nrecheck: {}\n",
        verdict_text(&cert.verdict),
        if ok { "reproduced" } else { "MISMATCH" }
    );
    let data = json!({ "verdict": cert.verdict, "reproduced": ok });
    Ok(Report::new("recheck", Status::from_bool(ok), data, text))
}

pub fn region_bound(args: &RegionBoundArgs) -> Result<Report> {
    let regions = load_regions(&args.regions)?;
    let spec = regions
        .get(args.index.wrapping_sub(1))
        .ok_or_else(|| anyhow!("region index {} outside 1..={}", args.index, regions.len()))?;
    let cert = certify_region_bound(spec, args.q, &args.a, &args.b, &args.target, args.max_depth)?;
    let status = match cert.verdict {
        RegionVerdict::Certified => Status::Certified,
        RegionVerdict::Refuted { .. } => Status::Refuted,
        RegionVerdict::Unknown { .. } => Status::Unknown,
    };
    let mut text = format!(
        "{}: mu <= {} on [{}, {}]\npairs {}  functions {}  tilings {}\n",
        label(spec, args.index - 1),
        fmt_rat(&args.target),
        fmt_rat(&args.a),
        fmt_rat(&args.b),
        cert.pairs,
        cert.functions,
        cert.tilings.len()
    );
    if let Some(w) = &cert.worst {
        let _ = writeln!(text, "largest piece bound {} on [{}, {}]", fmt_rat(&w.bound), fmt_rat(&w.a), fmt_rat(&w.b));
    }
    match &cert.verdict {
        RegionVerdict::Certified => text.push_str("certified\n"),
        RegionVerdict::Refuted { pair, .. } => {
            let _ = writeln!(text, "refuted by the pair {:?} {:?}", pair.at_s, pair.vals);
        }
        RegionVerdict::Unknown { pair, .. } => {
            let _ = writeln!(text, "unknown: depth limit reached on the pair {:?} {:?}", pair.at_s, pair.vals);
        }
    }
    Ok(Report::new("region-bound", status, &cert, text))
}

pub fn p_values(args: &PValuesArgs) -> Result<Report> {
    #[derive(Serialize)]
    struct Row {
        region: String,
        max_mu: String,
        at_s: (u8, u8),
        slots: Vec<u8>,
    }
    let mut rows = Vec::new();
    let mut text = format!("max mu at lambda = {}, q = {}\n", fmt_rat(&args.lambda), args.q);
    for (i, spec) in load_regions(&args.regions)?.iter().enumerate() {
        let (v, pair) = max_mu_at(spec, args.q, &args.lambda)?;
        let _ = writeln!(text, "{:<12} {}", label(spec, i), fmt_rat(&v));
        rows.push(Row { region: label(spec, i), max_mu: fmt_rat(&v), at_s: pair.at_s, slots: pair.vals });
    }
    Ok(Report::new("p-values", Status::Ok, json!({ "q": args.q, "lambda": fmt_rat(&args.lambda), "regions": rows }), text))
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<Report> {
    let targets = match &args.targets {
        Some(t) => t.clone(),
        None => ConstantTable::builtin(args.q).ok_or_else(|| anyhow!("no built-in p values for q = {}; pass --targets", args.q))?.p,
    };
    let caps = SearchCaps { max_sites: args.max_sites, radius: args.radius };
    let rec = reconstruct_regions(args.q, &args.lambda, &targets, caps)?;
    if let Some(path) = &args.regions_out {
        fs::write(path, rec.to_region_file()).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut text = format!("{} regions scanned (at most {} sites, radius {})\n", rec.scanned.len(), caps.max_sites, caps.radius);
    let mut found = Vec::new();
    for (t, m) in targets.iter().zip(&rec.matches) {
        let shapes: Vec<Vec<(i32, i32)>> = m.iter().map(|&j| rec.scanned[j].region.region.sites().map(|v| (v.x, v.y)).collect()).collect();
        let _ = writeln!(text, "{}: {} match(es)", fmt_rat(t), m.len());
        for s in &shapes {
            let _ = writeln!(text, "    {s:?}");
        }
        found.push(json!({ "target": fmt_rat(t), "regions": shapes }));
    }
    let status = Status::from_bool(rec.unmatched().is_empty());
    Ok(Report::new("reconstruct", status, json!({ "q": args.q, "scanned": rec.scanned.len(), "targets": found }), text))
}

pub fn induction(args: &InductionArgs) -> Result<Report> {
    let q = args.q.unwrap_or(6);
    let table = load_table(&args.data.constants, q)?;
    let system = load_system(&args.data.system)?;
    let searched = table.constants.is_none();
    match complete_table(&system, &table)? {
        Err(inf) => {
            let text = format!("no constants found: {inf}\n");
            Ok(Report::new("induction", Status::Failed, json!({ "infeasible": inf }), text))
        }
        Ok(filled) => {
            let t = check_induction(&system, &filled)?;
            let mut text = String::new();
            if searched {
                text.push_str("constants found by search:\n");
                text.push_str(&filled.to_text());
            }
            transcript_text(&mut text, &t);
            let _ = writeln!(text, "{}", if t.passed() { "all inequalities hold" } else { "induction FAILS" });
            let data = json!({ "table": filled, "searched": searched, "transcript": t, "passed": t.passed() });
            Ok(Report::new("induction", Status::from_bool(t.passed()), data, text))
        }
    }
}

fn parse_sites(s: &str) -> Result<Region> {
    let sites = s
        .split(';')
        .map(|p| {
            let (x, y) = p.split_once(',').ok_or_else(|| anyhow!("site {p:?} is not `x,y`"))?;
            Ok(Site::new(x.trim().parse()?, y.trim().parse()?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Region::new(sites))
}

pub fn nu(args: &NuArgs) -> Result<Report> {
    let x = load_pair(&args.pair.pair)?;
    let lambda = &args.pair.lambda;
    let nu = nu_exact(&x, lambda)?;
    let mu = mu_eval(&x, lambda)?;
    let mut text = format!("nu = {}\nmu = {}\n", fmt_rat(&nu), fmt_rat(&mu));
    let mut data = json!({ "lambda": fmt_rat(lambda), "nu": fmt_rat(&nu), "mu": fmt_rat(&mu) });
    let mut status = Status::from_bool(nu <= mu);
    if let Some(sub) = &args.subregion {
        let completion = match args.completion {
            CompletionArg::Colours => Completion::Colours,
            CompletionArg::WithFree => Completion::WithFree,
        };
        let rep = verify_coupling_bounds(&x, &parse_sites(sub)?, lambda, completion)?;
        let _ = writeln!(
            text,
            "subregion family {}: max mu {}  max nu {}  nu <= max mu: {}",
            rep.family_size,
            fmt_rat(&rep.max_mu_sub),
            fmt_rat(&rep.max_nu_sub),
            rep.holds
        );
        if !rep.holds {
            status = Status::Failed;
        }
        data["subregion"] = serde_json::to_value(&rep)?;
    }
    Ok(Report::new("nu", status, data, text))
}

pub fn tree(args: &TreeArgs) -> Result<Report> {
    let x = load_pair(&args.pair.pair)?;
    let t = build_tree(&x, &args.pair.lambda, args.depth)?;
    let mut text = format!("{} nodes{}\n", t.nodes.len(), if t.truncated { ", cut at the depth limit" } else { "" });
    let mut gammas = Vec::new();
    for d in 1..=args.depth {
        let g = gamma_d(&t, d)?;
        let _ = writeln!(text, "Gamma_{d} = {}", fmt_rat(&g));
        gammas.push(fmt_rat(&g));
    }
    let data = json!({ "nodes": t.nodes.len(), "truncated": t.truncated, "gamma": gammas });
    Ok(Report::new("tree", Status::Ok, data, text))
}

pub fn glauber(args: &GlauberArgs) -> Result<Report> {
    let region = rectangle(0, 0, args.width, args.height);
    let boundary = VertexBoundary::constant(&region, args.boundary_spin);
    VertexBoundary::new(&region, boundary.spins.clone(), args.q)?;
    let params = RunParams { steps: args.steps, sample_every: args.sample_every, burn_in: args.burn_in, seed: args.seed };
    match args.mode {
        GlauberMode::Stationarity => {
            let rep = stationarity_test(&region, &boundary, args.q, &args.lambda, params)?;
            Ok(Report::new("glauber", Status::Ok, &rep, tv_csv(&rep)))
        }
        GlauberMode::Decay => {
            let first = *boundary.spins.keys().next().ok_or_else(|| anyhow!("region has no boundary"))?;
            let other = boundary.with(first, args.other_spin);
            VertexBoundary::new(&region, other.spins.clone(), args.q)?;
            let rows = disagreement_decay(&region, &boundary, &other, args.q, &args.lambda, params)?;
            Ok(Report::new("glauber", Status::Ok, &rows, decay_csv(&rows)))
        }
    }
}

pub fn threshold(args: &ThresholdArgs) -> Result<Report> {
    let holds = if args.general {
        general_graph_check(args.q, args.delta, &args.lambda)?
    } else {
        threshold_check(args.q, &args.lambda, args.delta)?
    };
    let data = json!({ "q": args.q, "lambda": fmt_rat(&args.lambda), "delta": args.delta, "general": args.general, "holds": holds });
    Ok(Report::new("threshold", Status::from_bool(holds), data, format!("{holds}\n")))
}

pub fn export(args: &ExportArgs) -> Result<Report> {
    use ssmcheck_core::certify::{ssm::BUILTIN_REGIONS, system::BUILTIN_SYSTEM};
    let text = match args.dataset {
        Dataset::System => BUILTIN_SYSTEM.to_string(),
        Dataset::Constants => ConstantTable::builtin_text(args.q)
            .ok_or_else(|| anyhow!("no built-in constant table for q = {}", args.q))?
            .to_string(),
        Dataset::Regions => BUILTIN_REGIONS.to_string(),
        Dataset::Pair => write_pair_file(&two_site_example()),
    };
    Ok(Report::new("export", Status::Ok, json!({ "text": text }), text))
}

pub fn dispatch(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Certify(a) => certify(a),
        Command::Recheck(a) => recheck(a),
        Command::RegionBound(a) => region_bound(a),
        Command::PValues(a) => p_values(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Induction(a) => induction(a),
        Command::Nu(a) => nu(a),
        Command::Tree(a) => tree(a),
        Command::Glauber(a) => glauber(a),
        Command::Threshold(a) => threshold(a),
        Command::Export(a) => export(a),
    }
}
