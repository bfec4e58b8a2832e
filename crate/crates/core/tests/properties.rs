use proptest::prelude::*;

use ssmcheck_core::bound::{mu_funcs, sign_split_bound};
use ssmcheck_core::certify::region::{certify_region_bound, recheck_region, RegionVerdict};
use ssmcheck_core::certify::ssm::max_mu_at;
use ssmcheck_core::certify::system::{check_with, find_constants, CaseSystem, ClassConstants, ConstantTable};
use ssmcheck_core::lattice::enumerate_boundary_pairs;
use ssmcheck_core::rational::{fmt_rat, int, parse_rat, rat};
use ssmcheck_core::{GeomMap, Rat, Region, RegionSpec, Site};

fn small_spec() -> impl Strategy<Value = RegionSpec> {
    let near = [Site::new(-1, 0), Site::new(1, 0), Site::new(0, 1), Site::new(-1, 1), Site::new(1, 1)];
    proptest::sample::subsequence(near.to_vec(), 0..=2).prop_filter_map("connected", |extra| {
        let mut sites = vec![Site::new(0, 0)];
        sites.extend(extra);
        let region = Region::new(sites);
        region.is_connected().then(|| RegionSpec::new(region, Site::new(0, 0), (0, -1)).unwrap())
    })
}

fn lambda() -> impl Strategy<Value = Rat> {
    (0i64..=8).prop_map(|k| rat(k, 8))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn max_mu_is_geometry_invariant(spec in small_spec(), g in 0usize..8, q in 3u8..=4, l in lambda()) {
        let map = GeomMap::dihedral().nth(g).unwrap();
        let moved = RegionSpec { label: None, region: map.apply_region(&spec.region), s: map.apply_edge(&spec.s) };
        prop_assert_eq!(max_mu_at(&spec, q, &l).unwrap().0, max_mu_at(&moved, q, &l).unwrap().0);
    }

    #[test]
    fn max_mu_matches_enumeration(spec in small_spec(), q in 3u8..=4, l in lambda()) {
        let pairs = enumerate_boundary_pairs(&spec.region, spec.s, q, true).unwrap();
        let best = pairs
            .iter()
            .flat_map(|x| mu_funcs(x).unwrap())
            .filter_map(|f| f.eval(&l))
            .max()
            .unwrap();
        prop_assert_eq!(max_mu_at(&spec, q, &l).unwrap().0, best);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn region_verdicts_recheck(spec in small_spec(), slack in 1i64..50, below in any::<bool>()) {
        let (a, b) = (rat(1, 100), rat(1, 2));
        let (peak, _) = max_mu_at(&spec, 3, &a).unwrap();
        let target = if below { &peak - rat(slack, 1000) } else { &peak + rat(slack, 1000) };
        prop_assume!(target > int(0));
        let cert = certify_region_bound(&spec, 3, &a, &b, &target, 30).unwrap();
        if below {
            let refuted = matches!(cert.verdict, RegionVerdict::Refuted { .. });
            prop_assert!(refuted);
        }
        prop_assert!(recheck_region(&cert).unwrap());
    }
}

proptest! {
    #[test]
    fn sign_split_is_an_upper_bound(spec in small_spec(), pick in any::<prop::sample::Index>(), lo in 1i64..90, w in 1i64..=10, k in 0i64..=16) {
        let pairs = enumerate_boundary_pairs(&spec.region, spec.s, 3, true).unwrap();
        let x = pick.get(&pairs);
        let (a, b) = (rat(lo, 100), rat(lo + w, 100));
        let l = &a + (&b - &a) * rat(k, 16);
        for f in mu_funcs(x).unwrap() {
            let bound = sign_split_bound(&f, &a, &b).unwrap();
            prop_assert!(f.eval(&l).unwrap() <= bound);
        }
    }

    #[test]
    fn decimals_parse_exactly(n in 0i64..10_000_000, digits in 0u32..7) {
        let text = format!("{}.{:0width$}", n / 10i64.pow(digits), n % 10i64.pow(digits), width = digits as usize);
        let text = if digits == 0 { (n).to_string() } else { text };
        prop_assert_eq!(parse_rat(&text).unwrap(), rat(n, 10i64.pow(digits)));
    }

    #[test]
    fn constant_tables_round_trip(ps in prop::collection::vec((1i64..1000, 1i64..1000), 7), cs in prop::collection::vec(1i64..=100, 6)) {
        let mut t = ConstantTable::builtin(6).unwrap();
        t.p = ps.iter().map(|&(n, d)| rat(n, n + d)).collect();
        t.constants = Some(ClassConstants {
            v: rat(cs[0], 100), w: rat(cs[1], 100), u: rat(cs[2], 100),
            s: rat(cs[3], 100), t: rat(cs[4], 100), r: rat(cs[5], 100),
        });
        prop_assert_eq!(ConstantTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn found_constants_verify_and_shrinking_q_stays_feasible(scale in 50i64..=100) {
        let sys = CaseSystem::builtin();
        let t = ConstantTable::builtin(6).unwrap();
        let base = rat(1, 2);
        let qv: Vec<Rat> = t.q_values().iter().map(|q| q * rat(scale, 100)).collect();
        let c = find_constants(&sys, &qv, &t.eps, &base).unwrap();
        prop_assert!(c.is_ok(), "scale {}: {:?}", scale, c.err());
        prop_assert!(check_with(&sys, &qv, &c.unwrap(), &t.eps, &base).unwrap().passed());
    }

    #[test]
    fn inequality_labels_are_stable(k in 1i64..=20) {
        let sys = CaseSystem::builtin();
        let t = ConstantTable::builtin(6).unwrap();
        let c = t.constants.clone().unwrap();
        let qv: Vec<Rat> = t.q_values().iter().map(|q| q * rat(k, 10)).collect();
        let tr = check_with(&sys, &qv, &c, &t.eps, &rat(1, 2)).unwrap();
        let labels: Vec<String> = tr.steps.iter().map(|i| i.label.clone()).collect();
        let base = check_with(&sys, &t.q_values(), &c, &t.eps, &rat(1, 2)).unwrap();
        prop_assert_eq!(labels, base.steps.iter().map(|i| i.label.clone()).collect::<Vec<_>>());
        // scaling every q_i down never breaks an inequality that held
        if k <= 10 {
            prop_assert!(tr.passed(), "{}", fmt_rat(&rat(k, 10)));
        }
    }
}
