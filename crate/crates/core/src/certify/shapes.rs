//! Recovery of region shapes from their λ = 0 maxima.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::PairEngine;
use crate::error::{invalid, Result};
use crate::lattice::{write_region_file, Edge, Region, RegionSpec, Site};
use crate::rational::{fmt_rat, serde_rat, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCaps {
    pub max_sites: usize,
    /// L1 distance from f.
    pub radius: u32,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps { max_sites: 5, radius: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scanned {
    pub region: RegionSpec,
    #[serde(with = "serde_rat")]
    pub max_mu: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub q: u8,
    #[serde(with = "serde_rat")]
    pub lambda: Rat,
    pub caps: SearchCaps,
    #[serde(with = "serde_rat::vec")]
    pub targets: Vec<Rat>,
    pub scanned: Vec<Scanned>,
    /// Indices into `scanned`, one list per target.
    pub matches: Vec<Vec<usize>>,
}

impl Reconstruction {
    pub fn unmatched(&self) -> Vec<usize> {
        self.matches.iter().enumerate().filter(|(_, m)| m.is_empty()).map(|(i, _)| i).collect()
    }

    /// Region file with every match, labelled by target index and rank.
    pub fn to_region_file(&self) -> String {
        let mut specs = Vec::new();
        for (i, m) in self.matches.iter().enumerate() {
            for (k, &j) in m.iter().enumerate() {
                let label = format!("Q{} #{} max={}", i + 1, k + 1, fmt_rat(&self.scanned[j].max_mu));
                specs.push(self.scanned[j].region.clone().with_label(label));
            }
        }
        write_region_file(&specs)
    }
}

/// Connected regions containing f = (0,0), avoiding w = (0,−1), within the
/// caps, one representative per mirror image in the vertical axis.
pub fn candidate_regions(caps: SearchCaps) -> Vec<Region> {
    let f = Site::new(0, 0);
    let w = Site::new(0, -1);
    let r = caps.radius as i32;
    let cells: Vec<Site> = (-r..=r)
        .flat_map(|x| (-r..=r).map(move |y| Site::new(x, y)))
        .filter(|v| v.l1(f) <= caps.radius && *v != w && *v != f)
        .collect();
    let canon = |sites: &[Site]| -> Vec<Site> {
        let mut a = sites.to_vec();
        a.sort();
        let mut b: Vec<Site> = a.iter().map(|v| Site::new(-v.x, v.y)).collect();
        b.sort();
        a.min(b)
    };
    let mut layer = vec![vec![f]];
    let mut all = layer.clone();
    let mut seen: BTreeSet<Vec<Site>> = layer.iter().cloned().collect();
    for _ in 1..caps.max_sites {
        let mut next = Vec::new();
        for sites in &layer {
            for c in &cells {
                if sites.contains(c) || !sites.iter().any(|v| v.is_adjacent(*c)) {
                    continue;
                }
                let mut grown = sites.clone();
                grown.push(*c);
                let key = canon(&grown);
                if seen.insert(key.clone()) {
                    next.push(key);
                }
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all.into_iter().map(Region::new).collect()
}

/// Scans the candidate regions and lists, per target, those whose exact
/// maximum of μ at `lambda` equals it.
pub fn reconstruct_regions(q: u8, lambda: &Rat, targets: &[Rat], caps: SearchCaps) -> Result<Reconstruction> {
    if caps.max_sites == 0 {
        return Err(invalid("max_sites must be positive"));
    }
    let s = Edge::new(Site::new(0, 0), Site::new(0, -1)).expect("unit edge");
    let scanned: Vec<Scanned> = candidate_regions(caps)
        .into_par_iter()
        .map(|region| {
            let (max_mu, _) = PairEngine::new(&region, s, q)?.max_mu_at(lambda)?;
            Ok(Scanned { region: RegionSpec { label: None, region, s }, max_mu })
        })
        .collect::<Result<_>>()?;
    let matches = targets
        .iter()
        .map(|t| scanned.iter().enumerate().filter(|(_, x)| x.max_mu == *t).map(|(i, _)| i).collect())
        .collect();
    Ok(Reconstruction { q, lambda: lambda.clone(), caps, targets: targets.to_vec(), scanned, matches })
}
