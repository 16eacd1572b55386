//! Degree-preserving randomization of the snapshot sequence.
//!
//! Each year's first-occurrence simple edges are randomized with double-edge
//! swaps — replace (v1,v2),(v3,v4) by (v1,v3),(v2,v4) — which preserves every
//! node's degree within that year's increment exactly. Swapped pairs carry
//! their same-year multiplicities with them, and later weight-only events
//! follow wherever their pair's first occurrence went, so total weight is
//! conserved. The rewired increments are re-aggregated through the same path
//! as the original build, keeping all cumulative invariants.

use crate::rng;
use crate::tempgraph::{SnapshotSequence, TempGraphError, YearIncrement};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewireError {
    #[error("rewiring percentage {0} outside [0, 100]")]
    BadPercentage(u32),
    #[error("rebuilding rewired sequence: {0}")]
    Rebuild(#[from] TempGraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewirePlan {
    /// Percentage of each year's first-occurrence edges to rewire.
    pub p: u32,
    pub seed: u64,
    /// Attempt budget per year: max_attempt_factor * target candidate swaps.
    pub max_attempt_factor: usize,
}

impl RewirePlan {
    pub fn new(p: u32, seed: u64) -> Result<Self, RewireError> {
        if p > 100 {
            return Err(RewireError::BadPercentage(p));
        }
        Ok(RewirePlan {
            p,
            seed,
            max_attempt_factor: 100,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapStats {
    /// Edge slots changed (2 per successful swap).
    pub rewired: usize,
    pub target: usize,
    pub attempts: usize,
    pub shortfall: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRewireStats {
    pub year: i32,
    pub support: usize,
    pub rewired: usize,
    pub target: usize,
    pub attempts: usize,
    pub shortfall: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RewireReport {
    pub p: u32,
    pub seed: u64,
    pub per_year: Vec<YearRewireStats>,
}

impl RewireReport {
    pub fn total_shortfall(&self) -> bool {
        self.per_year.iter().any(|y| y.shortfall)
    }
}

fn norm(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Randomize a simple edge list by repeated double-edge swaps until `target`
/// edge slots have been rewired or the attempt budget runs out. A candidate
/// swap is rejected when the two picked edges share an endpoint or when
/// either replacement edge would be a self-loop, duplicate an edge in the
/// working set, or fall in `forbidden`. The result is slot-parallel to the
/// input: slot k holds where input edge k ended up, so multiplicities and
/// later weight events can follow their pair.
pub fn double_edge_swap_set<R: Rng>(
    edges: &[(u32, u32)],
    target: usize,
    forbidden: &BTreeSet<(u32, u32)>,
    max_attempt_factor: usize,
    rng: &mut R,
) -> (Vec<(u32, u32)>, SwapStats) {
    let mut working: Vec<(u32, u32)> = edges.iter().map(|&(a, b)| norm(a, b)).collect();
    let mut present: BTreeSet<(u32, u32)> = working.iter().copied().collect();
    debug_assert_eq!(present.len(), working.len(), "input edges must be simple");
    debug_assert!(working.iter().all(|&(a, b)| a != b), "no self-loops");

    let mut stats = SwapStats {
        rewired: 0,
        target,
        attempts: 0,
        shortfall: false,
    };
    if target == 0 {
        return (working, stats);
    }
    let budget = max_attempt_factor.saturating_mul(target);
    while stats.rewired < target && stats.attempts < budget {
        stats.attempts += 1;
        if working.len() < 2 {
            break;
        }
        let e1 = rng.gen_range(0..working.len());
        let e2 = rng.gen_range(0..working.len());
        if e1 == e2 {
            continue;
        }
        let (v1, v2) = working[e1];
        let (mut v3, mut v4) = working[e2];
        // Random orientation of the second edge keeps endpoint pairings
        // unbiased even though edges are stored sorted.
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut v3, &mut v4);
        }
        if v1 == v3 || v1 == v4 || v2 == v3 || v2 == v4 {
            continue;
        }
        let n1 = norm(v1, v3);
        let n2 = norm(v2, v4);
        if present.contains(&n1)
            || present.contains(&n2)
            || forbidden.contains(&n1)
            || forbidden.contains(&n2)
        {
            continue;
        }
        present.remove(&working[e1]);
        present.remove(&working[e2]);
        present.insert(n1);
        present.insert(n2);
        working[e1] = n1;
        working[e2] = n2;
        stats.rewired += 2;
    }
    stats.shortfall = stats.rewired < target;
    (working, stats)
}

/// Rewire p% of every year's first-occurrence edges and re-aggregate into a
/// new snapshot sequence. Forbidden pairs for year t are the rewired
/// cumulative support before t plus every later year's original
/// first-occurrence pairs, so a swap can never collide with an edge the
/// sequence will introduce — first occurrences stay unique across years.
pub fn rewire_sequence(
    seq: &SnapshotSequence,
    plan: &RewirePlan,
) -> Result<(SnapshotSequence, RewireReport), RewireError> {
    if plan.p > 100 {
        return Err(RewireError::BadPercentage(plan.p));
    }
    let mut report = RewireReport {
        p: plan.p,
        seed: plan.seed,
        per_year: Vec::new(),
    };
    if plan.p == 0 {
        for inc in &seq.increments {
            report.per_year.push(YearRewireStats {
                year: inc.year,
                support: inc.support_size(),
                rewired: 0,
                target: 0,
                attempts: 0,
                shortfall: false,
            });
        }
        return Ok((seq.clone(), report));
    }

    let mut rng = rng::stream(plan.seed, "rewire");
    // Original first occurrences of every later year, maintained as the
    // year loop advances.
    let mut future_firsts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for inc in &seq.increments {
        for &(i, j, _) in &inc.first_pairs {
            *future_firsts.entry((i, j)).or_insert(0) += 1;
        }
    }
    let mut rewired_support: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut pair_map: BTreeMap<(u32, u32), (u32, u32)> = BTreeMap::new();
    let mut new_increments = Vec::with_capacity(seq.increments.len());

    for inc in &seq.increments {
        for &(i, j, _) in &inc.first_pairs {
            match future_firsts.get_mut(&(i, j)) {
                Some(1) => {
                    future_firsts.remove(&(i, j));
                }
                Some(n) => *n -= 1,
                None => {}
            }
        }
        let support: Vec<(u32, u32)> = inc.first_pairs.iter().map(|&(i, j, _)| (i, j)).collect();
        let target = (plan.p as usize * support.len()).div_ceil(100);
        let mut forbidden = rewired_support.clone();
        forbidden.extend(future_firsts.keys().copied());
        let (final_edges, stats) =
            double_edge_swap_set(&support, target, &forbidden, plan.max_attempt_factor, &mut rng);
        report.per_year.push(YearRewireStats {
            year: inc.year,
            support: support.len(),
            rewired: stats.rewired,
            target: stats.target,
            attempts: stats.attempts,
            shortfall: stats.shortfall,
        });

        let mut firsts: Vec<(u32, u32, u32)> = Vec::with_capacity(final_edges.len());
        for (slot, &(i, j)) in final_edges.iter().enumerate() {
            let (oi, oj, count) = inc.first_pairs[slot];
            if (oi, oj) != (i, j) {
                pair_map.insert((oi, oj), (i, j));
            }
            firsts.push((i, j, count));
            rewired_support.insert((i, j));
        }
        firsts.sort_unstable();

        let mut repeats: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for &(i, j, count) in &inc.repeat_pairs {
            let routed = pair_map.get(&(i, j)).copied().unwrap_or((i, j));
            *repeats.entry(routed).or_insert(0) += count;
        }
        new_increments.push(YearIncrement {
            year: inc.year,
            first_pairs: firsts,
            repeat_pairs: repeats.into_iter().map(|((i, j), c)| (i, j, c)).collect(),
        });
    }

    let rewired = SnapshotSequence::from_increments(seq.t0, seq.tf, seq.node_count, new_increments)?;
    Ok((rewired, report))
}
