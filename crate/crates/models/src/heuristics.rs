//! Ranking-free baselines scored over the test cohort. All three emit a
//! probability per test node; the two rank heuristics emit hard 1.0/0.0
//! scores since they carry no confidence beyond the threshold comparison.

use crate::{ModelError, ScoreSet};
use placenet_core::featurize::{Split, SplitMasks};
use placenet_core::ingest::LinkedDataset;
use placenet_core::rng;
use placenet_core::tempgraph::SnapshotSequence;
use rand::Rng;
use std::collections::BTreeMap;

fn run_id_from(seed: u64) -> u32 {
    seed as u32
}

/// Uniform [0,1) scores for every test node, drawn from the named stream of
/// `seed` in ascending node order.
pub fn heuristic_random(masks: &SplitMasks, _k: u32, seed: u64) -> ScoreSet {
    let mut rng = rng::stream(seed, "heuristic-random");
    let mut probabilities = BTreeMap::new();
    for node in masks.nodes_in(Split::Test) {
        probabilities.insert(node as u32, rng.gen::<f64>());
    }
    ScoreSet {
        run_id: run_id_from(seed),
        probabilities,
    }
}

/// High iff the researcher's own doctoral department ranks at or above the
/// placement threshold `k`. Imputed (real-valued) ranks compare as-is.
pub fn heuristic_phd(
    dataset: &LinkedDataset,
    masks: &SplitMasks,
    k: u32,
) -> Result<ScoreSet, ModelError> {
    let mut probabilities = BTreeMap::new();
    for node in masks.nodes_in(Split::Test) {
        let rank = dataset.researchers[node]
            .phd_rank
            .ok_or(ModelError::MissingRank { node, kind: "phd" })?;
        probabilities.insert(node as u32, f64::from(rank <= k as f64));
    }
    Ok(ScoreSet {
        run_id: 0,
        probabilities,
    })
}

/// High iff the mean faculty rank of the node's already-hired co-authors in
/// the final pre-hire snapshot clears `k`. A node with no such co-authors
/// (including anyone hired in the first window year, which has no pre-hire
/// snapshot) scores 0.0: absence of faculty endorsement is no evidence.
pub fn heuristic_avg_coauthor(
    dataset: &LinkedDataset,
    seq: &SnapshotSequence,
    masks: &SplitMasks,
    k: u32,
) -> Result<ScoreSet, ModelError> {
    let mut probabilities = BTreeMap::new();
    for node in masks.nodes_in(Split::Test) {
        let t_i = masks.hire_year[node];
        let mut score = 0.0;
        if t_i > masks.t0 {
            let mut sum = 0.0;
            let mut count = 0u32;
            for &(j, _) in seq.neighbors(t_i - 1, node)? {
                let other = &dataset.researchers[j as usize];
                if other.hire_year <= t_i - 1 {
                    if let Some(rank) = other.faculty_rank {
                        sum += rank;
                        count += 1;
                    }
                }
            }
            if count > 0 && sum / f64::from(count) <= k as f64 {
                score = 1.0;
            }
        }
        probabilities.insert(node as u32, score);
    }
    Ok(ScoreSet {
        run_id: 0,
        probabilities,
    })
}
