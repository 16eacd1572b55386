//! Deterministic scoring of an already-trained model over an arbitrary node
//! mask. Dropout is always disabled, so predicting twice yields identical
//! scores.

use crate::static_gnn::{build_static_op, static_scores};
use crate::tabular::dense_scores;
use crate::temporal::{build_temporal_inputs, carried_test_pass};
use crate::{inputs, ArchInfo, ModelError, ModelKind, ScoreSet, TrainedModel};
use placenet_core::featurize::{FeatureTensor, SplitMasks};
use placenet_core::tempgraph::SnapshotSequence;
use std::collections::BTreeMap;

/// The data a forward pass needs, by architecture family.
pub enum PredictInputs<'a> {
    Tabular {
        features: &'a [FeatureTensor],
        splits: &'a SplitMasks,
    },
    Static {
        seq: &'a SnapshotSequence,
        features: &'a [FeatureTensor],
    },
    Temporal {
        seq: &'a SnapshotSequence,
        features: &'a [FeatureTensor],
        splits: &'a SplitMasks,
    },
}

fn wrong(kind: ModelKind, what: &'static str) -> ModelError {
    ModelError::WrongInputs {
        kind: kind.as_str(),
        what,
    }
}

pub fn predict(
    model: &TrainedModel,
    input: &PredictInputs,
    mask: &[bool],
) -> Result<ScoreSet, ModelError> {
    let spec = &model.spec;
    let run_id = spec.seed as u32;
    let nodes: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect();
    let mut probabilities = BTreeMap::new();
    if nodes.is_empty() {
        return Ok(ScoreSet {
            run_id,
            probabilities,
        });
    }

    match (&model.arch, input) {
        (ArchInfo::Tabular, PredictInputs::Tabular { features, splits }) => {
            if mask.len() != splits.node_count() {
                return Err(wrong(spec.kind, "a mask of mismatched length"));
            }
            let tensors = inputs::select_tensors(&spec.feature_set, features)?;
            let d = inputs::total_dim(&tensors);
            let mut x = inputs::prehire_rows(&tensors, &nodes, &splits.hire_year, splits.t0)?;
            model.scaler.transform(&mut x);
            let p = dense_scores(&model.params, spec.layers, &x, nodes.len(), d)?;
            for (r, &node) in nodes.iter().enumerate() {
                probabilities.insert(node as u32, p[r]);
            }
        }
        (ArchInfo::Static { test_year }, PredictInputs::Static { seq, features }) => {
            let tensors = inputs::select_tensors(&spec.feature_set, features)?;
            let n = tensors[0].node_count;
            if mask.len() != n {
                return Err(wrong(spec.kind, "a mask of mismatched length"));
            }
            let d = inputs::total_dim(&tensors);
            let t_in = test_year - 1;
            let mut x = inputs::year_matrix(&tensors, t_in, n)?;
            model.scaler.transform(&mut x);
            let op = build_static_op(spec.kind, seq, t_in, n, spec.use_weights)?;
            let p = static_scores(&model.params, spec, &op, &x, n, d)?;
            for &node in &nodes {
                probabilities.insert(node as u32, p[node]);
            }
        }
        (
            ArchInfo::Temporal,
            PredictInputs::Temporal {
                seq,
                features,
                splits,
            },
        ) => {
            if mask.len() != splits.node_count() {
                return Err(wrong(spec.kind, "a mask of mismatched length"));
            }
            let inp = build_temporal_inputs(spec, seq, features, splits, Some(&model.scaler))?;
            let per_year = carried_test_pass(&model.params, spec, &inp, splits)?;
            for &node in &nodes {
                let year = splits.hire_year[node];
                let probs = per_year
                    .get(&year)
                    .ok_or(ModelError::OutsideTestPass { node, year })?;
                probabilities.insert(node as u32, probs[node]);
            }
        }
        _ => return Err(wrong(spec.kind, "inputs of a different architecture")),
    }
    Ok(ScoreSet {
        run_id,
        probabilities,
    })
}
