use crate::{FeatureKind, ModelError};
use placenet_core::featurize::{FeatureTensor, LabelVector};

/// Resolve the spec's feature kinds against the provided tensors by
/// canonical name, preserving the spec's (canonical) order.
pub(crate) fn select_tensors<'a>(
    kinds: &[FeatureKind],
    tensors: &'a [FeatureTensor],
) -> Result<Vec<&'a FeatureTensor>, ModelError> {
    kinds
        .iter()
        .map(|k| {
            tensors
                .iter()
                .find(|t| t.name == k.tensor_name())
                .ok_or(ModelError::MissingFeature(k.tensor_name()))
        })
        .collect()
}

pub(crate) fn total_dim(tensors: &[&FeatureTensor]) -> usize {
    tensors.iter().map(|t| t.d).sum()
}

/// Column-concatenated year-`t` slices of the selected tensors, node-major
/// (node_count × Σd).
pub(crate) fn year_matrix(
    tensors: &[&FeatureTensor],
    t: i32,
    node_count: usize,
) -> Result<Vec<f64>, ModelError> {
    let d = total_dim(tensors);
    let mut out = vec![0.0; node_count * d];
    let mut col = 0;
    for tensor in tensors {
        let slice = tensor.year_slice(t)?;
        for n in 0..node_count {
            out[n * d + col..n * d + col + tensor.d]
                .copy_from_slice(&slice[n * tensor.d..(n + 1) * tensor.d]);
        }
        col += tensor.d;
    }
    Ok(out)
}

/// One row per listed node holding its final pre-hire feature slice
/// (year t_i − 1). A node hired in the first window year has no such slice.
pub(crate) fn prehire_rows(
    tensors: &[&FeatureTensor],
    nodes: &[usize],
    hire_year: &[i32],
    t0: i32,
) -> Result<Vec<f64>, ModelError> {
    let d = total_dim(tensors);
    let mut out = vec![0.0; nodes.len() * d];
    for (r, &node) in nodes.iter().enumerate() {
        let year = hire_year[node];
        if year <= t0 {
            return Err(ModelError::NoPrehireSlice { node, year });
        }
        let mut col = 0;
        for tensor in tensors {
            for f in 0..tensor.d {
                out[r * d + col + f] = tensor.get(node, f, year - 1)?;
            }
            col += tensor.d;
        }
    }
    Ok(out)
}

pub(crate) fn mask_indices(mask: &[bool]) -> Vec<u32> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i as u32))
        .collect()
}

pub(crate) fn labels_u32(labels: &LabelVector) -> Vec<u32> {
    labels.y.iter().map(|&b| u32::from(b)).collect()
}
