//! Message-passing operators built from a cumulative snapshot. Each takes
//! the collaboration graph at year `t` and returns a sparse matrix (or edge
//! list) over the full node set; isolated nodes simply receive no messages.

use crate::ModelError;
use placenet_autograd::SparseMatrix;
use placenet_core::tempgraph::SnapshotSequence;

fn edge_value(weight: u32, use_weights: bool) -> f64 {
    if use_weights {
        weight as f64
    } else {
        1.0
    }
}

/// Symmetric-normalized adjacency with self-loops,
/// D̂^{−1/2} (A + I) D̂^{−1/2}, the standard spectral convolution operator.
pub fn gcn_operator(
    seq: &SnapshotSequence,
    t: i32,
    node_count: usize,
    use_weights: bool,
) -> Result<SparseMatrix, ModelError> {
    let edges = seq.edges_at(t)?;
    let mut deg = vec![1.0f64; node_count];
    for &(i, j, w) in edges {
        let v = edge_value(w, use_weights);
        deg[i as usize] += v;
        deg[j as usize] += v;
    }
    let mut triplets = Vec::with_capacity(2 * edges.len() + node_count);
    for n in 0..node_count {
        triplets.push((n as u32, n as u32, 1.0 / deg[n]));
    }
    for &(i, j, w) in edges {
        let v = edge_value(w, use_weights) / (deg[i as usize] * deg[j as usize]).sqrt();
        triplets.push((i, j, v));
        triplets.push((j, i, v));
    }
    Ok(SparseMatrix::from_triplets(node_count, node_count, triplets)?)
}

/// Row-normalized adjacency D^{−1} A: full-neighborhood mean aggregation.
/// Rows of isolated nodes are zero (their neighbor term vanishes).
pub fn mean_operator(
    seq: &SnapshotSequence,
    t: i32,
    node_count: usize,
    use_weights: bool,
) -> Result<SparseMatrix, ModelError> {
    let edges = seq.edges_at(t)?;
    let mut deg = vec![0.0f64; node_count];
    for &(i, j, w) in edges {
        let v = edge_value(w, use_weights);
        deg[i as usize] += v;
        deg[j as usize] += v;
    }
    let mut triplets = Vec::with_capacity(2 * edges.len());
    for &(i, j, w) in edges {
        let v = edge_value(w, use_weights);
        triplets.push((i, j, v / deg[i as usize]));
        triplets.push((j, i, v / deg[j as usize]));
    }
    Ok(SparseMatrix::from_triplets(node_count, node_count, triplets)?)
}

/// Rescaled Chebyshev operator −D^{−1/2} A D^{−1/2}: the normalized
/// Laplacian shifted by −I under the λ_max ≈ 2 convention, so the recurrence
/// stays in [−1, 1] without an eigenvalue computation.
pub fn cheb_operator(
    seq: &SnapshotSequence,
    t: i32,
    node_count: usize,
    use_weights: bool,
) -> Result<SparseMatrix, ModelError> {
    let edges = seq.edges_at(t)?;
    let mut deg = vec![0.0f64; node_count];
    for &(i, j, w) in edges {
        let v = edge_value(w, use_weights);
        deg[i as usize] += v;
        deg[j as usize] += v;
    }
    let mut triplets = Vec::with_capacity(2 * edges.len());
    for &(i, j, w) in edges {
        let v = -edge_value(w, use_weights) / (deg[i as usize] * deg[j as usize]).sqrt();
        triplets.push((i, j, v));
        triplets.push((j, i, v));
    }
    Ok(SparseMatrix::from_triplets(node_count, node_count, triplets)?)
}

/// Directed edge list for attention: both directions of every collaboration
/// edge plus a self-loop per node, sorted by destination so the per-node
/// attention softmax can run on contiguous segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatEdges {
    pub src: Vec<u32>,
    pub dst: Vec<u32>,
    pub node_count: usize,
}

pub fn gat_edges(
    seq: &SnapshotSequence,
    t: i32,
    node_count: usize,
) -> Result<GatEdges, ModelError> {
    let edges = seq.edges_at(t)?;
    let mut pairs = Vec::with_capacity(2 * edges.len() + node_count);
    for n in 0..node_count as u32 {
        pairs.push((n, n));
    }
    for &(i, j, _) in edges {
        pairs.push((j, i));
        pairs.push((i, j));
    }
    pairs.sort_unstable();
    let (dst, src) = pairs.into_iter().unzip();
    Ok(GatEdges {
        src,
        dst,
        node_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use placenet_core::tempgraph::{SnapshotSequence, YearIncrement};

    fn path_graph() -> SnapshotSequence {
        // 0 — 1 — 2 at year 2010, weight 1 each; node 3 isolated.
        let inc = YearIncrement {
            year: 2010,
            first_pairs: vec![(0, 1, 1), (1, 2, 1)],
            repeat_pairs: vec![],
        };
        SnapshotSequence::from_increments(2010, 2010, 4, vec![inc]).unwrap()
    }

    #[test]
    fn gcn_operator_matches_hand_normalization() {
        let seq = path_graph();
        let op = gcn_operator(&seq, 2010, 4, false).unwrap();
        let dense = op.to_dense();
        // Degrees with self-loops: [2, 3, 2, 1].
        let expect = |i: usize, j: usize, v: f64| {
            assert!(
                (dense[i * 4 + j] - v).abs() < 1e-15,
                "entry ({i},{j}) = {} != {v}",
                dense[i * 4 + j]
            );
        };
        expect(0, 0, 0.5);
        expect(1, 1, 1.0 / 3.0);
        expect(0, 1, 1.0 / 6.0f64.sqrt());
        expect(1, 0, 1.0 / 6.0f64.sqrt());
        expect(3, 3, 1.0);
        expect(0, 2, 0.0);
    }

    #[test]
    fn mean_operator_rows_sum_to_one_or_zero() {
        let seq = path_graph();
        let op = mean_operator(&seq, 2010, 4, false).unwrap();
        let dense = op.to_dense();
        for i in 0..4 {
            let s: f64 = dense[i * 4..(i + 1) * 4].iter().sum();
            let expected = if i == 3 { 0.0 } else { 1.0 };
            assert!((s - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn cheb_operator_is_negated_normalized_adjacency() {
        let seq = path_graph();
        let op = cheb_operator(&seq, 2010, 4, false).unwrap();
        let dense = op.to_dense();
        assert!((dense[1] + 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(dense[0], 0.0);
        assert_eq!(dense[15], 0.0);
    }

    #[test]
    fn gat_edges_sorted_by_destination_with_self_loops() {
        let seq = path_graph();
        let e = gat_edges(&seq, 2010, 4).unwrap();
        assert_eq!(e.dst, vec![0, 0, 1, 1, 1, 2, 2, 3]);
        assert_eq!(e.src, vec![0, 1, 0, 1, 2, 1, 2, 3]);
    }
}
