use crate::AdError;

/// Sparse matrix in sorted COO form. Entries are kept sorted by (row, col)
/// and accumulation during multiplication walks them in that order, so
/// products are bitwise deterministic across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl SparseMatrix {
    /// Build from triplets. Duplicate (row, col) pairs are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(u32, u32, f64)>,
    ) -> Result<Self, AdError> {
        for &(r, c, v) in &triplets {
            if r as usize >= n_rows || c as usize >= n_cols {
                return Err(AdError::BadArgument {
                    op: "sparse",
                    detail: format!("entry ({r},{c}) outside {n_rows}x{n_cols}"),
                });
            }
            if !v.is_finite() {
                return Err(AdError::NonFinite { op: "sparse" });
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// y = S x for dense x with `cols` columns; deterministic entry-order accumulation.
    pub fn mul_dense(&self, x: &[f64], cols: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols * cols);
        debug_assert_eq!(out.len(), self.n_rows * cols);
        out.fill(0.0);
        for &(r, c, w) in &self.entries {
            let (r, c) = (r as usize, c as usize);
            let src = &x[c * cols..(c + 1) * cols];
            let dst = &mut out[r * cols..(r + 1) * cols];
            for j in 0..cols {
                dst[j] += w * src[j];
            }
        }
    }

    /// out += S^T g (used by the backward pass of sparse products).
    pub fn mul_dense_transpose_acc(&self, g: &[f64], cols: usize, out: &mut [f64]) {
        debug_assert_eq!(g.len(), self.n_rows * cols);
        debug_assert_eq!(out.len(), self.n_cols * cols);
        for &(r, c, w) in &self.entries {
            let (r, c) = (r as usize, c as usize);
            let src = &g[r * cols..(r + 1) * cols];
            let dst = &mut out[c * cols..(c + 1) * cols];
            for j in 0..cols {
                dst[j] += w * src[j];
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_rows * self.n_cols];
        for &(r, c, w) in &self.entries {
            m[r as usize * self.n_cols + c as usize] += w;
        }
        m
    }
}
