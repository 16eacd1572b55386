use serde::{Deserialize, Serialize};

/// Per-feature standardization fitted on training rows only and applied to
/// every row a model sees, so test statistics never leak into the inputs.
///
/// Columns that are constant on the training rows (the all-ones feature, a
/// degenerate bibliometric column) are passed through untouched instead of
/// being zeroed out: centering a constant column would erase the only signal
/// a featureless graph model receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

const CONSTANT_EPS: f64 = 1e-12;

impl Scaler {
    /// Fit on `rows` training rows of width `d`, row-major.
    pub fn fit(data: &[f64], rows: usize, d: usize) -> Scaler {
        assert_eq!(data.len(), rows * d, "scaler input shape mismatch");
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        if rows == 0 {
            return Scaler { mean, scale };
        }
        for r in 0..rows {
            for j in 0..d {
                mean[j] += data[r * d + j];
            }
        }
        for m in &mut mean {
            *m /= rows as f64;
        }
        for j in 0..d {
            let mut var = 0.0;
            for r in 0..rows {
                let c = data[r * d + j] - mean[j];
                var += c * c;
            }
            let sd = (var / rows as f64).sqrt();
            if sd < CONSTANT_EPS {
                mean[j] = 0.0;
                scale[j] = 1.0;
            } else {
                scale[j] = sd;
            }
        }
        Scaler { mean, scale }
    }

    pub fn identity(d: usize) -> Scaler {
        Scaler {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, data: &mut [f64]) {
        let d = self.mean.len();
        assert_eq!(data.len() % d, 0, "scaler transform shape mismatch");
        for row in data.chunks_exact_mut(d) {
            for j in 0..d {
                row[j] = (row[j] - self.mean[j]) / self.scale[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizes_nonconstant_and_passes_constant_through() {
        // Column 0 varies, column 1 is constant 1.0.
        let data = vec![1.0, 1.0, 3.0, 1.0];
        let s = Scaler::fit(&data, 2, 2);
        assert_eq!(s.mean[0], 2.0);
        assert_eq!(s.scale[0], 1.0);
        assert_eq!((s.mean[1], s.scale[1]), (0.0, 1.0));
        let mut x = data.clone();
        s.transform(&mut x);
        assert_eq!(x, vec![-1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_fit_is_identity() {
        let s = Scaler::fit(&[], 0, 3);
        let mut x = vec![5.0, -2.0, 0.25];
        s.transform(&mut x);
        assert_eq!(x, vec![5.0, -2.0, 0.25]);
    }
}
