//! Evaluation metrics and the random-intercept mixed-effects analysis.
//!
//! PR-AUC uses the average-precision form with tied scores grouped into one
//! threshold step. The mixed model `y_ij = mu + sum_k beta_k 1[feat_i = k]
//! + u_j + eps_ij` (one random intercept per model architecture) is fit by
//! REML, profiling the likelihood over the variance ratio sigma_u^2/sigma^2;
//! the single variance component makes the per-group algebra closed-form, so
//! no general mixed-model machinery is involved.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty score set")]
    EmptyScores,
    #[error("scores and labels differ in length: {scores} vs {labels}")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),
    #[error("no positive labels; recall and PR-AUC are undefined")]
    NoPositives,
    #[error("baseline PR-AUC {0} is not positive")]
    BadBaseline(f64),
    #[error("mixed model needs >=2 feature sets and >=2 groups, got {feature_sets} and {groups}")]
    TooSmallDesign { feature_sets: usize, groups: usize },
    #[error("reference feature set '{0}' has no rows")]
    MissingReference(String),
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("no rows for feature set '{feature_set}' at K={k}")]
    MissingThreshold { feature_set: String, k: u32 },
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    BadCsv { path: String, detail: String },
}

/// Precision and recall at the 0.5 probability threshold. When no score
/// reaches 0.5, precision is reported as 0 with `no_predicted_positives`
/// set so tables can render the degenerate cell distinctly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub no_predicted_positives: bool,
}

fn validate(scores: &[f64], labels: &[bool]) -> Result<usize, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    Ok(positives)
}

pub fn precision_recall(scores: &[f64], labels: &[bool]) -> Result<PrecisionRecall, EvalError> {
    let positives = validate(scores, labels)?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    for (s, &l) in scores.iter().zip(labels) {
        if *s >= 0.5 {
            if l {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let predicted = tp + fp;
    Ok(PrecisionRecall {
        precision: if predicted == 0 {
            0.0
        } else {
            tp as f64 / predicted as f64
        },
        recall: tp as f64 / positives as f64,
        no_predicted_positives: predicted == 0,
    })
}

/// Average precision: walk thresholds at each distinct score (descending,
/// ties as one step) and accumulate (R_n - R_{n-1}) * P_n.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let positives = validate(scores, labels)? as f64;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp += 1;
            }
            seen += 1;
            j += 1;
        }
        let precision = tp as f64 / seen as f64;
        let recall = tp as f64 / positives;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Ok(ap)
}

/// 100 * (a - b) / b.
pub fn pct_improvement(a: f64, b: f64) -> Result<f64, EvalError> {
    if !(b > 0.0) {
        return Err(EvalError::BadBaseline(b));
    }
    Ok(100.0 * (a - b) / b)
}

/// Two-decimal rendering used by the report tables.
pub fn format_pct(p: f64) -> String {
    format!("{p:.2}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub feature_set: String,
    pub run: u32,
    pub k: u32,
    pub precision: f64,
    pub recall: f64,
    pub pr_auc: f64,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<(), EvalError> {
    let mut buf = String::from("model,feature_set,run,K,precision,recall,pr_auc\n");
    for r in rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.model, r.feature_set, r.run, r.k, r.precision, r.recall, r.pr_auc
        ));
    }
    std::fs::write(path, buf).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>, EvalError> {
    let bad = |detail: String| EvalError::BadCsv {
        path: path.display().to_string(),
        detail,
    };
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut lines = text.lines();
    match lines.next() {
        Some("model,feature_set,run,K,precision,recall,pr_auc") => {}
        other => return Err(bad(format!("header {other:?}"))),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(bad(format!("line {}: {} fields", idx + 2, parts.len())));
        }
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad number '{s}'", idx + 2)))
        };
        rows.push(MetricRow {
            model: parts[0].to_string(),
            feature_set: parts[1].to_string(),
            run: parts[2]
                .parse()
                .map_err(|_| bad(format!("line {}: bad run", idx + 2)))?,
            k: parts[3]
                .parse()
                .map_err(|_| bad(format!("line {}: bad K", idx + 2)))?,
            precision: parse_f(parts[4])?,
            recall: parse_f(parts[5])?,
            pr_auc: parse_f(parts[6])?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmCoef {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmFit {
    pub reference: String,
    /// Intercept (mean of the reference feature set), then one coefficient
    /// per non-reference feature set in sorted order.
    pub intercept: LmmCoef,
    pub coefs: Vec<LmmCoef>,
    pub sigma_u2: f64,
    pub sigma2: f64,
    /// Estimated variance ratio sigma_u^2 / sigma^2.
    pub ratio: f64,
    /// True when the ratio estimate hit the 0 boundary (fit reduces to OLS).
    pub boundary: bool,
    pub loglik: f64,
    pub n_rows: usize,
    pub n_groups: usize,
    pub converged: bool,
}

const RATIO_MAX: f64 = 1e4;
const RATIO_TOL: f64 = 1e-10;

struct Design {
    /// Row-major n x p design matrix: intercept, then indicators.
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    /// Row indices per group, grouped by model architecture.
    groups: Vec<Vec<usize>>,
    coef_names: Vec<String>,
}

fn build_design(rows: &[MetricRow], reference: &str) -> Result<Design, EvalError> {
    let feature_sets: BTreeSet<&str> = rows.iter().map(|r| r.feature_set.as_str()).collect();
    let group_names: BTreeSet<&str> = rows.iter().map(|r| r.model.as_str()).collect();
    // A single group is allowed: the ratio profile is then flat and the fit
    // degenerates to OLS at the boundary.
    if feature_sets.len() < 2 || group_names.is_empty() {
        return Err(EvalError::TooSmallDesign {
            feature_sets: feature_sets.len(),
            groups: group_names.len(),
        });
    }
    if !feature_sets.contains(reference) {
        return Err(EvalError::MissingReference(reference.to_string()));
    }
    let others: Vec<&str> = feature_sets
        .iter()
        .copied()
        .filter(|f| *f != reference)
        .collect();
    let col_of: BTreeMap<&str, usize> = others.iter().enumerate().map(|(i, f)| (*f, i + 1)).collect();
    let p = others.len() + 1;
    let group_of: BTreeMap<&str, usize> = group_names.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    let mut groups = vec![Vec::new(); group_names.len()];
    for (i, r) in rows.iter().enumerate() {
        let mut xi = vec![0.0; p];
        xi[0] = 1.0;
        if let Some(&c) = col_of.get(r.feature_set.as_str()) {
            xi[c] = 1.0;
        }
        x.push(xi);
        y.push(r.pr_auc);
        groups[group_of[r.model.as_str()]].push(i);
    }
    let mut coef_names = vec![reference.to_string()];
    coef_names.extend(others.iter().map(|s| s.to_string()));
    Ok(Design {
        x,
        y,
        groups,
        coef_names,
    })
}

/// Gauss-Jordan inverse with partial pivoting; also returns ln|det|.
fn invert_logdet(a: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, f64)> {
    let p = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..p).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    let mut log_det = 0.0;
    for col in 0..p {
        let pivot_row = (col..p).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).expect("finite")
        })?;
        let pivot = m[pivot_row][col];
        if pivot.abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot_row);
        log_det += pivot.abs().ln();
        let inv = 1.0 / pivot;
        for v in m[col].iter_mut() {
            *v *= inv;
        }
        for row in 0..p {
            if row != col {
                let factor = m[row][col];
                if factor != 0.0 {
                    for k in 0..2 * p {
                        let base = m[col][k];
                        m[row][k] -= factor * base;
                    }
                }
            }
        }
    }
    let inverse = m.into_iter().map(|row| row[p..].to_vec()).collect();
    Some((inverse, log_det))
}

struct ProfilePoint {
    loglik: f64,
    beta: Vec<f64>,
    /// (X' W^-1 X)^-1 (unscaled coefficient covariance).
    cov_unscaled: Vec<Vec<f64>>,
    sigma2: f64,
}

/// GLS at fixed variance ratio using per-group closed forms:
/// W^-1 within group j is I - (ratio / (1 + ratio n_j)) 1 1', and
/// ln|W| = sum_j ln(1 + ratio n_j).
fn profile_at(design: &Design, ratio: f64) -> Result<ProfilePoint, EvalError> {
    let p = design.x[0].len();
    let n = design.x.len();
    let mut xtwx = vec![vec![0.0; p]; p];
    let mut xtwy = vec![0.0; p];
    let mut log_det_w = 0.0;
    for grp in &design.groups {
        let nj = grp.len() as f64;
        let shrink = ratio / (1.0 + ratio * nj);
        log_det_w += (1.0 + ratio * nj).ln();
        let mut col_sums = vec![0.0; p];
        let mut y_sum = 0.0;
        for &i in grp {
            let xi = &design.x[i];
            for a in 0..p {
                for b in a..p {
                    xtwx[a][b] += xi[a] * xi[b];
                }
                xtwy[a] += xi[a] * design.y[i];
                col_sums[a] += xi[a];
            }
            y_sum += design.y[i];
        }
        for a in 0..p {
            for b in a..p {
                xtwx[a][b] -= shrink * col_sums[a] * col_sums[b];
            }
            xtwy[a] -= shrink * col_sums[a] * y_sum;
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[a][b] = xtwx[b][a];
        }
    }
    let (cov_unscaled, log_det_xtwx) = invert_logdet(&xtwx).ok_or_else(|| {
        EvalError::SingularDesign("X'W^-1X is not invertible".to_string())
    })?;
    let beta: Vec<f64> = (0..p)
        .map(|a| (0..p).map(|b| cov_unscaled[a][b] * xtwy[b]).sum())
        .collect();
    // Quadratic form r' W^-1 r with the same per-group shrinkage.
    let mut rss_w = 0.0;
    for grp in &design.groups {
        let nj = grp.len() as f64;
        let shrink = ratio / (1.0 + ratio * nj);
        let mut r_sum = 0.0;
        for &i in grp {
            let fitted: f64 = design.x[i].iter().zip(&beta).map(|(x, b)| x * b).sum();
            let r = design.y[i] - fitted;
            rss_w += r * r;
            r_sum += r;
        }
        rss_w -= shrink * r_sum * r_sum;
    }
    let dof = (n - p) as f64;
    let sigma2 = rss_w / dof;
    let loglik = -0.5
        * (dof * (sigma2.ln() + 1.0 + (2.0 * std::f64::consts::PI).ln())
            + log_det_w
            + log_det_xtwx);
    Ok(ProfilePoint {
        loglik,
        beta,
        cov_unscaled,
        sigma2,
    })
}

/// Two-sided normal p-value.
fn wald_p(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2)
}

pub fn fit_lmm(rows: &[MetricRow], reference: &str) -> Result<LmmFit, EvalError> {
    let design = build_design(rows, reference)?;
    let p = design.x[0].len();
    if design.x.len() <= p {
        return Err(EvalError::SingularDesign(format!(
            "{} rows for {} coefficients",
            design.x.len(),
            p
        )));
    }

    // Coarse scan over the ratio (0 plus log-spaced points), then
    // golden-section refinement of the best bracket.
    let mut grid = vec![0.0];
    let lo_exp = -8.0f64;
    let hi_exp = RATIO_MAX.log10();
    let steps = 80;
    for i in 0..=steps {
        let e = lo_exp + (hi_exp - lo_exp) * i as f64 / steps as f64;
        grid.push(10f64.powf(e));
    }
    let mut best_idx = 0;
    let mut best_ll = f64::NEG_INFINITY;
    for (i, &ratio) in grid.iter().enumerate() {
        let pt = profile_at(&design, ratio)?;
        if pt.loglik > best_ll {
            best_ll = pt.loglik;
            best_idx = i;
        }
    }
    let mut lo = if best_idx == 0 { 0.0 } else { grid[best_idx - 1] };
    let mut hi = if best_idx + 1 < grid.len() {
        grid[best_idx + 1]
    } else {
        RATIO_MAX
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let mut fa = profile_at(&design, a)?.loglik;
    let mut fb = profile_at(&design, b)?.loglik;
    while hi - lo > RATIO_TOL {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = profile_at(&design, b)?.loglik;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = profile_at(&design, a)?.loglik;
        }
    }
    let mut ratio = 0.5 * (lo + hi);
    // Snap to the boundary when zero is at least as good as the interior
    // optimum (up to floating-point noise, for flat profiles).
    let ll_zero = profile_at(&design, 0.0)?.loglik;
    let ll_ratio = profile_at(&design, ratio)?.loglik;
    let boundary = ratio <= 2.0 * RATIO_TOL || ll_zero >= ll_ratio - 1e-9 * (1.0 + ll_ratio.abs());
    if boundary {
        ratio = 0.0;
    }
    let fit = profile_at(&design, ratio)?;

    let coef = |idx: usize| -> LmmCoef {
        let estimate = fit.beta[idx];
        let se = (fit.sigma2 * fit.cov_unscaled[idx][idx]).sqrt();
        let z = if se > 0.0 { estimate / se } else { f64::INFINITY };
        LmmCoef {
            name: design.coef_names[idx].clone(),
            estimate,
            se,
            z,
            p: wald_p(z),
            ci_low: estimate - 1.96 * se,
            ci_high: estimate + 1.96 * se,
        }
    };
    Ok(LmmFit {
        reference: reference.to_string(),
        intercept: coef(0),
        coefs: (1..p).map(coef).collect(),
        sigma_u2: ratio * fit.sigma2,
        sigma2: fit.sigma2,
        ratio,
        boundary,
        loglik: fit.loglik,
        n_rows: design.x.len(),
        n_groups: design.groups.len(),
        converged: true,
    })
}

/// Text table mirroring the usual mixed-model summary columns.
pub fn format_lmm(fit: &LmmFit) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Mixed Linear Model Regression (REML), reference: {}\n",
        fit.reference
    ));
    out.push_str(&format!(
        "rows: {}   groups: {}   group var: {:.3}   residual var: {:.3}   loglik: {:.3}{}\n",
        fit.n_rows,
        fit.n_groups,
        fit.sigma_u2,
        fit.sigma2,
        fit.loglik,
        if fit.boundary { "   (boundary: ratio=0)" } else { "" }
    ));
    out.push_str(&format!(
        "{:<28} {:>8} {:>9} {:>8} {:>8} {:>8} {:>8}\n",
        "", "Coef.", "Std.Err.", "z", "P>|z|", "[0.025", "0.975]"
    ));
    let mut row = |name: &str, c: &LmmCoef| {
        out.push_str(&format!(
            "{:<28} {:>8.3} {:>9.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}\n",
            name, c.estimate, c.se, c.z, c.p, c.ci_low, c.ci_high
        ));
    };
    row("Intercept", &fit.intercept);
    for c in &fit.coefs {
        row(&c.name.clone(), c);
    }
    out.push_str(&format!("{:<28} {:>8.3}\n", "Group Var", fit.sigma_u2));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCell {
    pub k: u32,
    pub mean_delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    /// True when every row matched a partner by (model, run).
    pub paired: bool,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Mean PR-AUC difference (feature set `a` minus `b`) per threshold K, with
/// a normal-approximation 90% confidence interval. Differences are paired by
/// (model, run) when the two sides match one-to-one, otherwise the group
/// means are compared.
pub fn delta_table(
    rows: &[MetricRow],
    a: &str,
    b: &str,
    ks: &[u32],
) -> Result<Vec<DeltaCell>, EvalError> {
    let mut cells = Vec::with_capacity(ks.len());
    for &k in ks {
        let side = |fs: &str| -> Vec<&MetricRow> {
            rows.iter()
                .filter(|r| r.k == k && r.feature_set == fs)
                .collect()
        };
        let ra = side(a);
        let rb = side(b);
        for (fs, list) in [(a, &ra), (b, &rb)] {
            if list.is_empty() {
                return Err(EvalError::MissingThreshold {
                    feature_set: fs.to_string(),
                    k,
                });
            }
        }
        let key = |r: &MetricRow| (r.model.clone(), r.run);
        let mut map_b: BTreeMap<(String, u32), f64> = BTreeMap::new();
        let mut dup_b = false;
        for r in &rb {
            if map_b.insert(key(r), r.pr_auc).is_some() {
                dup_b = true;
            }
        }
        let paired = !dup_b
            && ra.len() == rb.len()
            && ra.iter().all(|r| map_b.contains_key(&key(r)));
        let (mean, se, n) = if paired {
            let deltas: Vec<f64> = ra.iter().map(|r| r.pr_auc - map_b[&key(r)]).collect();
            let (mean, var) = mean_var(&deltas);
            (mean, (var / deltas.len() as f64).sqrt(), deltas.len())
        } else {
            let va: Vec<f64> = ra.iter().map(|r| r.pr_auc).collect();
            let vb: Vec<f64> = rb.iter().map(|r| r.pr_auc).collect();
            let (ma, var_a) = mean_var(&va);
            let (mb, var_b) = mean_var(&vb);
            let se = (var_a / va.len() as f64 + var_b / vb.len() as f64).sqrt();
            (ma - mb, se, va.len().min(vb.len()))
        };
        cells.push(DeltaCell {
            k,
            mean_delta: mean,
            ci_low: mean - 1.645 * se,
            ci_high: mean + 1.645 * se,
            n,
            paired,
        });
    }
    Ok(cells)
}
