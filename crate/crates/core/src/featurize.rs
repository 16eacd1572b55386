//! Labels, feature tensors, and leakage-safe temporal splits with per-year
//! node masks.
//!
//! Three tensors are produced over the window years: the PhD department rank
//! broadcast across years (`X_PhD`), eleven bibliometric features computed
//! both cumulatively and over the prior year alone (`X_Bib`, 22 columns),
//! and a constant-one feature (`X_ONES`) for featureless graph runs. The
//! year-`t` slice of any tensor uses only publications with effective year
//! ≤ t and hire events with hire_year ≤ t, which is what makes pre-hire
//! slices immune to later events.

use crate::ingest::{AuthorRef, LinkedDataset};
use crate::rng;
use crate::tempgraph::{HistoryPolicy, NodePartition};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("node {node} has no {kind} rank; run imputation first")]
    MissingRank { node: usize, kind: &'static str },
    #[error("year {0} outside window [{1}, {2}]")]
    YearOutOfRange(i32, i32, i32),
    #[error("invalid window: t0 {t0} > tf {tf} - 2 (need 3 test years)")]
    WindowTooShort { t0: i32, tf: i32 },
    #[error("mask window w must be >= 1")]
    BadMaskWindow,
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("tensor file {path}: {detail}")]
    BadTensorFile { path: String, detail: String },
}

fn io_err(path: &Path, e: std::io::Error) -> FeaturizeError {
    FeaturizeError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

/// Binary placement labels at rank threshold `k`: true iff the researcher's
/// first faculty department rank is ≤ k. Defined for every node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    pub k: u32,
    pub y: Vec<bool>,
}

pub fn assign_labels(dataset: &LinkedDataset, k: u32) -> Result<LabelVector, FeaturizeError> {
    let mut y = Vec::with_capacity(dataset.researchers.len());
    for r in &dataset.researchers {
        let rank = r.faculty_rank.ok_or(FeaturizeError::MissingRank {
            node: r.node_id,
            kind: "faculty",
        })?;
        y.push(rank <= k as f64);
    }
    Ok(LabelVector { k, y })
}

/// Node × feature × year tensor, stored node-major then feature then year.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub name: String,
    pub node_count: usize,
    pub d: usize,
    pub t0: i32,
    pub tf: i32,
    pub feature_names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureTensor {
    fn zeros(name: &str, node_count: usize, d: usize, t0: i32, tf: i32, names: Vec<String>) -> Self {
        let t = (tf - t0 + 1) as usize;
        FeatureTensor {
            name: name.to_string(),
            node_count,
            d,
            t0,
            tf,
            feature_names: names,
            values: vec![0.0; node_count * d * t],
        }
    }

    pub fn n_years(&self) -> usize {
        (self.tf - self.t0 + 1) as usize
    }

    fn idx(&self, node: usize, feat: usize, yi: usize) -> usize {
        (node * self.d + feat) * self.n_years() + yi
    }

    pub fn get(&self, node: usize, feat: usize, t: i32) -> Result<f64, FeaturizeError> {
        let yi = self.year_index(t)?;
        Ok(self.values[self.idx(node, feat, yi)])
    }

    fn set(&mut self, node: usize, feat: usize, yi: usize, v: f64) {
        let i = self.idx(node, feat, yi);
        self.values[i] = v;
    }

    pub fn year_index(&self, t: i32) -> Result<usize, FeaturizeError> {
        if t < self.t0 || t > self.tf {
            return Err(FeaturizeError::YearOutOfRange(t, self.t0, self.tf));
        }
        Ok((t - self.t0) as usize)
    }

    /// The year-`t` slice as a node_count × d row-major matrix.
    pub fn year_slice(&self, t: i32) -> Result<Vec<f64>, FeaturizeError> {
        let yi = self.year_index(t)?;
        let mut out = vec![0.0; self.node_count * self.d];
        for n in 0..self.node_count {
            for f in 0..self.d {
                out[n * self.d + f] = self.values[self.idx(n, f, yi)];
            }
        }
        Ok(out)
    }

    /// Raw values in storage order (for binary export and bitwise tests).
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    /// Flat little-endian f64 file plus a JSON sidecar describing the shape.
    pub fn write_binary(&self, bin_path: &Path, json_path: &Path) -> Result<(), FeaturizeError> {
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(bin_path, bytes).map_err(|e| io_err(bin_path, e))?;
        let sidecar = TensorSidecar {
            name: self.name.clone(),
            dtype: "f64le".to_string(),
            node_count: self.node_count,
            d: self.d,
            t0: self.t0,
            tf: self.tf,
            feature_names: self.feature_names.clone(),
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(json_path, json).map_err(|e| io_err(json_path, e))
    }

    pub fn read_binary(bin_path: &Path, json_path: &Path) -> Result<Self, FeaturizeError> {
        let json = std::fs::read_to_string(json_path).map_err(|e| io_err(json_path, e))?;
        let sidecar: TensorSidecar =
            serde_json::from_str(&json).map_err(|e| FeaturizeError::BadTensorFile {
                path: json_path.display().to_string(),
                detail: e.to_string(),
            })?;
        let bytes = std::fs::read(bin_path).map_err(|e| io_err(bin_path, e))?;
        let n_years = (sidecar.tf - sidecar.t0 + 1) as usize;
        let expect = sidecar.node_count * sidecar.d * n_years * 8;
        if bytes.len() != expect || sidecar.dtype != "f64le" {
            return Err(FeaturizeError::BadTensorFile {
                path: bin_path.display().to_string(),
                detail: format!("{} bytes, expected {} of f64le", bytes.len(), expect),
            });
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(FeatureTensor {
            name: sidecar.name,
            node_count: sidecar.node_count,
            d: sidecar.d,
            t0: sidecar.t0,
            tf: sidecar.tf,
            feature_names: sidecar.feature_names,
            values,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TensorSidecar {
    name: String,
    dtype: String,
    node_count: usize,
    d: usize,
    t0: i32,
    tf: i32,
    feature_names: Vec<String>,
}

/// PhD department rank broadcast identically across all years.
pub fn phd_tensor(
    dataset: &LinkedDataset,
    t0: i32,
    tf: i32,
) -> Result<FeatureTensor, FeaturizeError> {
    let mut tensor = FeatureTensor::zeros(
        "X_PhD",
        dataset.researchers.len(),
        1,
        t0,
        tf,
        vec!["phd_rank".to_string()],
    );
    let n_years = tensor.n_years();
    for r in &dataset.researchers {
        let rank = r.phd_rank.ok_or(FeaturizeError::MissingRank {
            node: r.node_id,
            kind: "phd",
        })?;
        for yi in 0..n_years {
            tensor.set(r.node_id, 0, yi, rank);
        }
    }
    Ok(tensor)
}

/// Constant-one feature for the no-feature graph configuration.
pub fn ones_tensor(node_count: usize, t0: i32, tf: i32) -> FeatureTensor {
    let mut tensor = FeatureTensor::zeros("X_ONES", node_count, 1, t0, tf, vec!["one".to_string()]);
    let n_years = tensor.n_years();
    for n in 0..node_count {
        for yi in 0..n_years {
            tensor.set(n, 0, yi, 1.0);
        }
    }
    tensor
}

const BIB_BASE_NAMES: [&str; 11] = [
    "papers",
    "avg_authors",
    "first_authored",
    "prop_first_authored",
    "avg_position",
    "papers_fac_coauthor",
    "prop_fac_coauthor",
    "papers_top10_coauthor",
    "prop_top10_coauthor",
    "papers_top50_coauthor",
    "prop_top50_coauthor",
];

/// One publication from a single author's point of view.
struct PaperView {
    eff_year: i32,
    n_authors: usize,
    /// 1-based position of this author in the author list.
    position: usize,
    coauthors: Vec<usize>,
}

fn eleven_features(
    papers: &[&PaperView],
    status_year: i32,
    hire_year: &[i32],
    fac_rank: &[f64],
) -> [f64; 11] {
    let n = papers.len();
    if n == 0 {
        return [0.0; 11];
    }
    let nf = n as f64;
    let mut sum_authors = 0usize;
    let mut first = 0usize;
    let mut sum_pos = 0usize;
    let mut n_fac = 0usize;
    let mut n_top10 = 0usize;
    let mut n_top50 = 0usize;
    for p in papers {
        sum_authors += p.n_authors;
        if p.position == 1 {
            first += 1;
        }
        sum_pos += p.position;
        let mut fac = false;
        let mut top10 = false;
        let mut top50 = false;
        for &c in &p.coauthors {
            if hire_year[c] <= status_year {
                fac = true;
                if fac_rank[c] <= 10.0 {
                    top10 = true;
                }
                if fac_rank[c] <= 50.0 {
                    top50 = true;
                }
            }
        }
        n_fac += fac as usize;
        n_top10 += top10 as usize;
        n_top50 += top50 as usize;
    }
    [
        nf,
        sum_authors as f64 / nf,
        first as f64,
        first as f64 / nf,
        sum_pos as f64 / nf,
        n_fac as f64,
        n_fac as f64 / nf,
        n_top10 as f64,
        n_top10 as f64 / nf,
        n_top50 as f64,
        n_top50 as f64 / nf,
    ]
}

/// Eleven bibliometric features, each computed cumulatively (publications
/// with effective year ≤ t) and over the prior year alone (effective year
/// = t−1), concatenated to 22 columns. Co-author faculty/top-10/top-50
/// status at slice t counts hire events with hire_year ≤ t, so a co-author
/// hired later upgrades older papers in later slices.
pub fn bib_tensor(
    dataset: &LinkedDataset,
    t0: i32,
    tf: i32,
    history: HistoryPolicy,
) -> Result<FeatureTensor, FeaturizeError> {
    let node_count = dataset.researchers.len();
    let mut names: Vec<String> = BIB_BASE_NAMES.iter().map(|n| format!("{n}_cum")).collect();
    names.extend(BIB_BASE_NAMES.iter().map(|n| format!("{n}_prev")));
    let mut tensor = FeatureTensor::zeros("X_Bib", node_count, 22, t0, tf, names);

    let mut hire_year = vec![0i32; node_count];
    let mut fac_rank = vec![f64::INFINITY; node_count];
    for r in &dataset.researchers {
        hire_year[r.node_id] = r.hire_year;
        fac_rank[r.node_id] = r.faculty_rank.ok_or(FeaturizeError::MissingRank {
            node: r.node_id,
            kind: "faculty",
        })?;
    }

    // Per-node paper views, in publication order (already year-sorted).
    let mut views: Vec<Vec<PaperView>> = (0..node_count).map(|_| Vec::new()).collect();
    for paper in &dataset.publications {
        let Some(eff) = history.effective_year(paper.year, t0, tf) else {
            continue;
        };
        let n_authors = paper.authors.len();
        for (pos, author) in paper.authors.iter().enumerate() {
            let AuthorRef::Cohort(node) = author else {
                continue;
            };
            let coauthors = paper
                .authors
                .iter()
                .enumerate()
                .filter_map(|(other_pos, a)| match a {
                    AuthorRef::Cohort(c) if other_pos != pos => Some(*c),
                    _ => None,
                })
                .collect();
            views[*node].push(PaperView {
                eff_year: eff,
                n_authors,
                position: pos + 1,
                coauthors,
            });
        }
    }

    for node in 0..node_count {
        let all = &views[node];
        for (yi, t) in (t0..=tf).enumerate() {
            let cum: Vec<&PaperView> = all.iter().filter(|p| p.eff_year <= t).collect();
            let prev: Vec<&PaperView> = all.iter().filter(|p| p.eff_year == t - 1).collect();
            let cum_f = eleven_features(&cum, t, &hire_year, &fac_rank);
            let prev_f = eleven_features(&prev, t, &hire_year, &fac_rank);
            for (f, v) in cum_f.iter().chain(prev_f.iter()).enumerate() {
                tensor.set(node, f, yi, *v);
            }
        }
    }
    Ok(tensor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Split assignment over the hire cohort plus the machinery to derive
/// per-year binary masks. Test = hires in the last three window years;
/// earlier hire years are pooled per year into train (80%) and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub t0: i32,
    pub tf: i32,
    pub seed: u64,
    pub p_train: f64,
    pub hire_year: Vec<i32>,
    /// Per node: None for established faculty (hired before t0).
    pub assignment: Vec<Option<Split>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearMasks {
    pub t: i32,
    pub w: u32,
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

pub fn temporal_split(partition: &NodePartition, seed: u64) -> Result<SplitMasks, FeaturizeError> {
    let (t0, tf) = (partition.t0, partition.tf);
    if t0 > tf - 2 {
        return Err(FeaturizeError::WindowTooShort { t0, tf });
    }
    let test_start = tf - 2;
    let mut assignment: Vec<Option<Split>> = vec![None; partition.node_count()];
    let mut pool: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for &node in &partition.v_hire {
        let y = partition.hire_year[node];
        if y >= test_start {
            assignment[node] = Some(Split::Test);
        } else {
            pool.entry(y).or_default().push(node);
        }
    }
    let mut rng = rng::stream(seed, "split");
    for (_, nodes) in pool.iter_mut() {
        nodes.sort_unstable();
        nodes.shuffle(&mut rng);
        let k = (0.8 * nodes.len() as f64).round() as usize;
        for (i, &node) in nodes.iter().enumerate() {
            assignment[node] = Some(if i < k { Split::Train } else { Split::Val });
        }
    }
    Ok(SplitMasks {
        t0,
        tf,
        seed,
        p_train: 0.8,
        hire_year: partition.hire_year.clone(),
        assignment,
    })
}

impl SplitMasks {
    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn nodes_in(&self, split: Split) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, a)| (*a == Some(split)).then_some(i))
            .collect()
    }

    /// Masks for supervision year `t`: train and validation cover their
    /// splits' hires in [t−w, t−1]; test covers test hires of exactly year t.
    pub fn year_masks(&self, t: i32, w: u32) -> Result<YearMasks, FeaturizeError> {
        if t < self.t0 || t > self.tf {
            return Err(FeaturizeError::YearOutOfRange(t, self.t0, self.tf));
        }
        if w < 1 {
            return Err(FeaturizeError::BadMaskWindow);
        }
        let n = self.node_count();
        let mut masks = YearMasks {
            t,
            w,
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        };
        let lo = t - w as i32;
        let hi = t - 1;
        for i in 0..n {
            let y = self.hire_year[i];
            match self.assignment[i] {
                Some(Split::Train) if lo <= y && y <= hi => masks.train[i] = true,
                Some(Split::Val) if lo <= y && y <= hi => masks.val[i] = true,
                Some(Split::Test) if y == t => masks.test[i] = true,
                _ => {}
            }
        }
        Ok(masks)
    }
}

/// Export masks as CSV `node_id,year,mask_kind,value` (value-1 rows only).
pub fn write_masks_csv(path: &Path, masks: &[YearMasks]) -> Result<(), FeaturizeError> {
    let mut buf = String::from("node_id,year,mask_kind,value\n");
    for m in masks {
        for (kind, bits) in [("train", &m.train), ("val", &m.val), ("test", &m.test)] {
            for (node, &on) in bits.iter().enumerate() {
                if on {
                    buf.push_str(&format!("{node},{},{kind},1\n", m.t));
                }
            }
        }
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}
