//! Cumulative annual co-authorship snapshots over a fixed node set, plus the
//! hire/established-faculty node partition.
//!
//! A snapshot `G_t` contains every co-authorship observed up to and including
//! year `t`, with edge weight = number of joint papers. Construction tracks,
//! per year, which simple edges first appear that year (with multiplicity for
//! repeat collaborations within the same year) and which events merely add
//! weight to an existing edge. Randomization (see `rewire`) operates on the
//! first-occurrence edges and re-aggregates through the same path used here,
//! so round-trip identities hold by construction.

use crate::ingest::{AuthorRef, LinkedDataset};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TempGraphError {
    #[error("invalid window: t0 {t0} > tf {tf}")]
    BadWindow { t0: i32, tf: i32 },
    #[error("node {node} hired in {year}, after the study window end {tf}")]
    HireAfterWindow { node: usize, year: i32, tf: i32 },
    #[error("year {0} outside window [{1}, {2}]")]
    YearOutOfRange(i32, i32, i32),
    #[error("node id {0} out of range (node_count {1})")]
    NodeOutOfRange(usize, usize),
    #[error("bad increment for year {year}: {detail}")]
    BadIncrement { year: i32, detail: String },
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Malformed {
        path: String,
        line: usize,
        detail: String,
    },
}

/// What to do with publications dated before the window start `t0`:
/// fold them into `G_{t0}` (default) or drop them entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryPolicy {
    Fold,
    Drop,
}

impl HistoryPolicy {
    /// Effective year a publication contributes at, or None if excluded.
    pub fn effective_year(self, year: i32, t0: i32, tf: i32) -> Option<i32> {
        if year > tf {
            return None;
        }
        if year < t0 {
            return match self {
                HistoryPolicy::Fold => Some(t0),
                HistoryPolicy::Drop => None,
            };
        }
        Some(year)
    }
}

impl std::str::FromStr for HistoryPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fold" => Ok(HistoryPolicy::Fold),
            "drop" => Ok(HistoryPolicy::Drop),
            other => Err(format!("unknown history policy '{other}' (fold|drop)")),
        }
    }
}

/// One year's change to the edge multiset. `first_pairs` are simple edges
/// whose first co-authorship has this effective year, with multiplicity =
/// joint papers that year; `repeat_pairs` add weight to edges introduced in
/// an earlier year. Both are sorted by (i, j) with i < j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearIncrement {
    pub year: i32,
    pub first_pairs: Vec<(u32, u32, u32)>,
    pub repeat_pairs: Vec<(u32, u32, u32)>,
}

impl YearIncrement {
    pub fn empty(year: i32) -> Self {
        YearIncrement {
            year,
            first_pairs: Vec::new(),
            repeat_pairs: Vec::new(),
        }
    }

    /// Number of distinct first-occurrence edges this year (the simple-edge
    /// increment size used as the rewiring base count).
    pub fn support_size(&self) -> usize {
        self.first_pairs.len()
    }
}

#[derive(Debug, Clone)]
pub struct SnapshotSequence {
    pub t0: i32,
    pub tf: i32,
    pub node_count: usize,
    pub increments: Vec<YearIncrement>,
    /// Per year, sorted (i, j, weight) with i < j.
    cumulative: Vec<Vec<(u32, u32, u32)>>,
    /// Per year, per node, sorted (neighbor, weight).
    adjacency: Vec<Vec<Vec<(u32, u32)>>>,
}

impl SnapshotSequence {
    pub fn year_index(&self, t: i32) -> Result<usize, TempGraphError> {
        if t < self.t0 || t > self.tf {
            return Err(TempGraphError::YearOutOfRange(t, self.t0, self.tf));
        }
        Ok((t - self.t0) as usize)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.t0..=self.tf
    }

    /// Cumulative edges of `G_t`, sorted, i < j.
    pub fn edges_at(&self, t: i32) -> Result<&[(u32, u32, u32)], TempGraphError> {
        Ok(&self.cumulative[self.year_index(t)?])
    }

    /// Neighbors of node `i` in `G_t` with weights, sorted by neighbor id.
    pub fn neighbors(&self, t: i32, i: usize) -> Result<&[(u32, u32)], TempGraphError> {
        let yi = self.year_index(t)?;
        if i >= self.node_count {
            return Err(TempGraphError::NodeOutOfRange(i, self.node_count));
        }
        Ok(&self.adjacency[yi][i])
    }

    /// Sum of edge weights of `G_t`; equals the number of (paper, cohort-pair)
    /// incidences with effective year ≤ t.
    pub fn total_weight(&self, t: i32) -> Result<u64, TempGraphError> {
        Ok(self.cumulative[self.year_index(t)?]
            .iter()
            .map(|&(_, _, w)| w as u64)
            .sum())
    }

    /// Aggregate per-year increments into cumulative snapshots, validating
    /// simplicity, ordering and first-occurrence consistency.
    pub fn from_increments(
        t0: i32,
        tf: i32,
        node_count: usize,
        increments: Vec<YearIncrement>,
    ) -> Result<Self, TempGraphError> {
        if t0 > tf {
            return Err(TempGraphError::BadWindow { t0, tf });
        }
        let n_years = (tf - t0 + 1) as usize;
        if increments.len() != n_years {
            return Err(TempGraphError::BadIncrement {
                year: t0,
                detail: format!("{} increments for {} years", increments.len(), n_years),
            });
        }
        let mut weights: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut cumulative = Vec::with_capacity(n_years);
        for (yi, inc) in increments.iter().enumerate() {
            let year = t0 + yi as i32;
            if inc.year != year {
                return Err(TempGraphError::BadIncrement {
                    year,
                    detail: format!("increment labeled {}", inc.year),
                });
            }
            let bad = |detail: String| TempGraphError::BadIncrement { year, detail };
            for list in [&inc.first_pairs, &inc.repeat_pairs] {
                let mut prev: Option<(u32, u32)> = None;
                for &(i, j, c) in list {
                    if i >= j {
                        return Err(bad(format!("pair ({i},{j}) not ordered i<j")));
                    }
                    if j as usize >= node_count {
                        return Err(bad(format!("node {j} out of range")));
                    }
                    if c == 0 {
                        return Err(bad(format!("pair ({i},{j}) with zero count")));
                    }
                    if let Some(p) = prev {
                        if p >= (i, j) {
                            return Err(bad(format!("pairs not strictly sorted at ({i},{j})")));
                        }
                    }
                    prev = Some((i, j));
                }
            }
            for &(i, j, c) in &inc.first_pairs {
                if weights.contains_key(&(i, j)) {
                    return Err(bad(format!("pair ({i},{j}) marked first but already present")));
                }
                weights.insert((i, j), c);
            }
            for &(i, j, c) in &inc.repeat_pairs {
                match weights.get_mut(&(i, j)) {
                    Some(w) => *w += c,
                    None => {
                        return Err(bad(format!("repeat pair ({i},{j}) has no prior edge")));
                    }
                }
            }
            cumulative.push(
                weights
                    .iter()
                    .map(|(&(i, j), &w)| (i, j, w))
                    .collect::<Vec<_>>(),
            );
        }
        let adjacency = cumulative
            .iter()
            .map(|edges| {
                let mut adj = vec![Vec::new(); node_count];
                for &(i, j, w) in edges {
                    adj[i as usize].push((j, w));
                    adj[j as usize].push((i, w));
                }
                for list in &mut adj {
                    list.sort_unstable();
                }
                adj
            })
            .collect();
        Ok(SnapshotSequence {
            t0,
            tf,
            node_count,
            increments,
            cumulative,
            adjacency,
        })
    }

    /// One CSV per year, `i,j,weight` with i < j, named `snapshot_<year>.csv`.
    pub fn write_snapshot_csvs(&self, dir: &Path) -> Result<(), TempGraphError> {
        let io_err = |p: &Path, e: std::io::Error| TempGraphError::Io {
            path: p.display().to_string(),
            source: e,
        };
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for t in self.t0..=self.tf {
            let path = dir.join(format!("snapshot_{t}.csv"));
            let mut buf = String::from("i,j,weight\n");
            for &(i, j, w) in self.edges_at(t).expect("year in range") {
                buf.push_str(&format!("{i},{j},{w}\n"));
            }
            std::fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }

    /// Single CSV `year,i,j` with one row per weight unit: a pair appearing
    /// in m papers of one year yields m rows. First occurrences and repeats
    /// are distinguishable on read by each pair's earliest year in the file.
    pub fn write_increments_csv(&self, path: &Path) -> Result<(), TempGraphError> {
        let file = std::fs::File::create(path).map_err(|e| TempGraphError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut out = std::io::BufWriter::new(file);
        let mut emit = |s: String| -> Result<(), TempGraphError> {
            out.write_all(s.as_bytes()).map_err(|e| TempGraphError::Io {
                path: path.display().to_string(),
                source: e,
            })
        };
        emit("year,i,j\n".to_string())?;
        for inc in &self.increments {
            for list in [&inc.first_pairs, &inc.repeat_pairs] {
                for &(i, j, c) in list {
                    for _ in 0..c {
                        emit(format!("{},{},{}\n", inc.year, i, j))?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rebuild a snapshot sequence from the `year,i,j` increments CSV.
pub fn read_increments_csv(
    path: &Path,
    node_count: usize,
    t0: i32,
    tf: i32,
) -> Result<SnapshotSequence, TempGraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| TempGraphError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mal = |line: usize, detail: String| TempGraphError::Malformed {
        path: path.display().to_string(),
        line,
        detail,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "year,i,j")) => {}
        other => {
            return Err(mal(1, format!("header {:?}, expected year,i,j", other.map(|x| x.1))));
        }
    }
    let mut per_pair: BTreeMap<(u32, u32), BTreeMap<i32, u32>> = BTreeMap::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let mut parts = raw.split(',');
        let (y, i, j) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(y), Some(i), Some(j), None) => (y, i, j),
            _ => return Err(mal(line, "expected 3 fields".to_string())),
        };
        let year: i32 = y.parse().map_err(|_| mal(line, format!("bad year '{y}'")))?;
        let i: u32 = i.parse().map_err(|_| mal(line, format!("bad node '{i}'")))?;
        let j: u32 = j.parse().map_err(|_| mal(line, format!("bad node '{j}'")))?;
        if year < t0 || year > tf {
            return Err(mal(line, format!("year {year} outside [{t0}, {tf}]")));
        }
        if i >= j || j as usize >= node_count {
            return Err(mal(line, format!("bad pair ({i},{j})")));
        }
        *per_pair.entry((i, j)).or_default().entry(year).or_insert(0) += 1;
    }
    SnapshotSequence::from_increments(t0, tf, node_count, increments_from_events(t0, tf, &per_pair))
}

/// Group per-pair yearly counts into `YearIncrement`s: a pair's earliest
/// event year holds its first occurrence, later years are weight events.
fn increments_from_events(
    t0: i32,
    tf: i32,
    per_pair: &BTreeMap<(u32, u32), BTreeMap<i32, u32>>,
) -> Vec<YearIncrement> {
    let mut incs: Vec<YearIncrement> = (t0..=tf).map(YearIncrement::empty).collect();
    for (&(i, j), years) in per_pair {
        let mut first = true;
        for (&year, &count) in years {
            let yi = (year - t0) as usize;
            if first {
                incs[yi].first_pairs.push((i, j, count));
                first = false;
            } else {
                incs[yi].repeat_pairs.push((i, j, count));
            }
        }
    }
    // BTreeMap iteration is (i,j)-sorted, so per-year lists are already sorted.
    incs
}

/// Clique-expand every publication into cohort co-author pairs and aggregate
/// into the cumulative snapshot sequence. External authors contribute no
/// edges; duplicate cohort credits on one paper count once per pair.
pub fn build_sequence(
    dataset: &LinkedDataset,
    t0: i32,
    tf: i32,
    history: HistoryPolicy,
) -> Result<SnapshotSequence, TempGraphError> {
    if t0 > tf {
        return Err(TempGraphError::BadWindow { t0, tf });
    }
    for r in &dataset.researchers {
        if r.hire_year > tf {
            return Err(TempGraphError::HireAfterWindow {
                node: r.node_id,
                year: r.hire_year,
                tf,
            });
        }
    }
    let node_count = dataset.researchers.len();
    let mut per_pair: BTreeMap<(u32, u32), BTreeMap<i32, u32>> = BTreeMap::new();
    for paper in &dataset.publications {
        let Some(eff) = history.effective_year(paper.year, t0, tf) else {
            continue;
        };
        let mut cohort: Vec<u32> = paper
            .authors
            .iter()
            .filter_map(|a| match a {
                AuthorRef::Cohort(id) => Some(*id as u32),
                AuthorRef::External(_) => None,
            })
            .collect();
        cohort.sort_unstable();
        cohort.dedup();
        for (ai, &a) in cohort.iter().enumerate() {
            for &b in &cohort[ai + 1..] {
                *per_pair.entry((a, b)).or_default().entry(eff).or_insert(0) += 1;
            }
        }
    }
    SnapshotSequence::from_increments(t0, tf, node_count, increments_from_events(t0, tf, &per_pair))
}

/// Disjoint split of the node set into researchers hired inside the window
/// (with their hire years) and established faculty hired before it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePartition {
    pub t0: i32,
    pub tf: i32,
    /// Per node id.
    pub hire_year: Vec<i32>,
    /// Node ids with t0 ≤ hire_year ≤ tf, ascending.
    pub v_hire: Vec<usize>,
    /// Node ids with hire_year < t0, ascending.
    pub v_faculty: Vec<usize>,
}

impl NodePartition {
    pub fn node_count(&self) -> usize {
        self.hire_year.len()
    }

    pub fn is_hire(&self, node: usize) -> bool {
        self.hire_year[node] >= self.t0
    }
}

pub fn partition_nodes(
    dataset: &LinkedDataset,
    t0: i32,
    tf: i32,
) -> Result<NodePartition, TempGraphError> {
    if t0 > tf {
        return Err(TempGraphError::BadWindow { t0, tf });
    }
    let mut hire_year = Vec::with_capacity(dataset.researchers.len());
    let mut v_hire = Vec::new();
    let mut v_faculty = Vec::new();
    for r in &dataset.researchers {
        if r.hire_year > tf {
            return Err(TempGraphError::HireAfterWindow {
                node: r.node_id,
                year: r.hire_year,
                tf,
            });
        }
        hire_year.push(r.hire_year);
        if r.hire_year >= t0 {
            v_hire.push(r.node_id);
        } else {
            v_faculty.push(r.node_id);
        }
    }
    Ok(NodePartition {
        t0,
        tf,
        hire_year,
        v_hire,
        v_faculty,
    })
}
