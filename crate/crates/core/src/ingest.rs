//! Raw-file parsing, name normalization, record linkage and rank imputation.
//!
//! Inputs are three (optionally four) CSVs: publications
//! (`paper_id,year,authors` with `|`-separated author lists), faculty
//! (`full_name,university,hire_year,phd_university,subfield`), department
//! rankings (`institution,rank`) and an optional alias table
//! (`raw,canonical`). Matching is exact on canonical names — no fuzzy
//! matching; a canonical-name collision between two faculty rows is an
//! error, not a merge.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{line}: {detail}")]
    Malformed {
        path: String,
        line: u64,
        detail: String,
    },
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("ambiguous canonical name '{canonical}' from raw names: {raws:?}")]
    AmbiguousName { canonical: String, raws: Vec<String> },
    #[error("duplicate paper_id '{0}' in publications")]
    DuplicatePaperId(String),
    #[error("duplicate institution '{0}' in rank table after canonicalization")]
    DuplicateInstitution(String),
    #[error("no researchers to impute over")]
    EmptyCohort,
    #[error("cannot impute {kind} rank: no researcher has a known value")]
    NoKnownRanks { kind: &'static str },
    #[error("json: {0}")]
    Json(String),
}

/// Lowercased, diacritic-folded, punctuation-stripped, whitespace-collapsed.
/// Idempotent; applied to every person and institution name before matching.
pub fn normalize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut prev_space = true;
    for ch in raw.nfkd() {
        if is_combining_mark(ch) {
            continue;
        }
        if ch.is_whitespace() {
            if !prev_space {
                out.push(' ');
                prev_space = true;
            }
        } else if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                out.push(lc);
            }
            prev_space = false;
        }
        // everything else (punctuation, symbols) is dropped
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub paper_id: String,
    pub year: i32,
    pub authors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacultyRecord {
    pub full_name: String,
    pub university: String,
    pub hire_year: Option<i32>,
    pub phd_university: String,
    pub subfield: String,
}

/// Alias table mapping normalized raw spellings to normalized canonical ones.
#[derive(Debug, Clone, Default)]
pub struct AliasMap {
    map: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn from_pairs(pairs: &[(String, String)]) -> Self {
        let map = pairs
            .iter()
            .map(|(raw, canon)| (normalize_name(raw), normalize_name(canon)))
            .collect();
        AliasMap { map }
    }

    /// Canonical form of an institution or name: normalize, then follow the
    /// alias edge if one exists (aliases are one-step by construction).
    pub fn resolve(&self, raw: &str) -> String {
        let n = normalize_name(raw);
        match self.map.get(&n) {
            Some(c) => c.clone(),
            None => n,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Department rank lookup keyed by canonicalized institution name.
#[derive(Debug, Clone, Default)]
pub struct RankTable {
    ranks: BTreeMap<String, f64>,
}

impl RankTable {
    pub fn from_rows(rows: &[(String, u32)], aliases: &AliasMap) -> Result<Self, IngestError> {
        let mut ranks = BTreeMap::new();
        for (inst, rank) in rows {
            let key = aliases.resolve(inst);
            if ranks.insert(key.clone(), *rank as f64).is_some() {
                return Err(IngestError::DuplicateInstitution(key));
            }
        }
        Ok(RankTable { ranks })
    }

    pub fn rank_of(&self, institution: &str, aliases: &AliasMap) -> Option<f64> {
        self.ranks.get(&aliases.resolve(institution)).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImputedFlags {
    pub faculty_rank: bool,
    pub phd_rank: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Researcher {
    pub node_id: usize,
    pub canonical_name: String,
    pub hire_year: i32,
    pub faculty_rank: Option<f64>,
    pub phd_rank: Option<f64>,
    pub imputed_flags: ImputedFlags,
}

/// An author slot on a publication: either a cohort member (by node id) or
/// an external collaborator kept as a canonical name string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorRef {
    Cohort(usize),
    External(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedPublication {
    pub paper_id: String,
    pub year: i32,
    pub authors: Vec<AuthorRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub faculty_rows: usize,
    pub faculty_dropped_missing_hire_year: usize,
    pub publication_rows: usize,
    pub publications_dropped_no_cohort_author: usize,
    pub faculty_university_unranked: usize,
    pub phd_university_unranked: usize,
    pub faculty_ranks_imputed: usize,
    pub phd_ranks_imputed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedDataset {
    pub researchers: Vec<Researcher>,
    pub publications: Vec<LinkedPublication>,
    pub link_report: LinkReport,
}

impl LinkedDataset {
    pub fn n_researchers(&self) -> usize {
        self.researchers.len()
    }

    pub fn node_by_name(&self, canonical: &str) -> Option<usize> {
        self.researchers
            .binary_search_by(|r| r.canonical_name.as_str().cmp(canonical))
            .ok()
    }
}

/// Join faculty and publication records on exact canonical names.
///
/// Faculty rows without a hire year are dropped (counted); publications with
/// no cohort author are dropped (counted); two faculty rows normalizing to
/// the same canonical name are an error listing both raw spellings. Node ids
/// are dense indices into the cohort sorted by canonical name.
pub fn link(
    publications: &[PublicationRecord],
    faculty: &[FacultyRecord],
    rankings: &RankTable,
    aliases: &AliasMap,
) -> Result<LinkedDataset, IngestError> {
    let mut report = LinkReport {
        faculty_rows: faculty.len(),
        publication_rows: publications.len(),
        ..Default::default()
    };

    // Canonicalize faculty, detecting collisions.
    let mut seen: BTreeMap<String, &FacultyRecord> = BTreeMap::new();
    let mut kept: Vec<(String, &FacultyRecord)> = Vec::new();
    for f in faculty {
        if f.hire_year.is_none() {
            report.faculty_dropped_missing_hire_year += 1;
            continue;
        }
        let canonical = normalize_name(&f.full_name);
        if let Some(prev) = seen.get(&canonical) {
            return Err(IngestError::AmbiguousName {
                canonical,
                raws: vec![prev.full_name.clone(), f.full_name.clone()],
            });
        }
        seen.insert(canonical.clone(), f);
        kept.push((canonical, f));
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));

    let mut researchers = Vec::with_capacity(kept.len());
    let mut by_name: BTreeMap<String, usize> = BTreeMap::new();
    for (node_id, (canonical, f)) in kept.iter().enumerate() {
        let faculty_rank = rankings.rank_of(&f.university, aliases);
        let phd_rank = rankings.rank_of(&f.phd_university, aliases);
        if faculty_rank.is_none() {
            report.faculty_university_unranked += 1;
        }
        if phd_rank.is_none() {
            report.phd_university_unranked += 1;
        }
        by_name.insert(canonical.clone(), node_id);
        researchers.push(Researcher {
            node_id,
            canonical_name: canonical.clone(),
            hire_year: f.hire_year.expect("filtered above"),
            faculty_rank,
            phd_rank,
            imputed_flags: ImputedFlags::default(),
        });
    }

    // Link publications; drop those with no cohort author.
    let mut seen_papers: BTreeSet<&str> = BTreeSet::new();
    let mut linked: Vec<LinkedPublication> = Vec::new();
    for p in publications {
        if !seen_papers.insert(p.paper_id.as_str()) {
            return Err(IngestError::DuplicatePaperId(p.paper_id.clone()));
        }
        let mut authors = Vec::with_capacity(p.authors.len());
        let mut any_cohort = false;
        for a in &p.authors {
            let canonical = normalize_name(a);
            match by_name.get(&canonical) {
                Some(&id) => {
                    any_cohort = true;
                    authors.push(AuthorRef::Cohort(id));
                }
                None => authors.push(AuthorRef::External(canonical)),
            }
        }
        if any_cohort {
            linked.push(LinkedPublication {
                paper_id: p.paper_id.clone(),
                year: p.year,
                authors,
            });
        } else {
            report.publications_dropped_no_cohort_author += 1;
        }
    }
    linked.sort_by(|a, b| (a.year, &a.paper_id).cmp(&(b.year, &b.paper_id)));

    Ok(LinkedDataset {
        researchers,
        publications: linked,
        link_report: report,
    })
}

/// Fill missing faculty/PhD ranks with the mean of the known values of the
/// same kind, setting the per-researcher imputed flags. Researchers with
/// known ranks are left bitwise untouched.
pub fn impute_missing_ranks(dataset: &mut LinkedDataset) -> Result<(), IngestError> {
    if dataset.researchers.is_empty() {
        return Err(IngestError::EmptyCohort);
    }
    for kind in ["faculty", "phd"] {
        let get = |r: &Researcher| match kind {
            "faculty" => r.faculty_rank,
            _ => r.phd_rank,
        };
        let missing = dataset.researchers.iter().filter(|r| get(r).is_none()).count();
        if missing == 0 {
            continue;
        }
        let known: Vec<f64> = dataset.researchers.iter().filter_map(get).collect();
        if known.is_empty() {
            return Err(IngestError::NoKnownRanks {
                kind: if kind == "faculty" { "faculty" } else { "phd" },
            });
        }
        let mean = known.iter().sum::<f64>() / known.len() as f64;
        for r in &mut dataset.researchers {
            let slot = match kind {
                "faculty" => &mut r.faculty_rank,
                _ => &mut r.phd_rank,
            };
            if slot.is_none() {
                *slot = Some(mean);
                match kind {
                    "faculty" => r.imputed_flags.faculty_rank = true,
                    _ => r.imputed_flags.phd_rank = true,
                }
            }
        }
        match kind {
            "faculty" => dataset.link_report.faculty_ranks_imputed = missing,
            _ => dataset.link_report.phd_ranks_imputed = missing,
        }
    }
    Ok(())
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, IngestError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
        })
}

fn malformed(path: &Path, line: u64, detail: impl Into<String>) -> IngestError {
    IngestError::Malformed {
        path: path.display().to_string(),
        line,
        detail: detail.into(),
    }
}

fn check_header(
    path: &Path,
    rdr: &mut csv::Reader<std::fs::File>,
    expected: &[&str],
) -> Result<(), IngestError> {
    let hdr = rdr
        .headers()
        .map_err(|e| malformed(path, 1, e.to_string()))?;
    let got: Vec<&str> = hdr.iter().collect();
    if got != expected {
        return Err(malformed(
            path,
            1,
            format!("header {:?}, expected {:?}", got, expected),
        ));
    }
    Ok(())
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

const YEAR_MIN: i32 = 1800;
const YEAR_MAX: i32 = 2100;

fn parse_year(path: &Path, line: u64, field: &str, what: &str) -> Result<i32, IngestError> {
    let y: i32 = field
        .parse()
        .map_err(|_| malformed(path, line, format!("{what} '{field}' is not an integer")))?;
    if !(YEAR_MIN..=YEAR_MAX).contains(&y) {
        return Err(malformed(
            path,
            line,
            format!("{what} {y} outside [{YEAR_MIN}, {YEAR_MAX}]"),
        ));
    }
    Ok(y)
}

/// `paper_id,year,authors`; authors are `|`-separated and must be non-empty.
pub fn read_publications_csv(path: &Path) -> Result<Vec<PublicationRecord>, IngestError> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &["paper_id", "year", "authors"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(malformed(path, line, format!("{} fields, expected 3", rec.len())));
        }
        let paper_id = rec[0].to_string();
        if paper_id.is_empty() {
            return Err(malformed(path, line, "empty paper_id"));
        }
        let year = parse_year(path, line, &rec[1], "year")?;
        let authors: Vec<String> = rec[2]
            .split('|')
            .map(|s| s.trim().to_string())
            .collect();
        if authors.iter().any(|a| a.is_empty()) || authors.is_empty() {
            return Err(malformed(path, line, "empty author in author list"));
        }
        out.push(PublicationRecord {
            paper_id,
            year,
            authors,
        });
    }
    Ok(out)
}

/// `full_name,university,hire_year,phd_university,subfield`; an empty
/// hire_year field means unknown (the row is later dropped by `link`).
pub fn read_faculty_csv(path: &Path) -> Result<Vec<FacultyRecord>, IngestError> {
    let mut rdr = open_csv(path)?;
    check_header(
        path,
        &mut rdr,
        &["full_name", "university", "hire_year", "phd_university", "subfield"],
    )?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 5 {
            return Err(malformed(path, line, format!("{} fields, expected 5", rec.len())));
        }
        if rec[0].is_empty() {
            return Err(malformed(path, line, "empty full_name"));
        }
        let hire_year = if rec[2].is_empty() {
            None
        } else {
            Some(parse_year(path, line, &rec[2], "hire_year")?)
        };
        out.push(FacultyRecord {
            full_name: rec[0].to_string(),
            university: rec[1].to_string(),
            hire_year,
            phd_university: rec[3].to_string(),
            subfield: rec[4].to_string(),
        });
    }
    Ok(out)
}

/// `institution,rank` with rank a positive integer.
pub fn read_rankings_csv(path: &Path, aliases: &AliasMap) -> Result<RankTable, IngestError> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &["institution", "rank"])?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(malformed(path, line, format!("{} fields, expected 2", rec.len())));
        }
        let rank: u32 = rec[1]
            .parse()
            .map_err(|_| malformed(path, line, format!("rank '{}' is not a positive integer", &rec[1])))?;
        if rank == 0 {
            return Err(malformed(path, line, "rank must be >= 1"));
        }
        rows.push((rec[0].to_string(), rank));
    }
    RankTable::from_rows(&rows, aliases)
}

/// `raw,canonical`.
pub fn read_aliases_csv(path: &Path) -> Result<AliasMap, IngestError> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &["raw", "canonical"])?;
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(malformed(path, line, format!("{} fields, expected 2", rec.len())));
        }
        pairs.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(AliasMap::from_pairs(&pairs))
}

/// Serialize the linked dataset as one JSON document.
pub fn write_linked_json(dataset: &LinkedDataset, path: &Path) -> Result<(), IngestError> {
    let json = serde_json::to_string_pretty(dataset).map_err(|e| IngestError::Json(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_linked_json(path: &Path) -> Result<LinkedDataset, IngestError> {
    let json = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&json).map_err(|e| IngestError::Json(e.to_string()))
}
