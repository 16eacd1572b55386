//! Synthetic academic-market generator with planted, configurable signal.
//!
//! The market is built so that each kind of signal is controllable in
//! isolation: per-year hiring cohorts receive PhD ranks and open slots drawn
//! from the same prevalence-calibrated multiset, researchers accumulate
//! publications whose faculty co-authors concentrate around a per-researcher
//! prestige target, and hiring assigns the best slots to the highest
//! weighted latent score. Slot assignment perturbs scores with Gumbel noise
//! scaled by `noise/(1-noise)` before sorting, which is exactly softmax
//! (Plackett-Luce) sampling over slots; at noise 0 with only the PhD weight
//! active, a researcher's faculty rank equals their PhD rank identically.
//!
//! Outputs are the three CSVs the ingest stage consumes plus a `truth.json`
//! sidecar holding every latent quantity; nothing downstream reads the
//! sidecar.

use crate::ingest::{FacultyRecord, PublicationRecord};
use crate::rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("infeasible: cohort {year} needs {cohort} hires but capacity allows {slots}")]
    Infeasible {
        year: i32,
        cohort: usize,
        slots: usize,
    },
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Researchers hired inside [t0, tf].
    pub n_hires: usize,
    /// Established faculty hired before t0.
    pub n_faculty: usize,
    pub n_departments: u32,
    pub t0: i32,
    pub tf: i32,
    /// Cumulative fraction of hires placed at rank <= K, per K; the ladder
    /// tail (n_departments, 1.0) is implied.
    pub prevalence_targets: Vec<(u32, f64)>,
    /// Base expected papers per active researcher-year.
    pub papers_per_year: f64,
    /// How tightly a researcher's faculty co-authors concentrate around
    /// their prestige target (larger = tighter = stronger network signal).
    pub attachment: f64,
    pub w_phd: f64,
    pub w_bib: f64,
    pub w_net: f64,
    /// Hiring label noise in [0, 1); the Gumbel temperature is noise/(1-noise).
    pub noise: f64,
    pub seed: u64,
    /// Active publishing years before and after the hire year.
    pub pre_hire_years: u32,
    pub post_hire_years: u32,
    pub external_author_rate: f64,
    pub solo_rate: f64,
    pub hire_coauthor_rate: f64,
    pub dept_yearly_capacity: u32,
}

impl SynthConfig {
    /// Desk-scale market with all three signals available.
    pub fn default_market(seed: u64) -> Self {
        SynthConfig {
            n_hires: 440,
            n_faculty: 400,
            n_departments: 60,
            t0: 2010,
            tf: 2020,
            prevalence_targets: vec![(10, 0.22), (30, 0.49), (50, 0.77)],
            papers_per_year: 1.6,
            attachment: 2.0,
            w_phd: 1.0,
            w_bib: 1.0,
            w_net: 1.0,
            noise: 0.1,
            seed,
            pre_hire_years: 4,
            post_hire_years: 3,
            external_author_rate: 0.2,
            solo_rate: 0.12,
            hire_coauthor_rate: 0.25,
            dept_yearly_capacity: 3,
        }
    }

    /// Smaller market for fast tests.
    pub fn small_market(seed: u64) -> Self {
        SynthConfig {
            n_hires: 220,
            n_faculty: 200,
            ..SynthConfig::default_market(seed)
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadConfig(m));
        if self.n_hires == 0 || self.n_faculty == 0 {
            return bad("need at least one hire and one established faculty".into());
        }
        if self.t0 > self.tf {
            return bad(format!("t0 {} > tf {}", self.t0, self.tf));
        }
        if self.w_phd < 0.0 || self.w_bib < 0.0 || self.w_net < 0.0 {
            return bad("hiring weights must be nonnegative".into());
        }
        if self.w_phd + self.w_bib + self.w_net <= 0.0 {
            return bad("at least one hiring weight must be positive".into());
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 1)", self.noise));
        }
        if self.papers_per_year <= 0.0 {
            return bad("papers_per_year must be positive".into());
        }
        let mut prev = (0u32, 0.0f64);
        for &(k, c) in &self.prevalence_targets {
            if k <= prev.0 || c <= prev.1 || c > 1.0 {
                return bad(format!("prevalence targets must be increasing; got ({k}, {c})"));
            }
            if k > self.n_departments {
                return bad(format!("target rank {k} exceeds n_departments {}", self.n_departments));
            }
            prev = (k, c);
        }
        Ok(())
    }
}

/// Expected qualitative ordering of feature sets implied by the weights:
/// descending by total planted weight, larger combinations first on ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedOrdering {
    pub ranked: Vec<String>,
}

/// None when the noise level makes the ordering unreliable.
pub fn planted_truth(config: &SynthConfig) -> Option<PlantedOrdering> {
    if config.noise >= 0.9 {
        return None;
    }
    let sets: [(&str, [bool; 3]); 7] = [
        ("phd", [true, false, false]),
        ("bib", [false, true, false]),
        ("net", [false, false, true]),
        ("phd+bib", [true, true, false]),
        ("phd+net", [true, false, true]),
        ("bib+net", [false, true, true]),
        ("phd+bib+net", [true, true, true]),
    ];
    let weight = |mask: &[bool; 3]| {
        mask[0] as u8 as f64 * config.w_phd
            + mask[1] as u8 as f64 * config.w_bib
            + mask[2] as u8 as f64 * config.w_net
    };
    let mut ranked: Vec<(&str, f64, usize)> = sets
        .iter()
        .map(|(name, mask)| (*name, weight(mask), mask.iter().filter(|&&b| b).count()))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite weights")
            .then(b.2.cmp(&a.2))
            .then(a.0.cmp(b.0))
    });
    Some(PlantedOrdering {
        ranked: ranked.into_iter().map(|(n, _, _)| n.to_string()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub name: String,
    pub role: String,
    pub hire_year: i32,
    pub phd_rank: u32,
    pub faculty_rank: u32,
    pub z_phd: f64,
    pub z_bib: f64,
    pub z_net: f64,
    pub gumbel: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub config: SynthConfig,
    pub expected_ordering: Option<PlantedOrdering>,
    pub researchers: Vec<TruthRow>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub publications: Vec<PublicationRecord>,
    pub faculty: Vec<FacultyRecord>,
    pub rankings: Vec<(String, u32)>,
    pub truth: TruthFile,
}

fn dept_name(rank: u32) -> String {
    format!("dept{rank:03}")
}

/// Per-rank probabilities from piecewise-constant cumulative targets.
fn rank_distribution(config: &SynthConfig) -> Vec<f64> {
    let n = config.n_departments;
    let mut targets = config.prevalence_targets.clone();
    if targets.last().map(|&(k, _)| k) != Some(n) {
        targets.push((n, 1.0));
    }
    let mut probs = vec![0.0; n as usize];
    let mut prev = (0u32, 0.0f64);
    for &(k, c) in &targets {
        let per_rank = (c - prev.1) / (k - prev.0) as f64;
        for r in prev.0..k {
            probs[r as usize] = per_rank;
        }
        prev = (k, c);
    }
    probs
}

/// Largest-remainder apportionment of `n` items over ranks 1..=len(probs);
/// returns the count per rank. Deterministic: remainder ties break toward
/// lower ranks.
fn apportion(n: usize, probs: &[f64]) -> Vec<u32> {
    let mut counts: Vec<u32> = Vec::with_capacity(probs.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(probs.len());
    let mut assigned = 0usize;
    for (idx, &p) in probs.iter().enumerate() {
        let quota = n as f64 * p;
        let base = quota.floor();
        counts.push(base as u32);
        assigned += base as usize;
        remainders.push((quota - base, idx));
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
    for k in 0..n.saturating_sub(assigned) {
        counts[remainders[k % remainders.len()].1] += 1;
    }
    counts
}

fn expand_multiset(counts: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    for (idx, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            out.push(idx as u32 + 1);
        }
    }
    out
}

fn zscores(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd < 1e-12 {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|x| (x - mean) / sd).collect()
}

/// Standard normal CDF.
fn phi(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

struct Hire {
    name: String,
    hire_year: i32,
    phd_rank: u32,
    fac_rank: u32,
    /// Rank level this researcher's faculty co-authors concentrate around.
    target_rank: u32,
    bib_luck: f64,
    papers: Vec<usize>,
    coauthor_pool: BTreeSet<usize>,
    z_phd: f64,
    z_bib: f64,
    z_net: f64,
    gumbel: f64,
    score: f64,
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let n_dep = config.n_departments;
    let probs = rank_distribution(config);
    let n_years = (config.tf - config.t0 + 1) as usize;

    // Global prevalence-exact rank multiset, dealt round-robin into yearly
    // cohorts so every cohort is a stratified slice of the ladder.
    let global_ranks = expand_multiset(&apportion(config.n_hires, &probs));
    let mut cohort_ranks: Vec<Vec<u32>> = vec![Vec::new(); n_years];
    for (k, &r) in global_ranks.iter().enumerate() {
        cohort_ranks[k % n_years].push(r);
    }
    for (yi, ranks) in cohort_ranks.iter().enumerate() {
        let year = config.t0 + yi as i32;
        for r in 1..=n_dep {
            let copies = ranks.iter().filter(|&&x| x == r).count();
            if copies > config.dept_yearly_capacity as usize {
                return Err(SynthError::Infeasible {
                    year,
                    cohort: ranks.len(),
                    slots: (config.dept_yearly_capacity * n_dep) as usize,
                });
            }
        }
    }

    let mut rng_fac = rng::stream(config.seed, "faculty");
    let mut rng_cohort = rng::stream(config.seed, "cohort");
    let mut rng_pubs = rng::stream(config.seed, "pubs");
    let mut rng_net = rng::stream(config.seed, "net");
    let mut rng_bib = rng::stream(config.seed, "bib");
    let mut rng_noise = rng::stream(config.seed, "noise");
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    // Established faculty: ranks from the same ladder distribution, PhD rank
    // a noisy copy of the faculty rank so neighbor PhD features carry the
    // prestige signal into the graph.
    let mut fac_ranks = expand_multiset(&apportion(config.n_faculty, &probs));
    fac_ranks.shuffle(&mut rng_fac);
    let faculty_members: Vec<(String, i32, u32, u32)> = fac_ranks
        .iter()
        .enumerate()
        .map(|(i, &rank)| {
            let hire_year = config.t0 - 1 - (i % 10) as i32;
            let wobble: f64 = normal.sample(&mut rng_fac) * 2.5;
            let phd = (rank as f64 + wobble).round().clamp(1.0, n_dep as f64) as u32;
            (format!("f{i:05}"), hire_year, rank, phd)
        })
        .collect();

    // Hire cohorts: PhD ranks are a shuffle of the cohort multiset; slots
    // are the same multiset, assigned at hiring time by score order.
    let mut hires: Vec<Hire> = Vec::with_capacity(config.n_hires);
    let cdf: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    for (yi, ranks) in cohort_ranks.iter().enumerate() {
        let year = config.t0 + yi as i32;
        let mut phd_ranks = ranks.clone();
        phd_ranks.sort_unstable();
        phd_ranks.shuffle(&mut rng_cohort);
        for &phd in &phd_ranks {
            let idx = hires.len();
            let net_luck: f64 = normal.sample(&mut rng_net);
            let u = phi(-net_luck).clamp(1e-9, 1.0 - 1e-9);
            let target_rank = cdf.iter().position(|&c| c >= u).unwrap_or(probs.len() - 1) as u32 + 1;
            hires.push(Hire {
                name: format!("h{idx:05}"),
                hire_year: year,
                phd_rank: phd,
                fac_rank: 0,
                target_rank,
                bib_luck: normal.sample(&mut rng_bib),
                papers: Vec::new(),
                coauthor_pool: BTreeSet::new(),
                z_phd: 0.0,
                z_bib: 0.0,
                z_net: 0.0,
                gumbel: 0.0,
                score: 0.0,
            });
        }
    }
    let hires_by_year: Vec<Vec<usize>> = {
        let mut by = vec![Vec::new(); n_years];
        for (i, h) in hires.iter().enumerate() {
            by[(h.hire_year - config.t0) as usize].push(i);
        }
        by
    };

    // Faculty sampling weights per hire concentrate on the target rank.
    let fac_weight = |target: u32, fac_rank: u32, attachment: f64| -> f64 {
        (-(attachment) * (fac_rank as f64 - target as f64).abs() / 10.0).exp()
    };
    let weighted_pick = |weights: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> usize {
        let total: f64 = weights.iter().sum();
        let mut draw = rng.gen_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            draw -= w;
            if draw <= 0.0 {
                return i;
            }
        }
        weights.len() - 1
    };

    // Chronological paper generation; hiring decisions for cohort year y are
    // made before year-y papers exist, from data strictly before y.
    let temperature = config.noise / (1.0 - config.noise);
    let year_start = config.t0 - 3;
    let mut publications: Vec<PublicationRecord> = Vec::new();
    let mut paper_counter = 0usize;
    let n_externals = 150usize;

    for year in year_start..=config.tf {
        // Hiring decision for this year's cohort.
        if year >= config.t0 {
            let cohort = &hires_by_year[(year - config.t0) as usize];
            if !cohort.is_empty() {
                let neg_phd: Vec<f64> = cohort.iter().map(|&i| -(hires[i].phd_rank as f64)).collect();
                let pubs_count: Vec<f64> = cohort.iter().map(|&i| hires[i].papers.len() as f64).collect();
                let worst = n_dep as f64 * 1.25;
                let neg_avg_rank: Vec<f64> = cohort
                    .iter()
                    .map(|&i| {
                        let h = &hires[i];
                        let qualified: Vec<f64> = h
                            .coauthor_pool
                            .iter()
                            .filter(|&&f| faculty_members[f].1 <= year - 1)
                            .map(|&f| faculty_members[f].2 as f64)
                            .collect();
                        if qualified.is_empty() {
                            -worst
                        } else {
                            -(qualified.iter().sum::<f64>() / qualified.len() as f64)
                        }
                    })
                    .collect();
                let z_phd = zscores(&neg_phd);
                let z_bib = zscores(&pubs_count);
                let z_net = zscores(&neg_avg_rank);
                let raw: Vec<f64> = (0..cohort.len())
                    .map(|k| config.w_phd * z_phd[k] + config.w_bib * z_bib[k] + config.w_net * z_net[k])
                    .collect();
                let z_raw = zscores(&raw);
                let mut order: Vec<(f64, usize)> = Vec::with_capacity(cohort.len());
                for (k, &i) in cohort.iter().enumerate() {
                    let u: f64 = rng_noise.gen_range(f64::EPSILON..1.0);
                    let gumbel = -(-u.ln()).ln();
                    let perturbed = z_raw[k] + temperature * gumbel;
                    let h = &mut hires[i];
                    h.z_phd = z_phd[k];
                    h.z_bib = z_bib[k];
                    h.z_net = z_net[k];
                    h.gumbel = gumbel;
                    h.score = perturbed;
                    order.push((perturbed, k));
                }
                // Best perturbed score takes the best slot.
                order.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
                let mut slots: Vec<u32> = cohort.iter().map(|&i| hires[i].phd_rank).collect();
                slots.sort_unstable();
                for (slot, &(_, k)) in slots.iter().zip(&order) {
                    hires[cohort[k]].fac_rank = *slot;
                }
            }
        }

        // Papers dated this year.
        for i in 0..hires.len() {
            let t_i = hires[i].hire_year;
            let active = year >= t_i - config.pre_hire_years as i32
                && year <= (t_i + config.post_hire_years as i32).min(config.tf);
            if !active {
                continue;
            }
            let rate = (config.papers_per_year * (0.4 * hires[i].bib_luck).exp()).clamp(0.05, 6.0);
            let n_papers = Poisson::new(rate).expect("positive rate").sample(&mut rng_pubs) as usize;
            for _ in 0..n_papers {
                let mut authors: Vec<String> = Vec::new();
                let mut fac_picks: Vec<usize> = Vec::new();
                if !rng_pubs.gen_bool(config.solo_rate) {
                    let draw: f64 = rng_pubs.gen_range(0.0..1.0);
                    let k_fac = if draw < 0.15 {
                        0
                    } else if draw < 0.70 {
                        1
                    } else {
                        2
                    };
                    if k_fac > 0 {
                        let weights: Vec<f64> = faculty_members
                            .iter()
                            .map(|f| fac_weight(hires[i].target_rank, f.2, config.attachment))
                            .collect();
                        while fac_picks.len() < k_fac {
                            let pick = weighted_pick(&weights, &mut rng_pubs);
                            if !fac_picks.contains(&pick) {
                                fac_picks.push(pick);
                            }
                        }
                        for &f in &fac_picks {
                            authors.push(faculty_members[f].0.clone());
                        }
                    }
                    if rng_pubs.gen_bool(config.hire_coauthor_rate) {
                        let peers: Vec<usize> = hires_by_year
                            .iter()
                            .flatten()
                            .copied()
                            .filter(|&j| {
                                j != i
                                    && year >= hires[j].hire_year - config.pre_hire_years as i32
                                    && year <= (hires[j].hire_year + config.post_hire_years as i32).min(config.tf)
                            })
                            .collect();
                        if !peers.is_empty() {
                            let j = peers[rng_pubs.gen_range(0..peers.len())];
                            authors.push(hires[j].name.clone());
                        }
                    }
                    if rng_pubs.gen_bool(config.external_author_rate) {
                        let x = rng_pubs.gen_range(0..n_externals);
                        authors.push(format!("x{x:05}"));
                    }
                }
                authors.shuffle(&mut rng_pubs);
                let me = hires[i].name.clone();
                if authors.is_empty() || rng_pubs.gen_bool(0.7) {
                    authors.insert(0, me);
                } else {
                    let pos = rng_pubs.gen_range(1..=authors.len());
                    authors.insert(pos, me);
                }
                publications.push(PublicationRecord {
                    paper_id: format!("p{paper_counter:06}"),
                    year,
                    authors,
                });
                paper_counter += 1;
                hires[i].papers.push(paper_counter - 1);
                for &f in &fac_picks {
                    hires[i].coauthor_pool.insert(f);
                }
            }
        }
    }

    // Assemble ingest-format records and the truth sidecar.
    let mut faculty_rows: Vec<FacultyRecord> = Vec::new();
    let mut truth_rows: Vec<TruthRow> = Vec::new();
    for h in &hires {
        faculty_rows.push(FacultyRecord {
            full_name: h.name.clone(),
            university: dept_name(h.fac_rank),
            hire_year: Some(h.hire_year),
            phd_university: dept_name(h.phd_rank),
            subfield: "cs".to_string(),
        });
        truth_rows.push(TruthRow {
            name: h.name.clone(),
            role: "hire".to_string(),
            hire_year: h.hire_year,
            phd_rank: h.phd_rank,
            faculty_rank: h.fac_rank,
            z_phd: h.z_phd,
            z_bib: h.z_bib,
            z_net: h.z_net,
            gumbel: h.gumbel,
            score: h.score,
        });
    }
    for (name, hire_year, rank, phd) in &faculty_members {
        faculty_rows.push(FacultyRecord {
            full_name: name.clone(),
            university: dept_name(*rank),
            hire_year: Some(*hire_year),
            phd_university: dept_name(*phd),
            subfield: "cs".to_string(),
        });
        truth_rows.push(TruthRow {
            name: name.clone(),
            role: "faculty".to_string(),
            hire_year: *hire_year,
            phd_rank: *phd,
            faculty_rank: *rank,
            z_phd: 0.0,
            z_bib: 0.0,
            z_net: 0.0,
            gumbel: 0.0,
            score: 0.0,
        });
    }
    let rankings = (1..=n_dep).map(|r| (dept_name(r), r)).collect();

    Ok(SynthOutput {
        publications,
        faculty: faculty_rows,
        rankings,
        truth: TruthFile {
            config: config.clone(),
            expected_ordering: planted_truth(config),
            researchers: truth_rows,
        },
    })
}

impl SynthOutput {
    /// Write `publications.csv`, `faculty.csv`, `rankings.csv`, `truth.json`.
    /// Byte-deterministic for a fixed config.
    pub fn write(&self, dir: &Path) -> Result<(), SynthError> {
        let io_err = |p: &Path, e: std::io::Error| SynthError::Io {
            path: p.display().to_string(),
            source: e,
        };
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

        let mut pubs = String::from("paper_id,year,authors\n");
        for p in &self.publications {
            pubs.push_str(&format!("{},{},{}\n", p.paper_id, p.year, p.authors.join("|")));
        }
        let path = dir.join("publications.csv");
        std::fs::write(&path, pubs).map_err(|e| io_err(&path, e))?;

        let mut fac = String::from("full_name,university,hire_year,phd_university,subfield\n");
        for f in &self.faculty {
            fac.push_str(&format!(
                "{},{},{},{},{}\n",
                f.full_name,
                f.university,
                f.hire_year.map(|y| y.to_string()).unwrap_or_default(),
                f.phd_university,
                f.subfield
            ));
        }
        let path = dir.join("faculty.csv");
        std::fs::write(&path, fac).map_err(|e| io_err(&path, e))?;

        let mut ranks = String::from("institution,rank\n");
        for (inst, r) in &self.rankings {
            ranks.push_str(&format!("{inst},{r}\n"));
        }
        let path = dir.join("rankings.csv");
        std::fs::write(&path, ranks).map_err(|e| io_err(&path, e))?;

        let truth = serde_json::to_string_pretty(&self.truth).expect("truth serializes");
        let path = dir.join("truth.json");
        std::fs::write(&path, truth).map_err(|e| io_err(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportionment_sums_and_respects_distribution() {
        let probs = vec![0.5, 0.3, 0.2];
        let counts = apportion(10, &probs);
        assert_eq!(counts.iter().sum::<u32>(), 10);
        assert_eq!(counts, vec![5, 3, 2]);
    }

    #[test]
    fn rank_distribution_matches_cumulative_targets() {
        let config = SynthConfig::default_market(1);
        let probs = rank_distribution(&config);
        assert_eq!(probs.len(), 60);
        let cum10: f64 = probs[..10].iter().sum();
        let cum30: f64 = probs[..30].iter().sum();
        let cum50: f64 = probs[..50].iter().sum();
        let cum_all: f64 = probs.iter().sum();
        assert!((cum10 - 0.22).abs() < 1e-12);
        assert!((cum30 - 0.49).abs() < 1e-12);
        assert!((cum50 - 0.77).abs() < 1e-12);
        assert!((cum_all - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_phd_hiring_assigns_own_rank() {
        let config = SynthConfig {
            w_phd: 1.0,
            w_bib: 0.0,
            w_net: 0.0,
            noise: 0.0,
            ..SynthConfig::small_market(5)
        };
        let out = generate(&config).unwrap();
        for row in out.truth.researchers.iter().filter(|r| r.role == "hire") {
            assert_eq!(
                row.faculty_rank, row.phd_rank,
                "{} got rank {} from phd {}",
                row.name, row.faculty_rank, row.phd_rank
            );
        }
    }

    #[test]
    fn ordering_prefers_combined_on_equal_weights() {
        let config = SynthConfig::default_market(1);
        let truth = planted_truth(&config).unwrap();
        assert_eq!(truth.ranked[0], "phd+bib+net");
    }

    #[test]
    fn high_noise_declares_no_ordering() {
        let config = SynthConfig {
            noise: 0.95,
            ..SynthConfig::default_market(1)
        };
        assert!(planted_truth(&config).is_none());
    }
}
