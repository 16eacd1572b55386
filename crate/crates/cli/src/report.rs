//! Report assembly. Every number is recomputed from the per-run score files;
//! nothing is read back from cached aggregate tables, so regenerating the
//! report after deleting `metrics.csv` yields byte-identical output.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{Context, Result};
use serde::Serialize;

use placenet_core::evalstat::{
    delta_table, fit_lmm, format_lmm, format_pct, pct_improvement, DeltaCell, LmmFit, MetricRow,
};
use placenet_core::ingest::read_linked_json;
use placenet_core::rewire::RewireReport;

use crate::config::{DataSource, RunConfig};
use crate::pipeline::{
    compute_rewire_rows, compute_rows, history_name, IncompleteRun, Layout,
};

/// Human-facing model names used in the tables.
pub fn display_model(model: &str) -> &str {
    match model {
        "random" => "Random",
        "phd_rank" => "PhD Rank",
        "avg_coauthor_rank" => "Avg. Co-author Rank",
        "logreg" => "LR",
        "mlp" => "MLP",
        "gcn" => "GCN",
        "gat" => "GAT",
        "sage" => "GraphSAGE",
        "gconvgru" => "GConvGRU",
        other => other,
    }
}

pub fn is_heuristic_name(model: &str) -> bool {
    matches!(model, "random" | "phd_rank" | "avg_coauthor_rank")
}

const FEATURE_ORDER: [&str; 8] = [
    "None",
    "PhD",
    "Bibliometrics",
    "Co-author",
    "PhD+Bibliometrics",
    "PhD+Co-author",
    "Bibliometrics+Co-author",
    "PhD+Bibliometrics+Co-author",
];

fn feature_rank(fs: &str) -> usize {
    FEATURE_ORDER
        .iter()
        .position(|f| *f == fs)
        .unwrap_or(FEATURE_ORDER.len())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite metric"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One line of the per-threshold summary table: either a heuristic baseline
/// or the best-scoring trained model for one feature set.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub feature_set: String,
    pub model: String,
    pub display: String,
    pub heuristic: bool,
    pub n: usize,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub pr_auc_mean: f64,
    pub pr_auc_std: f64,
    /// Percent PR-AUC improvement over the rank-threshold heuristic.
    pub vs_phd_rank: Option<f64>,
    /// Percent PR-AUC improvement over the co-author-rank heuristic.
    pub vs_avg_coauthor: Option<f64>,
}

struct CellStats {
    n: usize,
    precision: (f64, f64),
    recall: (f64, f64),
    pr_auc: (f64, f64),
}

fn cell_stats(rows: &[&MetricRow]) -> CellStats {
    let col = |f: fn(&MetricRow) -> f64| {
        let xs: Vec<f64> = rows.iter().map(|r| f(r)).collect();
        (mean(&xs), sample_std(&xs))
    };
    CellStats {
        n: rows.len(),
        precision: col(|r| r.precision),
        recall: col(|r| r.recall),
        pr_auc: col(|r| r.pr_auc),
    }
}

/// Baseline rows first (random, rank-threshold, co-author rank), then the
/// best trained model per feature set, with percent improvements over both
/// non-random heuristics.
pub fn summarize_threshold(rows: &[MetricRow], k: u32) -> Vec<SummaryRow> {
    let at_k: Vec<&MetricRow> = rows.iter().filter(|r| r.k == k).collect();
    let mut cells: BTreeMap<(&str, &str), Vec<&MetricRow>> = BTreeMap::new();
    for r in &at_k {
        cells
            .entry((r.model.as_str(), r.feature_set.as_str()))
            .or_default()
            .push(r);
    }

    let heuristic_mean = |name: &str| -> Option<f64> {
        let runs: Vec<f64> = at_k
            .iter()
            .filter(|r| r.model == name)
            .map(|r| r.pr_auc)
            .collect();
        if runs.is_empty() {
            None
        } else {
            Some(mean(&runs))
        }
    };
    let phd_base = heuristic_mean("phd_rank");
    let coauthor_base = heuristic_mean("avg_coauthor_rank");
    let improvements = |pr_auc: f64| {
        let over = |base: Option<f64>| base.and_then(|b| pct_improvement(pr_auc, b).ok());
        (over(phd_base), over(coauthor_base))
    };

    let mut out = Vec::new();
    for name in ["random", "phd_rank", "avg_coauthor_rank"] {
        let Some(((_, fs), rs)) = cells.iter().find(|((m, _), _)| *m == name) else {
            continue;
        };
        let s = cell_stats(rs);
        let (vs_phd, vs_co) = improvements(s.pr_auc.0);
        out.push(SummaryRow {
            feature_set: fs.to_string(),
            model: name.to_string(),
            display: display_model(name).to_string(),
            heuristic: true,
            n: s.n,
            precision_mean: s.precision.0,
            precision_std: s.precision.1,
            recall_mean: s.recall.0,
            recall_std: s.recall.1,
            pr_auc_mean: s.pr_auc.0,
            pr_auc_std: s.pr_auc.1,
            vs_phd_rank: vs_phd,
            vs_avg_coauthor: vs_co,
        });
    }

    let mut by_set: BTreeMap<&str, Vec<(&str, CellStats)>> = BTreeMap::new();
    for ((model, fs), rs) in &cells {
        if is_heuristic_name(model) {
            continue;
        }
        by_set.entry(fs).or_default().push((model, cell_stats(rs)));
    }
    let mut trained: Vec<SummaryRow> = by_set
        .into_iter()
        .map(|(fs, candidates)| {
            let (model, s) = candidates
                .into_iter()
                .reduce(|best, next| if next.1.pr_auc.0 > best.1.pr_auc.0 { next } else { best })
                .expect("non-empty candidate list");
            let (vs_phd, vs_co) = improvements(s.pr_auc.0);
            SummaryRow {
                feature_set: fs.to_string(),
                model: model.to_string(),
                display: display_model(model).to_string(),
                heuristic: false,
                n: s.n,
                precision_mean: s.precision.0,
                precision_std: s.precision.1,
                recall_mean: s.recall.0,
                recall_std: s.recall.1,
                pr_auc_mean: s.pr_auc.0,
                pr_auc_std: s.pr_auc.1,
                vs_phd_rank: vs_phd,
                vs_avg_coauthor: vs_co,
            }
        })
        .collect();
    trained.sort_by(|a, b| {
        feature_rank(&a.feature_set)
            .cmp(&feature_rank(&b.feature_set))
            .then_with(|| a.feature_set.cmp(&b.feature_set))
    });
    out.extend(trained);
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LmmBlock {
    pub k: u32,
    pub reference: String,
    pub fit: LmmFit,
    pub text: String,
}

/// Fit one mixed model per candidate reference set (the feature sets without
/// the co-author block), grouping runs by architecture. Degenerate designs
/// are reported as notes instead of blocks.
pub fn lmm_blocks(rows: &[MetricRow], k: u32) -> (Vec<LmmBlock>, Vec<String>) {
    let trained: Vec<MetricRow> = rows
        .iter()
        .filter(|r| r.k == k && !is_heuristic_name(&r.model))
        .cloned()
        .collect();
    let references: BTreeSet<&str> = trained
        .iter()
        .map(|r| r.feature_set.as_str())
        .filter(|fs| !fs.contains("Co-author"))
        .collect();
    let mut blocks = Vec::new();
    let mut notes = Vec::new();
    for reference in references {
        match fit_lmm(&trained, reference) {
            Ok(fit) => {
                let text = format_lmm(&fit);
                blocks.push(LmmBlock {
                    k,
                    reference: reference.to_string(),
                    fit,
                    text,
                });
            }
            Err(e) => notes.push(format!("mixed model (reference {reference}) skipped: {e}")),
        }
    }
    (blocks, notes)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaBlock {
    pub a: String,
    pub b: String,
    pub cells: Vec<DeltaCell>,
}

/// PR-AUC difference tables: each feature set against itself plus the
/// co-author block, and the cross-set contrasts with and without it.
pub fn delta_blocks(rows: &[MetricRow], thresholds: &[u32]) -> Result<Vec<DeltaBlock>> {
    let trained: Vec<MetricRow> = rows
        .iter()
        .filter(|r| !is_heuristic_name(&r.model))
        .cloned()
        .collect();
    let pairs = [
        ("PhD+Co-author", "PhD"),
        ("Bibliometrics+Co-author", "Bibliometrics"),
        ("PhD+Bibliometrics+Co-author", "PhD+Bibliometrics"),
        ("PhD", "Bibliometrics"),
        ("PhD+Co-author", "Bibliometrics+Co-author"),
    ];
    let mut blocks = Vec::new();
    for (a, b) in pairs {
        let ks: Vec<u32> = thresholds
            .iter()
            .copied()
            .filter(|&k| {
                let has = |fs: &str| trained.iter().any(|r| r.k == k && r.feature_set == fs);
                has(a) && has(b)
            })
            .collect();
        if ks.is_empty() {
            continue;
        }
        let cells = delta_table(&trained, a, b, &ks)
            .with_context(|| format!("delta table {a} vs {b}"))?;
        blocks.push(DeltaBlock {
            a: a.to_string(),
            b: b.to_string(),
            cells,
        });
    }
    Ok(blocks)
}

#[derive(Debug, Clone, Serialize)]
pub struct RewireRow {
    pub p: u32,
    pub n: usize,
    pub pr_auc_mean: f64,
    pub pr_auc_std: f64,
    pub pr_auc_median: f64,
    /// Replicates where some year missed its swap target within the attempt
    /// budget.
    pub short_replicates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RewireSection {
    pub model: String,
    pub k: u32,
    pub rows: Vec<RewireRow>,
}

pub fn rewire_section(
    cfg: &RunConfig,
    rewire_rows: &[MetricRow],
    shortfall_by_p: &BTreeMap<u32, usize>,
) -> Option<RewireSection> {
    let grid = cfg.rewire.as_ref()?;
    let rows = grid
        .percentages
        .iter()
        .map(|&p| {
            let fs = format!("p{p}");
            let auc: Vec<f64> = rewire_rows
                .iter()
                .filter(|r| r.feature_set == fs)
                .map(|r| r.pr_auc)
                .collect();
            RewireRow {
                p,
                n: auc.len(),
                pr_auc_mean: if auc.is_empty() { f64::NAN } else { mean(&auc) },
                pr_auc_std: sample_std(&auc),
                pr_auc_median: if auc.is_empty() { f64::NAN } else { median(&auc) },
                short_replicates: shortfall_by_p.get(&p).copied().unwrap_or(0),
            }
        })
        .collect();
    Some(RewireSection {
        model: grid.model.clone(),
        k: grid.k,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub seed: u64,
    pub t0: i32,
    pub tf: i32,
    pub history: String,
    pub thresholds: Vec<u32>,
    pub n_repeats: u32,
    pub source: String,
    pub models: Vec<String>,
}

pub fn manifest(cfg: &RunConfig) -> Manifest {
    let source = match &cfg.source {
        DataSource::Files {
            publications,
            faculty,
            rankings,
            aliases,
        } => format!(
            "files: publications={}, faculty={}, rankings={}, aliases={}",
            publications.display(),
            faculty.display(),
            rankings.display(),
            aliases
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "none".to_string())
        ),
        DataSource::Synth(sc) => format!(
            "synthetic market: {} hires, {} established faculty, {} departments, years {}..{}, seed {}",
            sc.n_hires, sc.n_faculty, sc.n_departments, sc.t0, sc.tf, sc.seed
        ),
    };
    let models = cfg
        .models
        .iter()
        .map(|(label, spec)| {
            format!(
                "{label} = {}",
                serde_json::to_string(spec).expect("model spec serializes")
            )
        })
        .collect();
    Manifest {
        tool: format!("placenet {}", env!("CARGO_PKG_VERSION")),
        seed: cfg.seed,
        t0: cfg.t0,
        tf: cfg.tf,
        history: history_name(cfg.history).to_string(),
        thresholds: cfg.thresholds.clone(),
        n_repeats: cfg.n_repeats,
        source,
        models,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KSection {
    pub k: u32,
    pub rows: Vec<SummaryRow>,
    pub lmm: Vec<LmmBlock>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    pub manifest: Manifest,
    pub thresholds: Vec<KSection>,
    pub deltas: Vec<DeltaBlock>,
    pub rewire: Option<RewireSection>,
}

pub fn build_report(
    cfg: &RunConfig,
    rows: &[MetricRow],
    rewire_rows: &[MetricRow],
    shortfall_by_p: &BTreeMap<u32, usize>,
) -> Result<ReportDoc> {
    let mut sections = Vec::new();
    for &k in &cfg.thresholds {
        let (lmm, notes) = lmm_blocks(rows, k);
        sections.push(KSection {
            k,
            rows: summarize_threshold(rows, k),
            lmm,
            notes,
        });
    }
    Ok(ReportDoc {
        manifest: manifest(cfg),
        thresholds: sections,
        deltas: delta_blocks(rows, &cfg.thresholds)?,
        rewire: rewire_section(cfg, rewire_rows, shortfall_by_p),
    })
}

fn fmt_pct_cell(v: Option<f64>) -> String {
    v.map(format_pct).unwrap_or_else(|| "-".to_string())
}

pub fn render_text(doc: &ReportDoc) -> String {
    let mut out = String::new();
    let rule = "-".repeat(100);
    out.push_str(&format!("{}\n", doc.manifest.tool));
    out.push_str(&format!("seed = {}\n", doc.manifest.seed));
    out.push_str(&format!(
        "years = {}..{} (history = {})\n",
        doc.manifest.t0, doc.manifest.tf, doc.manifest.history
    ));
    out.push_str(&format!(
        "thresholds = {:?}, repeats per cell = {}\n",
        doc.manifest.thresholds, doc.manifest.n_repeats
    ));
    out.push_str(&format!("source = {}\n", doc.manifest.source));
    out.push_str("models:\n");
    for m in &doc.manifest.models {
        out.push_str(&format!("  {m}\n"));
    }

    for section in &doc.thresholds {
        out.push_str(&format!("\n{rule}\nK = {}\n{rule}\n", section.k));
        out.push_str(&format!(
            "{:<28} {:<20} {:>15} {:>15} {:>15} {:>12} {:>12}\n",
            "feature set",
            "model",
            "precision",
            "recall",
            "PR-AUC",
            "% vs PhD",
            "% vs Co-auth"
        ));
        for r in &section.rows {
            let cell = |m: f64, s: f64| format!("{m:.3} ({s:.3})");
            out.push_str(&format!(
                "{:<28} {:<20} {:>15} {:>15} {:>15} {:>12} {:>12}\n",
                r.feature_set,
                r.display,
                cell(r.precision_mean, r.precision_std),
                cell(r.recall_mean, r.recall_std),
                cell(r.pr_auc_mean, r.pr_auc_std),
                fmt_pct_cell(r.vs_phd_rank),
                fmt_pct_cell(r.vs_avg_coauthor),
            ));
        }
        for block in &section.lmm {
            out.push_str(&format!("\nmixed model at K={}:\n{}", block.k, block.text));
        }
        for note in &section.notes {
            out.push_str(&format!("\nnote: {note}\n"));
        }
    }

    if !doc.deltas.is_empty() {
        out.push_str(&format!("\n{rule}\nPR-AUC differences (90% CI)\n{rule}\n"));
        for block in &doc.deltas {
            out.push_str(&format!("{} - {}:\n", block.a, block.b));
            for c in &block.cells {
                out.push_str(&format!(
                    "  K={:<4} mean {:+.4}  CI [{:+.4}, {:+.4}]  n={}{}\n",
                    c.k,
                    c.mean_delta,
                    c.ci_low,
                    c.ci_high,
                    c.n,
                    if c.paired { "" } else { "  (unpaired)" }
                ));
            }
        }
    }

    if let Some(rw) = &doc.rewire {
        out.push_str(&format!(
            "\n{rule}\nedge rewiring ({} at K={})\n{rule}\n",
            display_model(&rw.model),
            rw.k
        ));
        out.push_str(&format!(
            "{:<6} {:>6} {:>12} {:>12} {:>12} {:>14}\n",
            "p", "runs", "mean PR-AUC", "std", "median", "short reps"
        ));
        for r in &rw.rows {
            out.push_str(&format!(
                "{:<6} {:>6} {:>12.3} {:>12.3} {:>12.3} {:>14}\n",
                r.p, r.n, r.pr_auc_mean, r.pr_auc_std, r.pr_auc_median, r.short_replicates
            ));
        }
    }
    out
}

pub fn stage_report(cfg: &RunConfig) -> Result<()> {
    let layout = Layout::new(cfg);
    let dataset =
        read_linked_json(&layout.linked_json()).context("report: run `ingest` first")?;
    let rows = compute_rows(cfg, &dataset).context("report")?;
    let rewire_rows = compute_rewire_rows(cfg, &dataset).context("report: rewire")?;
    let mut shortfall_by_p = BTreeMap::new();
    if let Some(grid) = &cfg.rewire {
        for &p in &grid.percentages {
            let mut total = 0usize;
            for rep in 0..grid.replicates {
                let path = layout.rewire_rep_dir(p, rep).join("rewire_report.json");
                if !path.exists() {
                    return Err(IncompleteRun(format!(
                        "missing rewiring report for p={p} rep {rep}: {}",
                        path.display()
                    ))
                    .into());
                }
                let report: RewireReport = serde_json::from_str(
                    &std::fs::read_to_string(&path)
                        .with_context(|| format!("report: {}", path.display()))?,
                )
                .with_context(|| format!("report: {}", path.display()))?;
                total += report.total_shortfall() as usize;
            }
            shortfall_by_p.insert(p, total);
        }
    }
    let doc = build_report(cfg, &rows, &rewire_rows, &shortfall_by_p)?;
    let dir = layout.report_dir();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.txt"), render_text(&doc))?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&doc)? + "\n",
    )?;
    println!("report: -> {}", dir.display());
    Ok(())
}
