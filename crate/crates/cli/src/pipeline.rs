//! Stage execution rooted in one output directory: synth → ingest → build →
//! featurize → train → rewire → evaluate. Each stage reads the previous
//! stage's files, so the commands also work standalone.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use placenet_core::evalstat::{pr_auc, precision_recall, write_metrics_csv, MetricRow};
use placenet_core::featurize::{
    assign_labels, bib_tensor, ones_tensor, phd_tensor, temporal_split, write_masks_csv,
    FeatureTensor, LabelVector, SplitMasks,
};
use placenet_core::ingest::{
    impute_missing_ranks, link, read_aliases_csv, read_faculty_csv, read_linked_json,
    read_publications_csv, read_rankings_csv, write_linked_json, AliasMap, LinkedDataset,
};
use placenet_core::rewire::{rewire_sequence, RewirePlan};
use placenet_core::rng;
use placenet_core::synth::generate;
use placenet_core::tempgraph::{
    build_sequence, partition_nodes, read_increments_csv, HistoryPolicy, SnapshotSequence,
};
use placenet_models::{
    heuristic_avg_coauthor, heuristic_phd, heuristic_random, read_scores_csv, train_gconvgru,
    train_static_gnn, train_tabular, write_run_dir, write_scores_csv, ModelKind, ModelSpec,
    ScoreSet,
};

use crate::config::{ConfigError, DataSource, RunConfig};

/// Missing pieces of a run directory map to exit code 5.
#[derive(Debug)]
pub struct IncompleteRun(pub String);

impl fmt::Display for IncompleteRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "incomplete run: {}", self.0)
    }
}

impl std::error::Error for IncompleteRun {}

pub fn history_name(h: HistoryPolicy) -> &'static str {
    match h {
        HistoryPolicy::Fold => "fold",
        HistoryPolicy::Drop => "drop",
    }
}

/// Where every artifact lives under the output directory.
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn new(cfg: &RunConfig) -> Layout {
        Layout {
            out: cfg.out.clone(),
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }
    pub fn linked_json(&self) -> PathBuf {
        self.out.join("linked.json")
    }
    pub fn graph_dir(&self) -> PathBuf {
        self.out.join("graph")
    }
    pub fn increments_csv(&self) -> PathBuf {
        self.graph_dir().join("increments.csv")
    }
    pub fn graph_meta(&self) -> PathBuf {
        self.graph_dir().join("meta.json")
    }
    pub fn features_dir(&self) -> PathBuf {
        self.out.join("features")
    }
    pub fn splits_json(&self) -> PathBuf {
        self.out.join("splits.json")
    }
    pub fn run_dir(&self, label: &str, k: u32, run: u32) -> PathBuf {
        self.out
            .join("runs")
            .join(label)
            .join(format!("K{k}"))
            .join(format!("run{run}"))
    }
    pub fn metrics_csv(&self) -> PathBuf {
        self.out.join("metrics.csv")
    }
    pub fn rewire_dir(&self) -> PathBuf {
        self.out.join("rewire")
    }
    pub fn rewire_rep_dir(&self, p: u32, rep: u32) -> PathBuf {
        self.rewire_dir().join(format!("p{p}")).join(format!("rep{rep}"))
    }
    pub fn rewire_metrics_csv(&self) -> PathBuf {
        self.rewire_dir().join("metrics.csv")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }
}

#[derive(Serialize, Deserialize)]
struct GraphMeta {
    node_count: usize,
    t0: i32,
    tf: i32,
    history: String,
}

/// Expand the master seed into an independent stream and draw one seed.
pub fn derived_seed(master: u64, name: &str) -> u64 {
    rng::stream(master, name).gen::<u64>()
}

fn worker_pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    let workers = match std::env::var("PLACENET_WORKERS") {
        Ok(v) => Some(v.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| {
            ConfigError(format!("PLACENET_WORKERS = '{v}' must be a positive integer"))
        })?),
        Err(_) => cfg.workers,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .context("building worker pool")
}

pub fn stage_synth(cfg: &RunConfig) -> Result<()> {
    let DataSource::Synth(sc) = &cfg.source else {
        return Err(ConfigError("synth stage needs a [synth] source".into()).into());
    };
    let out = generate(sc).context("synth")?;
    let dir = Layout::new(cfg).data_dir();
    out.write(&dir)
        .with_context(|| format!("synth: writing {}", dir.display()))?;
    println!(
        "synth: {} faculty rows, {} publications -> {}",
        out.faculty.len(),
        out.publications.len(),
        dir.display()
    );
    Ok(())
}

pub fn stage_ingest(cfg: &RunConfig) -> Result<()> {
    let layout = Layout::new(cfg);
    let (pubs, faculty, table, aliases) = match &cfg.source {
        DataSource::Files {
            publications,
            faculty,
            rankings,
            aliases,
        } => {
            let alias_map = match aliases {
                Some(p) => read_aliases_csv(p).context("ingest: aliases")?,
                None => AliasMap::default(),
            };
            (
                read_publications_csv(publications).context("ingest: publications")?,
                read_faculty_csv(faculty).context("ingest: faculty")?,
                read_rankings_csv(rankings, &alias_map).context("ingest: rankings")?,
                alias_map,
            )
        }
        DataSource::Synth(_) => {
            let dir = layout.data_dir();
            let alias_map = AliasMap::default();
            (
                read_publications_csv(&dir.join("publications.csv"))
                    .context("ingest: run `synth` first")?,
                read_faculty_csv(&dir.join("faculty.csv")).context("ingest: faculty")?,
                read_rankings_csv(&dir.join("rankings.csv"), &alias_map)
                    .context("ingest: rankings")?,
                alias_map,
            )
        }
    };
    let mut dataset = link(&pubs, &faculty, &table, &aliases).context("ingest: linking")?;
    impute_missing_ranks(&mut dataset).context("ingest: imputing ranks")?;
    write_linked_json(&dataset, &layout.linked_json()).context("ingest: writing")?;
    println!(
        "ingest: {} researchers, {} publications, report {}",
        dataset.researchers.len(),
        dataset.publications.len(),
        serde_json::to_string(&dataset.link_report)?
    );
    Ok(())
}

pub fn stage_build(cfg: &RunConfig) -> Result<()> {
    let layout = Layout::new(cfg);
    let dataset =
        read_linked_json(&layout.linked_json()).context("build: run `ingest` first")?;
    let seq =
        build_sequence(&dataset, cfg.t0, cfg.tf, cfg.history).context("build: snapshots")?;
    std::fs::create_dir_all(layout.graph_dir())?;
    seq.write_increments_csv(&layout.increments_csv())
        .context("build: writing increments")?;
    let meta = GraphMeta {
        node_count: seq.node_count,
        t0: cfg.t0,
        tf: cfg.tf,
        history: history_name(cfg.history).to_string(),
    };
    std::fs::write(
        layout.graph_meta(),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    println!(
        "build: {} nodes, {} edges in the final snapshot",
        seq.node_count,
        seq.edges_at(cfg.tf)?.len()
    );
    Ok(())
}

pub fn stage_featurize(cfg: &RunConfig) -> Result<()> {
    let layout = Layout::new(cfg);
    let dataset =
        read_linked_json(&layout.linked_json()).context("featurize: run `ingest` first")?;
    let tensors = vec![
        phd_tensor(&dataset, cfg.t0, cfg.tf).context("featurize: X_PhD")?,
        bib_tensor(&dataset, cfg.t0, cfg.tf, cfg.history).context("featurize: X_Bib")?,
        ones_tensor(dataset.researchers.len(), cfg.t0, cfg.tf),
    ];
    let dir = layout.features_dir();
    std::fs::create_dir_all(&dir)?;
    for t in &tensors {
        t.write_binary(
            &dir.join(format!("{}.bin", t.name)),
            &dir.join(format!("{}.json", t.name)),
        )
        .with_context(|| format!("featurize: writing {}", t.name))?;
    }
    let partition = partition_nodes(&dataset, cfg.t0, cfg.tf).context("featurize: partition")?;
    let splits = temporal_split(&partition, cfg.seed).context("featurize: splits")?;
    std::fs::write(
        layout.splits_json(),
        serde_json::to_string_pretty(&splits)? + "\n",
    )?;
    let masks = ((cfg.tf - 2)..=cfg.tf)
        .map(|t| splits.year_masks(t, (t - cfg.t0) as u32))
        .collect::<Result<Vec<_>, _>>()
        .context("featurize: masks")?;
    write_masks_csv(&layout.out.join("masks.csv"), &masks).context("featurize: masks")?;
    println!(
        "featurize: {} tensors, {} pooled hires -> {}",
        tensors.len(),
        partition.v_hire.len(),
        dir.display()
    );
    Ok(())
}

pub struct Workspace {
    pub dataset: LinkedDataset,
    pub seq: SnapshotSequence,
    pub features: Vec<FeatureTensor>,
    pub splits: SplitMasks,
}

pub fn load_workspace(cfg: &RunConfig) -> Result<Workspace> {
    let layout = Layout::new(cfg);
    let dataset = read_linked_json(&layout.linked_json()).context("run `ingest` first")?;
    let meta: GraphMeta = serde_json::from_str(
        &std::fs::read_to_string(layout.graph_meta()).context("run `build` first")?,
    )
    .context("graph meta")?;
    if (meta.t0, meta.tf) != (cfg.t0, cfg.tf) || meta.node_count != dataset.researchers.len() {
        return Err(IncompleteRun(format!(
            "graph meta ({}..{}, {} nodes) does not match the config and linked data \
             ({}..{}, {} nodes); rerun `build`",
            meta.t0,
            meta.tf,
            meta.node_count,
            cfg.t0,
            cfg.tf,
            dataset.researchers.len()
        ))
        .into());
    }
    let seq = read_increments_csv(
        &layout.increments_csv(),
        meta.node_count,
        meta.t0,
        meta.tf,
    )
    .context("run `build` first")?;
    let dir = layout.features_dir();
    let features = ["X_PhD", "X_Bib", "X_ONES"]
        .iter()
        .map(|name| {
            FeatureTensor::read_binary(
                &dir.join(format!("{name}.bin")),
                &dir.join(format!("{name}.json")),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .context("run `featurize` first")?;
    let splits: SplitMasks = serde_json::from_str(
        &std::fs::read_to_string(layout.splits_json()).context("run `featurize` first")?,
    )
    .context("splits")?;
    Ok(Workspace {
        dataset,
        seq,
        features,
        splits,
    })
}

/// Train one grid entry on the given sequence and leave its run directory
/// behind. Static kinds train one model per test year (pooling the scored
/// cohorts at the directory root); the other kinds train once.
fn train_one(
    ws: &Workspace,
    seq: &SnapshotSequence,
    spec: &ModelSpec,
    labels: &LabelVector,
    k: u32,
    dir: &Path,
) -> Result<()> {
    match spec.kind {
        ModelKind::Random => {
            let scores = heuristic_random(&ws.splits, k, spec.seed);
            write_run_dir(dir, spec, None, &scores)?;
        }
        ModelKind::PhdRank => {
            let scores = heuristic_phd(&ws.dataset, &ws.splits, k)?;
            write_run_dir(dir, spec, None, &scores)?;
        }
        ModelKind::AvgCoauthorRank => {
            let scores = heuristic_avg_coauthor(&ws.dataset, seq, &ws.splits, k)?;
            write_run_dir(dir, spec, None, &scores)?;
        }
        ModelKind::Logreg | ModelKind::Mlp => {
            let (model, scores) = train_tabular(spec, &ws.features, labels, &ws.splits)?;
            write_run_dir(dir, spec, Some(&model), &scores)?;
        }
        ModelKind::Gcn | ModelKind::Gat | ModelKind::Sage => {
            let mut probabilities = BTreeMap::new();
            for t in (ws.splits.tf - 2)..=ws.splits.tf {
                let (model, scores) =
                    train_static_gnn(spec, seq, &ws.features, labels, &ws.splits, t)?;
                write_run_dir(&dir.join(format!("t{t}")), spec, Some(&model), &scores)?;
                probabilities.extend(scores.probabilities);
            }
            let pooled = ScoreSet {
                run_id: spec.seed as u32,
                probabilities,
            };
            std::fs::create_dir_all(dir)?;
            std::fs::write(
                dir.join("spec.json"),
                serde_json::to_string_pretty(spec)? + "\n",
            )?;
            write_scores_csv(&dir.join("scores.csv"), &pooled)?;
        }
        ModelKind::Gconvgru => {
            let (model, scores) = train_gconvgru(spec, seq, &ws.features, labels, &ws.splits)?;
            write_run_dir(dir, spec, Some(&model), &scores)?;
        }
    }
    Ok(())
}

pub fn stage_train(cfg: &RunConfig) -> Result<()> {
    let ws = load_workspace(cfg).context("train")?;
    let layout = Layout::new(cfg);
    let mut labels_by_k = BTreeMap::new();
    for &k in &cfg.thresholds {
        labels_by_k.insert(k, assign_labels(&ws.dataset, k).context("train: labels")?);
    }
    let mut jobs = Vec::new();
    for (label, spec) in &cfg.models {
        for &k in &cfg.thresholds {
            for run in 0..cfg.n_repeats {
                let mut spec = spec.clone();
                spec.seed = derived_seed(cfg.seed, &format!("model/{label}/K{k}/run{run}"));
                jobs.push((label.clone(), spec, k, run, layout.run_dir(label, k, run)));
            }
        }
    }
    let pool = worker_pool(cfg)?;
    pool.install(|| {
        jobs.par_iter().try_for_each(|(label, spec, k, run, dir)| {
            train_one(&ws, &ws.seq, spec, &labels_by_k[k], *k, dir)
                .with_context(|| format!("train: model '{label}' K={k} run {run}"))
        })
    })?;
    println!("train: {} runs -> {}", jobs.len(), layout.out.join("runs").display());
    Ok(())
}

pub fn stage_rewire(cfg: &RunConfig) -> Result<()> {
    let Some(grid) = &cfg.rewire else {
        println!("rewire: no [rewire] section, skipping");
        return Ok(());
    };
    let ws = load_workspace(cfg).context("rewire")?;
    let layout = Layout::new(cfg);
    let labels = assign_labels(&ws.dataset, grid.k).context("rewire: labels")?;
    let base = &cfg
        .models
        .iter()
        .find(|(l, _)| *l == grid.model)
        .expect("validated at config load")
        .1;
    let mut jobs = Vec::new();
    for &p in &grid.percentages {
        for rep in 0..grid.replicates {
            jobs.push((p, rep));
        }
    }
    let pool = worker_pool(cfg)?;
    pool.install(|| {
        jobs.par_iter().try_for_each(|&(p, rep)| -> Result<()> {
            let plan = RewirePlan::new(p, derived_seed(cfg.seed, &format!("rewire/p{p}/rep{rep}")))
                .expect("p validated at config load");
            let (rewired, report) = rewire_sequence(&ws.seq, &plan)
                .with_context(|| format!("rewire: p={p} rep {rep}"))?;
            let dir = layout.rewire_rep_dir(p, rep);
            let mut spec = base.clone();
            spec.seed = derived_seed(cfg.seed, &format!("rewire-train/p{p}/rep{rep}"));
            train_one(&ws, &rewired, &spec, &labels, grid.k, &dir)
                .with_context(|| format!("rewire: training p={p} rep {rep}"))?;
            std::fs::write(
                dir.join("rewire_report.json"),
                serde_json::to_string_pretty(&report)? + "\n",
            )?;
            Ok(())
        })
    })?;
    println!(
        "rewire: {} rewired runs -> {}",
        jobs.len(),
        layout.rewire_dir().display()
    );
    Ok(())
}

/// Recompute one metric row per (model, K, run) from the stored scores.
pub fn compute_rows(cfg: &RunConfig, dataset: &LinkedDataset) -> Result<Vec<MetricRow>> {
    let layout = Layout::new(cfg);
    let mut labels_by_k = BTreeMap::new();
    for &k in &cfg.thresholds {
        labels_by_k.insert(k, assign_labels(dataset, k)?);
    }
    let mut rows = Vec::new();
    for (label, spec) in &cfg.models {
        for &k in &cfg.thresholds {
            for run in 0..cfg.n_repeats {
                let path = layout.run_dir(label, k, run).join("scores.csv");
                if !path.exists() {
                    return Err(IncompleteRun(format!(
                        "missing scores for model '{label}' K={k} run {run}: {}",
                        path.display()
                    ))
                    .into());
                }
                let scores = read_scores_csv(&path)?;
                let (s, y) = scores.aligned_with(&labels_by_k[&k]);
                let pr = precision_recall(&s, &y)?;
                rows.push(MetricRow {
                    model: spec.kind.as_str().to_string(),
                    feature_set: spec.feature_label(),
                    run,
                    k,
                    precision: pr.precision,
                    recall: pr.recall,
                    pr_auc: pr_auc(&s, &y)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Metric rows for the rewired runs; the feature-set column records the
/// rewiring percentage.
pub fn compute_rewire_rows(cfg: &RunConfig, dataset: &LinkedDataset) -> Result<Vec<MetricRow>> {
    let Some(grid) = &cfg.rewire else {
        return Ok(Vec::new());
    };
    let layout = Layout::new(cfg);
    let labels = assign_labels(dataset, grid.k)?;
    let spec = &cfg
        .models
        .iter()
        .find(|(l, _)| *l == grid.model)
        .expect("validated at config load")
        .1;
    let mut rows = Vec::new();
    for &p in &grid.percentages {
        for rep in 0..grid.replicates {
            let path = layout.rewire_rep_dir(p, rep).join("scores.csv");
            if !path.exists() {
                return Err(IncompleteRun(format!(
                    "missing scores for rewiring p={p} rep {rep}: {}",
                    path.display()
                ))
                .into());
            }
            let scores = read_scores_csv(&path)?;
            let (s, y) = scores.aligned_with(&labels);
            let pr = precision_recall(&s, &y)?;
            rows.push(MetricRow {
                model: spec.kind.as_str().to_string(),
                feature_set: format!("p{p}"),
                run: rep,
                k: grid.k,
                precision: pr.precision,
                recall: pr.recall,
                pr_auc: pr_auc(&s, &y)?,
            });
        }
    }
    Ok(rows)
}

pub fn stage_evaluate(cfg: &RunConfig) -> Result<()> {
    let layout = Layout::new(cfg);
    let dataset =
        read_linked_json(&layout.linked_json()).context("evaluate: run `ingest` first")?;
    let rows = compute_rows(cfg, &dataset).context("evaluate")?;
    write_metrics_csv(&layout.metrics_csv(), &rows).context("evaluate: writing metrics")?;
    println!("evaluate: {} rows -> {}", rows.len(), layout.metrics_csv().display());
    if cfg.rewire.is_some() {
        let rows = compute_rewire_rows(cfg, &dataset).context("evaluate: rewire")?;
        write_metrics_csv(&layout.rewire_metrics_csv(), &rows)
            .context("evaluate: writing rewire metrics")?;
        println!(
            "evaluate: {} rewire rows -> {}",
            rows.len(),
            layout.rewire_metrics_csv().display()
        );
    }
    Ok(())
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<()> {
    if matches!(cfg.source, DataSource::Synth(_)) {
        stage_synth(cfg)?;
    }
    stage_ingest(cfg)?;
    stage_build(cfg)?;
    stage_featurize(cfg)?;
    stage_train(cfg)?;
    if cfg.rewire.is_some() {
        stage_rewire(cfg)?;
    }
    stage_evaluate(cfg)?;
    crate::report::stage_report(cfg)?;
    Ok(())
}
