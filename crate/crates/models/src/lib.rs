//! Model zoo for the placement-prediction pipeline: seeded heuristics,
//! tabular learners on final pre-hire feature slices, static message-passing
//! networks trained per test year, and a recurrent graph model unrolled over
//! snapshot sequences. All training is mask-restricted and deterministic for
//! a fixed `ModelSpec`.

mod adam;
pub mod diagnostics;
mod graphops;
mod heuristics;
mod inputs;
mod nets;
mod scaler;
mod static_gnn;
mod tabular;
mod temporal;

pub use graphops::{cheb_operator, gat_edges, gcn_operator, mean_operator, GatEdges};
pub use heuristics::{heuristic_avg_coauthor, heuristic_phd, heuristic_random};
pub use scaler::Scaler;
pub use static_gnn::train_static_gnn;
pub use tabular::train_tabular;
pub use temporal::train_gconvgru;

use placenet_autograd::{AdError, NamedTensor};
use placenet_core::featurize::{FeaturizeError, LabelVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model spec: {0}")]
    BadSpec(String),
    #[error("feature tensor {0} required by the spec is missing from the inputs")]
    MissingFeature(&'static str),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("{split} split holds no usable nodes")]
    EmptySplit { split: &'static str },
    #[error("{mask} mask for year {year} is empty")]
    EmptyMask { mask: &'static str, year: i32 },
    #[error("window {w} leaves no training years in [{t0}, {tf}]")]
    WindowTooLong { w: u32, t0: i32, tf: i32 },
    #[error("node {node} (hired {year}) has no pre-hire feature slice")]
    NoPrehireSlice { node: usize, year: i32 },
    #[error("node {node} (hired {year}) falls outside the recurrent test pass")]
    OutsideTestPass { node: usize, year: i32 },
    #[error("node {node} is missing a {kind} rank")]
    MissingRank { node: usize, kind: &'static str },
    #[error("model kind {kind} cannot score {what}")]
    WrongInputs { kind: &'static str, what: &'static str },
    #[error("autodiff failure: {0}")]
    Autograd(#[from] AdError),
    #[error("feature pipeline failure: {0}")]
    Featurize(#[from] FeaturizeError),
    #[error("graph failure: {0}")]
    Graph(#[from] placenet_core::tempgraph::TempGraphError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON encoding failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path} line {line}: malformed scores row")]
    ScoresParse { path: String, line: usize },
}

fn io_err(path: &Path, source: std::io::Error) -> ModelError {
    ModelError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Random,
    PhdRank,
    AvgCoauthorRank,
    Logreg,
    Mlp,
    Gcn,
    Gat,
    Sage,
    Gconvgru,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Random => "random",
            ModelKind::PhdRank => "phd_rank",
            ModelKind::AvgCoauthorRank => "avg_coauthor_rank",
            ModelKind::Logreg => "logreg",
            ModelKind::Mlp => "mlp",
            ModelKind::Gcn => "gcn",
            ModelKind::Gat => "gat",
            ModelKind::Sage => "sage",
            ModelKind::Gconvgru => "gconvgru",
        }
    }

    pub fn is_heuristic(self) -> bool {
        matches!(
            self,
            ModelKind::Random | ModelKind::PhdRank | ModelKind::AvgCoauthorRank
        )
    }

    pub fn is_tabular(self) -> bool {
        matches!(self, ModelKind::Logreg | ModelKind::Mlp)
    }

    pub fn is_static_graph(self) -> bool {
        matches!(self, ModelKind::Gcn | ModelKind::Gat | ModelKind::Sage)
    }

    pub fn is_graph(self) -> bool {
        self.is_static_graph() || self == ModelKind::Gconvgru
    }
}

/// Input feature tensors a model may consume, matched to `FeatureTensor`s by
/// their canonical names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "X_PhD")]
    Phd,
    #[serde(rename = "X_Bib")]
    Bib,
    #[serde(rename = "X_ONES")]
    Ones,
}

impl FeatureKind {
    pub fn tensor_name(self) -> &'static str {
        match self {
            FeatureKind::Phd => "X_PhD",
            FeatureKind::Bib => "X_Bib",
            FeatureKind::Ones => "X_ONES",
        }
    }

    fn label_part(self) -> &'static str {
        match self {
            FeatureKind::Phd => "PhD",
            FeatureKind::Bib => "Bibliometrics",
            FeatureKind::Ones => "Ones",
        }
    }
}

fn default_layers() -> usize {
    2
}
fn default_hidden() -> usize {
    16
}
fn default_dropout() -> f64 {
    0.5
}
fn default_heads() -> usize {
    2
}
fn default_window() -> u32 {
    2
}
fn default_epochs() -> usize {
    500
}
fn default_lr() -> f64 {
    0.001
}
fn default_patience() -> usize {
    50
}

/// Full description of one training run. Serialized verbatim to the run
/// directory as `spec.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub feature_set: Vec<FeatureKind>,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default = "default_heads")]
    pub attention_heads: usize,
    /// Sliding-window width for the recurrent model, in years.
    #[serde(default = "default_window")]
    pub window: u32,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default)]
    pub seed: u64,
    /// Feed edge multiplicities into message passing instead of a binary
    /// adjacency. Off by default; attention models always see binary edges.
    #[serde(default)]
    pub use_weights: bool,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, feature_set: Vec<FeatureKind>) -> Self {
        ModelSpec {
            kind,
            feature_set,
            layers: default_layers(),
            hidden_dim: default_hidden(),
            dropout: default_dropout(),
            attention_heads: default_heads(),
            window: default_window(),
            epochs: default_epochs(),
            learning_rate: default_lr(),
            patience: default_patience(),
            seed: 0,
            use_weights: false,
        }
    }

    /// Check field ranges and kind/feature compatibility; sorts the feature
    /// set into canonical order (PhD, Bib, Ones) so column layout is
    /// deterministic regardless of how the spec was written.
    pub fn validate(&mut self) -> Result<(), ModelError> {
        self.feature_set.sort();
        let before = self.feature_set.len();
        self.feature_set.dedup();
        if before != self.feature_set.len() {
            return Err(ModelError::BadSpec("duplicate feature kinds".into()));
        }
        if !self.kind.is_heuristic() && self.feature_set.is_empty() {
            return Err(ModelError::BadSpec(
                "at least one feature tensor must be selected".into(),
            ));
        }
        if self.kind.is_tabular() && self.feature_set.contains(&FeatureKind::Ones) {
            return Err(ModelError::BadSpec(
                "tabular models take X_PhD/X_Bib only".into(),
            ));
        }
        if self.kind == ModelKind::Logreg {
            // Logistic regression is the single-layer case by definition.
            self.layers = 1;
        }
        if self.kind == ModelKind::Gconvgru && !(1..=3).contains(&self.window) {
            return Err(ModelError::BadSpec(format!(
                "window {} outside {{1,2,3}}",
                self.window
            )));
        }
        if !self.kind.is_heuristic() {
            if self.layers < 1 {
                return Err(ModelError::BadSpec("layers must be >= 1".into()));
            }
            if self.hidden_dim < 1 {
                return Err(ModelError::BadSpec("hidden_dim must be >= 1".into()));
            }
            if !(0.0..1.0).contains(&self.dropout) {
                return Err(ModelError::BadSpec(format!(
                    "dropout {} outside [0, 1)",
                    self.dropout
                )));
            }
            if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
                return Err(ModelError::BadSpec("learning_rate must be > 0".into()));
            }
        }
        if self.kind == ModelKind::Gat && self.attention_heads < 1 {
            return Err(ModelError::BadSpec("attention_heads must be >= 1".into()));
        }
        Ok(())
    }

    /// Human-readable feature-set label used in metric rows and report
    /// tables. Graph models carry a "+Co-author" suffix because message
    /// passing injects the co-authorship structure; a graph model fed only
    /// the constant feature is the pure network configuration.
    pub fn feature_label(&self) -> String {
        match self.kind {
            ModelKind::Random => "None".to_string(),
            ModelKind::PhdRank => "PhD".to_string(),
            ModelKind::AvgCoauthorRank => "Co-author".to_string(),
            _ => {
                let mut set = self.feature_set.clone();
                set.sort_unstable();
                set.dedup();
                let parts: Vec<&str> = set
                    .iter()
                    .filter(|f| **f != FeatureKind::Ones || !self.kind.is_graph())
                    .map(|f| f.label_part())
                    .collect();
                if self.kind.is_graph() {
                    if parts.is_empty() {
                        "Co-author".to_string()
                    } else {
                        format!("{}+Co-author", parts.join("+"))
                    }
                } else {
                    parts.join("+")
                }
            }
        }
    }
}

/// Predicted probabilities of the High class for exactly the nodes carrying
/// an evaluation mask, keyed by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub run_id: u32,
    pub probabilities: BTreeMap<u32, f64>,
}

impl ScoreSet {
    /// Hard label at the 0.5 threshold.
    pub fn threshold_label(&self, node: u32) -> Option<bool> {
        self.probabilities.get(&node).map(|p| *p >= 0.5)
    }

    /// Scores and ground-truth labels in node order, ready for PR analysis.
    pub fn aligned_with(&self, labels: &LabelVector) -> (Vec<f64>, Vec<bool>) {
        let mut s = Vec::with_capacity(self.probabilities.len());
        let mut y = Vec::with_capacity(self.probabilities.len());
        for (&node, &p) in &self.probabilities {
            s.push(p);
            y.push(labels.y[node as usize]);
        }
        (s, y)
    }
}

/// Where a trained model's forward pass lives: tabular row model, one static
/// graph per test year, or the recurrent model over the snapshot sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "arch")]
pub enum ArchInfo {
    Tabular,
    Static { test_year: i32 },
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// A fitted model: the spec it was trained under, the selected parameter
/// checkpoint, the feature scaler, and the per-epoch loss trace.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub arch: ArchInfo,
    pub params: Vec<NamedTensor>,
    pub scaler: Scaler,
    /// Epoch whose parameters were selected (0 = initialization).
    pub best_epoch: usize,
    pub epoch_log: Vec<EpochLoss>,
}

pub mod predicting;
pub use predicting::{predict, PredictInputs};

/// Write the run-directory artifacts: `spec.json`, `metrics.csv` with the
/// per-epoch losses, `scores.csv` (`node_id,probability,label@0.5`), and the
/// parameter checkpoint (`params.bin` + `params.json`) when the model has
/// parameters.
pub fn write_run_dir(
    dir: &Path,
    spec: &ModelSpec,
    model: Option<&TrainedModel>,
    scores: &ScoreSet,
) -> Result<(), ModelError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let spec_path = dir.join("spec.json");
    let mut doc = serde_json::to_string_pretty(spec)?;
    doc.push('\n');
    std::fs::write(&spec_path, doc).map_err(|e| io_err(&spec_path, e))?;

    let metrics_path = dir.join("metrics.csv");
    let mut metrics = String::from("epoch,train_loss,val_loss\n");
    if let Some(m) = model {
        for row in &m.epoch_log {
            metrics.push_str(&format!(
                "{},{},{}\n",
                row.epoch, row.train_loss, row.val_loss
            ));
        }
    }
    std::fs::write(&metrics_path, metrics).map_err(|e| io_err(&metrics_path, e))?;

    let scores_path = dir.join("scores.csv");
    write_scores_csv(&scores_path, scores)?;

    if let Some(m) = model {
        placenet_autograd::save_checkpoint(
            &dir.join("params.bin"),
            &dir.join("params.json"),
            &m.params,
        )?;
    }
    Ok(())
}

pub fn write_scores_csv(path: &Path, scores: &ScoreSet) -> Result<(), ModelError> {
    let mut buf = String::from("node_id,probability,label@0.5\n");
    for (&node, &p) in &scores.probabilities {
        let label = u8::from(p >= 0.5);
        buf.push_str(&format!("{node},{p},{label}\n"));
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn read_scores_csv(path: &Path) -> Result<ScoreSet, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bad = |line: usize| ModelError::ScoresParse {
        path: path.display().to_string(),
        line,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "node_id,probability,label@0.5")) => {}
        _ => return Err(bad(1)),
    }
    let mut probabilities = BTreeMap::new();
    for (i, line) in lines {
        let mut cells = line.split(',');
        let node: u32 = cells
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad(i + 1))?;
        let p: f64 = cells
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad(i + 1))?;
        let label: u8 = cells
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad(i + 1))?;
        if cells.next().is_some() || label != u8::from(p >= 0.5) {
            return Err(bad(i + 1));
        }
        probabilities.insert(node, p);
    }
    Ok(ScoreSet {
        run_id: 0,
        probabilities,
    })
}
