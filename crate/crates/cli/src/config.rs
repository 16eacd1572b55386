//! INI-style run configuration: `[section]` headers with `key = value`
//! lines, comma-separated lists, `#`/`;` comments. One `[model.<label>]`
//! section per grid entry.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use placenet_core::synth::SynthConfig;
use placenet_core::tempgraph::HistoryPolicy;
use placenet_models::{FeatureKind, ModelKind, ModelSpec};

/// Configuration problems map to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(detail: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(detail.into()))
}

#[derive(Debug, Clone)]
pub enum DataSource {
    Files {
        publications: PathBuf,
        faculty: PathBuf,
        rankings: PathBuf,
        aliases: Option<PathBuf>,
    },
    Synth(SynthConfig),
}

#[derive(Debug, Clone)]
pub struct RewireGrid {
    pub percentages: Vec<u32>,
    pub replicates: u32,
    /// Label of the `[model.*]` section to retrain on rewired graphs.
    pub model: String,
    pub k: u32,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: DataSource,
    pub t0: i32,
    pub tf: i32,
    pub history: HistoryPolicy,
    pub out: PathBuf,
    pub seed: u64,
    pub thresholds: Vec<u32>,
    pub n_repeats: u32,
    /// (label, spec) in declaration order; labels are run directory names.
    pub models: Vec<(String, ModelSpec)>,
    pub rewire: Option<RewireGrid>,
    pub workers: Option<usize>,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

fn parse_ini(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError(format!("line {line}: unterminated section header")))?
                .trim();
            if name.is_empty() {
                return err(format!("line {line}: empty section name"));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {line}: expected `key = value`")))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| ConfigError(format!("line {line}: key before any [section]")))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return err(format!("line {line}: empty key"));
        }
        if section.entries.iter().any(|(k, _, _)| *k == key) {
            return err(format!(
                "line {line}: duplicate key '{key}' in [{}]",
                section.name
            ));
        }
        section
            .entries
            .push((key, value.trim().to_string(), line));
    }
    Ok(sections)
}

/// One section's entries with checked-off keys, so leftovers surface as
/// typos instead of being silently ignored.
struct Keys<'a> {
    section: &'a str,
    entries: Vec<(&'a str, &'a str, usize, bool)>,
}

impl<'a> Keys<'a> {
    fn new(s: &'a Section) -> Keys<'a> {
        Keys {
            section: &s.name,
            entries: s
                .entries
                .iter()
                .map(|(k, v, l)| (k.as_str(), v.as_str(), *l, false))
                .collect(),
        }
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        for e in &mut self.entries {
            if e.0 == key {
                e.3 = true;
                return Some(e.1);
            }
        }
        None
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                ConfigError(format!(
                    "[{}] {key} = {v}: not a valid {}",
                    self.section,
                    std::any::type_name::<T>()
                ))
            }),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        self.parse(key)?
            .ok_or_else(|| ConfigError(format!("[{}] is missing '{key}'", self.section)))
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (k, _, line, used) in self.entries {
            if !used {
                return err(format!(
                    "line {line}: unknown key '{k}' in [{}]",
                    self.section
                ));
            }
        }
        Ok(())
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| ConfigError(format!("{what}: bad entry '{s}'")))
        })
        .collect()
}

fn parse_kind(raw: &str) -> Result<ModelKind, ConfigError> {
    for kind in [
        ModelKind::Random,
        ModelKind::PhdRank,
        ModelKind::AvgCoauthorRank,
        ModelKind::Logreg,
        ModelKind::Mlp,
        ModelKind::Gcn,
        ModelKind::Gat,
        ModelKind::Sage,
        ModelKind::Gconvgru,
    ] {
        if kind.as_str() == raw {
            return Ok(kind);
        }
    }
    err(format!("unknown model kind '{raw}'"))
}

fn parse_features(raw: &str) -> Result<Vec<FeatureKind>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "X_PhD" => Ok(FeatureKind::Phd),
            "X_Bib" => Ok(FeatureKind::Bib),
            "X_ONES" => Ok(FeatureKind::Ones),
            other => err(format!(
                "unknown feature '{other}' (expected X_PhD, X_Bib, X_ONES)"
            )),
        })
        .collect()
}

fn parse_synth(mut keys: Keys, seed: u64) -> Result<SynthConfig, ConfigError> {
    let mut c = SynthConfig::default_market(seed);
    if let Some(v) = keys.parse("n_hires")? {
        c.n_hires = v;
    }
    if let Some(v) = keys.parse("n_faculty")? {
        c.n_faculty = v;
    }
    if let Some(v) = keys.parse("n_departments")? {
        c.n_departments = v;
    }
    if let Some(v) = keys.parse("t0")? {
        c.t0 = v;
    }
    if let Some(v) = keys.parse("tf")? {
        c.tf = v;
    }
    if let Some(v) = keys.parse("papers_per_year")? {
        c.papers_per_year = v;
    }
    if let Some(v) = keys.parse("attachment")? {
        c.attachment = v;
    }
    if let Some(v) = keys.parse("w_phd")? {
        c.w_phd = v;
    }
    if let Some(v) = keys.parse("w_bib")? {
        c.w_bib = v;
    }
    if let Some(v) = keys.parse("w_net")? {
        c.w_net = v;
    }
    if let Some(v) = keys.parse("noise")? {
        c.noise = v;
    }
    if let Some(v) = keys.parse("pre_hire_years")? {
        c.pre_hire_years = v;
    }
    if let Some(v) = keys.parse("post_hire_years")? {
        c.post_hire_years = v;
    }
    if let Some(v) = keys.parse("external_author_rate")? {
        c.external_author_rate = v;
    }
    if let Some(v) = keys.parse("solo_rate")? {
        c.solo_rate = v;
    }
    if let Some(v) = keys.parse("hire_coauthor_rate")? {
        c.hire_coauthor_rate = v;
    }
    if let Some(v) = keys.parse("dept_yearly_capacity")? {
        c.dept_yearly_capacity = v;
    }
    if let Some(raw) = keys.take("targets") {
        let mut targets = Vec::new();
        for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, share) = part
                .split_once(':')
                .ok_or_else(|| ConfigError(format!("targets entry '{part}': expected K:share")))?;
            let k = k
                .trim()
                .parse::<u32>()
                .map_err(|_| ConfigError(format!("targets entry '{part}': bad K")))?;
            let share = share
                .trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("targets entry '{part}': bad share")))?;
            targets.push((k, share));
        }
        c.prevalence_targets = targets;
    }
    keys.finish()?;
    c.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(c)
}

fn parse_model(label: &str, mut keys: Keys) -> Result<ModelSpec, ConfigError> {
    if label.is_empty()
        || !label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return err(format!(
            "model label '{label}' must be non-empty [A-Za-z0-9_-]"
        ));
    }
    let kind = parse_kind(keys.require::<String>("kind")?.as_str())?;
    let features = match keys.take("features") {
        Some(raw) => parse_features(raw)?,
        None => Vec::new(),
    };
    let mut spec = ModelSpec::new(kind, features);
    if let Some(v) = keys.parse("layers")? {
        spec.layers = v;
    }
    if let Some(v) = keys.parse("hidden_dim")? {
        spec.hidden_dim = v;
    }
    if let Some(v) = keys.parse("dropout")? {
        spec.dropout = v;
    }
    if let Some(v) = keys.parse("attention_heads")? {
        spec.attention_heads = v;
    }
    if let Some(v) = keys.parse("window")? {
        spec.window = v;
    }
    if let Some(v) = keys.parse("epochs")? {
        spec.epochs = v;
    }
    if let Some(v) = keys.parse("learning_rate")? {
        spec.learning_rate = v;
    }
    if let Some(v) = keys.parse("patience")? {
        spec.patience = v;
    }
    if let Some(v) = keys.parse("use_weights")? {
        spec.use_weights = v;
    }
    keys.finish()?;
    spec.validate()
        .map_err(|e| ConfigError(format!("[model.{label}]: {e}")))?;
    Ok(spec)
}

impl RunConfig {
    pub fn load(
        path: &Path,
        out_override: Option<PathBuf>,
        seed_override: Option<u64>,
    ) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let sections = parse_ini(&text)?;

        let mut run_keys = None;
        let mut data_section = None;
        let mut synth_section = None;
        let mut rewire_section = None;
        let mut model_sections: Vec<(&str, &Section)> = Vec::new();
        for s in &sections {
            match s.name.as_str() {
                "run" => run_keys = Some(Keys::new(s)),
                "data" => data_section = Some(Keys::new(s)),
                "synth" => synth_section = Some(Keys::new(s)),
                "rewire" => rewire_section = Some(Keys::new(s)),
                name => match name.strip_prefix("model.") {
                    Some(label) => model_sections.push((label, s)),
                    None => {
                        return err(format!(
                            "line {}: unknown section [{name}]",
                            s.line
                        ))
                    }
                },
            }
        }

        let mut run = run_keys.ok_or_else(|| ConfigError("missing [run] section".into()))?;
        let seed = match seed_override {
            Some(s) => {
                run.parse::<u64>("seed")?;
                s
            }
            None => run.require("seed")?,
        };
        let out = match out_override {
            Some(o) => {
                run.take("out");
                o
            }
            None => PathBuf::from(run.require::<String>("out")?),
        };
        let thresholds = match run.take("thresholds") {
            Some(raw) => parse_list::<u32>(raw, "[run] thresholds")?,
            None => vec![10, 20, 30, 40, 50],
        };
        if thresholds.is_empty() {
            return err("[run] thresholds is empty");
        }
        let uniq: BTreeSet<u32> = thresholds.iter().copied().collect();
        if uniq.len() != thresholds.len() || thresholds.contains(&0) {
            return err("[run] thresholds must be distinct positive integers");
        }
        let mut thresholds: Vec<u32> = uniq.into_iter().collect();
        thresholds.sort_unstable();
        let n_repeats = run.parse::<u32>("n_repeats")?.unwrap_or(10);
        if n_repeats == 0 {
            return err("[run] n_repeats must be >= 1");
        }
        let workers = match run.parse::<usize>("workers")? {
            Some(0) => return err("[run] workers must be >= 1"),
            other => other,
        };
        let history = match run.take("history") {
            Some(raw) => raw.parse::<HistoryPolicy>().map_err(ConfigError)?,
            None => HistoryPolicy::Fold,
        };
        run.finish()?;

        let (source, t0, tf) = match (data_section, synth_section) {
            (Some(_), Some(_)) => {
                return err("give either [data] or [synth], not both");
            }
            (None, None) => return err("missing data source: add [data] or [synth]"),
            (Some(mut d), None) => {
                let publications = PathBuf::from(d.require::<String>("publications")?);
                let faculty = PathBuf::from(d.require::<String>("faculty")?);
                let rankings = PathBuf::from(d.require::<String>("rankings")?);
                let aliases = d.take("aliases").map(PathBuf::from);
                let t0 = d.require::<i32>("t0")?;
                let tf = d.require::<i32>("tf")?;
                d.finish()?;
                (
                    DataSource::Files {
                        publications,
                        faculty,
                        rankings,
                        aliases,
                    },
                    t0,
                    tf,
                )
            }
            (None, Some(s)) => {
                let c = parse_synth(s, seed)?;
                let (t0, tf) = (c.t0, c.tf);
                (DataSource::Synth(c), t0, tf)
            }
        };
        if t0 > tf - 2 {
            return err(format!(
                "window [{t0}, {tf}] too short: the last three years are test cohorts"
            ));
        }

        let mut models = Vec::new();
        let mut labels = BTreeSet::new();
        for (label, section) in model_sections {
            if !labels.insert(label.to_string()) {
                return err(format!("duplicate model label '{label}'"));
            }
            models.push((label.to_string(), parse_model(label, Keys::new(section))?));
        }

        let rewire = match rewire_section {
            None => None,
            Some(mut r) => {
                let percentages = parse_list::<u32>(r.require::<String>("p")?.as_str(), "[rewire] p")?;
                if percentages.is_empty() {
                    return err("[rewire] p is empty");
                }
                if let Some(&bad) = percentages.iter().find(|&&p| p > 100) {
                    return err(format!("[rewire] p = {bad} is not a percentage"));
                }
                let replicates = r.parse::<u32>("replicates")?.unwrap_or(10);
                if replicates == 0 {
                    return err("[rewire] replicates must be >= 1");
                }
                let model = r.require::<String>("model")?;
                let k = r.parse::<u32>("k")?.unwrap_or(thresholds[0]);
                r.finish()?;
                let spec = models
                    .iter()
                    .find(|(l, _)| *l == model)
                    .map(|(_, s)| s)
                    .ok_or_else(|| {
                        ConfigError(format!("[rewire] model '{model}' has no [model.{model}] section"))
                    })?;
                if !spec.kind.is_graph() {
                    return err(format!(
                        "[rewire] model '{model}' is {}, not a graph model",
                        spec.kind.as_str()
                    ));
                }
                Some(RewireGrid {
                    percentages,
                    replicates,
                    model,
                    k,
                })
            }
        };

        Ok(RunConfig {
            source,
            t0,
            tf,
            history,
            out,
            seed,
            thresholds,
            n_repeats,
            models,
            rewire,
            workers,
        })
    }
}
