//! Flat `key = value` configuration files. Blank lines and lines starting
//! with `#` are ignored; keys are the field names of [`FitConfig`] and the
//! simulation settings listed in [`parse_sim_config`].

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{ClsmError, Result};
use crate::generative::{SimConfig, TopicSource};
use crate::hyper::Hyperparams;
use crate::inference::{FitConfig, OmegaMode, PhiBarMode};

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Source {
    path: PathBuf,
    entries: Vec<Entry>,
}

impl Source {
    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ClsmError::parse(path, i + 1, "expected key = value"))?;
            let key = key.trim().to_string();
            if entries.iter().any(|e| e.key == key) {
                return Err(ClsmError::parse(path, i + 1, format!("duplicate key {key:?}")));
            }
            entries.push(Entry {
                line: i + 1,
                key,
                value: value.trim().to_string(),
            });
        }
        Ok(Source {
            path: path.to_path_buf(),
            entries,
        })
    }

    fn error(&self, entry: &Entry, msg: impl Into<String>) -> ClsmError {
        ClsmError::parse(&self.path, entry.line, msg)
    }

    fn value<T: std::str::FromStr>(&self, entry: &Entry) -> Result<T> {
        entry
            .value
            .parse()
            .map_err(|_| self.error(entry, format!("invalid value {:?} for {}", entry.value, entry.key)))
    }

    fn pair(&self, entry: &Entry) -> Result<(f64, f64)> {
        let list = self.list(entry)?;
        match list[..] {
            [a, b] => Ok((a, b)),
            _ => Err(self.error(entry, format!("{} needs two comma-separated values", entry.key))),
        }
    }

    fn list(&self, entry: &Entry) -> Result<Vec<f64>> {
        entry
            .value
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| self.error(entry, format!("invalid number {v:?} in {}", entry.key)))
            })
            .collect()
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn apply_fit_key(source: &Source, entry: &Entry, config: &mut FitConfig) -> Result<bool> {
    match entry.key.as_str() {
        "num_topics" => config.num_topics = source.value(entry)?,
        "max_iterations" => config.max_iterations = source.value(entry)?,
        "rel_tol" => config.rel_tol = source.value(entry)?,
        "alpha_precision" => config.alpha_precision = source.value(entry)?,
        "eta" => config.eta = source.pair(entry)?,
        "kappa_value" => config.kappa_value = source.value(entry)?,
        "epsilon" => config.epsilon = source.value(entry)?,
        "smoothing_pseudocount" => config.smoothing_pseudocount = source.value(entry)?,
        "init_jitter" => config.init_jitter = source.value(entry)?,
        "warmup_sweeps" => config.warmup_sweeps = source.value(entry)?,
        "seed" => config.seed = source.value(entry)?,
        "omega_mode" => {
            config.omega_mode = match entry.value.as_str() {
                "variational_rho" => OmegaMode::VariationalRho,
                "direct" => OmegaMode::DirectWithSmoothing,
                other => return Err(source.error(entry, format!("unknown omega_mode {other:?}"))),
            }
        }
        "phi_bar_mode" => {
            config.phi_bar_mode = match entry.value.as_str() {
                "coordinate" => PhiBarMode::Coordinate,
                "incident_mean" => PhiBarMode::IncidentMean,
                other => return Err(source.error(entry, format!("unknown phi_bar_mode {other:?}"))),
            }
        }
        _ => return Ok(false),
    }
    Ok(true)
}

/// Applies the keys in `text` on top of `base`.
pub fn parse_fit_config(text: &str, path: &Path, base: FitConfig) -> Result<FitConfig> {
    let source = Source::parse(text, path)?;
    let mut config = base;
    for entry in &source.entries {
        if !apply_fit_key(&source, entry, &mut config)? {
            return Err(source.error(entry, format!("unknown key {:?}", entry.key)));
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn load_fit_config(path: impl AsRef<Path>, base: FitConfig) -> Result<FitConfig> {
    let path = path.as_ref();
    parse_fit_config(&read(path)?, path, base)
}

/// Simulation keys: `num_nodes`, `num_topics`, `vocab_size`,
/// `alpha_precision`, `eta`, `kappa_value`, `epsilon`, `selections_mean`,
/// `seed`, `retain_link_indicators_only`, `beta` (one value for every topic
/// or one per topic), `topics` (`dirichlet` or `overlap`), `peak_gap` and
/// `peak_width`.
pub fn parse_sim_config(text: &str, path: &Path) -> Result<SimConfig> {
    let source = Source::parse(text, path)?;
    let mut num_nodes = None;
    let mut num_topics = None;
    let mut vocab_size = None;
    let mut alpha_precision = FitConfig::DEFAULT_ALPHA_PRECISION;
    let mut eta = (1.0, 1.0);
    let mut kappa_value = 0.1;
    let mut epsilon = FitConfig::DEFAULT_EPSILON;
    let mut selections_mean = 0.0;
    let mut seed = 0;
    let mut retain = true;
    let mut beta: Option<(Vec<f64>, &Entry)> = None;
    let mut topics = "dirichlet".to_string();
    let mut peak_gap = None;
    let mut peak_width = None;
    for entry in &source.entries {
        match entry.key.as_str() {
            "num_nodes" => num_nodes = Some(source.value(entry)?),
            "num_topics" => num_topics = Some(source.value::<usize>(entry)?),
            "vocab_size" => vocab_size = Some(source.value(entry)?),
            "alpha_precision" => alpha_precision = source.value(entry)?,
            "eta" => eta = source.pair(entry)?,
            "kappa_value" => kappa_value = source.value(entry)?,
            "epsilon" => epsilon = source.value(entry)?,
            "selections_mean" => selections_mean = source.value(entry)?,
            "seed" => seed = source.value(entry)?,
            "retain_link_indicators_only" => retain = source.value(entry)?,
            "beta" => beta = Some((source.list(entry)?, entry)),
            "topics" => topics = entry.value.clone(),
            "peak_gap" => peak_gap = Some(source.value(entry)?),
            "peak_width" => peak_width = Some(source.value(entry)?),
            other => return Err(source.error(entry, format!("unknown key {other:?}"))),
        }
    }
    let missing = |key: &str| ClsmError::Config(format!("{}: missing key {key}", path.display()));
    let num_nodes = num_nodes.ok_or_else(|| missing("num_nodes"))?;
    let num_topics = num_topics.ok_or_else(|| missing("num_topics"))?;
    let vocab_size = vocab_size.ok_or_else(|| missing("vocab_size"))?;
    let hyper = Hyperparams::symmetric(num_topics, vocab_size, alpha_precision, eta, kappa_value, epsilon)?;
    let mut config = SimConfig::new(num_nodes, hyper, selections_mean, seed);
    config.retain_link_indicators_only = retain;
    config.beta = match beta {
        None => None,
        Some((values, _)) if values.len() == 1 => Some(vec![values[0]; num_topics]),
        Some((values, _)) if values.len() == num_topics => Some(values),
        Some((_, entry)) => return Err(source.error(entry, "beta needs one value or one per topic")),
    };
    config.topics = match topics.as_str() {
        "dirichlet" => TopicSource::Dirichlet,
        "overlap" => TopicSource::OverlapPair {
            peak_gap: peak_gap.ok_or_else(|| missing("peak_gap"))?,
            peak_width: peak_width.ok_or_else(|| missing("peak_width"))?,
        },
        other => return Err(ClsmError::Config(format!("unknown topic source {other:?}"))),
    };
    config.validate()?;
    Ok(config)
}

pub fn load_sim_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    parse_sim_config(&read(path)?, path)
}
