use ndarray::Array1;
use rand::Rng;
use rayon::prelude::*;

use super::kfold_split_round;
use super::metrics::{auc, average_rank_score, predict_attribute_dist, predict_link_prob, RankedPrediction};
use super::FoldSplit;
use crate::behavior::BehaviorData;
use crate::error::{ClsmError, Result};
use crate::graph::Graph;
use crate::inference::{fit, fold_in_theta_from_attributes, fold_in_theta_from_links, FitConfig, FitReport};
use crate::model::{FittedModel, VariationalState};
use crate::streams::{stream, Domain};

pub const MODEL_NAME: &str = "CLSM";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Links,
    Attributes,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Links => "links",
            Task::Attributes => "attrs",
        }
    }
}

/// One line of the metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub dataset: String,
    pub task: String,
    pub model: String,
    pub k: usize,
    pub fold: usize,
    pub repeat: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    /// Fit settings; `num_topics` and `seed` are replaced per job.
    pub fit: FitConfig,
    pub k_grid: Vec<usize>,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub dataset: String,
}

impl CvConfig {
    pub const DEFAULT_FOLDS: usize = 5;
    pub const DEFAULT_REPEATS: usize = 10;
    pub const DEFAULT_K_GRID: [usize; 5] = [5, 10, 15, 20, 25];

    pub fn new(fit: FitConfig) -> Self {
        CvConfig {
            fit,
            k_grid: Self::DEFAULT_K_GRID.to_vec(),
            folds: Self::DEFAULT_FOLDS,
            repeats: Self::DEFAULT_REPEATS,
            seed: 0,
            dataset: "data".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_grid.is_empty() || self.k_grid.contains(&0) {
            return Err(ClsmError::Config("K grid must be non-empty and positive".into()));
        }
        if self.repeats == 0 {
            return Err(ClsmError::Config("repeats must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(ClsmError::Config("need at least 2 folds".into()));
        }
        self.fit.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CvReport {
    pub rows: Vec<MetricRow>,
    /// Test nodes without a positive (or without a negative) to rank.
    pub skipped_nodes: usize,
    pub unconverged_fits: usize,
}

impl CvReport {
    /// Mean of `metric` over all rows for topic count `k`.
    pub fn mean(&self, metric: &str, k: usize) -> Option<f64> {
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.metric == metric && r.k == k)
            .map(|r| r.value)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Everything a fold's fit is allowed to see: the subgraph induced by the
/// training nodes and their behaviors, relabeled to `0..nodes.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingView {
    /// Original id of each training node.
    pub nodes: Vec<usize>,
    pub graph: Graph,
    pub behaviors: BehaviorData,
}

pub fn training_view(graph: &Graph, behaviors: &BehaviorData, split: &FoldSplit, fold: usize) -> Result<TrainingView> {
    if split.num_nodes() != graph.num_nodes() {
        return Err(ClsmError::Shape("fold split does not match the graph".into()));
    }
    let nodes = split.train_nodes(fold);
    Ok(TrainingView {
        graph: graph.induced_subgraph(&nodes)?,
        behaviors: behaviors.subset(&nodes),
        nodes,
    })
}

type FitOutput = (FittedModel, FitReport, VariationalState);

fn default_fitter(view: &TrainingView, config: &FitConfig) -> Result<FitOutput> {
    fit(&view.graph, &view.behaviors, config)
}

/// Hides every link of the test nodes, folds their membership in from their
/// behaviors and ranks all training nodes as link candidates.
pub fn run_link_prediction_cv(graph: &Graph, behaviors: &BehaviorData, config: &CvConfig) -> Result<CvReport> {
    run_link_prediction_cv_with(graph, behaviors, config, default_fitter)
}

/// Hides every behavior of the test nodes, folds their membership in from
/// their links to training nodes and ranks the whole vocabulary.
pub fn run_attribute_prediction_cv(graph: &Graph, behaviors: &BehaviorData, config: &CvConfig) -> Result<CvReport> {
    run_attribute_prediction_cv_with(graph, behaviors, config, default_fitter)
}

/// [`run_link_prediction_cv`] with a caller-supplied fitting routine.
pub fn run_link_prediction_cv_with<F>(graph: &Graph, behaviors: &BehaviorData, config: &CvConfig, fitter: F) -> Result<CvReport>
where
    F: Fn(&TrainingView, &FitConfig) -> Result<FitOutput> + Sync,
{
    run_cv(graph, behaviors, config, Task::Links, &fitter)
}

/// [`run_attribute_prediction_cv`] with a caller-supplied fitting routine.
pub fn run_attribute_prediction_cv_with<F>(
    graph: &Graph,
    behaviors: &BehaviorData,
    config: &CvConfig,
    fitter: F,
) -> Result<CvReport>
where
    F: Fn(&TrainingView, &FitConfig) -> Result<FitOutput> + Sync,
{
    if behaviors.total_selections() == 0 {
        return Err(ClsmError::Config("attribute prediction needs behavior data".into()));
    }
    run_cv(graph, behaviors, config, Task::Attributes, &fitter)
}

struct FoldOutcome {
    mean_auc: Option<f64>,
    mean_rank: Option<f64>,
    skipped: usize,
    converged: bool,
}

fn run_cv<F>(graph: &Graph, behaviors: &BehaviorData, config: &CvConfig, task: Task, fitter: &F) -> Result<CvReport>
where
    F: Fn(&TrainingView, &FitConfig) -> Result<FitOutput> + Sync,
{
    config.validate()?;
    if behaviors.num_nodes() != graph.num_nodes() {
        return Err(ClsmError::Shape(format!(
            "graph has {} nodes, behaviors cover {}",
            graph.num_nodes(),
            behaviors.num_nodes()
        )));
    }
    let splits: Vec<FoldSplit> = (0..config.repeats)
        .map(|r| kfold_split_round(graph.num_nodes(), config.folds, config.seed, r as u64))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize, usize)> = config
        .k_grid
        .iter()
        .flat_map(|&k| (0..config.repeats).flat_map(move |r| (0..config.folds).map(move |f| (k, r, f))))
        .collect();
    let outcomes: Vec<FoldOutcome> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, &(k, repeat, fold))| {
            let mut fit_config = config.fit.clone();
            fit_config.num_topics = k;
            fit_config.seed = stream(config.seed, Domain::CvJob, index as u64).random();
            let view = training_view(graph, behaviors, &splits[repeat], fold)?;
            let fitted = fitter(&view, &fit_config)?;
            let test = splits[repeat].test_nodes(fold);
            match task {
                Task::Links => score_links(graph, behaviors, &view, &fitted, &test),
                Task::Attributes => score_attributes(graph, behaviors, &view, &fitted, &test),
            }
        })
        .collect::<Result<_>>()?;

    let mut report = CvReport::default();
    for (&(k, repeat, fold), outcome) in jobs.iter().zip(outcomes) {
        report.skipped_nodes += outcome.skipped;
        report.unconverged_fits += usize::from(!outcome.converged);
        for (metric, value) in [("auc", outcome.mean_auc), ("avg_rank", outcome.mean_rank)] {
            if let Some(value) = value {
                report.rows.push(MetricRow {
                    dataset: config.dataset.clone(),
                    task: task.as_str().into(),
                    model: MODEL_NAME.into(),
                    k,
                    fold,
                    repeat,
                    metric: metric.into(),
                    value,
                });
            }
        }
    }
    Ok(report)
}

fn relabeling(view: &TrainingView, num_nodes: usize) -> Vec<Option<usize>> {
    let mut map = vec![None; num_nodes];
    for (new, &old) in view.nodes.iter().enumerate() {
        map[old] = Some(new);
    }
    map
}

fn score_links(
    graph: &Graph,
    behaviors: &BehaviorData,
    view: &TrainingView,
    (model, report, _): &FitOutput,
    test: &[usize],
) -> Result<FoldOutcome> {
    let map = relabeling(view, graph.num_nodes());
    let candidates: Vec<usize> = (0..view.nodes.len()).collect();
    let mut per_node = Vec::new();
    let mut skipped = 0;
    for &t in test {
        let positives: Vec<usize> = graph.neighbors(t).iter().filter_map(|inc| map[inc.neighbor]).collect();
        if positives.is_empty() || positives.len() == candidates.len() {
            skipped += 1;
            continue;
        }
        let theta = Array1::from(fold_in_theta_from_attributes(model, behaviors.selections(t))?);
        let scores: Vec<f64> = candidates
            .iter()
            .map(|&m| predict_link_prob(theta.view(), model.theta_hat.row(m), &model.beta_hat, model.hyper.epsilon))
            .collect();
        per_node.push(node_metrics(&candidates, &scores, &positives)?);
    }
    Ok(summarize(per_node, skipped, report.converged))
}

fn score_attributes(
    graph: &Graph,
    behaviors: &BehaviorData,
    view: &TrainingView,
    (model, report, state): &FitOutput,
    test: &[usize],
) -> Result<FoldOutcome> {
    let map = relabeling(view, graph.num_nodes());
    let candidates: Vec<usize> = (0..behaviors.vocab_size()).collect();
    let mut per_node = Vec::new();
    let mut skipped = 0;
    for &t in test {
        let positives: Vec<usize> = behaviors.selections(t).iter().map(|s| s.token).collect();
        if positives.is_empty() || positives.len() == candidates.len() {
            skipped += 1;
            continue;
        }
        let neighbors: Vec<usize> = graph.neighbors(t).iter().filter_map(|inc| map[inc.neighbor]).collect();
        let theta = Array1::from(fold_in_theta_from_links(model, Some(state), &neighbors)?);
        let scores = predict_attribute_dist(theta.view(), &model.omega_hat);
        per_node.push(node_metrics(&candidates, &scores, &positives)?);
    }
    Ok(summarize(per_node, skipped, report.converged))
}

fn node_metrics(candidates: &[usize], scores: &[f64], positives: &[usize]) -> Result<(f64, f64)> {
    let ranked = RankedPrediction::new(candidates, scores, positives)?;
    Ok((
        auc(&ranked.positive_scores(), &ranked.negative_scores())?,
        average_rank_score(&ranked)?,
    ))
}

fn summarize(per_node: Vec<(f64, f64)>, skipped: usize, converged: bool) -> FoldOutcome {
    let count = per_node.len() as f64;
    let mean = |pick: fn(&(f64, f64)) -> f64| (count > 0.0).then(|| per_node.iter().map(pick).sum::<f64>() / count);
    FoldOutcome {
        mean_auc: mean(|m| m.0),
        mean_rank: mean(|m| m.1),
        skipped,
        converged,
    }
}
