//! Python bindings for the `clsm` crate.
//!
//! Matrices cross the boundary as lists of rows. Library errors surface as
//! `clsm_py.ClsmError`.

use std::path::PathBuf;

use clsm::eval::{self, CvConfig, RankedPrediction};
use clsm::inference::{fold_in_theta_from_attributes, fold_in_theta_from_links};
use clsm::{BehaviorData, FitReport, FittedModel, Graph, Hyperparams, OmegaMode, PhiBarMode, Selection, SimConfig};
use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(clsm_py, ClsmError, PyException);

fn err(e: clsm::ClsmError) -> PyErr {
    ClsmError::new_err(e.to_string())
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ClsmError::new_err("rows must all have the same length"));
    }
    let nrows = rows.len();
    Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect())
        .map_err(|e| ClsmError::new_err(e.to_string()))
}

/// Counts repeated tokens into selections.
fn selections(tokens: &[usize]) -> PyResult<Vec<Selection>> {
    let mut sorted = tokens.to_vec();
    sorted.sort_unstable();
    sorted
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let count = u32::try_from(run.len()).map_err(|_| ClsmError::new_err("token repeated too often"))?;
            Ok(Selection { token: run[0], count })
        })
        .collect()
}

/// Undirected simple graph.
#[pyclass(name = "Graph", frozen, module = "clsm_py")]
struct PyGraph(Graph);

#[pymethods]
impl PyGraph {
    #[new]
    fn new(num_nodes: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Graph::from_edges(num_nodes, edges).map(PyGraph).map_err(err)
    }

    /// Reads a tab-separated edge list.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        clsm::io::load_edge_list(path).map(PyGraph).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        clsm::io::write_edge_list(&self.0, path).map_err(err)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.0.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.0.num_edges()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    fn degree(&self, node: usize) -> PyResult<usize> {
        self.check(node)?;
        Ok(self.0.degree(node))
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<usize>> {
        self.check(node)?;
        Ok(self.0.neighbors(node).iter().map(|i| i.neighbor).collect())
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.0.num_nodes() && v < self.0.num_nodes() && self.0.has_edge(u, v)
    }

    fn __repr__(&self) -> String {
        format!("Graph(num_nodes={}, num_edges={})", self.0.num_nodes(), self.0.num_edges())
    }
}

impl PyGraph {
    fn check(&self, node: usize) -> PyResult<()> {
        if node >= self.0.num_nodes() {
            return Err(ClsmError::new_err(format!("node {node} is out of range")));
        }
        Ok(())
    }
}

/// Per-node token selections over a vocabulary.
#[pyclass(name = "Behaviors", frozen, module = "clsm_py")]
struct PyBehaviors(BehaviorData);

#[pymethods]
impl PyBehaviors {
    /// One token list per node; repeated tokens count as repeated selections.
    #[new]
    fn new(vocab_size: usize, token_lists: Vec<Vec<usize>>) -> PyResult<Self> {
        BehaviorData::from_token_lists(vocab_size, &token_lists).map(PyBehaviors).map_err(err)
    }

    /// One list of `(token, count)` pairs per node.
    #[staticmethod]
    fn from_counts(vocab_size: usize, counts: Vec<Vec<(usize, u32)>>) -> PyResult<Self> {
        let per_node = counts
            .into_iter()
            .map(|row| row.into_iter().map(|(token, count)| Selection { token, count }).collect())
            .collect();
        BehaviorData::new(vocab_size, per_node).map(PyBehaviors).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, vocab_size=None))]
    fn load(path: PathBuf, vocab_size: Option<usize>) -> PyResult<Self> {
        clsm::io::load_behaviors(path, vocab_size).map(PyBehaviors).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        clsm::io::write_behaviors(&self.0, path).map_err(err)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.0.num_nodes()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }

    #[getter]
    fn total_selections(&self) -> u64 {
        self.0.total_selections()
    }

    fn selections(&self, node: usize) -> PyResult<Vec<(usize, u32)>> {
        if node >= self.0.num_nodes() {
            return Err(ClsmError::new_err(format!("node {node} is out of range")));
        }
        Ok(self.0.selections(node).iter().map(|s| (s.token, s.count)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Behaviors(num_nodes={}, vocab_size={}, total_selections={})",
            self.0.num_nodes(),
            self.0.vocab_size(),
            self.0.total_selections()
        )
    }
}

/// Settings of one fit.
#[pyclass(name = "FitConfig", frozen, module = "clsm_py")]
struct PyFitConfig(clsm::FitConfig);

#[pymethods]
impl PyFitConfig {
    #[new]
    #[pyo3(signature = (
        num_topics,
        *,
        max_iterations=None,
        rel_tol=None,
        seed=None,
        alpha_precision=None,
        epsilon=None,
        kappa_value=None,
        warmup_sweeps=None,
        omega_mode=None,
        phi_bar_mode=None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        num_topics: usize,
        max_iterations: Option<usize>,
        rel_tol: Option<f64>,
        seed: Option<u64>,
        alpha_precision: Option<f64>,
        epsilon: Option<f64>,
        kappa_value: Option<f64>,
        warmup_sweeps: Option<usize>,
        omega_mode: Option<&str>,
        phi_bar_mode: Option<&str>,
    ) -> PyResult<Self> {
        let mut c = clsm::FitConfig::new(num_topics);
        if let Some(v) = max_iterations {
            c.max_iterations = v;
        }
        if let Some(v) = rel_tol {
            c.rel_tol = v;
        }
        if let Some(v) = seed {
            c.seed = v;
        }
        if let Some(v) = alpha_precision {
            c.alpha_precision = v;
        }
        if let Some(v) = epsilon {
            c.epsilon = v;
        }
        if let Some(v) = kappa_value {
            c.kappa_value = v;
        }
        if let Some(v) = warmup_sweeps {
            c.warmup_sweeps = v;
        }
        match omega_mode {
            None | Some("variational_rho") => {}
            Some("direct") => c.omega_mode = OmegaMode::DirectWithSmoothing,
            Some(other) => return Err(ClsmError::new_err(format!("unknown omega_mode {other:?}"))),
        }
        match phi_bar_mode {
            None | Some("coordinate") => {}
            Some("incident_mean") => c.phi_bar_mode = PhiBarMode::IncidentMean,
            Some(other) => return Err(ClsmError::new_err(format!("unknown phi_bar_mode {other:?}"))),
        }
        c.validate().map_err(err)?;
        Ok(PyFitConfig(c))
    }

    /// Reads a `key = value` config file on top of the defaults for `num_topics`.
    #[staticmethod]
    fn load(path: PathBuf, num_topics: usize) -> PyResult<Self> {
        clsm::io::load_fit_config(path, clsm::FitConfig::new(num_topics))
            .map(PyFitConfig)
            .map_err(err)
    }

    #[getter]
    fn num_topics(&self) -> usize {
        self.0.num_topics
    }

    #[getter]
    fn max_iterations(&self) -> usize {
        self.0.max_iterations
    }

    #[getter]
    fn rel_tol(&self) -> f64 {
        self.0.rel_tol
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn alpha_precision(&self) -> f64 {
        self.0.alpha_precision
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Convergence record of one fit.
#[pyclass(name = "FitReport", frozen, module = "clsm_py")]
struct PyFitReport(FitReport);

#[pymethods]
impl PyFitReport {
    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    #[getter]
    fn elbo_trace(&self) -> Vec<f64> {
        self.0.elbo_trace.clone()
    }

    #[getter]
    fn wall_time_per_iteration(&self) -> f64 {
        self.0.wall_time_per_iteration
    }

    fn __repr__(&self) -> String {
        format!("FitReport(converged={}, iterations={})", self.0.converged, self.0.iterations)
    }
}

/// Point estimates of a fitted model.
#[pyclass(name = "Model", frozen, module = "clsm_py")]
struct PyModel(FittedModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        clsm::io::load_checkpoint(path).map(PyModel).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        clsm::io::save_checkpoint(&self.0, path).map_err(err)
    }

    #[getter]
    fn theta_hat(&self) -> Vec<Vec<f64>> {
        to_rows(&self.0.theta_hat)
    }

    #[getter]
    fn beta_hat(&self) -> Vec<f64> {
        self.0.beta_hat.clone()
    }

    #[getter]
    fn omega_hat(&self) -> Vec<Vec<f64>> {
        to_rows(&self.0.omega_hat)
    }

    #[getter]
    fn elbo_trace(&self) -> Vec<f64> {
        self.0.elbo_trace.clone()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.0.num_nodes()
    }

    #[getter]
    fn num_topics(&self) -> usize {
        self.0.num_topics()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }

    /// Predicted link probability between two fitted nodes.
    fn link_probability(&self, a: usize, b: usize) -> PyResult<f64> {
        let n = self.0.num_nodes();
        if a >= n || b >= n {
            return Err(ClsmError::new_err("node is out of range"));
        }
        let m = &self.0;
        Ok(eval::predict_link_prob(m.theta_hat.row(a), m.theta_hat.row(b), &m.beta_hat, m.hyper.epsilon))
    }

    /// Predicted token distribution of a fitted node.
    fn attribute_distribution(&self, node: usize) -> PyResult<Vec<f64>> {
        if node >= self.0.num_nodes() {
            return Err(ClsmError::new_err("node is out of range"));
        }
        Ok(eval::predict_attribute_dist(self.0.theta_hat.row(node), &self.0.omega_hat))
    }

    /// Membership of a new node inferred from its tokens.
    fn fold_in_from_attributes(&self, tokens: Vec<usize>) -> PyResult<Vec<f64>> {
        fold_in_theta_from_attributes(&self.0, &selections(&tokens)?).map_err(err)
    }

    /// Membership of a new node inferred from its links to fitted nodes.
    fn fold_in_from_links(&self, neighbors: Vec<usize>) -> PyResult<Vec<f64>> {
        fold_in_theta_from_links(&self.0, None, &neighbors).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(num_nodes={}, num_topics={}, vocab_size={})",
            self.0.num_nodes(),
            self.0.num_topics(),
            self.0.vocab_size()
        )
    }
}

/// Fits the model; returns `(Model, FitReport)`.
#[pyfunction]
fn fit(
    py: Python<'_>,
    graph: PyRef<'_, PyGraph>,
    behaviors: PyRef<'_, PyBehaviors>,
    config: PyRef<'_, PyFitConfig>,
) -> PyResult<(PyModel, PyFitReport)> {
    let (g, b, c) = (&graph.0, &behaviors.0, config.0.clone());
    let (model, report, _) = py.detach(|| clsm::fit(g, b, &c)).map_err(err)?;
    Ok((PyModel(model), PyFitReport(report)))
}

/// Samples a dataset; returns `(Graph, Behaviors, theta_true)`.
#[pyfunction]
#[pyo3(signature = (num_nodes, num_topics, vocab_size, *, selections_mean=10.0, seed=0, beta=None, alpha_precision=1.0, kappa_value=0.1, epsilon=1e-5))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    num_nodes: usize,
    num_topics: usize,
    vocab_size: usize,
    selections_mean: f64,
    seed: u64,
    beta: Option<f64>,
    alpha_precision: f64,
    kappa_value: f64,
    epsilon: f64,
) -> PyResult<(PyGraph, PyBehaviors, Vec<Vec<f64>>)> {
    let hyper = Hyperparams::symmetric(num_topics, vocab_size, alpha_precision, (1.0, 1.0), kappa_value, epsilon)
        .map_err(err)?;
    let mut cfg = SimConfig::new(num_nodes, hyper, selections_mean, seed);
    cfg.beta = beta.map(|b| vec![b; num_topics]);
    let (g, b, truth) = py.detach(|| clsm::generate_dataset(&cfg)).map_err(err)?;
    Ok((PyGraph(g), PyBehaviors(b), to_rows(&truth.theta_true)))
}

/// Mann–Whitney AUC with half credit for ties.
#[pyfunction]
fn auc(positive_scores: Vec<f64>, negative_scores: Vec<f64>) -> PyResult<f64> {
    eval::auc(&positive_scores, &negative_scores).map_err(err)
}

/// Mean 1-based rank of the positives among the candidates, ties at their midrank.
#[pyfunction]
fn average_rank_score(candidates: Vec<usize>, scores: Vec<f64>, positives: Vec<usize>) -> PyResult<f64> {
    let ranked = RankedPrediction::new(&candidates, &scores, &positives).map_err(err)?;
    eval::average_rank_score(&ranked).map_err(err)
}

/// Mean absolute error between membership matrices after the best column matching.
#[pyfunction]
fn topic_recovery_mae(theta_true: Vec<Vec<f64>>, theta_hat: Vec<Vec<f64>>) -> PyResult<f64> {
    eval::topic_recovery_mae(&from_rows(theta_true)?, &from_rows(theta_hat)?).map_err(err)
}

/// Cross-validated link (`"links"`) or attribute (`"attrs"`) prediction.
/// Returns one dict per metric row.
#[pyfunction]
#[pyo3(signature = (graph, behaviors, task, k_grid, *, folds=5, repeats=10, seed=0, max_iterations=None, dataset="data"))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    graph: PyRef<'py, PyGraph>,
    behaviors: PyRef<'py, PyBehaviors>,
    task: &str,
    k_grid: Vec<usize>,
    folds: usize,
    repeats: usize,
    seed: u64,
    max_iterations: Option<usize>,
    dataset: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let first = *k_grid.first().ok_or_else(|| ClsmError::new_err("k_grid is empty"))?;
    let mut fit = clsm::FitConfig::new(first);
    if let Some(m) = max_iterations {
        fit.max_iterations = m;
    }
    let mut cfg = CvConfig::new(fit);
    cfg.k_grid = k_grid;
    cfg.folds = folds;
    cfg.repeats = repeats;
    cfg.seed = seed;
    cfg.dataset = dataset.to_string();
    let (g, b) = (&graph.0, &behaviors.0);
    let report = match task {
        "links" => py.detach(|| eval::run_link_prediction_cv(g, b, &cfg)),
        "attrs" => py.detach(|| eval::run_attribute_prediction_cv(g, b, &cfg)),
        other => return Err(ClsmError::new_err(format!("unknown task {other:?}"))),
    }
    .map_err(err)?;
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("dataset", &r.dataset)?;
            d.set_item("task", &r.task)?;
            d.set_item("model", &r.model)?;
            d.set_item("K", r.k)?;
            d.set_item("fold", r.fold)?;
            d.set_item("repeat", r.repeat)?;
            d.set_item("metric", &r.metric)?;
            d.set_item("value", r.value)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn clsm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ClsmError", m.py().get_type::<ClsmError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyBehaviors>()?;
    m.add_class::<PyFitConfig>()?;
    m.add_class::<PyFitReport>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(average_rank_score, m)?)?;
    m.add_function(wrap_pyfunction!(topic_recovery_mae, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
