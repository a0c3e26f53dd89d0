//! Variational state and fitted point estimates.

use ndarray::{Array2, Axis};

use crate::behavior::BehaviorData;
use crate::error::{ClsmError, Result};
use crate::graph::Graph;
use crate::hyper::Hyperparams;

const SIMPLEX_TOL: f64 = 1e-10;

/// Variational parameters of the factorized posterior.
///
/// * `gamma` (N×K): Dirichlet parameters of each node's membership.
/// * `phi_edge` (|E|×K): shared topic responsibility of both indicators of an edge.
/// * `phi_bar` (N×K): the single responsibility used for all of a node's non-link
///   indicators (and for the one fresh indicator of an isolated node that has behaviors).
/// * `lambda[n]` (J_n×deg(n)): for each distinct token of node `n`, the
///   distribution over which incident edge's indicator explains it. Repeated
///   selections of the same token share a row and are weighted by the count.
/// * `tau` (K×2): Beta parameters `(τ_k1, τ_k0)` of the community strengths.
/// * `rho` (K×V): Dirichlet parameters of the topic-behavior distributions.
/// * `omega_point`: point estimate of the topic-behavior distributions with its
///   smoothing pseudo-count, present only when fitting in direct mode (then
///   `rho` is unused).
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub gamma: Array2<f64>,
    pub phi_edge: Array2<f64>,
    pub phi_bar: Array2<f64>,
    pub lambda: Vec<Array2<f64>>,
    pub tau: Array2<f64>,
    pub rho: Array2<f64>,
    pub omega_point: Option<DirectOmega>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectOmega {
    pub omega: Array2<f64>,
    pub pseudocount: f64,
}

impl VariationalState {
    pub fn num_topics(&self) -> usize {
        self.gamma.ncols()
    }

    /// Re-lays every array out in row-major order, copying only those that are not.
    pub fn make_standard_layout(&mut self) {
        fn fix(m: &mut Array2<f64>) {
            if !m.is_standard_layout() {
                *m = m.as_standard_layout().into_owned();
            }
        }
        for m in [&mut self.gamma, &mut self.phi_edge, &mut self.phi_bar, &mut self.tau, &mut self.rho] {
            fix(m);
        }
        self.lambda.iter_mut().for_each(fix);
        if let Some(direct) = &mut self.omega_point {
            fix(&mut direct.omega);
        }
    }

    /// Checks every shape, simplex and positivity invariant against the data.
    pub fn check_invariants(&self, graph: &Graph, behaviors: &BehaviorData) -> Result<()> {
        let n = graph.num_nodes();
        let k = self.num_topics();
        let v = behaviors.vocab_size();
        let shape_err = |what: &str| Err(ClsmError::State(format!("{what} has the wrong shape")));
        if self.gamma.dim() != (n, k) {
            return shape_err("gamma");
        }
        if self.phi_edge.dim() != (graph.num_edges(), k) {
            return shape_err("phi_edge");
        }
        if self.phi_bar.dim() != (n, k) {
            return shape_err("phi_bar");
        }
        if self.tau.dim() != (k, 2) {
            return shape_err("tau");
        }
        if self.rho.dim() != (k, v) {
            return shape_err("rho");
        }
        if self.lambda.len() != n || behaviors.num_nodes() != n {
            return shape_err("lambda");
        }
        if let Some(direct) = &self.omega_point {
            let omega = &direct.omega;
            if omega.dim() != (k, v) {
                return shape_err("omega");
            }
            check_rows_simplex(omega, "omega")?;
            if omega.iter().any(|&x| !(x > 0.0)) {
                return Err(ClsmError::State("omega has a non-positive entry".into()));
            }
        }
        for (name, m) in [("gamma", &self.gamma), ("tau", &self.tau), ("rho", &self.rho)] {
            if m.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(ClsmError::State(format!("{name} has a non-positive or non-finite entry")));
            }
        }
        check_rows_simplex(&self.phi_edge, "phi_edge")?;
        check_rows_simplex(&self.phi_bar, "phi_bar")?;
        for (node, lam) in self.lambda.iter().enumerate() {
            if lam.dim() != (behaviors.selections(node).len(), graph.degree(node)) {
                return Err(ClsmError::State(format!("lambda of node {node} has the wrong shape")));
            }
            if lam.ncols() > 0 {
                check_rows_simplex(lam, "lambda")?;
            }
        }
        Ok(())
    }
}

fn check_rows_simplex(m: &Array2<f64>, name: &str) -> Result<()> {
    for (i, row) in m.axis_iter(Axis(0)).enumerate() {
        if row.iter().any(|&x| !(x >= 0.0)) {
            return Err(ClsmError::State(format!("{name} row {i} has a negative or NaN entry")));
        }
        let s: f64 = row.sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(ClsmError::State(format!("{name} row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Point estimates extracted from a converged variational state.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    /// N×K, rows on the simplex (normalized `gamma`).
    pub theta_hat: Array2<f64>,
    /// `τ_k1 / (τ_k1 + τ_k0)` per topic.
    pub beta_hat: Vec<f64>,
    /// K×V, rows on the simplex.
    pub omega_hat: Array2<f64>,
    pub hyper: Hyperparams,
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
}

impl FittedModel {
    pub fn num_nodes(&self) -> usize {
        self.theta_hat.nrows()
    }

    pub fn num_topics(&self) -> usize {
        self.theta_hat.ncols()
    }

    pub fn vocab_size(&self) -> usize {
        self.omega_hat.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.hyper.num_topics;
        if self.theta_hat.ncols() != k || self.beta_hat.len() != k || self.omega_hat.nrows() != k {
            return Err(ClsmError::Shape("fitted model dimensions disagree with K".into()));
        }
        if self.omega_hat.ncols() != self.hyper.vocab_size() {
            return Err(ClsmError::Shape("omega_hat width disagrees with the vocabulary".into()));
        }
        check_rows_simplex(&self.theta_hat, "theta_hat")?;
        check_rows_simplex(&self.omega_hat, "omega_hat")?;
        if self.beta_hat.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(ClsmError::State("beta_hat entries must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
