//! Coordinate-ascent variational EM.
//!
//! Non-link indicators of a node share one responsibility vector (`φ̄`), and
//! each node's behavior selectors only range over its incident edges, so a
//! sweep costs `O(K (|E| (1 + avg selections) + N + V))`.

mod elbo;
mod fold_in;
mod updates;

use std::time::Instant;

use ndarray::Array2;

use crate::behavior::BehaviorData;
use crate::error::{ClsmError, Result};
use crate::graph::Graph;
use crate::hyper::Hyperparams;
use crate::model::{FittedModel, VariationalState};

pub use elbo::compute_elbo;
pub use fold_in::{fold_in_theta_from_attributes, fold_in_theta_from_links, FOLD_IN_TOL};
pub use updates::{
    expected_topic_counts, init_state, non_link_overlap, sweep, update_edge_phi, update_gamma, update_lambda_row,
    update_omega_direct, update_phi_bar, update_rho, update_tau, Expectations, Problem,
};

/// How the topic-behavior distributions are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaMode {
    /// Dirichlet variational posterior `q(ω_k | ρ_k)`.
    VariationalRho,
    /// Point estimate with additive pseudo-count smoothing.
    DirectWithSmoothing,
}

/// How the shared non-link responsibility `φ̄_n` is refreshed each sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiBarMode {
    /// Exact block maximizer of the bound (keeps the bound monotone).
    Coordinate,
    /// Mean of the node's incident edge responsibilities.
    IncidentMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub num_topics: usize,
    pub max_iterations: usize,
    /// Stop once `|ΔL / L|` falls below this.
    pub rel_tol: f64,
    /// `Σ_k α_k`; the prior is symmetric.
    pub alpha_precision: f64,
    pub eta: (f64, f64),
    pub kappa_value: f64,
    pub epsilon: f64,
    pub omega_mode: OmegaMode,
    pub smoothing_pseudocount: f64,
    pub phi_bar_mode: PhiBarMode,
    /// Scale of the uniform jitter added to `ρ` at initialization.
    pub init_jitter: f64,
    /// Sweeps run during initialization with the community strengths pinned,
    /// before the bound is tracked.
    pub warmup_sweeps: usize,
    pub seed: u64,
}

impl FitConfig {
    pub const DEFAULT_MAX_ITERATIONS: usize = 500;
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_ALPHA_PRECISION: f64 = 1.0;
    pub const DEFAULT_EPSILON: f64 = 1e-5;
    pub const DEFAULT_WARMUP_SWEEPS: usize = 50;

    pub fn new(num_topics: usize) -> Self {
        FitConfig {
            num_topics,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            rel_tol: Self::DEFAULT_REL_TOL,
            alpha_precision: Self::DEFAULT_ALPHA_PRECISION,
            eta: (1.0, 1.0),
            kappa_value: 0.1,
            epsilon: Self::DEFAULT_EPSILON,
            omega_mode: OmegaMode::VariationalRho,
            smoothing_pseudocount: 0.01,
            phi_bar_mode: PhiBarMode::Coordinate,
            init_jitter: 1.0,
            warmup_sweeps: Self::DEFAULT_WARMUP_SWEEPS,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(ClsmError::Config("num_topics must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(ClsmError::Config("rel_tol must be positive".into()));
        }
        if !(self.smoothing_pseudocount > 0.0) {
            return Err(ClsmError::Config("smoothing_pseudocount must be positive".into()));
        }
        if !(self.init_jitter >= 0.0) || !self.init_jitter.is_finite() {
            return Err(ClsmError::Config("init_jitter must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn hyperparams(&self, vocab_size: usize) -> Result<Hyperparams> {
        self.validate()?;
        Hyperparams::symmetric(
            self.num_topics,
            vocab_size,
            self.alpha_precision,
            self.eta,
            self.kappa_value,
            self.epsilon,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Bound at initialization followed by the bound after every sweep.
    pub elbo_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time_per_iteration: f64,
}

/// Fits the model from a fresh initialization.
pub fn fit(graph: &Graph, behaviors: &BehaviorData, config: &FitConfig) -> Result<(FittedModel, FitReport, VariationalState)> {
    let hyper = config.hyperparams(behaviors.vocab_size())?;
    let problem = Problem::new(graph, behaviors, &hyper)?;
    let state = init_state(&problem, config)?;
    fit_from_state(&problem, state, config)
}

/// Runs sweeps from `state` until the relative change of the bound drops
/// below `rel_tol` or `max_iterations` sweeps have run.
pub fn fit_from_state(
    problem: &Problem,
    mut state: VariationalState,
    config: &FitConfig,
) -> Result<(FittedModel, FitReport, VariationalState)> {
    config.validate()?;
    state.make_standard_layout();
    let initial = compute_elbo(problem, &state)?;
    if !initial.is_finite() {
        return Err(ClsmError::Numerical {
            iteration: 0,
            msg: format!("bound is {initial} at initialization"),
        });
    }
    let mut trace = vec![initial];
    let mut converged = false;
    let mut iterations = 0;
    let start = Instant::now();
    for iteration in 1..=config.max_iterations {
        sweep(problem, &mut state, config.phi_bar_mode)?;
        let value = elbo::elbo_unchecked(problem, &state, &Expectations::from_state(&state));
        if !value.is_finite() {
            return Err(ClsmError::Numerical {
                iteration,
                msg: format!("bound is {value}"),
            });
        }
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(value);
        iterations = iteration;
        if ((value - previous) / previous).abs() < config.rel_tol {
            converged = true;
            break;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let model = extract_model(problem, &state, trace.clone(), iterations);
    let report = FitReport {
        elbo_trace: trace,
        converged,
        iterations,
        wall_time_per_iteration: if iterations > 0 { elapsed / iterations as f64 } else { 0.0 },
    };
    Ok((model, report, state))
}

/// Point estimates: normalized `γ`, `τ_k1 / (τ_k1 + τ_k0)`, and normalized `ρ`
/// (or the direct `ω`).
pub fn extract_model(problem: &Problem, state: &VariationalState, elbo_trace: Vec<f64>, iterations: usize) -> FittedModel {
    let normalize_rows = |m: &Array2<f64>| {
        let mut out = m.clone();
        for mut row in out.rows_mut() {
            let s = row.sum();
            row.mapv_inplace(|x| x / s);
        }
        out
    };
    let omega_hat = match &state.omega_point {
        Some(direct) => direct.omega.clone(),
        None => normalize_rows(&state.rho),
    };
    FittedModel {
        theta_hat: normalize_rows(&state.gamma),
        beta_hat: state.tau.rows().into_iter().map(|t| t[0] / (t[0] + t[1])).collect(),
        omega_hat,
        hyper: problem.hyper.clone(),
        elbo_trace,
        iterations,
    }
}
