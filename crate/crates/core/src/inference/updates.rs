//! Coordinate-ascent updates of the variational parameters.
//!
//! Every update here maximizes the bound computed by [`super::elbo`] in its
//! own block of parameters with the others held fixed.

use ndarray::{Array2, Axis, Zip};
use rand::Rng;
use rayon::prelude::*;

use crate::behavior::BehaviorData;
use crate::error::{ClsmError, Result};
use crate::graph::Graph;
use crate::hyper::Hyperparams;
use crate::math::{beta_expect_logs, dirichlet_expect_log_into, normalize_in_place, normalize_log_in_place};
use crate::model::{DirectOmega, VariationalState};
use crate::streams::{stream, Domain};

use super::FitConfig;

/// Observed data together with the fixed hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub graph: &'a Graph,
    pub behaviors: &'a BehaviorData,
    pub hyper: &'a Hyperparams,
}

impl<'a> Problem<'a> {
    pub fn new(graph: &'a Graph, behaviors: &'a BehaviorData, hyper: &'a Hyperparams) -> Result<Self> {
        hyper.validate()?;
        if behaviors.num_nodes() != graph.num_nodes() {
            return Err(ClsmError::Shape(format!(
                "graph has {} nodes but behaviors describe {}",
                graph.num_nodes(),
                behaviors.num_nodes()
            )));
        }
        if behaviors.vocab_size() != hyper.vocab_size() {
            return Err(ClsmError::Shape(format!(
                "behaviors use a vocabulary of {} tokens but kappa has {} entries",
                behaviors.vocab_size(),
                hyper.vocab_size()
            )));
        }
        Ok(Problem {
            graph,
            behaviors,
            hyper,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.hyper.num_topics
    }

    /// An isolated node with selections owns one fresh indicator, whose
    /// responsibility is tied to `phi_bar`.
    pub fn has_fresh_indicator(&self, n: usize) -> bool {
        self.graph.degree(n) == 0 && self.behaviors.total(n) > 0
    }

    /// Number of the node's indicators governed by `phi_bar`: one per non-link
    /// plus the fresh indicator, if any.
    pub fn phi_bar_weight(&self, n: usize) -> f64 {
        let non_links = self.graph.num_nodes() - 1 - self.graph.degree(n);
        (non_links + usize::from(self.has_fresh_indicator(n))) as f64
    }
}

/// Expected log-parameters under the current variational distribution.
#[derive(Debug, Clone)]
pub struct Expectations {
    /// N×K, `E[log θ_nk]`.
    pub elog_theta: Array2<f64>,
    /// `E[log β_k]`.
    pub elog_beta: Vec<f64>,
    /// `E[log(1 - β_k)]`.
    pub elog_1m_beta: Vec<f64>,
    /// K×V, `E[log ω_kv]` (or `log ω_kv` for a point estimate).
    pub elog_omega: Array2<f64>,
}

impl Expectations {
    pub fn from_state(state: &VariationalState) -> Self {
        let mut exps = Expectations {
            elog_theta: Array2::zeros(state.gamma.raw_dim()),
            elog_beta: Vec::new(),
            elog_1m_beta: Vec::new(),
            elog_omega: Array2::zeros(state.rho.raw_dim()),
        };
        exps.refresh_theta(state);
        exps.refresh_beta(state);
        exps.refresh_omega(state);
        exps
    }

    pub(crate) fn refresh_theta(&mut self, state: &VariationalState) {
        Zip::from(self.elog_theta.rows_mut())
            .and(state.gamma.rows())
            .par_for_each(|mut out, gamma| {
                dirichlet_expect_log_into(
                    gamma.as_slice().expect("standard layout"),
                    out.as_slice_mut().expect("standard layout"),
                );
            });
    }

    pub(crate) fn refresh_beta(&mut self, state: &VariationalState) {
        let (a, b): (Vec<f64>, Vec<f64>) = state
            .tau
            .rows()
            .into_iter()
            .map(|row| beta_expect_logs(row[0], row[1]).expect("tau stays positive"))
            .unzip();
        self.elog_beta = a;
        self.elog_1m_beta = b;
    }

    pub(crate) fn refresh_omega(&mut self, state: &VariationalState) {
        match &state.omega_point {
            Some(direct) => {
                Zip::from(&mut self.elog_omega).and(&direct.omega).for_each(|o, &w| *o = w.ln());
            }
            None => {
                Zip::from(self.elog_omega.rows_mut())
                    .and(state.rho.rows())
                    .for_each(|mut out, rho| {
                        dirichlet_expect_log_into(
                            rho.as_slice().expect("standard layout"),
                            out.as_slice_mut().expect("standard layout"),
                        );
                    });
            }
        }
    }
}

/// `Σ_k φ_ek E[log ω_{k,token}]`.
#[inline]
fn edge_token_affinity(phi: &[f64], exps: &Expectations, token: usize) -> f64 {
    phi.iter()
        .zip(exps.elog_omega.column(token))
        .map(|(p, l)| p * l)
        .sum()
}

/// Adds `Σ_j count_j λ_{j,slot} E[log ω_{k,w_j}]` to `out[k]` for node `n`.
fn add_behavior_term(problem: &Problem, state: &VariationalState, exps: &Expectations, n: usize, slot: usize, out: &mut [f64]) {
    let lambda = &state.lambda[n];
    for (j, sel) in problem.behaviors.selections(n).iter().enumerate() {
        let weight = sel.count as f64 * lambda[[j, slot]];
        if weight == 0.0 {
            continue;
        }
        for (o, l) in out.iter_mut().zip(exps.elog_omega.column(sel.token)) {
            *o += weight * l;
        }
    }
}

pub(crate) fn edge_phi_into(problem: &Problem, state: &VariationalState, exps: &Expectations, e: usize, out: &mut [f64]) {
    let (a, b) = problem.graph.edge(e);
    let (slot_a, slot_b) = problem.graph.edge_slots(e);
    for (k, o) in out.iter_mut().enumerate() {
        *o = exps.elog_theta[[a, k]] + exps.elog_theta[[b, k]] + exps.elog_beta[k];
    }
    add_behavior_term(problem, state, exps, a, slot_a, out);
    add_behavior_term(problem, state, exps, b, slot_b, out);
    normalize_log_in_place(out).expect("edge logits are finite");
}

/// Topic responsibility of the edge `(n1, n2)`, shared by both of its indicators.
pub fn update_edge_phi(problem: &Problem, state: &VariationalState, exps: &Expectations, n1: usize, n2: usize) -> Result<Vec<f64>> {
    let e = problem
        .graph
        .edge_index(n1, n2)
        .ok_or_else(|| ClsmError::Index(format!("({n1}, {n2}) is not an edge")))?;
    let mut out = vec![0.0; problem.num_topics()];
    edge_phi_into(problem, state, exps, e, &mut out);
    Ok(out)
}

fn lambda_row_into(problem: &Problem, state: &VariationalState, exps: &Expectations, n: usize, token: usize, out: &mut [f64]) {
    for (o, inc) in out.iter_mut().zip(problem.graph.neighbors(n)) {
        *o = edge_token_affinity(state.phi_edge.row(inc.edge).as_slice().expect("standard layout"), exps, token);
    }
    normalize_log_in_place(out).expect("lambda logits are finite");
}

/// Distribution over node `n`'s incident edges for its `j`-th distinct token.
/// Isolated nodes have no rows; the result is then empty.
pub fn update_lambda_row(problem: &Problem, state: &VariationalState, exps: &Expectations, n: usize, j: usize) -> Result<Vec<f64>> {
    if n >= problem.graph.num_nodes() {
        return Err(ClsmError::Index(format!("node {n} out of range")));
    }
    let sel = problem
        .behaviors
        .selections(n)
        .get(j)
        .ok_or_else(|| ClsmError::Index(format!("node {n} has no selection {j}")))?;
    let mut out = vec![0.0; problem.graph.degree(n)];
    if !out.is_empty() {
        lambda_row_into(problem, state, exps, n, sel.token, &mut out);
    }
    Ok(out)
}

/// `γ_nk = α_k + Σ_{e∋n} φ_ek + w_n φ̄_nk`, where `w_n` counts the non-link
/// (and fresh) indicators of `n`.
pub fn update_gamma(problem: &Problem, state: &VariationalState, n: usize) -> Vec<f64> {
    let mut out = problem.hyper.alpha.clone();
    gamma_into(problem, state, n, &mut out);
    out
}

fn gamma_into(problem: &Problem, state: &VariationalState, n: usize, out: &mut [f64]) {
    out.copy_from_slice(&problem.hyper.alpha);
    for inc in problem.graph.neighbors(n) {
        for (o, p) in out.iter_mut().zip(state.phi_edge.row(inc.edge)) {
            *o += p;
        }
    }
    let w = problem.phi_bar_weight(n);
    for (o, p) in out.iter_mut().zip(state.phi_bar.row(n)) {
        *o += w * p;
    }
}

/// Mean of the responsibilities of `n`'s incident edges. Isolated nodes fall
/// back to `softmax(E[log θ_n])`.
pub fn update_phi_bar(problem: &Problem, state: &VariationalState, exps: &Expectations, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; problem.num_topics()];
    incident_mean_into(problem, state, exps, n, &mut out);
    out
}

fn incident_mean_into(problem: &Problem, state: &VariationalState, exps: &Expectations, n: usize, out: &mut [f64]) {
    let neighbors = problem.graph.neighbors(n);
    if neighbors.is_empty() {
        out.copy_from_slice(exps.elog_theta.row(n).as_slice().expect("standard layout"));
        normalize_log_in_place(out).expect("finite expectations");
        return;
    }
    out.fill(0.0);
    for inc in neighbors {
        for (o, p) in out.iter_mut().zip(state.phi_edge.row(inc.edge)) {
            *o += p;
        }
    }
    let d = neighbors.len() as f64;
    out.iter_mut().for_each(|o| *o /= d);
}

/// Exact block maximizer of the bound in `phi_bar`, visiting nodes in order.
///
/// For node `n` with `w_n > 0` governed indicators,
/// `φ̄_nk ∝ exp(E[log θ_nk] + (f_n B_nk + c_k P_nk) / w_n)` where `P_nk` sums
/// `φ̄_mk` over the non-link partners `m` of `n`, `c_k = E[log(1-β_k)] - log(1-ε)`,
/// `f_n` flags a fresh indicator and `B_nk` is its behavior log-likelihood.
/// Column totals are kept current so the sweep costs `O(K (N + |E|))`.
pub(crate) fn coordinate_phi_bar(problem: &Problem, state: &mut VariationalState, exps: &Expectations) {
    let k = problem.num_topics();
    let log1m_eps = (-problem.hyper.epsilon).ln_1p();
    let cross: Vec<f64> = exps.elog_1m_beta.iter().map(|l| l - log1m_eps).collect();
    let mut totals: Vec<f64> = (0..k).map(|t| state.phi_bar.column(t).sum()).collect();
    let mut logits = vec![0.0; k];
    for n in 0..problem.graph.num_nodes() {
        let w = problem.phi_bar_weight(n);
        let old: Vec<f64> = state.phi_bar.row(n).to_vec();
        if w == 0.0 {
            // every other node is a neighbor and there is no fresh indicator:
            // the bound does not depend on this row
            incident_mean_into(problem, state, exps, n, &mut logits);
        } else {
            let mut partners = totals.clone();
            for (p, o) in partners.iter_mut().zip(&old) {
                *p -= o;
            }
            for inc in problem.graph.neighbors(n) {
                for (p, q) in partners.iter_mut().zip(state.phi_bar.row(inc.neighbor)) {
                    *p -= q;
                }
            }
            for t in 0..k {
                logits[t] = exps.elog_theta[[n, t]] + cross[t] * partners[t].max(0.0) / w;
            }
            if problem.has_fresh_indicator(n) {
                for sel in problem.behaviors.selections(n) {
                    for (l, e) in logits.iter_mut().zip(exps.elog_omega.column(sel.token)) {
                        *l += sel.count as f64 * e / w;
                    }
                }
            }
            normalize_log_in_place(&mut logits).expect("finite phi_bar logits");
        }
        for t in 0..k {
            totals[t] += logits[t] - old[t];
        }
        state.phi_bar.row_mut(n).assign(&ndarray::ArrayView1::from(&logits));
    }
}

/// `Σ_{non-link pairs} φ̄_{n1,k} φ̄_{n2,k}` per topic, in `O(K (N + |E|))`:
/// all pairs `½[(Σ_n φ̄_nk)² - Σ_n φ̄_nk²]` minus the linked pairs.
pub fn non_link_overlap(graph: &Graph, phi_bar: &Array2<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = phi_bar
        .columns()
        .into_iter()
        .map(|col| {
            let s = col.sum();
            let sq: f64 = col.iter().map(|x| x * x).sum();
            0.5 * (s * s - sq)
        })
        .collect();
    for &(a, b) in graph.edges() {
        for (o, (x, y)) in out.iter_mut().zip(phi_bar.row(a).iter().zip(phi_bar.row(b))) {
            *o -= x * y;
        }
    }
    out.iter_mut().for_each(|o| *o = o.max(0.0));
    out
}

/// `τ_k1 = η₁ + Σ_e φ_ek`, `τ_k0 = η₀ + Σ_{non-links} φ̄_{n1,k} φ̄_{n2,k}`.
pub fn update_tau(problem: &Problem, state: &VariationalState) -> Array2<f64> {
    let (eta1, eta0) = problem.hyper.eta;
    let links = state.phi_edge.sum_axis(Axis(0));
    let non_links = non_link_overlap(problem.graph, &state.phi_bar);
    Array2::from_shape_fn((problem.num_topics(), 2), |(k, c)| {
        if c == 0 {
            eta1 + links[k]
        } else {
            eta0 + non_links[k]
        }
    })
}

/// Expected topic-token counts `Σ_n Σ_{m: w=v} Σ_{e∋n} φ_ek λ_{m,e}`, plus the
/// fresh-indicator contributions of isolated nodes.
pub fn expected_topic_counts(problem: &Problem, state: &VariationalState) -> Array2<f64> {
    let k = problem.num_topics();
    let mut counts = Array2::zeros((k, problem.behaviors.vocab_size()));
    let mut acc = vec![0.0; k];
    for n in 0..problem.graph.num_nodes() {
        let neighbors = problem.graph.neighbors(n);
        let fresh = problem.has_fresh_indicator(n);
        for (j, sel) in problem.behaviors.selections(n).iter().enumerate() {
            if fresh {
                acc.copy_from_slice(state.phi_bar.row(n).as_slice().expect("standard layout"));
            } else {
                acc.fill(0.0);
                for (slot, inc) in neighbors.iter().enumerate() {
                    let l = state.lambda[n][[j, slot]];
                    for (a, p) in acc.iter_mut().zip(state.phi_edge.row(inc.edge)) {
                        *a += l * p;
                    }
                }
            }
            let c = sel.count as f64;
            for (t, a) in acc.iter().enumerate() {
                counts[[t, sel.token]] += c * a;
            }
        }
    }
    counts
}

/// `ρ_kv = κ_v + expected counts`.
pub fn update_rho(problem: &Problem, state: &VariationalState) -> Array2<f64> {
    let mut rho = expected_topic_counts(problem, state);
    for mut row in rho.rows_mut() {
        for (r, kappa) in row.iter_mut().zip(&problem.hyper.kappa) {
            *r += kappa;
        }
    }
    rho
}

/// Point estimate `ω_kv ∝ δ + expected counts`.
pub fn update_omega_direct(problem: &Problem, state: &VariationalState, smoothing_pseudocount: f64) -> Result<Array2<f64>> {
    if !(smoothing_pseudocount > 0.0) {
        return Err(ClsmError::Config("smoothing pseudocount must be positive".into()));
    }
    let mut omega = expected_topic_counts(problem, state);
    for mut row in omega.rows_mut() {
        row.mapv_inplace(|c| c + smoothing_pseudocount);
        normalize_in_place(row.as_slice_mut().expect("standard layout"));
    }
    Ok(omega)
}

/// Initial variational state.
///
/// `γ_nk = α_k + deg(n) u` with `u ~ U(0, 0.1)`; edge responsibilities are
/// uniform plus a small jitter; `λ` rows are uniform; `τ = η`; and
/// `ρ_kv = κ_v + init_jitter · U(0, 1)`.
pub fn init_state(problem: &Problem, config: &FitConfig) -> Result<VariationalState> {
    let graph = problem.graph;
    let k = problem.num_topics();
    let v = problem.behaviors.vocab_size();
    let n = graph.num_nodes();
    let alpha = &problem.hyper.alpha;

    let mut gamma = Array2::zeros((n, k));
    for (node, mut row) in gamma.rows_mut().into_iter().enumerate() {
        let mut rng = stream(config.seed, Domain::InitNode, node as u64);
        let d = graph.degree(node) as f64;
        for (t, g) in row.iter_mut().enumerate() {
            *g = alpha[t] + d * 0.1 * rng.random::<f64>();
        }
    }

    let mut rng = stream(config.seed, Domain::InitGlobal, 0);
    let mut phi_edge = Array2::zeros((graph.num_edges(), k));
    for mut row in phi_edge.rows_mut() {
        row.iter_mut().for_each(|p| *p = 1.0 / k as f64 + 0.01 * rng.random::<f64>());
        normalize_in_place(row.as_slice_mut().expect("standard layout"));
    }
    let mut rho = Array2::zeros((k, v));
    for mut row in rho.rows_mut() {
        for (r, kappa) in row.iter_mut().zip(&problem.hyper.kappa) {
            *r = kappa + config.init_jitter * rng.random::<f64>();
        }
    }
    let omega_point = match config.omega_mode {
        super::OmegaMode::VariationalRho => None,
        super::OmegaMode::DirectWithSmoothing => {
            let mut omega = rho.clone();
            for mut row in omega.rows_mut() {
                normalize_in_place(row.as_slice_mut().expect("standard layout"));
            }
            Some(DirectOmega {
                omega,
                pseudocount: config.smoothing_pseudocount,
            })
        }
    };
    let lambda = (0..n)
        .map(|node| {
            let d = graph.degree(node);
            let rows = problem.behaviors.selections(node).len();
            Array2::from_elem((rows, d), if d > 0 { 1.0 / d as f64 } else { 0.0 })
        })
        .collect();
    let tau = Array2::from_shape_fn((k, 2), |(_, c)| if c == 0 { problem.hyper.eta.0 } else { problem.hyper.eta.1 });

    let mut state = VariationalState {
        gamma,
        phi_edge,
        phi_bar: Array2::zeros((n, k)),
        lambda,
        tau,
        rho,
        omega_point,
    };
    let exps = Expectations::from_state(&state);
    let mut phi_bar = Array2::zeros((n, k));
    for (node, mut row) in phi_bar.rows_mut().into_iter().enumerate() {
        incident_mean_into(problem, &state, &exps, node, row.as_slice_mut().expect("standard layout"));
    }
    state.phi_bar = phi_bar;
    if config.warmup_sweeps > 0 {
        // Community strengths are pinned to a common value matching the
        // observed density while memberships settle; left free from the
        // start, one topic tends to absorb the non-links with β_k ≈ 0.
        state.tau = density_matched_tau(problem);
        for _ in 0..config.warmup_sweeps {
            sweep_inner(problem, &mut state, config.phi_bar_mode, false)?;
        }
    }
    Ok(state)
}

/// One full coordinate sweep: edge responsibilities, then `λ`, `γ`, `φ̄`,
/// `τ`, and finally `ρ` (or the direct `ω`).
///
/// Local blocks are updated in parallel from a frozen snapshot of the other
/// parameters; every write lands in a disjoint row, so the result does not
/// depend on the thread count.
fn density_matched_tau(problem: &Problem) -> Array2<f64> {
    let graph = problem.graph;
    let k = problem.num_topics() as f64;
    let pairs = graph.num_nodes() as f64 * (graph.num_nodes() as f64 - 1.0) / 2.0;
    let links = graph.num_edges() as f64 / k;
    let beta = if pairs > 0.0 { (k * graph.num_edges() as f64 / pairs).clamp(0.01, 0.9) } else { 0.5 };
    let (eta1, eta0) = problem.hyper.eta;
    Array2::from_shape_fn((problem.num_topics(), 2), |(_, c)| {
        if c == 0 {
            eta1 + links
        } else {
            eta0 + links * (1.0 - beta) / beta
        }
    })
}

pub fn sweep(problem: &Problem, state: &mut VariationalState, phi_bar_mode: super::PhiBarMode) -> Result<()> {
    state.make_standard_layout();
    sweep_inner(problem, state, phi_bar_mode, true)
}

fn sweep_inner(problem: &Problem, state: &mut VariationalState, phi_bar_mode: super::PhiBarMode, update_strengths: bool) -> Result<()> {
    let mut exps = Expectations::from_state(state);
    edge_and_lambda_pass(problem, state, &exps);

    let mut gamma = std::mem::take(&mut state.gamma);
    gamma
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(n, mut row)| gamma_into(problem, state, n, row.as_slice_mut().expect("standard layout")));
    state.gamma = gamma;
    exps.refresh_theta(state);

    match phi_bar_mode {
        super::PhiBarMode::Coordinate => coordinate_phi_bar(problem, state, &exps),
        super::PhiBarMode::IncidentMean => {
            let mut phi_bar = std::mem::take(&mut state.phi_bar);
            phi_bar
                .axis_iter_mut(Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(n, mut row)| {
                    incident_mean_into(problem, state, &exps, n, row.as_slice_mut().expect("standard layout"))
                });
            state.phi_bar = phi_bar;
        }
    }

    if update_strengths {
        state.tau = update_tau(problem, state);
    }
    behavior_topic_pass(problem, state)
}

fn edge_and_lambda_pass(problem: &Problem, state: &mut VariationalState, exps: &Expectations) {
    let mut phi_edge = std::mem::take(&mut state.phi_edge);
    phi_edge
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(e, mut row)| edge_phi_into(problem, state, exps, e, row.as_slice_mut().expect("standard layout")));
    state.phi_edge = phi_edge;

    let mut lambda = std::mem::take(&mut state.lambda);
    lambda.par_iter_mut().enumerate().for_each(|(n, lam)| {
        if lam.ncols() == 0 {
            return;
        }
        for (j, sel) in problem.behaviors.selections(n).iter().enumerate() {
            let mut row = lam.row_mut(j);
            lambda_row_into(problem, state, exps, n, sel.token, row.as_slice_mut().expect("standard layout"));
        }
    });
    state.lambda = lambda;
}

fn behavior_topic_pass(problem: &Problem, state: &mut VariationalState) -> Result<()> {
    match &state.omega_point {
        None => state.rho = update_rho(problem, state),
        Some(direct) => {
            let pseudocount = direct.pseudocount;
            let omega = update_omega_direct(problem, state, pseudocount)?;
            state.omega_point = Some(DirectOmega { omega, pseudocount });
        }
    }
    Ok(())
}
