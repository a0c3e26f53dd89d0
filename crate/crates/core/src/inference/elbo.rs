//! Evidence lower bound.
//!
//! The bound is `E_q[log p(Y, w, θ, Z, β, C, ω)] - E_q[log q]` for the
//! factorization used here:
//!
//! * each edge's two indicators share one responsibility `φ_e` and always pick
//!   the same topic, so the link term is `Σ_k φ_ek E[log β_k]`;
//! * all non-link indicators of node `n` follow `φ̄_n`, and a non-linked pair
//!   agrees on topic `k` with probability `φ̄_{n1,k} φ̄_{n2,k}`;
//! * the selector of each behavior is uniform over the node's incident edges
//!   under the prior and follows `λ` under `q`.

use crate::error::{ClsmError, Result};
use crate::math::{ln_multivariate_beta, xlogx};
use crate::model::VariationalState;

use super::updates::{non_link_overlap, Expectations, Problem};

/// Evaluates the bound after checking the state's invariants.
pub fn compute_elbo(problem: &Problem, state: &VariationalState) -> Result<f64> {
    state.check_invariants(problem.graph, problem.behaviors)?;
    if state.num_topics() != problem.num_topics() {
        return Err(ClsmError::State("state and hyperparameters disagree on K".into()));
    }
    if state.gamma.is_standard_layout() && state.rho.is_standard_layout() {
        return Ok(elbo_unchecked(problem, state, &Expectations::from_state(state)));
    }
    let mut owned = state.clone();
    owned.make_standard_layout();
    Ok(elbo_unchecked(problem, &owned, &Expectations::from_state(&owned)))
}

pub(crate) fn elbo_unchecked(problem: &Problem, state: &VariationalState, exps: &Expectations) -> f64 {
    let graph = problem.graph;
    let hyper = problem.hyper;
    let behaviors = problem.behaviors;

    // links and their indicators
    let mut links = 0.0;
    for (e, &(a, b)) in graph.edges().iter().enumerate() {
        for (k, &p) in state.phi_edge.row(e).iter().enumerate() {
            links += p * (exps.elog_beta[k] + exps.elog_theta[[a, k]] + exps.elog_theta[[b, k]]) - xlogx(p);
        }
    }

    // non-links
    let log1m_eps = (-hyper.epsilon).ln_1p();
    let overlap = non_link_overlap(graph, &state.phi_bar);
    let mut non_links = graph.num_non_links() as f64 * log1m_eps;
    for (k, s) in overlap.iter().enumerate() {
        non_links += s * (exps.elog_1m_beta[k] - log1m_eps);
    }

    // indicators governed by phi_bar
    let mut mean_field = 0.0;
    for n in 0..graph.num_nodes() {
        let w = problem.phi_bar_weight(n);
        if w == 0.0 {
            continue;
        }
        let row: f64 = state
            .phi_bar
            .row(n)
            .iter()
            .zip(exps.elog_theta.row(n))
            .map(|(&p, &l)| p * l - xlogx(p))
            .sum();
        mean_field += w * row;
    }

    // behaviors, selector prior and selector entropy
    let mut behavior = 0.0;
    for n in 0..graph.num_nodes() {
        let neighbors = graph.neighbors(n);
        if neighbors.is_empty() {
            if problem.has_fresh_indicator(n) {
                for sel in behaviors.selections(n) {
                    let affinity: f64 = state
                        .phi_bar
                        .row(n)
                        .iter()
                        .zip(exps.elog_omega.column(sel.token))
                        .map(|(p, l)| p * l)
                        .sum();
                    behavior += sel.count as f64 * affinity;
                }
            }
            continue;
        }
        let log_degree = (neighbors.len() as f64).ln();
        let lambda = &state.lambda[n];
        for (j, sel) in behaviors.selections(n).iter().enumerate() {
            let mut row = 0.0;
            for (slot, inc) in neighbors.iter().enumerate() {
                let l = lambda[[j, slot]];
                if l == 0.0 {
                    continue;
                }
                let affinity: f64 = state
                    .phi_edge
                    .row(inc.edge)
                    .iter()
                    .zip(exps.elog_omega.column(sel.token))
                    .map(|(p, w)| p * w)
                    .sum();
                row += l * (affinity - log_degree - l.ln());
            }
            behavior += sel.count as f64 * row;
        }
    }

    // memberships: E[log p(θ | α)] - E[log q(θ | γ)]
    let ln_b_alpha = ln_multivariate_beta(&hyper.alpha);
    let mut memberships = 0.0;
    for (gamma, elog) in state.gamma.rows().into_iter().zip(exps.elog_theta.rows()) {
        let gamma = gamma.as_slice().expect("standard layout");
        memberships += ln_multivariate_beta(gamma) - ln_b_alpha;
        for ((&g, &a), &l) in gamma.iter().zip(&hyper.alpha).zip(elog) {
            memberships += (a - g) * l;
        }
    }

    // community strengths
    let (eta1, eta0) = hyper.eta;
    let ln_b_eta = ln_multivariate_beta(&[eta1, eta0]);
    let mut strengths = 0.0;
    for (k, tau) in state.tau.rows().into_iter().enumerate() {
        strengths += ln_multivariate_beta(&[tau[0], tau[1]]) - ln_b_eta
            + (eta1 - tau[0]) * exps.elog_beta[k]
            + (eta0 - tau[1]) * exps.elog_1m_beta[k];
    }

    // topic-behavior distributions
    let topics = match &state.omega_point {
        None => {
            let ln_b_kappa = ln_multivariate_beta(&hyper.kappa);
            let mut total = 0.0;
            for (rho, elog) in state.rho.rows().into_iter().zip(exps.elog_omega.rows()) {
                let rho = rho.as_slice().expect("standard layout");
                total += ln_multivariate_beta(rho) - ln_b_kappa;
                for ((&r, &kappa), &l) in rho.iter().zip(&hyper.kappa).zip(elog) {
                    total += (kappa - r) * l;
                }
            }
            total
        }
        // point estimate: the objective carries the smoothing pseudo-counts as
        // an unnormalized log-prior, which the direct update maximizes
        Some(direct) => direct.pseudocount * exps.elog_omega.sum(),
    };

    links + non_links + mean_field + behavior + memberships + strengths + topics
}
