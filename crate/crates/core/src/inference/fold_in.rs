//! Membership inference for nodes that were not part of the fit, with the
//! global parameters held fixed.

use crate::behavior::Selection;
use crate::error::{ClsmError, Result};
use crate::math::{beta_expect_logs, dirichlet_expect_log_into, normalize_log_in_place};
use crate::model::{FittedModel, VariationalState};

/// Convergence threshold on the largest change of `γ` between iterations.
pub const FOLD_IN_TOL: f64 = 1e-6;
const MAX_FOLD_IN_ITERATIONS: usize = 1000;

fn prior_mean(model: &FittedModel) -> Vec<f64> {
    let total = model.hyper.alpha_precision();
    model.hyper.alpha.iter().map(|a| a / total).collect()
}

/// Iterates `γ = α + Σ_i weight_i r_i` with `r_ik ∝ exp(E[log θ_k] + loglik_ik)`
/// and returns the normalized `γ`.
fn mean_field_membership(alpha: &[f64], items: &[(f64, Vec<f64>)]) -> Vec<f64> {
    let k = alpha.len();
    let mass: f64 = items.iter().map(|(w, _)| w).sum();
    let mut gamma: Vec<f64> = alpha.iter().map(|a| a + mass / k as f64).collect();
    let mut elog = vec![0.0; k];
    let mut resp = vec![0.0; k];
    let mut next = vec![0.0; k];
    for _ in 0..MAX_FOLD_IN_ITERATIONS {
        dirichlet_expect_log_into(&gamma, &mut elog);
        next.copy_from_slice(alpha);
        for (weight, loglik) in items {
            for t in 0..k {
                resp[t] = elog[t] + loglik[t];
            }
            normalize_log_in_place(&mut resp).expect("finite responsibilities");
            for t in 0..k {
                next[t] += weight * resp[t];
            }
        }
        let change = gamma.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut gamma, &mut next);
        if change < FOLD_IN_TOL {
            break;
        }
    }
    let total: f64 = gamma.iter().sum();
    gamma.iter().map(|g| g / total).collect()
}

/// Membership of an unseen node from its behaviors alone, holding `ω̂` fixed.
/// An empty selection list yields the prior mean `α / Σα`.
pub fn fold_in_theta_from_attributes(model: &FittedModel, selections: &[Selection]) -> Result<Vec<f64>> {
    let v = model.vocab_size();
    if let Some(bad) = selections.iter().find(|s| s.token >= v) {
        return Err(ClsmError::Index(format!("token {} outside vocabulary of size {v}", bad.token)));
    }
    if selections.is_empty() {
        return Ok(prior_mean(model));
    }
    let items: Vec<(f64, Vec<f64>)> = selections
        .iter()
        .map(|s| (s.count as f64, model.omega_hat.column(s.token).iter().map(|w| w.ln()).collect()))
        .collect();
    Ok(mean_field_membership(&model.hyper.alpha, &items))
}

/// Membership of an unseen node from its links to fitted nodes alone.
///
/// Each neighbor `m` contributes one edge responsibility
/// `φ_k ∝ exp(E[log θ_k] + log θ̂_mk + E[log β_k])`. `E[log β]` comes from the
/// state's `τ` when a state is supplied, otherwise `log β̂` is used.
pub fn fold_in_theta_from_links(model: &FittedModel, state: Option<&VariationalState>, neighbors: &[usize]) -> Result<Vec<f64>> {
    let n = model.num_nodes();
    if let Some(bad) = neighbors.iter().find(|&&m| m >= n) {
        return Err(ClsmError::Index(format!("neighbor {bad} is not a fitted node")));
    }
    if neighbors.is_empty() {
        return Ok(prior_mean(model));
    }
    let log_beta: Vec<f64> = match state {
        Some(s) => s
            .tau
            .rows()
            .into_iter()
            .map(|t| beta_expect_logs(t[0], t[1]).map(|(a, _)| a))
            .collect::<Result<_>>()?,
        None => model.beta_hat.iter().map(|b| b.ln()).collect(),
    };
    let items: Vec<(f64, Vec<f64>)> = neighbors
        .iter()
        .map(|&m| {
            let loglik = model
                .theta_hat
                .row(m)
                .iter()
                .zip(&log_beta)
                .map(|(t, lb)| t.ln() + lb)
                .collect();
            (1.0, loglik)
        })
        .collect();
    Ok(mean_field_membership(&model.hyper.alpha, &items))
}
