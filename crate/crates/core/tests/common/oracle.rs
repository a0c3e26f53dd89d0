//! Exact log-evidence by exhaustive enumeration, for tiny instances only.
//!
//! Sums over every indicator assignment of every node pair (both indicators),
//! every fresh indicator of an isolated node with selections, and every
//! selector choice; memberships, community strengths and topic-behavior
//! distributions are integrated out analytically (Dirichlet/Beta conjugacy).

use clsm::{BehaviorData, Graph, Hyperparams};
use statrs::function::gamma::ln_gamma;

fn ln_beta_multi(params: &[f64]) -> f64 {
    params.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(params.iter().sum())
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `log p(Y, w | α, η, κ, ε)`.
pub fn log_evidence(graph: &Graph, behaviors: &BehaviorData, hyper: &Hyperparams) -> f64 {
    let n = graph.num_nodes();
    let k = hyper.num_topics;
    let v = hyper.kappa.len();
    let pairs: Vec<(usize, usize, bool)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, graph.has_edge(a, b)))
        .collect();
    let fresh_nodes: Vec<usize> = (0..n)
        .filter(|&i| graph.degree(i) == 0 && behaviors.total(i) > 0)
        .collect();
    // one entry per selection occurrence
    let selections: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| {
            behaviors
                .selections(i)
                .iter()
                .flat_map(move |s| std::iter::repeat_n((i, s.token), s.count as usize))
        })
        .collect();
    // incident pairs of each node, in pair order
    let incident: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            pairs
                .iter()
                .enumerate()
                .filter(|(_, &(a, b, linked))| linked && (a == i || b == i))
                .map(|(p, _)| p)
                .collect()
        })
        .collect();

    let num_z = 2 * pairs.len() + fresh_nodes.len();
    let total_z = k.pow(num_z as u32);
    let ln_b_alpha = ln_beta_multi(&hyper.alpha);
    let ln_b_eta = ln_beta_multi(&[hyper.eta.0, hyper.eta.1]);
    let ln_b_kappa = ln_beta_multi(&hyper.kappa);
    let (ln_eps, ln_1m_eps) = (hyper.epsilon.ln(), (1.0 - hyper.epsilon).ln());

    let mut acc = f64::NEG_INFINITY;
    let mut z = vec![0usize; num_z];
    for code in 0..total_z {
        let mut c = code;
        for slot in z.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        // indicator of node i in pair p
        let indicator = |p: usize, i: usize| -> usize {
            let (a, _, _) = pairs[p];
            if a == i {
                z[2 * p]
            } else {
                z[2 * p + 1]
            }
        };

        let mut counts = vec![vec![0.0; k]; n];
        let mut linked = vec![0.0; k];
        let mut unlinked = vec![0.0; k];
        let mut log_p = 0.0;
        for (p, &(a, b, is_link)) in pairs.iter().enumerate() {
            let (za, zb) = (z[2 * p], z[2 * p + 1]);
            counts[a][za] += 1.0;
            counts[b][zb] += 1.0;
            if za == zb {
                if is_link {
                    linked[za] += 1.0;
                } else {
                    unlinked[za] += 1.0;
                }
            } else {
                log_p += if is_link { ln_eps } else { ln_1m_eps };
            }
        }
        for (f, &i) in fresh_nodes.iter().enumerate() {
            counts[i][z[2 * pairs.len() + f]] += 1.0;
        }
        for row in &counts {
            let post: Vec<f64> = hyper.alpha.iter().zip(row).map(|(a, c)| a + c).collect();
            log_p += ln_beta_multi(&post) - ln_b_alpha;
        }
        for t in 0..k {
            log_p += ln_beta_multi(&[hyper.eta.0 + linked[t], hyper.eta.1 + unlinked[t]]) - ln_b_eta;
        }

        // sum over selector choices
        let choices: Vec<usize> = selections
            .iter()
            .map(|&(i, _)| incident[i].len().max(1))
            .collect();
        let total_c: usize = choices.iter().product();
        let mut behavior_acc = f64::NEG_INFINITY;
        for ccode in 0..total_c {
            let mut cc = ccode;
            let mut token_counts = vec![vec![0.0; v]; k];
            let mut log_c = 0.0;
            for (s, &(i, token)) in selections.iter().enumerate() {
                let pick = cc % choices[s];
                cc /= choices[s];
                let topic = if incident[i].is_empty() {
                    let f = fresh_nodes.iter().position(|&x| x == i).unwrap();
                    z[2 * pairs.len() + f]
                } else {
                    log_c -= (incident[i].len() as f64).ln();
                    indicator(incident[i][pick], i)
                };
                token_counts[topic][token] += 1.0;
            }
            for row in &token_counts {
                let post: Vec<f64> = hyper.kappa.iter().zip(row).map(|(a, c)| a + c).collect();
                log_c += ln_beta_multi(&post) - ln_b_kappa;
            }
            behavior_acc = log_add(behavior_acc, log_c);
        }
        acc = log_add(acc, log_p + behavior_acc);
    }
    acc
}
