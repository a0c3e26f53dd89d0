#![allow(dead_code)]

pub mod oracle;

use clsm::{BehaviorData, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random small instance for oracle comparisons: N in 2..=max_nodes, V in 2..=3,
/// each node selects at most one token.
pub fn tiny_instance(seed: u64, max_nodes: usize) -> (Graph, BehaviorData) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_nodes);
    let v = rng.random_range(2..=3);
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(0.5) {
                pairs.push((a, b));
            }
        }
    }
    let graph = Graph::from_edges(n, pairs).unwrap();
    let tokens: Vec<Vec<usize>> = (0..n)
        .map(|_| if rng.random_bool(0.7) { vec![rng.random_range(0..v)] } else { vec![] })
        .collect();
    (graph, BehaviorData::from_token_lists(v, &tokens).unwrap())
}

/// Instance drawn from the model's own sampler with memberships from a
/// symmetric Dirichlet of precision 1 and `β` chosen for the target degree.
pub fn random_instance(seed: u64, n: usize, k: usize, v: usize, avg_degree: f64) -> (Graph, BehaviorData) {
    let mut hyper = clsm::Hyperparams::symmetric(k, v, 1.0, (1.0, 1.0), 0.1, 1e-5).unwrap();
    hyper.alpha = vec![1.0 / k as f64; k];
    let mut cfg = clsm::SimConfig::new(n, hyper, 10.0, seed);
    // independent memberships: E[Σ_k θ_ak θ_bk] = K (1/K)^2
    let overlap = 1.0 / k as f64;
    let beta = (avg_degree / ((n - 1) as f64 * overlap)).min(0.95);
    cfg.beta = Some(vec![beta; k]);
    let (g, b, _) = clsm::generate_dataset(&cfg).unwrap();
    (g, b)
}
