//! Sampler for the joint link/behavior generative process.
//!
//! Links: every unordered pair `(n1, n2)` draws one indicator from each
//! endpoint's membership; the pair links with probability `β_k` when both
//! indicators pick topic `k` and `ε` otherwise. Behaviors: each selection of
//! node `n` picks one of `n`'s retained indicators uniformly and draws a token
//! from that topic's behavior distribution.

use ndarray::Array2;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Beta, Distribution, Gamma, Poisson};
use rayon::prelude::*;

use crate::behavior::{BehaviorData, Selection};
use crate::error::{ClsmError, Result};
use crate::graph::Graph;
use crate::hyper::Hyperparams;
use crate::streams::{stream, Domain};

/// Ground truth retained by the sampler. Indicators are stored as topic
/// indices rather than one-hot vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta_true: Array2<f64>,
    pub beta_true: Vec<f64>,
    pub omega_true: Array2<f64>,
    /// Realized indicators of each node, ordered by partner id.
    pub indicator_sets: Vec<Vec<usize>>,
    /// Extra indicator drawn for a node that has selections but no retained indicators.
    pub fresh_indicators: Vec<Option<usize>>,
}

/// How the topic-behavior distributions are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum TopicSource {
    /// `ω_k ~ Dirichlet(κ)`.
    Dirichlet,
    /// Two triangular bumps (requires `K = 2`), see [`make_overlap_topic_pair`].
    OverlapPair { peak_gap: usize, peak_width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_nodes: usize,
    pub hyper: Hyperparams,
    /// Poisson mean of the per-node selection count.
    pub selections_mean: f64,
    pub seed: u64,
    pub retain_link_indicators_only: bool,
    /// Fixed community strengths; drawn from `Beta(η₁, η₀)` when absent.
    pub beta: Option<Vec<f64>>,
    pub topics: TopicSource,
}

impl SimConfig {
    pub fn new(num_nodes: usize, hyper: Hyperparams, selections_mean: f64, seed: u64) -> Self {
        SimConfig {
            num_nodes,
            hyper,
            selections_mean,
            seed,
            retain_link_indicators_only: true,
            beta: None,
            topics: TopicSource::Dirichlet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.num_nodes < 2 {
            return Err(ClsmError::Config("simulation needs at least 2 nodes".into()));
        }
        if !(self.selections_mean >= 0.0) || !self.selections_mean.is_finite() {
            return Err(ClsmError::Config("selections_mean must be a finite non-negative number".into()));
        }
        if let Some(beta) = &self.beta {
            if beta.len() != self.hyper.num_topics {
                return Err(ClsmError::Config("beta must have one entry per topic".into()));
            }
            if beta.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
                return Err(ClsmError::Config("beta entries must lie in [0, 1]".into()));
            }
        }
        if let TopicSource::OverlapPair { .. } = self.topics {
            if self.hyper.num_topics != 2 {
                return Err(ClsmError::Config("overlapping topic pair requires exactly 2 topics".into()));
            }
        }
        Ok(())
    }
}

/// Draws `θ ~ Dirichlet(alpha)` by normalizing independent Gamma variates.
pub fn sample_membership<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(ClsmError::Config("Dirichlet parameters must be positive".into()));
    }
    if alpha.len() == 1 {
        return Ok(vec![1.0]);
    }
    let mut draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("validated shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.iter_mut().for_each(|d| *d /= total);
    } else {
        // every Gamma variate underflowed: the mass sits on one vertex, chosen
        // with probability proportional to alpha
        let pick = WeightedAliasIndex::new(alpha.to_vec()).expect("positive weights").sample(rng);
        draws.iter_mut().enumerate().for_each(|(k, d)| *d = if k == pick { 1.0 } else { 0.0 });
    }
    Ok(draws)
}

#[inline]
fn draw_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the cumulative sum; take the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Samples the network for all unordered pairs.
///
/// Pair row `n1` (all pairs `(n1, n2)` with `n2 > n1`) uses its own stream, so
/// rows are sampled in parallel without changing the result. Within a pair the
/// draws are: indicator of `n1`, indicator of `n2`, link uniform.
pub fn sample_network(
    thetas: &Array2<f64>,
    beta: &[f64],
    epsilon: f64,
    seed: u64,
    retain_link_indicators_only: bool,
) -> Result<(Graph, Vec<Vec<usize>>)> {
    let n = thetas.nrows();
    let k = thetas.ncols();
    if beta.len() != k {
        return Err(ClsmError::Shape("beta length must equal the number of topics".into()));
    }
    struct Pair {
        partner: usize,
        z_out: usize,
        z_in: usize,
        linked: bool,
    }
    let rows: Vec<Vec<Pair>> = (0..n)
        .into_par_iter()
        .map(|n1| {
            let mut rng = stream(seed, Domain::PairRow, n1 as u64);
            let theta1 = thetas.row(n1);
            let theta1 = theta1.as_slice().expect("standard layout");
            let mut out = Vec::new();
            for n2 in (n1 + 1)..n {
                let theta2 = thetas.row(n2);
                let z_out = draw_categorical(theta1, &mut rng);
                let z_in = draw_categorical(theta2.as_slice().expect("standard layout"), &mut rng);
                let p = if z_out == z_in { beta[z_out] } else { epsilon };
                let linked = rng.random::<f64>() < p;
                if linked || !retain_link_indicators_only {
                    out.push(Pair {
                        partner: n2,
                        z_out,
                        z_in,
                        linked,
                    });
                }
            }
            out
        })
        .collect();

    let mut edges = Vec::new();
    let mut sets: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (n1, row) in rows.iter().enumerate() {
        for p in row {
            if p.linked {
                edges.push((n1, p.partner));
            }
            sets[n1].push((p.partner, p.z_out));
            sets[p.partner].push((n1, p.z_in));
        }
    }
    let indicator_sets = sets
        .into_iter()
        .map(|mut s| {
            s.sort_unstable_by_key(|&(partner, _)| partner);
            s.into_iter().map(|(_, z)| z).collect()
        })
        .collect();
    Ok((Graph::from_edges(n, edges)?, indicator_sets))
}

/// Samples behaviors given each node's indicator set and selection count.
/// Node `n` draws from its own stream.
pub fn sample_behaviors(
    indicator_sets: &[Vec<usize>],
    omegas: &Array2<f64>,
    totals: &[u64],
    seed: u64,
) -> Result<BehaviorData> {
    if indicator_sets.len() != totals.len() {
        return Err(ClsmError::Shape("one selection count per node is required".into()));
    }
    let vocab = omegas.ncols();
    let samplers = omegas
        .rows()
        .into_iter()
        .map(|row| {
            WeightedAliasIndex::new(row.to_vec())
                .map_err(|e| ClsmError::Config(format!("invalid topic-behavior distribution: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_node = indicator_sets
        .par_iter()
        .zip(totals.par_iter())
        .enumerate()
        .map(|(n, (set, &m))| {
            if m == 0 {
                return Ok(Vec::new());
            }
            if set.is_empty() {
                return Err(ClsmError::Degenerate(format!(
                    "node {n} has {m} selections but no indicators"
                )));
            }
            let mut rng = stream(seed, Domain::Selections, n as u64);
            let mut counts = vec![0u32; vocab];
            for _ in 0..m {
                let z = set[rng.random_range(0..set.len())];
                counts[samplers[z].sample(&mut rng)] += 1;
            }
            Ok(counts
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(token, count)| Selection { token, count })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    BehaviorData::new(vocab, per_node)
}

/// Two topic-behavior distributions shaped as triangular bumps of half-width
/// `peak_width`, centered `peak_gap` apart around the middle of the vocabulary.
///
/// Token `v` gets weight `max(0, peak_width - |v - c|)`; supports are disjoint
/// once `peak_gap >= 2 * peak_width - 1` and identical when `peak_gap = 0`.
pub fn make_overlap_topic_pair(vocab_size: usize, peak_gap: usize, peak_width: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if peak_width == 0 {
        return Err(ClsmError::Config("peak_width must be at least 1".into()));
    }
    if peak_gap > vocab_size {
        return Err(ClsmError::Config("peak_gap exceeds the vocabulary".into()));
    }
    let first = vocab_size / 2 - peak_gap / 2;
    let second = first + peak_gap;
    if first + 1 < peak_width || second + peak_width > vocab_size {
        return Err(ClsmError::Config(format!(
            "peaks at {first} and {second} with half-width {peak_width} do not fit in {vocab_size} tokens"
        )));
    }
    let bump = |center: usize| -> Vec<f64> {
        let mut w: Vec<f64> = (0..vocab_size)
            .map(|v| (peak_width as f64 - (v as f64 - center as f64).abs()).max(0.0))
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        w
    };
    Ok((bump(first), bump(second)))
}

/// Runs the full generative process.
pub fn generate_dataset(config: &SimConfig) -> Result<(Graph, BehaviorData, GroundTruth)> {
    config.validate()?;
    let hyper = &config.hyper;
    let n = config.num_nodes;
    let k = hyper.num_topics;
    let v = hyper.vocab_size();
    let seed = config.seed;

    let mut global = stream(seed, Domain::Global, 0);
    let beta_true = match &config.beta {
        Some(b) => b.clone(),
        None => {
            let dist = Beta::new(hyper.eta.0, hyper.eta.1).map_err(|e| ClsmError::Config(e.to_string()))?;
            (0..k).map(|_| dist.sample(&mut global)).collect()
        }
    };
    let mut omega_true = Array2::zeros((k, v));
    match config.topics {
        TopicSource::Dirichlet => {
            for mut row in omega_true.rows_mut() {
                let draw = sample_membership(&hyper.kappa, &mut global)?;
                row.assign(&ndarray::ArrayView1::from(&draw));
            }
        }
        TopicSource::OverlapPair { peak_gap, peak_width } => {
            let (a, b) = make_overlap_topic_pair(v, peak_gap, peak_width)?;
            omega_true.row_mut(0).assign(&ndarray::ArrayView1::from(&a));
            omega_true.row_mut(1).assign(&ndarray::ArrayView1::from(&b));
        }
    }

    let memberships = (0..n)
        .into_par_iter()
        .map(|node| sample_membership(&hyper.alpha, &mut stream(seed, Domain::Membership, node as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut theta_true = Array2::zeros((n, k));
    for (mut row, m) in theta_true.rows_mut().into_iter().zip(&memberships) {
        row.assign(&ndarray::ArrayView1::from(m));
    }

    let (graph, indicator_sets) = sample_network(
        &theta_true,
        &beta_true,
        hyper.epsilon,
        seed,
        config.retain_link_indicators_only,
    )?;

    let poisson = if config.selections_mean > 0.0 {
        Some(Poisson::new(config.selections_mean).map_err(|e| ClsmError::Config(e.to_string()))?)
    } else {
        None
    };
    let (totals, fresh_indicators): (Vec<u64>, Vec<Option<usize>>) = (0..n)
        .map(|node| {
            let mut rng = stream(seed, Domain::Behavior, node as u64);
            let m = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
            let fresh = (m > 0 && indicator_sets[node].is_empty()).then(|| {
                draw_categorical(theta_true.row(node).as_slice().expect("standard layout"), &mut rng)
            });
            (m, fresh)
        })
        .unzip();

    let augmented: Vec<Vec<usize>> = indicator_sets
        .iter()
        .zip(&fresh_indicators)
        .map(|(set, fresh)| match fresh {
            Some(z) => vec![*z],
            None => set.clone(),
        })
        .collect();
    let behaviors = sample_behaviors(&augmented, &omega_true, &totals, seed)?;

    Ok((
        graph,
        behaviors,
        GroundTruth {
            theta_true,
            beta_true,
            omega_true,
            indicator_sets,
            fresh_indicators,
        },
    ))
}
