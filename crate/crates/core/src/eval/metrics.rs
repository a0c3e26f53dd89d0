use std::cmp::Ordering;
use std::collections::HashMap;

use itertools::Itertools;
use ndarray::{Array2, ArrayView1};

use crate::error::{ClsmError, Result};

/// Marginal link probability of a pair under a fitted model.
pub fn predict_link_prob(theta_a: ArrayView1<f64>, theta_b: ArrayView1<f64>, beta_hat: &[f64], epsilon: f64) -> f64 {
    let mut same = 0.0;
    let mut linked = 0.0;
    for ((a, b), beta) in theta_a.iter().zip(theta_b.iter()).zip(beta_hat) {
        let p = a * b;
        same += p;
        linked += p * beta;
    }
    linked + (1.0 - same).max(0.0) * epsilon
}

/// Mixture `Σ_k θ_k ω̂_k` over the vocabulary.
pub fn predict_attribute_dist(theta: ArrayView1<f64>, omega_hat: &Array2<f64>) -> Vec<f64> {
    let mut out = vec![0.0; omega_hat.ncols()];
    for (t, row) in theta.iter().zip(omega_hat.rows()) {
        for (o, w) in out.iter_mut().zip(row.iter()) {
            *o += t * w;
        }
    }
    out
}

/// Candidates sorted by descending score together with the true positives.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    ranked: Vec<(usize, f64)>,
    positive: Vec<bool>,
}

impl RankedPrediction {
    /// `scores[i]` is the score of candidate `candidates[i]`.
    pub fn new(candidates: &[usize], scores: &[f64], positives: &[usize]) -> Result<Self> {
        if candidates.len() != scores.len() {
            return Err(ClsmError::Shape(format!(
                "{} candidates but {} scores",
                candidates.len(),
                scores.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(ClsmError::Domain(format!("non-finite score {s}")));
        }
        let mut ranked: Vec<(usize, f64)> = candidates.iter().copied().zip(scores.iter().copied()).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut slots = HashMap::with_capacity(ranked.len());
        for (slot, &(id, _)) in ranked.iter().enumerate() {
            if slots.insert(id, slot).is_some() {
                return Err(ClsmError::Data(format!("candidate {id} listed twice")));
            }
        }
        let mut positive = vec![false; ranked.len()];
        for p in positives {
            let slot = slots
                .get(p)
                .ok_or_else(|| ClsmError::Data(format!("positive {p} is not a candidate")))?;
            positive[*slot] = true;
        }
        Ok(RankedPrediction { ranked, positive })
    }

    pub fn ranked(&self) -> &[(usize, f64)] {
        &self.ranked
    }

    pub fn num_positives(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }

    pub fn positive_scores(&self) -> Vec<f64> {
        self.split_scores(true)
    }

    pub fn negative_scores(&self) -> Vec<f64> {
        self.split_scores(false)
    }

    fn split_scores(&self, wanted: bool) -> Vec<f64> {
        self.ranked.iter().zip(&self.positive).filter(|(_, &p)| p == wanted).map(|(r, _)| r.1).collect()
    }
}

/// Mean 1-based rank of the positives; tied scores share the mean rank of
/// their group. Lower is better.
pub fn average_rank_score(prediction: &RankedPrediction) -> Result<f64> {
    let positives = prediction.num_positives();
    if positives == 0 {
        return Err(ClsmError::UndefinedMetric("average rank needs at least one positive".into()));
    }
    let mut total = 0.0;
    let mut start = 0;
    for group in prediction.ranked.chunk_by(|a, b| a.1 == b.1) {
        let end = start + group.len();
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        total += mid_rank * prediction.positive[start..end].iter().filter(|&&p| p).count() as f64;
        start = end;
    }
    Ok(total / positives as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(positive_scores: &[f64], negative_scores: &[f64]) -> Result<f64> {
    if positive_scores.is_empty() || negative_scores.is_empty() {
        return Err(ClsmError::UndefinedMetric("AUC needs positive and negative scores".into()));
    }
    if let Some(s) = positive_scores.iter().chain(negative_scores).find(|s| s.is_nan()) {
        return Err(ClsmError::Domain(format!("score {s}")));
    }
    let mut pooled: Vec<(f64, bool)> = positive_scores
        .iter()
        .map(|&s| (s, true))
        .chain(negative_scores.iter().map(|&s| (s, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut start = 0;
    for group in pooled.chunk_by(|a, b| a.0 == b.0) {
        let end = start + group.len();
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        rank_sum += mid_rank * group.iter().filter(|g| g.1).count() as f64;
        start = end;
    }
    let p = positive_scores.len() as f64;
    let n = negative_scores.len() as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Mean absolute error between two membership matrices after the best
/// relabeling of the columns of `theta_hat`. The search over relabelings is
/// exhaustive up to eight topics and greedy on the cost matrix beyond that.
pub fn topic_recovery_mae(theta_true: &Array2<f64>, theta_hat: &Array2<f64>) -> Result<f64> {
    if theta_true.dim() != theta_hat.dim() {
        return Err(ClsmError::Shape(format!("{:?} vs {:?}", theta_true.dim(), theta_hat.dim())));
    }
    let (n, k) = theta_true.dim();
    if n == 0 || k == 0 {
        return Err(ClsmError::UndefinedMetric("empty membership matrix".into()));
    }
    let mut cost = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            cost[[i, j]] = theta_true
                .column(i)
                .iter()
                .zip(theta_hat.column(j).iter())
                .map(|(a, b)| (a - b).abs())
                .sum();
        }
    }
    let best = if k <= 8 {
        (0..k)
            .permutations(k)
            .map(|perm| perm.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    } else {
        greedy_assignment_cost(&cost)
    };
    Ok(best / (n * k) as f64)
}

fn greedy_assignment_cost(cost: &Array2<f64>) -> f64 {
    let k = cost.nrows();
    let mut cells: Vec<(usize, usize)> = (0..k).cartesian_product(0..k).collect();
    cells.sort_by(|a, b| cost[*a].partial_cmp(&cost[*b]).unwrap_or(Ordering::Equal).then(a.cmp(b)));
    let mut row_used = vec![false; k];
    let mut col_used = vec![false; k];
    let mut total = 0.0;
    for (i, j) in cells {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            total += cost[[i, j]];
        }
    }
    total
}
