//! Evaluation: node-level cross-validation, ranked prediction metrics and
//! topic recovery error.

mod cv;
mod metrics;

use rand::seq::SliceRandom;

use crate::error::{ClsmError, Result};
use crate::streams::{stream, Domain};

pub use cv::{
    run_attribute_prediction_cv, run_attribute_prediction_cv_with, run_link_prediction_cv, run_link_prediction_cv_with,
    training_view, CvConfig, CvReport, MetricRow, Task, TrainingView,
};
pub use metrics::{
    auc, average_rank_score, predict_attribute_dist, predict_link_prob, topic_recovery_mae, RankedPrediction,
};

/// Assignment of every node to one of `num_folds` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub num_folds: usize,
    pub fold_assignments: Vec<usize>,
}

impl FoldSplit {
    pub fn num_nodes(&self) -> usize {
        self.fold_assignments.len()
    }

    /// Nodes outside fold `fold`, ascending.
    pub fn train_nodes(&self, fold: usize) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&n| self.fold_assignments[n] != fold).collect()
    }

    /// Nodes in fold `fold`, ascending.
    pub fn test_nodes(&self, fold: usize) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&n| self.fold_assignments[n] == fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_folds];
        for &f in &self.fold_assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Uniformly random partition of `0..num_nodes` into `k` folds whose sizes
/// differ by at most one; the first `num_nodes % k` folds get the extra node.
pub fn kfold_split(num_nodes: usize, k: usize, seed: u64) -> Result<FoldSplit> {
    kfold_split_round(num_nodes, k, seed, 0)
}

pub(crate) fn kfold_split_round(num_nodes: usize, k: usize, seed: u64, round: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(ClsmError::Config(format!("need at least 2 folds, got {k}")));
    }
    if num_nodes < k {
        return Err(ClsmError::Config(format!("{num_nodes} nodes cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..num_nodes).collect();
    order.shuffle(&mut stream(seed, Domain::Folds, round));
    let mut fold_assignments = vec![0; num_nodes];
    for (position, node) in order.into_iter().enumerate() {
        fold_assignments[node] = position % k;
    }
    Ok(FoldSplit {
        num_folds: k,
        fold_assignments,
    })
}
