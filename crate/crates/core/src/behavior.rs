//! Per-node multisets of behavior selections.

use crate::error::{ClsmError, Result};

/// A token selected `count` times by one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Selection {
    pub token: usize,
    pub count: u32,
}

/// Behavior observations: for every node, its distinct tokens (sorted) with
/// multiplicities. `totals[n]` is the number of selections `M_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorData {
    vocab_size: usize,
    selections: Vec<Vec<Selection>>,
    totals: Vec<u64>,
}

impl BehaviorData {
    /// Builds from per-node selection lists. Repeated tokens within a node are
    /// merged by summing counts.
    pub fn new(vocab_size: usize, per_node: Vec<Vec<Selection>>) -> Result<Self> {
        if vocab_size == 0 {
            return Err(ClsmError::Data("vocabulary must not be empty".into()));
        }
        let mut selections = Vec::with_capacity(per_node.len());
        let mut totals = Vec::with_capacity(per_node.len());
        for (n, mut list) in per_node.into_iter().enumerate() {
            if let Some(s) = list.iter().find(|s| s.token >= vocab_size) {
                return Err(ClsmError::Data(format!(
                    "node {n} selects token {} outside vocabulary of size {vocab_size}",
                    s.token
                )));
            }
            if list.iter().any(|s| s.count == 0) {
                return Err(ClsmError::Data(format!("node {n} has a zero selection count")));
            }
            list.sort_unstable();
            let mut merged: Vec<Selection> = Vec::with_capacity(list.len());
            for s in list {
                match merged.last_mut() {
                    Some(last) if last.token == s.token => {
                        last.count = last
                            .count
                            .checked_add(s.count)
                            .ok_or_else(|| ClsmError::Data(format!("count overflow at node {n}")))?;
                    }
                    _ => merged.push(s),
                }
            }
            totals.push(merged.iter().map(|s| s.count as u64).sum());
            selections.push(merged);
        }
        Ok(BehaviorData {
            vocab_size,
            selections,
            totals,
        })
    }

    /// Builds from flat token lists (each occurrence is one selection).
    pub fn from_token_lists(vocab_size: usize, tokens: &[Vec<usize>]) -> Result<Self> {
        let per_node = tokens
            .iter()
            .map(|list| list.iter().map(|&token| Selection { token, count: 1 }).collect())
            .collect();
        Self::new(vocab_size, per_node)
    }

    pub fn empty(num_nodes: usize, vocab_size: usize) -> Result<Self> {
        Self::new(vocab_size, vec![Vec::new(); num_nodes])
    }

    pub fn num_nodes(&self) -> usize {
        self.selections.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn selections(&self, n: usize) -> &[Selection] {
        &self.selections[n]
    }

    pub fn total(&self, n: usize) -> u64 {
        self.totals[n]
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn total_selections(&self) -> u64 {
        self.totals.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.iter().all(|&m| m == 0)
    }

    /// Pads with behavior-free nodes up to `num_nodes`. Shrinking is an error.
    pub fn with_num_nodes(mut self, num_nodes: usize) -> Result<Self> {
        if num_nodes < self.selections.len() {
            return Err(ClsmError::Shape(format!(
                "behaviors reference {} nodes but the graph has {num_nodes}",
                self.selections.len()
            )));
        }
        self.selections.resize(num_nodes, Vec::new());
        self.totals.resize(num_nodes, 0);
        Ok(self)
    }

    /// Widens the vocabulary. Shrinking below the largest used token is an error.
    pub fn with_vocab_size(mut self, vocab_size: usize) -> Result<Self> {
        let max_used = self
            .selections
            .iter()
            .flat_map(|l| l.iter().map(|s| s.token + 1))
            .max()
            .unwrap_or(0);
        if vocab_size < max_used || vocab_size == 0 {
            return Err(ClsmError::Shape(format!(
                "vocabulary size {vocab_size} is smaller than the largest token id + 1 ({max_used})"
            )));
        }
        self.vocab_size = vocab_size;
        Ok(self)
    }

    /// Keeps only `nodes`, relabeled to `0..nodes.len()` in order.
    pub fn subset(&self, nodes: &[usize]) -> BehaviorData {
        BehaviorData {
            vocab_size: self.vocab_size,
            selections: nodes.iter().map(|&n| self.selections[n].clone()).collect(),
            totals: nodes.iter().map(|&n| self.totals[n]).collect(),
        }
    }

    /// Concatenates node lists; both sides must share the vocabulary size.
    pub fn disjoint_union(&self, other: &BehaviorData) -> Result<BehaviorData> {
        if self.vocab_size != other.vocab_size {
            return Err(ClsmError::Shape("vocabulary sizes differ".into()));
        }
        let mut out = self.clone();
        out.selections.extend(other.selections.iter().cloned());
        out.totals.extend_from_slice(&other.totals);
        Ok(out)
    }
}
