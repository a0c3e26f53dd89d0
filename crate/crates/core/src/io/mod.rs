//! File formats: tab-separated edge and behavior lists, binary checkpoints,
//! metric tables and `key = value` configuration files.

mod checkpoint;
mod config;
mod metrics;
mod tsv;

use std::path::Path;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC};
pub use config::{load_fit_config, load_sim_config, parse_fit_config, parse_sim_config};
pub use metrics::{format_sig6, write_metrics_csv, write_scaling_csv, METRICS_HEADER};
pub use tsv::{load_behaviors, load_edge_list, load_labels, write_behaviors, write_edge_list};

use crate::behavior::BehaviorData;
use crate::error::{ClsmError, Result};
use crate::graph::Graph;

/// A network with its behavior data and optional display labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub graph: Graph,
    pub behaviors: BehaviorData,
    pub node_labels: Option<Vec<String>>,
    pub token_labels: Option<Vec<String>>,
}

impl DatasetBundle {
    pub fn new(graph: Graph, behaviors: BehaviorData) -> Result<Self> {
        if graph.num_nodes() != behaviors.num_nodes() {
            return Err(ClsmError::Shape(format!(
                "graph has {} nodes, behaviors cover {}",
                graph.num_nodes(),
                behaviors.num_nodes()
            )));
        }
        Ok(DatasetBundle {
            graph,
            behaviors,
            node_labels: None,
            token_labels: None,
        })
    }

    pub fn with_labels(mut self, node_labels: Option<Vec<String>>, token_labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(l) = &node_labels {
            if l.len() != self.graph.num_nodes() {
                return Err(ClsmError::Shape(format!("{} node labels for {} nodes", l.len(), self.graph.num_nodes())));
            }
        }
        if let Some(l) = &token_labels {
            if l.len() != self.behaviors.vocab_size() {
                return Err(ClsmError::Shape(format!(
                    "{} token labels for {} tokens",
                    l.len(),
                    self.behaviors.vocab_size()
                )));
            }
        }
        self.node_labels = node_labels;
        self.token_labels = token_labels;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }
}

/// Loads an edge list and an optional behavior file into one dataset. The
/// behavior file may not mention nodes beyond the graph; nodes it omits get
/// no behaviors. Without a behavior file every node has an empty behavior
/// list over a vocabulary of `vocab_size_hint` tokens (one if not given).
pub fn load_dataset(edges: impl AsRef<Path>, behaviors: Option<&Path>, vocab_size_hint: Option<usize>) -> Result<DatasetBundle> {
    let graph = load_edge_list(edges)?;
    let behaviors = match behaviors {
        Some(path) => {
            let data = load_behaviors(path, vocab_size_hint)?;
            if data.num_nodes() > graph.num_nodes() {
                return Err(ClsmError::Shape(format!(
                    "behavior file mentions node {} but the graph has {} nodes",
                    data.num_nodes() - 1,
                    graph.num_nodes()
                )));
            }
            data.with_num_nodes(graph.num_nodes())?
        }
        None => BehaviorData::empty(graph.num_nodes(), vocab_size_hint.unwrap_or(1))?,
    };
    DatasetBundle::new(graph, behaviors)
}
