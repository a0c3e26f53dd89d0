//! Undirected simple graph with stable edge indices.

use crate::error::{ClsmError, Result};

/// One entry of a node's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub neighbor: usize,
    pub edge: usize,
}

/// Undirected simple graph over `num_nodes` nodes.
///
/// Edges are stored once as `(a, b)` with `a < b`, sorted lexicographically;
/// the position in that array is the edge index. Each node's adjacency list is
/// sorted by neighbor id, and `slots[e]` records where edge `e` sits in the
/// adjacency lists of its two endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<Incidence>>,
    slots: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Duplicates (in either orientation)
    /// collapse to one edge.
    pub fn from_edges<I>(num_nodes: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if num_nodes == 0 {
            return Err(ClsmError::Data("graph must have at least one node".into()));
        }
        let mut edges = Vec::new();
        for (u, v) in pairs {
            if u == v {
                return Err(ClsmError::Data(format!("self-loop on node {u}")));
            }
            if u >= num_nodes || v >= num_nodes {
                return Err(ClsmError::Index(format!(
                    "edge ({u}, {v}) references a node outside [0, {num_nodes})"
                )));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut adjacency = vec![Vec::new(); num_nodes];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adjacency[a].push(Incidence { neighbor: b, edge: e });
            adjacency[b].push(Incidence { neighbor: a, edge: e });
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable_by_key(|inc| inc.neighbor);
        }
        let mut slots = vec![(0, 0); edges.len()];
        for list in &adjacency {
            for (pos, inc) in list.iter().enumerate() {
                let (a, _) = edges[inc.edge];
                if inc.neighbor == a {
                    slots[inc.edge].1 = pos;
                } else {
                    slots[inc.edge].0 = pos;
                }
            }
        }
        Ok(Graph {
            num_nodes,
            edges,
            adjacency,
            slots,
        })
    }

    pub fn empty(num_nodes: usize) -> Result<Self> {
        Self::from_edges(num_nodes, std::iter::empty())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of unordered node pairs that are not linked.
    pub fn num_non_links(&self) -> usize {
        self.num_nodes * (self.num_nodes - 1) / 2 - self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn degree(&self, n: usize) -> usize {
        self.adjacency[n].len()
    }

    pub fn neighbors(&self, n: usize) -> &[Incidence] {
        &self.adjacency[n]
    }

    /// Position of edge `e` in the adjacency lists of its lower and higher endpoint.
    pub fn edge_slots(&self, e: usize) -> (usize, usize) {
        self.slots[e]
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.num_nodes || v >= self.num_nodes {
            return None;
        }
        let list = &self.adjacency[u];
        list.binary_search_by_key(&v, |inc| inc.neighbor)
            .ok()
            .map(|pos| list[pos].edge)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// Subgraph induced by `nodes`, relabeled to `0..nodes.len()` in the given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut relabel = vec![usize::MAX; self.num_nodes];
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.num_nodes {
                return Err(ClsmError::Index(format!("node {old} not in graph")));
            }
            relabel[old] = new;
        }
        let pairs = self.edges.iter().filter_map(|&(a, b)| {
            let (ra, rb) = (relabel[a], relabel[b]);
            (ra != usize::MAX && rb != usize::MAX).then_some((ra, rb))
        });
        Graph::from_edges(nodes.len(), pairs)
    }

    /// Disjoint union; nodes of `other` are shifted by `self.num_nodes()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.num_nodes;
        let pairs = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(a, b)| (a + shift, b + shift)));
        Graph::from_edges(self.num_nodes + other.num_nodes, pairs).expect("union of valid graphs is valid")
    }

    /// Re-checks the structural invariants. Construction already guarantees
    /// them; this is exposed for tests and for data produced elsewhere.
    pub fn validate(&self) -> Result<()> {
        let mut incident = vec![0usize; self.num_nodes];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if a >= b || b >= self.num_nodes {
                return Err(ClsmError::Data(format!("malformed edge {e}: ({a}, {b})")));
            }
            incident[a] += 1;
            incident[b] += 1;
            let (sa, sb) = self.slots[e];
            if self.adjacency[a][sa] != (Incidence { neighbor: b, edge: e })
                || self.adjacency[b][sb] != (Incidence { neighbor: a, edge: e })
            {
                return Err(ClsmError::Data(format!("edge {e} is not symmetric in adjacency")));
            }
        }
        for (n, list) in self.adjacency.iter().enumerate() {
            if list.len() != incident[n] {
                return Err(ClsmError::Data(format!("degree mismatch at node {n}")));
            }
            if list.windows(2).any(|w| w[0].neighbor >= w[1].neighbor) {
                return Err(ClsmError::Data(format!("adjacency of node {n} is not sorted")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dedups_both_orientations() {
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (1, 2), (0, 1)]).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.num_non_links(), 1);
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(0, 2));
        g.validate().unwrap();
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(matches!(Graph::from_edges(3, [(2, 2)]), Err(ClsmError::Data(_))));
        assert!(matches!(Graph::from_edges(3, [(0, 3)]), Err(ClsmError::Index(_))));
    }

    #[test]
    fn slots_locate_edges() {
        let g = Graph::from_edges(4, [(0, 3), (0, 1), (2, 3), (1, 3)]).unwrap();
        for e in 0..g.num_edges() {
            let (a, b) = g.edge(e);
            let (sa, sb) = g.edge_slots(e);
            assert_eq!(g.neighbors(a)[sa].neighbor, b);
            assert_eq!(g.neighbors(b)[sb].neighbor, a);
        }
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let sub = g.induced_subgraph(&[3, 2, 0]).unwrap();
        assert_eq!(sub.num_nodes(), 3);
        assert_eq!(sub.edges(), &[(0, 1)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn invariants_hold_for_random_pairs(n in 2usize..30, raw in prop::collection::vec((0usize..30, 0usize..30), 0..80)) {
            let pairs: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
            let g = Graph::from_edges(n, pairs.iter().copied()).unwrap();
            g.validate().unwrap();
            for &(a, b) in &pairs {
                prop_assert!(g.has_edge(a, b) && g.has_edge(b, a));
            }
            let total: usize = (0..n).map(|v| g.degree(v)).sum();
            prop_assert_eq!(total, 2 * g.num_edges());
        }
    }
}
