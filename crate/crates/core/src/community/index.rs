//! Index-based view of an interaction graph used by the clustering kernels.
//!
//! Nodes are numbered in ascending user-id order and edges in ascending
//! `EdgeKey` order, so "smallest edge id" and "lexicographically smallest
//! edge" coincide. Edge removal is expressed as an `alive` mask over edge
//! ids; the node numbering never changes during a clustering run.

use std::collections::BTreeMap;

use crate::graph::{EdgeKey, InteractionGraph};
use crate::ingest::UserId;

pub(crate) struct IndexedGraph {
    nodes: Vec<UserId>,
    edges: Vec<(usize, usize)>,
}

impl IndexedGraph {
    pub fn new(g: &InteractionGraph) -> IndexedGraph {
        let nodes: Vec<UserId> = g.vertices().iter().cloned().collect();
        let index: BTreeMap<&UserId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect();
        let edges = g
            .edges()
            .keys()
            .map(|key| (index[key.min_end()], index[key.max_end()]))
            .collect();
        IndexedGraph { nodes, edges }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, i: usize) -> &UserId {
        &self.nodes[i]
    }

    pub fn edge_key(&self, edge_id: usize) -> EdgeKey {
        let (u, v) = self.edges[edge_id];
        EdgeKey::new(self.nodes[u].clone(), self.nodes[v].clone())
    }

    /// Adjacency lists over the live edges: `adj[v] = [(neighbor, edge_id)]`,
    /// entries in ascending edge-id order.
    pub fn adjacency(&self, alive: &[bool]) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (edge_id, &(u, v)) in self.edges.iter().enumerate() {
            if alive[edge_id] {
                adj[u].push((v, edge_id));
                adj[v].push((u, edge_id));
            }
        }
        adj
    }

    /// Connected components of the live subgraph. Each component lists its
    /// node ids in ascending order; components are ordered by smallest
    /// member.
    pub fn components(&self, alive: &[bool]) -> Vec<Vec<usize>> {
        let adj = self.adjacency(alive);
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut members = Vec::new();
            while let Some(v) = stack.pop() {
                members.push(v);
                for &(w, _) in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }
}
