//! Edge betweenness centrality.
//!
//! The fast path is Brandes' algorithm per edge: one BFS per source with
//! shortest-path counting, then backward dependency accumulation along the
//! predecessor DAG. Shortest paths are measured in hop count; edge weights
//! never enter the centrality.
//!
//! Per-source contributions are computed in parallel but reduced over
//! fixed-size source chunks in a fixed order, so the floating-point result
//! is bit-identical regardless of thread count.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::community::index::IndexedGraph;
use crate::community::{CommunityError, EdgeScores};
use crate::graph::InteractionGraph;

/// Vertex cap for the exhaustive oracle.
pub const BRUTE_FORCE_VERTEX_LIMIT: usize = 14;

/// Sources per reduction chunk. Part of the determinism contract: changing
/// this changes the floating-point summation order.
const SOURCE_CHUNK: usize = 64;

/// Betweenness of every edge: the sum over unordered connected vertex pairs
/// (s, t) of the fraction of shortest s-t paths that pass through the edge.
pub fn edge_betweenness(g: &InteractionGraph) -> Result<EdgeScores, CommunityError> {
    if g.edge_count() == 0 {
        return Err(CommunityError::NoEdges);
    }
    let indexed = IndexedGraph::new(g);
    let alive = vec![true; indexed.edge_count()];
    let scores = betweenness_scores(&indexed, &alive);
    Ok(collect_scores(&indexed, &scores))
}

pub(crate) fn collect_scores(indexed: &IndexedGraph, scores: &[f64]) -> EdgeScores {
    scores
        .iter()
        .enumerate()
        .map(|(edge_id, &score)| (indexed.edge_key(edge_id), score))
        .collect()
}

/// Brandes over the live subgraph; returns one score per edge id (dead
/// edges score 0).
pub(crate) fn betweenness_scores(indexed: &IndexedGraph, alive: &[bool]) -> Vec<f64> {
    let n = indexed.node_count();
    let m = indexed.edge_count();
    if m == 0 || n == 0 {
        return vec![0.0; m];
    }
    let adj = indexed.adjacency(alive);
    let sources: Vec<usize> = (0..n).collect();

    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0f64; m];
            let mut state = BrandesState::new(n);
            for &s in chunk {
                state.accumulate(s, &adj, &mut acc);
            }
            acc
        })
        .collect();

    let mut scores = vec![0.0f64; m];
    for partial in partials {
        for (total, part) in scores.iter_mut().zip(partial) {
            *total += part;
        }
    }
    // Each unordered pair was visited from both endpoints.
    for score in &mut scores {
        *score *= 0.5;
    }
    scores
}

struct BrandesState {
    dist: Vec<i32>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    preds: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl BrandesState {
    fn new(n: usize) -> BrandesState {
        BrandesState {
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    fn accumulate(&mut self, source: usize, adj: &[Vec<(usize, usize)>], acc: &mut [f64]) {
        self.dist.fill(-1);
        self.sigma.fill(0.0);
        self.delta.fill(0.0);
        for preds in &mut self.preds {
            preds.clear();
        }
        self.order.clear();

        self.dist[source] = 0;
        self.sigma[source] = 1.0;
        self.queue.push_back(source);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &(w, edge_id) in &adj[v] {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push((v, edge_id));
                }
            }
        }

        for &w in self.order.iter().rev() {
            for i in 0..self.preds[w].len() {
                let (v, edge_id) = self.preds[w][i];
                let contribution =
                    self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
                acc[edge_id] += contribution;
                self.delta[v] += contribution;
            }
        }
    }
}

/// Oracle with the same contract as [`edge_betweenness`], computed by
/// enumerating every shortest path explicitly. Exponential in the worst
/// case, hence the vertex cap.
pub fn brute_force_edge_betweenness(g: &InteractionGraph) -> Result<EdgeScores, CommunityError> {
    if g.edge_count() == 0 {
        return Err(CommunityError::NoEdges);
    }
    let n = g.vertex_count();
    if n > BRUTE_FORCE_VERTEX_LIMIT {
        return Err(CommunityError::GraphTooLarge {
            vertices: n,
            limit: BRUTE_FORCE_VERTEX_LIMIT,
        });
    }
    let indexed = IndexedGraph::new(g);
    let m = indexed.edge_count();
    let alive = vec![true; m];
    let adj = indexed.adjacency(&alive);

    let mut scores = vec![0.0f64; m];
    let mut edge_uses = vec![0u64; m];
    for s in 0..n {
        for t in s + 1..n {
            let dist_to_t = bfs_distances(t, &adj, n);
            if dist_to_t[s] < 0 {
                continue;
            }
            edge_uses.fill(0);
            let mut total_paths = 0u64;
            let mut path_edges = Vec::new();
            enumerate_shortest_paths(
                s,
                t,
                &dist_to_t,
                &adj,
                &mut path_edges,
                &mut edge_uses,
                &mut total_paths,
            );
            debug_assert!(total_paths > 0);
            for (edge_id, &uses) in edge_uses.iter().enumerate() {
                if uses > 0 {
                    scores[edge_id] += uses as f64 / total_paths as f64;
                }
            }
        }
    }
    Ok(collect_scores(&indexed, &scores))
}

fn bfs_distances(source: usize, adj: &[Vec<(usize, usize)>], n: usize) -> Vec<i32> {
    let mut dist = vec![-1; n];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in &adj[v] {
            if dist[w] < 0 {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Walk every path from `v` to `t` that strictly descends in distance-to-t,
/// i.e. every shortest path, tallying the edges each one uses.
fn enumerate_shortest_paths(
    v: usize,
    t: usize,
    dist_to_t: &[i32],
    adj: &[Vec<(usize, usize)>],
    path_edges: &mut Vec<usize>,
    edge_uses: &mut [u64],
    total_paths: &mut u64,
) {
    if v == t {
        *total_paths += 1;
        for &edge_id in path_edges.iter() {
            edge_uses[edge_id] += 1;
        }
        return;
    }
    for &(w, edge_id) in &adj[v] {
        if dist_to_t[w] == dist_to_t[v] - 1 {
            path_edges.push(edge_id);
            enumerate_shortest_paths(w, t, dist_to_t, adj, path_edges, edge_uses, total_paths);
            path_edges.pop();
        }
    }
}
