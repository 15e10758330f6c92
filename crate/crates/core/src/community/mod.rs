//! Girvan-Newman divisive clustering with modularity-based model selection.
//!
//! The algorithm repeatedly removes the single highest edge-betweenness edge
//! from the residual graph and records a partition snapshot whenever the
//! component count grows. Modularity is always evaluated against the
//! original graph. The "natural" cluster number is the earliest point where
//! the modularity curve stops gaining more than epsilon over a lookahead
//! window.

mod betweenness;
mod index;

use std::collections::BTreeMap;

use thiserror::Error;

pub use betweenness::{
    brute_force_edge_betweenness, edge_betweenness, BRUTE_FORCE_VERTEX_LIMIT,
};

use crate::graph::{EdgeKey, InteractionGraph};
use crate::ingest::UserId;
use index::IndexedGraph;

/// Betweenness per edge of the current graph.
pub type EdgeScores = BTreeMap<EdgeKey, f64>;

/// Absolute tolerance under which two betweenness scores count as tied.
/// Ties are broken toward the lexicographically smallest edge, which makes
/// the removal sequence deterministic.
pub const BETWEENNESS_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("no edges")]
    NoEdges,
    #[error("graph has {vertices} vertices; the exhaustive oracle allows at most {limit}")]
    GraphTooLarge { vertices: usize, limit: usize },
    #[error("k = {k} is not achievable; achievable component counts are {min}..={max}")]
    UnachievableK { k: usize, min: usize, max: usize },
    #[error("partition does not cover exactly the graph vertices (offending id: `{0}`)")]
    VertexMismatch(UserId),
}

/// Assignment of every vertex to one of `k` clusters, indices `0..k`.
/// Clusters are numbered by their lexicographically smallest member, so the
/// labeling is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: BTreeMap<UserId, usize>,
    cluster_count: usize,
}

impl Partition {
    fn from_components(indexed: &IndexedGraph, components: &[Vec<usize>]) -> Partition {
        let mut assignment = BTreeMap::new();
        for (cluster, members) in components.iter().enumerate() {
            for &node in members {
                assignment.insert(indexed.node(node).clone(), cluster);
            }
        }
        Partition {
            assignment,
            cluster_count: components.len(),
        }
    }

    /// Builds a partition from an explicit assignment, renumbering clusters
    /// canonically. Intended for tests and external callers; clustering
    /// produces partitions directly.
    pub fn from_assignment<I, S>(pairs: I) -> Partition
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<UserId>,
    {
        let raw: BTreeMap<UserId, usize> =
            pairs.into_iter().map(|(u, c)| (u.into(), c)).collect();
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignment = BTreeMap::new();
        for (user, old) in raw {
            let next = relabel.len();
            let cluster = *relabel.entry(old).or_insert(next);
            assignment.insert(user, cluster);
        }
        Partition {
            cluster_count: relabel.len(),
            assignment,
        }
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn cluster_of(&self, user: &str) -> Option<usize> {
        self.assignment.get(user).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<UserId, usize> {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Members per cluster, each list in ascending user-id order.
    pub fn clusters(&self) -> Vec<Vec<&UserId>> {
        let mut clusters = vec![Vec::new(); self.cluster_count];
        for (user, &cluster) in &self.assignment {
            clusters[cluster].push(user);
        }
        clusters
    }
}

/// Partition snapshot taken when a removal increased the component count.
#[derive(Debug, Clone)]
pub struct Split {
    pub partition: Partition,
    /// Modularity of the snapshot, measured against the original graph.
    pub modularity: f64,
}

#[derive(Debug, Clone)]
pub struct RemovalRecord {
    pub edge: EdgeKey,
    pub components_after: usize,
    /// Present exactly when this removal split a component.
    pub split: Option<Split>,
}

/// Full removal history of a Girvan-Newman run: all `m` removals, plus the
/// state before any removal. Component counts along the record are
/// nondecreasing and grow by at most one per removal; the final count is
/// the vertex count.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub initial_components: usize,
    pub initial_partition: Partition,
    /// `None` only for an edgeless input, where modularity is undefined.
    pub initial_modularity: Option<f64>,
    pub removals: Vec<RemovalRecord>,
}

impl Dendrogram {
    pub fn vertex_count(&self) -> usize {
        self.initial_partition.len()
    }

    fn max_components(&self) -> usize {
        self.removals
            .last()
            .map(|r| r.components_after)
            .unwrap_or(self.initial_components)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GnOptions {
    /// Whether snapshot modularity honors edge weights. Betweenness is
    /// hop-count-based either way.
    pub weighted_modularity: bool,
}

impl Default for GnOptions {
    fn default() -> Self {
        GnOptions {
            weighted_modularity: true,
        }
    }
}

/// Girvan-Newman with default options (weighted modularity snapshots).
pub fn girvan_newman(g: &InteractionGraph) -> Dendrogram {
    girvan_newman_with(g, GnOptions::default())
}

/// Repeatedly recompute edge betweenness on the residual graph and remove
/// the single highest-scoring edge (ties: lexicographically smallest edge)
/// until no edges remain. Records the partition and its modularity at every
/// component-count increase.
pub fn girvan_newman_with(g: &InteractionGraph, options: GnOptions) -> Dendrogram {
    let indexed = IndexedGraph::new(g);
    let edge_count = indexed.edge_count();
    let mut alive = vec![true; edge_count];

    let initial = indexed.components(&alive);
    let initial_components = initial.len();
    let initial_partition = Partition::from_components(&indexed, &initial);
    let initial_modularity = (edge_count > 0).then(|| {
        modularity(g, &initial_partition, options.weighted_modularity)
            .expect("initial partition covers the graph")
    });

    let mut removals = Vec::with_capacity(edge_count);
    let mut component_count = initial_components;
    for _ in 0..edge_count {
        let scores = betweenness::betweenness_scores(&indexed, &alive);
        let top = scores
            .iter()
            .enumerate()
            .filter(|(edge_id, _)| alive[*edge_id])
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        // Smallest edge id within tolerance of the top score; edge ids are
        // in EdgeKey order, so this is the lexicographic tie rule.
        let chosen = (0..edge_count)
            .find(|&edge_id| {
                alive[edge_id] && scores[edge_id] >= top - BETWEENNESS_TIE_TOLERANCE
            })
            .expect("a live edge attains the maximum");
        alive[chosen] = false;

        let components = indexed.components(&alive);
        debug_assert!(
            components.len() == component_count || components.len() == component_count + 1
        );
        let split = (components.len() > component_count).then(|| {
            let partition = Partition::from_components(&indexed, &components);
            let q = modularity(g, &partition, options.weighted_modularity)
                .expect("snapshot partition covers the graph");
            Split {
                partition,
                modularity: q,
            }
        });
        component_count = components.len();
        removals.push(RemovalRecord {
            edge: indexed.edge_key(chosen),
            components_after: component_count,
            split,
        });
    }

    Dendrogram {
        initial_components,
        initial_partition,
        initial_modularity,
        removals,
    }
}

/// First recorded partition with exactly `k` components.
pub fn partition_at_k(dendrogram: &Dendrogram, k: usize) -> Result<Partition, CommunityError> {
    if k == dendrogram.initial_components {
        return Ok(dendrogram.initial_partition.clone());
    }
    for record in &dendrogram.removals {
        if let Some(split) = &record.split {
            if record.components_after == k {
                return Ok(split.partition.clone());
            }
        }
    }
    Err(CommunityError::UnachievableK {
        k,
        min: dendrogram.initial_components,
        max: dendrogram.max_components(),
    })
}

/// Newman-Girvan modularity of a partition:
/// `Q = sum over clusters of [W_c/W - (S_c/2W)^2]` with `W` the total edge
/// weight, `W_c` the intra-cluster weight and `S_c` the cluster's summed
/// (weighted) degree. With `weighted = false` every edge counts 1.
pub fn modularity(
    g: &InteractionGraph,
    partition: &Partition,
    weighted: bool,
) -> Result<f64, CommunityError> {
    for user in partition.assignment().keys() {
        if !g.vertices().contains(user) {
            return Err(CommunityError::VertexMismatch(user.clone()));
        }
    }
    for vertex in g.vertices() {
        if partition.cluster_of(vertex).is_none() {
            return Err(CommunityError::VertexMismatch(vertex.clone()));
        }
    }
    if g.edge_count() == 0 {
        return Err(CommunityError::NoEdges);
    }

    let k = partition.cluster_count();
    let mut total_weight = 0u64;
    let mut intra = vec![0u64; k];
    let mut strength = vec![0u64; k];
    for (key, &raw) in g.edges() {
        let w = if weighted { raw } else { 1 };
        total_weight += w;
        let cu = partition.cluster_of(key.min_end()).expect("covered");
        let cv = partition.cluster_of(key.max_end()).expect("covered");
        if cu == cv {
            intra[cu] += w;
        }
        strength[cu] += w;
        strength[cv] += w;
    }

    // Integer sums convert exactly, so the trivial one-cluster partition
    // comes out as exactly 0.
    let total = total_weight as f64;
    let q = (0..k)
        .map(|c| {
            let fraction = intra[c] as f64 / total;
            let expected = strength[c] as f64 / (2.0 * total);
            fraction - expected * expected
        })
        .sum();
    Ok(q)
}

/// Modularity per achieved component count, first partition achieving each.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularityCurve {
    points: BTreeMap<usize, f64>,
}

impl ModularityCurve {
    pub fn from_points<I: IntoIterator<Item = (usize, f64)>>(points: I) -> ModularityCurve {
        ModularityCurve {
            points: points.into_iter().collect(),
        }
    }

    pub fn points(&self) -> &BTreeMap<usize, f64> {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Read the modularity curve off a dendrogram. Errors on an edgeless
/// dendrogram, where modularity was never defined.
pub fn modularity_curve(dendrogram: &Dendrogram) -> Result<ModularityCurve, CommunityError> {
    let initial = dendrogram.initial_modularity.ok_or(CommunityError::NoEdges)?;
    let mut points = BTreeMap::new();
    points.insert(dendrogram.initial_components, initial);
    for record in &dendrogram.removals {
        if let Some(split) = &record.split {
            points.entry(record.components_after).or_insert(split.modularity);
        }
    }
    Ok(ModularityCurve { points })
}

/// Plateau detection parameters: the curve has flattened at `k` when every
/// one of the next `window` curve points gains less than `epsilon` over
/// `Q(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauParams {
    pub epsilon: f64,
    pub window: usize,
}

impl Default for PlateauParams {
    fn default() -> Self {
        PlateauParams {
            epsilon: 0.01,
            window: 3,
        }
    }
}

/// Smallest k where the curve has flattened; trailing points with fewer
/// than `window` successors are judged on the successors that exist (a
/// last point qualifies vacuously). Falls back to the argmax of Q
/// (smallest k on ties) if nothing qualifies.
pub fn natural_cluster_number(curve: &ModularityCurve, params: PlateauParams) -> usize {
    assert!(!curve.is_empty(), "modularity curve is empty");
    assert!(params.epsilon > 0.0, "epsilon must be positive");
    assert!(params.window >= 1, "window must be at least 1");

    let points: Vec<(usize, f64)> = curve.points.iter().map(|(&k, &q)| (k, q)).collect();
    for (i, &(k, q)) in points.iter().enumerate() {
        let lookahead = &points[(i + 1).min(points.len())..(i + 1 + params.window).min(points.len())];
        if lookahead.iter().all(|&(_, q_next)| q_next - q < params.epsilon) {
            return k;
        }
    }
    let (mut best_k, mut best_q) = points[0];
    for &(k, q) in &points[1..] {
        if q > best_q {
            best_q = q;
            best_k = k;
        }
    }
    best_k
}
