//! Interaction graph construction.
//!
//! The edge rule: within a thread, every later poster is linked to every
//! earlier poster. Arcs point later-poster -> earlier-poster and are
//! recorded directed for fidelity, then collapsed into an undirected
//! weighted graph for clustering. Only students enter the graph; the
//! anonymous pseudo-user is excluded unless explicitly retained.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::ingest::{Role, Roster, ThreadSet, UserId, ANONYMOUS_USER_ID};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("thread {thread}: author `{author}` not in roster")]
    UnknownAuthor { thread: String, author: UserId },
}

/// Undirected edge key, stored with endpoints in ascending order so that
/// `{u, v}` and `{v, u}` are the same key and map iteration is canonical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    a: UserId,
    b: UserId,
}

impl EdgeKey {
    pub fn new(u: impl Into<UserId>, v: impl Into<UserId>) -> EdgeKey {
        let (u, v) = (u.into(), v.into());
        debug_assert!(u != v, "self-loops are not representable");
        if u <= v {
            EdgeKey { a: u, b: v }
        } else {
            EdgeKey { a: v, b: u }
        }
    }

    /// Lexicographically smaller endpoint.
    pub fn min_end(&self) -> &UserId {
        &self.a
    }

    /// Lexicographically larger endpoint.
    pub fn max_end(&self) -> &UserId {
        &self.b
    }

    pub fn ends(&self) -> (&UserId, &UserId) {
        (&self.a, &self.b)
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}--{}", self.a, self.b)
    }
}

/// How a pair of co-posters accumulates weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightingMode {
    /// One increment per ordered pair per thread, however often either
    /// member posted. The default; per-post counting inflates chatty
    /// threads.
    #[default]
    PerThread,
    /// One increment per (earlier-post, later-post) pair.
    PerPost,
}

impl WeightingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightingMode::PerThread => "per-thread",
            WeightingMode::PerPost => "per-post",
        }
    }
}

/// Directed reply arcs, later poster -> earlier poster, plus the vertex
/// universe they were built over (all roster students, and the anonymous
/// pseudo-user when retained). Keeping the universe here lets the
/// undirected collapse carry isolated students without re-consulting the
/// roster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArcMultiset {
    arcs: BTreeMap<(UserId, UserId), u64>,
    vertices: BTreeSet<UserId>,
}

impl ArcMultiset {
    pub fn arcs(&self) -> &BTreeMap<(UserId, UserId), u64> {
        &self.arcs
    }

    pub fn vertices(&self) -> &BTreeSet<UserId> {
        &self.vertices
    }

    pub fn weight(&self, from: &str, to: &str) -> u64 {
        self.arcs
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }
}

/// Undirected weighted student graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionGraph {
    vertices: BTreeSet<UserId>,
    edges: BTreeMap<EdgeKey, u64>,
}

impl InteractionGraph {
    pub fn from_parts(
        vertices: BTreeSet<UserId>,
        edges: BTreeMap<EdgeKey, u64>,
    ) -> InteractionGraph {
        let mut vertices = vertices;
        for key in edges.keys() {
            vertices.insert(key.min_end().clone());
            vertices.insert(key.max_end().clone());
        }
        debug_assert!(edges.values().all(|&w| w >= 1));
        InteractionGraph { vertices, edges }
    }

    /// Convenience constructor for tests and fixtures: unit-or-weighted
    /// edges given as `(u, v, w)` triples.
    pub fn from_edges<I, S>(edges: I) -> InteractionGraph
    where
        I: IntoIterator<Item = (S, S, u64)>,
        S: Into<UserId>,
    {
        let mut map = BTreeMap::new();
        for (u, v, w) in edges {
            *map.entry(EdgeKey::new(u, v)).or_insert(0) += w;
        }
        InteractionGraph::from_parts(BTreeSet::new(), map)
    }

    pub fn vertices(&self) -> &BTreeSet<UserId> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeMap<EdgeKey, u64> {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of edge weights.
    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Symmetric lookup: `weight(u, v) == weight(v, u)`.
    pub fn weight(&self, u: &str, v: &str) -> u64 {
        if u == v {
            return 0;
        }
        self.edges
            .get(&EdgeKey::new(u, v))
            .copied()
            .unwrap_or(0)
    }

    /// Number of incident edges (not their weight).
    pub fn degree(&self, u: &str) -> usize {
        self.edges
            .keys()
            .filter(|k| k.min_end() == u || k.max_end() == u)
            .count()
    }
}

fn resolve_participants<'a>(
    thread_id: &str,
    posts: &'a [crate::ingest::Post],
    roster: &Roster,
    include_anonymous: bool,
) -> Result<Vec<Option<&'a UserId>>, GraphError> {
    posts
        .iter()
        .map(|post| {
            let participant =
                roster
                    .get(&post.author_id)
                    .ok_or_else(|| GraphError::UnknownAuthor {
                        thread: thread_id.to_string(),
                        author: post.author_id.clone(),
                    })?;
            Ok(match participant.role {
                Role::Student => Some(&post.author_id),
                Role::Anonymous if include_anonymous => Some(&post.author_id),
                // Instructors (and anonymous, unless retained) are invisible
                // to the edge rule: filtering happens before pair
                // enumeration, so a thread [A, instructor, B] still links B
                // to A.
                _ => None,
            })
        })
        .collect()
}

/// Apply the interaction rule. For each thread, every ordered pair of
/// distinct retained posters (A earlier, B later) yields an arc B -> A:
/// weight 1 per thread in `PerThread` mode, weight 1 per post pair in
/// `PerPost` mode.
pub fn build_arcs(
    threads: &ThreadSet,
    roster: &Roster,
    mode: WeightingMode,
    include_anonymous: bool,
) -> Result<ArcMultiset, GraphError> {
    let mut arcs: BTreeMap<(UserId, UserId), u64> = BTreeMap::new();

    for (thread_id, posts) in threads.threads() {
        let authors = resolve_participants(thread_id, posts, roster, include_anonymous)?;
        match mode {
            WeightingMode::PerThread => {
                let mut pairs: BTreeSet<(&UserId, &UserId)> = BTreeSet::new();
                for (i, earlier) in authors.iter().enumerate() {
                    let Some(earlier) = earlier else { continue };
                    for later in authors[i + 1..].iter().flatten() {
                        if *later != *earlier {
                            pairs.insert((later, earlier));
                        }
                    }
                }
                for (later, earlier) in pairs {
                    *arcs.entry((later.clone(), earlier.clone())).or_insert(0) += 1;
                }
            }
            WeightingMode::PerPost => {
                for (i, earlier) in authors.iter().enumerate() {
                    let Some(earlier) = earlier else { continue };
                    for later in authors[i + 1..].iter().flatten() {
                        if *later != *earlier {
                            *arcs
                                .entry(((*later).clone(), (*earlier).clone()))
                                .or_insert(0) += 1;
                        }
                    }
                }
            }
        }
    }

    let mut vertices: BTreeSet<UserId> =
        roster.students().map(|p| p.user_id.clone()).collect();
    if include_anonymous && roster.has_anonymous() {
        vertices.insert(ANONYMOUS_USER_ID.to_string());
    }

    Ok(ArcMultiset { arcs, vertices })
}

/// Sum the two directions of each arc pair into one undirected weight.
/// Isolated students are retained here; pruning is a separate step.
pub fn collapse_to_undirected(arcs: &ArcMultiset) -> InteractionGraph {
    let mut edges: BTreeMap<EdgeKey, u64> = BTreeMap::new();
    for ((from, to), weight) in arcs.arcs() {
        *edges.entry(EdgeKey::new(from.clone(), to.clone())).or_insert(0) += weight;
    }
    InteractionGraph::from_parts(arcs.vertices().clone(), edges)
}

/// Drop degree-zero vertices. Idempotent; the edge set is unchanged.
pub fn remove_isolated(g: &InteractionGraph) -> InteractionGraph {
    let mut connected: BTreeSet<UserId> = BTreeSet::new();
    for key in g.edges().keys() {
        connected.insert(key.min_end().clone());
        connected.insert(key.max_end().clone());
    }
    InteractionGraph {
        vertices: connected,
        edges: g.edges().clone(),
    }
}

/// Canonical edge-list dump: `u,v,weight` lines sorted by `(u, v)`.
/// Diff-stable across runs.
pub fn write_edge_list<W: Write>(g: &InteractionGraph, mut sink: W) -> std::io::Result<()> {
    for (key, weight) in g.edges() {
        writeln!(sink, "{},{},{}", key.min_end(), key.max_end(), weight)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{assemble_threads, GradeScale, Participant, Post, PostLog};
    use chrono::{TimeZone, Utc};

    fn roster_of(entries: &[(&str, Role)]) -> Roster {
        Roster::new(
            entries
                .iter()
                .map(|(id, role)| Participant {
                    user_id: id.to_string(),
                    role: *role,
                    grade: None,
                })
                .collect(),
            GradeScale::default(),
        )
        .unwrap()
    }

    fn thread_of(authors: &[&str]) -> ThreadSet {
        let posts = authors
            .iter()
            .enumerate()
            .map(|(i, author)| Post {
                post_id: format!("p{i}"),
                thread_id: "t1".to_string(),
                author_id: author.to_string(),
                timestamp: Utc.with_ymd_and_hms(2024, 1, 1, 0, i as u32, 0).unwrap(),
                parent_post_id: None,
            })
            .collect();
        assemble_threads(&PostLog::new(posts).unwrap()).unwrap()
    }

    #[test]
    fn per_thread_arcs_from_ordered_pairs() {
        // Thread order [A, B, A, C]: hand enumeration of earlier/later pairs
        // gives B->A, A->B, C->A, C->B, weight 1 each.
        let roster = roster_of(&[("A", Role::Student), ("B", Role::Student), ("C", Role::Student)]);
        let threads = thread_of(&["A", "B", "A", "C"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap();
        assert_eq!(arcs.weight("B", "A"), 1);
        assert_eq!(arcs.weight("A", "B"), 1);
        assert_eq!(arcs.weight("C", "A"), 1);
        assert_eq!(arcs.weight("C", "B"), 1);
        assert_eq!(arcs.arcs().len(), 4);
    }

    #[test]
    fn per_post_arcs_count_post_pairs() {
        // Same thread, per-post: C posted after both of A's posts.
        let roster = roster_of(&[("A", Role::Student), ("B", Role::Student), ("C", Role::Student)]);
        let threads = thread_of(&["A", "B", "A", "C"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerPost, false).unwrap();
        assert_eq!(arcs.weight("C", "A"), 2);
        assert_eq!(arcs.weight("C", "B"), 1);
        assert_eq!(arcs.weight("B", "A"), 1);
        assert_eq!(arcs.weight("A", "B"), 1);
    }

    #[test]
    fn anonymous_excluded_by_default() {
        let roster = roster_of(&[
            ("A", Role::Student),
            ("B", Role::Student),
            (ANONYMOUS_USER_ID, Role::Anonymous),
        ]);
        let threads = thread_of(&["A", ANONYMOUS_USER_ID, "B"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap();
        assert_eq!(arcs.weight("B", "A"), 1);
        assert_eq!(arcs.arcs().len(), 1);
    }

    #[test]
    fn anonymous_retained_behind_flag() {
        let roster = roster_of(&[
            ("A", Role::Student),
            ("B", Role::Student),
            (ANONYMOUS_USER_ID, Role::Anonymous),
        ]);
        let threads = thread_of(&["A", ANONYMOUS_USER_ID, "B"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, true).unwrap();
        assert_eq!(arcs.weight(ANONYMOUS_USER_ID, "A"), 1);
        assert_eq!(arcs.weight("B", ANONYMOUS_USER_ID), 1);
        assert_eq!(arcs.weight("B", "A"), 1);
        assert!(arcs.vertices().contains(ANONYMOUS_USER_ID));
    }

    #[test]
    fn self_pairs_are_excluded() {
        let roster = roster_of(&[("A", Role::Student)]);
        let threads = thread_of(&["A", "A"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap();
        assert!(arcs.arcs().is_empty());
    }

    #[test]
    fn instructors_are_invisible_to_the_rule() {
        let roster = roster_of(&[
            ("A", Role::Student),
            ("B", Role::Student),
            ("prof", Role::Instructor),
        ]);
        let threads = thread_of(&["A", "prof", "B"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap();
        assert_eq!(arcs.weight("B", "A"), 1);
        assert_eq!(arcs.arcs().len(), 1);
    }

    #[test]
    fn unknown_author_is_an_error() {
        let roster = roster_of(&[("A", Role::Student)]);
        let threads = thread_of(&["A", "mystery"]);
        let err = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn collapse_sums_both_directions() {
        let roster = roster_of(&[("A", Role::Student), ("B", Role::Student)]);
        let threads = thread_of(&["A", "B", "A"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap();
        let g = collapse_to_undirected(&arcs);
        assert_eq!(g.weight("A", "B"), 2);
        assert_eq!(g.weight("B", "A"), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn collapse_keeps_isolated_roster_students() {
        let roster = roster_of(&[
            ("A", Role::Student),
            ("B", Role::Student),
            ("D", Role::Student),
        ]);
        let threads = thread_of(&["A", "B"]);
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap();
        let g = collapse_to_undirected(&arcs);
        assert!(g.vertices().contains("D"));
        assert_eq!(g.vertex_count(), 3);
    }

    #[test]
    fn collapse_of_empty_arcs_has_no_edges() {
        let arcs = ArcMultiset::default();
        let g = collapse_to_undirected(&arcs);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn remove_isolated_keeps_positive_degree_vertices() {
        let mut g = InteractionGraph::from_edges([("A", "B", 2u64)]);
        g.vertices.insert("D".to_string());
        let pruned = remove_isolated(&g);
        assert_eq!(
            pruned.vertices().iter().cloned().collect::<Vec<_>>(),
            ["A", "B"]
        );
        assert_eq!(pruned.edges(), g.edges());
    }

    #[test]
    fn remove_isolated_empties_an_edgeless_graph() {
        let mut g = InteractionGraph::default();
        for v in ["a", "b", "c", "d", "e"] {
            g.vertices.insert(v.to_string());
        }
        let pruned = remove_isolated(&g);
        assert_eq!(pruned.vertex_count(), 0);
    }

    #[test]
    fn remove_isolated_is_idempotent() {
        let g = InteractionGraph::from_edges([("A", "B", 1u64), ("B", "C", 1)]);
        let once = remove_isolated(&g);
        assert_eq!(once, remove_isolated(&once));
        assert_eq!(once, g);
    }

    #[test]
    fn edge_list_is_sorted_and_canonical() {
        let g = InteractionGraph::from_edges([("b", "a", 2u64), ("c", "a", 1), ("b", "c", 5)]);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,2\na,c,1\nb,c,5\n");
    }
}
