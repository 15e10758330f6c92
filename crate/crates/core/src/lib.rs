//! Reply-network analysis for course discussion forums.
//!
//! The pipeline: parse forum post logs and a course roster, link every later
//! poster in a thread to every earlier poster, aggregate the arcs into an
//! undirected weighted student graph, prune isolated vertices, split the
//! graph into communities by repeatedly removing the highest edge-betweenness
//! edge (Girvan-Newman), pick the cluster count where the modularity curve
//! flattens, and test whether grades differ across communities with a
//! Kruskal-Wallis rank test.
//!
//! Everything is deterministic: identical inputs and configuration produce
//! identical outputs, bit for bit, regardless of thread count.

pub mod community;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use community::{
    brute_force_edge_betweenness, edge_betweenness, girvan_newman, girvan_newman_with, modularity,
    modularity_curve, natural_cluster_number, partition_at_k, CommunityError, Dendrogram,
    EdgeScores, GnOptions, ModularityCurve, Partition, PlateauParams,
};
pub use graph::{
    build_arcs, collapse_to_undirected, remove_isolated, write_edge_list, ArcMultiset, EdgeKey,
    GraphError, InteractionGraph, WeightingMode,
};
pub use ingest::{
    assemble_threads, parse_posts, parse_roster, parse_roster_with_scale, write_posts_csv,
    write_roster_csv, GradeScale, IngestError, Participant, Post, PostFormat, PostId, PostLog,
    Role, Roster, ThreadId, ThreadSet, UserId, ANONYMOUS_USER_ID,
};
pub use pipeline::{
    export_dot, render_report_json, run_pipeline, AnalysisConfig, AnalysisReport, ErrorKind,
    KChoice, PipelineError, PipelineOutput, Stage,
};
pub use stats::{
    chi_square_sf, cluster_grade_report, kruskal_wallis, rank_with_ties, ClusterReport,
    GradeReport, KwResult, KwStatus, StatsError,
};
pub use synth::{generate_cohort, SynthConfig, SynthError};
