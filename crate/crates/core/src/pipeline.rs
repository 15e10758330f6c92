//! End-to-end orchestration: files in, canonical report (and optional DOT
//! summary) out.
//!
//! Reports are canonical JSON — keys sorted, floats in their shortest
//! round-trip form, no timestamps — so identical inputs and configuration
//! produce byte-identical reports. Volatile run metadata (paths, wall
//! time) belongs in a sidecar written by the caller, never in the report.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::community::{
    girvan_newman_with, modularity_curve, natural_cluster_number, partition_at_k, GnOptions,
    Partition, PlateauParams, BETWEENNESS_TIE_TOLERANCE,
};
use crate::graph::{
    build_arcs, collapse_to_undirected, remove_isolated, InteractionGraph, WeightingMode,
};
use crate::ingest::{
    assemble_threads, parse_posts, parse_roster_with_scale, GradeScale, PostFormat,
};
use crate::stats::{cluster_grade_report, ClusterReport, KwStatus};

/// Cluster-count selection: the modularity-plateau rule, or a fixed k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub format: PostFormat,
    pub weighting: WeightingMode,
    pub include_anonymous: bool,
    pub k: KChoice,
    pub plateau: PlateauParams,
    pub weighted_modularity: bool,
    pub grade_scale: GradeScale,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            format: PostFormat::Csv,
            weighting: WeightingMode::PerThread,
            include_anonymous: false,
            k: KChoice::Auto,
            plateau: PlateauParams::default(),
            weighted_modularity: true,
            grade_scale: GradeScale::default(),
        }
    }
}

/// Pipeline stages that can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    ReadPosts,
    ReadRoster,
    ParsePosts,
    ParseRoster,
    AssembleThreads,
    BuildArcs,
    ModularityCurve,
    SelectK,
    Partition,
    GradeReport,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::ReadPosts => "read-posts",
            Stage::ReadRoster => "read-roster",
            Stage::ParsePosts => "parse-posts",
            Stage::ParseRoster => "parse-roster",
            Stage::AssembleThreads => "assemble-threads",
            Stage::BuildArcs => "build-arcs",
            Stage::ModularityCurve => "modularity-curve",
            Stage::SelectK => "select-k",
            Stage::Partition => "partition",
            Stage::GradeReport => "grade-report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether a failure was caused by the inputs or arose during analysis;
/// drives the CLI exit code (2 vs 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Analysis,
}

#[derive(Debug)]
pub struct PipelineError {
    stage: Stage,
    source: Box<dyn Error + Send + Sync>,
}

impl PipelineError {
    fn new(stage: Stage, source: impl Into<Box<dyn Error + Send + Sync>>) -> PipelineError {
        PipelineError {
            stage,
            source: source.into(),
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn kind(&self) -> ErrorKind {
        match self.stage {
            Stage::Config
            | Stage::ReadPosts
            | Stage::ReadRoster
            | Stage::ParsePosts
            | Stage::ParseRoster
            | Stage::AssembleThreads
            | Stage::BuildArcs => ErrorKind::Input,
            Stage::ModularityCurve | Stage::SelectK | Stage::Partition | Stage::GradeReport => {
                ErrorKind::Analysis
            }
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.source)
    }
}

impl Error for PipelineError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        Some(self.source.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub sha256: String,
    pub bytes: usize,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigests {
    pub posts: FileDigest,
    pub roster: FileDigest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub students_in_roster: usize,
    pub threads: usize,
    pub vertices_before_pruning: usize,
    pub vertices_after_pruning: usize,
    pub isolated_removed: usize,
    pub edges: usize,
    pub total_weight: u64,
    pub initial_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub k: usize,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// The cluster count the rest of the report is based on.
    pub k: usize,
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub format: String,
    pub weighting: String,
    pub include_anonymous: bool,
    pub k_mode: String,
    pub requested_k: Option<usize>,
    pub plateau_epsilon: f64,
    pub plateau_window: usize,
    pub weighted_modularity: bool,
    pub grade_scale_min: f64,
    pub grade_scale_max: f64,
    pub betweenness_tie_tolerance: f64,
}

/// The grade-to-color mapping used by the DOT export, spelled out in the
/// report so renders are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorRamp {
    pub cold: String,
    pub warm: String,
    pub ungraded: String,
    pub min_mean_grade: Option<f64>,
    pub max_mean_grade: Option<f64>,
    pub interpolation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub toolkit_version: String,
    pub config: ConfigEcho,
    pub inputs: InputDigests,
    pub graph: GraphStats,
    pub modularity_curve: Vec<CurvePoint>,
    pub selection: Selection,
    pub clusters: Vec<ClusterReport>,
    pub grade_association: KwStatus,
    pub color_ramp: ColorRamp,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub report: AnalysisReport,
    /// The graph the clustering ran on (after isolate removal); input for
    /// [`export_dot`].
    pub pruned_graph: InteractionGraph,
    pub partition: Partition,
}

const RAMP_COLD: &str = "#2c7bb6";
const RAMP_WARM: &str = "#d7191c";
const RAMP_UNGRADED: &str = "#999999";

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run the whole analysis. Every stage failure is tagged with the stage
/// name and classified as an input or analysis error.
pub fn run_pipeline(
    posts_path: &Path,
    roster_path: &Path,
    config: &AnalysisConfig,
) -> Result<PipelineOutput, PipelineError> {
    if !(config.plateau.epsilon.is_finite() && config.plateau.epsilon > 0.0) {
        return Err(PipelineError::new(
            Stage::Config,
            "plateau epsilon must be positive",
        ));
    }
    if config.plateau.window == 0 {
        return Err(PipelineError::new(
            Stage::Config,
            "plateau window must be at least 1",
        ));
    }
    if let KChoice::Fixed(0) = config.k {
        return Err(PipelineError::new(Stage::Config, "k must be at least 1"));
    }

    let posts_bytes = fs::read(posts_path).map_err(|e| {
        PipelineError::new(Stage::ReadPosts, format!("{}: {e}", posts_path.display()))
    })?;
    let roster_bytes = fs::read(roster_path).map_err(|e| {
        PipelineError::new(Stage::ReadRoster, format!("{}: {e}", roster_path.display()))
    })?;

    let log = parse_posts(posts_bytes.as_slice(), config.format)
        .map_err(|e| PipelineError::new(Stage::ParsePosts, e))?;
    let roster = parse_roster_with_scale(roster_bytes.as_slice(), config.grade_scale)
        .map_err(|e| PipelineError::new(Stage::ParseRoster, e))?;
    let threads =
        assemble_threads(&log).map_err(|e| PipelineError::new(Stage::AssembleThreads, e))?;
    let arcs = build_arcs(&threads, &roster, config.weighting, config.include_anonymous)
        .map_err(|e| PipelineError::new(Stage::BuildArcs, e))?;
    let full_graph = collapse_to_undirected(&arcs);
    let pruned_graph = remove_isolated(&full_graph);

    let dendrogram = girvan_newman_with(
        &pruned_graph,
        GnOptions {
            weighted_modularity: config.weighted_modularity,
        },
    );
    let curve = modularity_curve(&dendrogram)
        .map_err(|e| PipelineError::new(Stage::ModularityCurve, e))?;

    let (k, mode) = match config.k {
        KChoice::Auto => (
            natural_cluster_number(&curve, config.plateau),
            "auto".to_string(),
        ),
        KChoice::Fixed(k) => (k, "fixed".to_string()),
    };
    let partition =
        partition_at_k(&dendrogram, k).map_err(|e| PipelineError::new(Stage::Partition, e))?;

    let grade_report = cluster_grade_report(&partition, &roster)
        .map_err(|e| PipelineError::new(Stage::GradeReport, e))?;

    let means: Vec<f64> = grade_report
        .clusters
        .iter()
        .filter_map(|c| c.mean_grade)
        .collect();
    let min_mean = means.iter().copied().reduce(f64::min);
    let max_mean = means.iter().copied().reduce(f64::max);

    let report = AnalysisReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            format: match config.format {
                PostFormat::Csv => "csv".to_string(),
                PostFormat::Jsonl => "jsonl".to_string(),
            },
            weighting: config.weighting.as_str().to_string(),
            include_anonymous: config.include_anonymous,
            k_mode: mode.clone(),
            requested_k: match config.k {
                KChoice::Auto => None,
                KChoice::Fixed(k) => Some(k),
            },
            plateau_epsilon: config.plateau.epsilon,
            plateau_window: config.plateau.window,
            weighted_modularity: config.weighted_modularity,
            grade_scale_min: config.grade_scale.min,
            grade_scale_max: config.grade_scale.max,
            betweenness_tie_tolerance: BETWEENNESS_TIE_TOLERANCE,
        },
        inputs: InputDigests {
            posts: FileDigest {
                sha256: sha256_hex(&posts_bytes),
                bytes: posts_bytes.len(),
                records: log.len(),
            },
            roster: FileDigest {
                sha256: sha256_hex(&roster_bytes),
                bytes: roster_bytes.len(),
                records: roster.len(),
            },
        },
        graph: GraphStats {
            students_in_roster: roster.students().count(),
            threads: threads.thread_count(),
            vertices_before_pruning: full_graph.vertex_count(),
            vertices_after_pruning: pruned_graph.vertex_count(),
            isolated_removed: full_graph.vertex_count() - pruned_graph.vertex_count(),
            edges: pruned_graph.edge_count(),
            total_weight: pruned_graph.total_weight(),
            initial_components: dendrogram.initial_components,
        },
        modularity_curve: curve
            .points()
            .iter()
            .map(|(&k, &q)| CurvePoint { k, q })
            .collect(),
        selection: Selection { k, mode },
        clusters: grade_report.clusters,
        grade_association: grade_report.kw,
        color_ramp: ColorRamp {
            cold: RAMP_COLD.to_string(),
            warm: RAMP_WARM.to_string(),
            ungraded: RAMP_UNGRADED.to_string(),
            min_mean_grade: min_mean,
            max_mean_grade: max_mean,
            interpolation: "linear rgb over cluster mean grade".to_string(),
        },
    };

    Ok(PipelineOutput {
        report,
        pruned_graph,
        partition,
    })
}

/// Canonical report serialization: pretty JSON with sorted keys and a
/// trailing newline. Byte-stable for identical reports.
pub fn render_report_json(report: &AnalysisReport) -> String {
    let value = serde_json::to_value(report).expect("report serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    text
}

fn parse_hex_channel(color: &str, index: usize) -> f64 {
    u8::from_str_radix(&color[1 + 2 * index..3 + 2 * index], 16).expect("valid ramp color") as f64
}

fn ramp_color(mean: f64, min_mean: f64, max_mean: f64) -> String {
    let t = if max_mean > min_mean {
        (mean - min_mean) / (max_mean - min_mean)
    } else {
        0.5
    };
    let mut color = String::from("#");
    for channel in 0..3 {
        let cold = parse_hex_channel(RAMP_COLD, channel);
        let warm = parse_hex_channel(RAMP_WARM, channel);
        let value = (cold + (warm - cold) * t).round() as u8;
        color.push_str(&format!("{value:02x}"));
    }
    color
}

/// Figure-style community summary in DOT: one node per community with area
/// proportional to member count and fill color from the grade ramp, one
/// edge per community pair connected in the underlying graph, labeled with
/// the summed inter-community weight.
pub fn export_dot(
    graph: &InteractionGraph,
    partition: &Partition,
    clusters: &[ClusterReport],
) -> String {
    let means: Vec<f64> = clusters.iter().filter_map(|c| c.mean_grade).collect();
    let min_mean = means.iter().copied().reduce(f64::min).unwrap_or(0.0);
    let max_mean = means.iter().copied().reduce(f64::max).unwrap_or(0.0);

    let mut dot = String::from("graph communities {\n");
    dot.push_str("  node [shape=circle style=filled fixedsize=true fontsize=10];\n");
    for cluster in clusters {
        let mean_label = match cluster.mean_grade {
            Some(mean) => format!("{mean:.1}"),
            None => "n/a".to_string(),
        };
        let fill = match cluster.mean_grade {
            Some(mean) => ramp_color(mean, min_mean, max_mean),
            None => RAMP_UNGRADED.to_string(),
        };
        // Node area tracks member count, so diameter goes as sqrt(size).
        let diameter = (cluster.size as f64).sqrt() * 0.4;
        dot.push_str(&format!(
            "  c{} [label=\"c{}\\nn={}\\nmean={}\" width={:.3} height={:.3} fillcolor=\"{}\"];\n",
            cluster.cluster, cluster.cluster, cluster.size, mean_label, diameter, diameter, fill
        ));
    }

    let mut between: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (key, &weight) in graph.edges() {
        let (Some(cu), Some(cv)) = (
            partition.cluster_of(key.min_end()),
            partition.cluster_of(key.max_end()),
        ) else {
            continue;
        };
        if cu != cv {
            *between.entry((cu.min(cv), cu.max(cv))).or_insert(0) += weight;
        }
    }
    for ((cu, cv), weight) in between {
        dot.push_str(&format!("  c{cu} -- c{cv} [label=\"{weight}\"];\n"));
    }
    dot.push_str("}\n");
    dot
}
