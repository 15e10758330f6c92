//! Command-line front-end: `analyze` (full pipeline), `synth` (fixture
//! generation), `graph` (stop after the edge-list dump).
//!
//! Exit codes: 0 success, 2 input error, 3 analysis error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use replynet::{
    assemble_threads, build_arcs, collapse_to_undirected, export_dot, generate_cohort,
    parse_posts, parse_roster, render_report_json, run_pipeline, write_edge_list,
    write_posts_csv, write_roster_csv, AnalysisConfig, ErrorKind, KChoice, PipelineError,
    PlateauParams, PostFormat, SynthConfig, WeightingMode,
};

#[derive(Parser)]
#[command(
    name = "replynet",
    version,
    about = "Reconstructs student interaction graphs from forum logs, clusters them, and tests the grade association"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and emit a canonical JSON report.
    Analyze(AnalyzeArgs),
    /// Generate a deterministic synthetic cohort.
    Synth(SynthArgs),
    /// Build the interaction graph and stop after the edge-list dump.
    Graph(GraphArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for PostFormat {
    fn from(arg: FormatArg) -> PostFormat {
        match arg {
            FormatArg::Csv => PostFormat::Csv,
            FormatArg::Jsonl => PostFormat::Jsonl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    PerThread,
    PerPost,
}

impl From<WeightingArg> for WeightingMode {
    fn from(arg: WeightingArg) -> WeightingMode {
        match arg {
            WeightingArg::PerThread => WeightingMode::PerThread,
            WeightingArg::PerPost => WeightingMode::PerPost,
        }
    }
}

fn parse_k(value: &str) -> Result<KChoice, String> {
    if value == "auto" {
        return Ok(KChoice::Auto);
    }
    let k: usize = value
        .parse()
        .map_err(|_| format!("expected `auto` or a positive integer, got `{value}`"))?;
    if k == 0 {
        return Err("k must be at least 1".to_string());
    }
    Ok(KChoice::Fixed(k))
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Forum post log.
    #[arg(long)]
    posts: PathBuf,
    /// Course roster CSV.
    #[arg(long)]
    roster: PathBuf,
    /// Post log format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// How co-posting pairs accumulate weight.
    #[arg(long, value_enum, default_value_t = WeightingArg::PerThread)]
    weighting: WeightingArg,
    /// Keep the anonymous pseudo-user as a graph vertex.
    #[arg(long)]
    include_anonymous: bool,
    /// Cluster count: `auto` (modularity plateau) or a fixed number.
    #[arg(long, default_value = "auto", value_parser = parse_k)]
    k: KChoice,
    /// Modularity gain below this counts as "stopped growing".
    #[arg(long, default_value_t = 0.01)]
    plateau_epsilon: f64,
    /// How many upcoming curve points the plateau rule inspects.
    #[arg(long, default_value_t = 3)]
    plateau_window: usize,
    /// Honor edge weights in modularity.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    weighted_modularity: bool,
    /// Output directory; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a DOT community summary (requires --out).
    #[arg(long, requires = "out")]
    dot: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Cohort configuration (JSON with the SynthConfig schema).
    #[arg(long)]
    config: PathBuf,
    /// Override the config file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for posts.csv and roster.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphArgs {
    /// Forum post log.
    #[arg(long)]
    posts: PathBuf,
    /// Course roster CSV.
    #[arg(long)]
    roster: PathBuf,
    /// Output file for the canonical `u,v,weight` edge list.
    #[arg(long)]
    out: PathBuf,
    /// Post log format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// How co-posting pairs accumulate weight.
    #[arg(long, value_enum, default_value_t = WeightingArg::PerThread)]
    weighting: WeightingArg,
    /// Keep the anonymous pseudo-user as a graph vertex.
    #[arg(long)]
    include_anonymous: bool,
}

enum CliError {
    Input(String),
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(msg) | CliError::Analysis(msg) => msg,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> CliError {
        match err.kind() {
            ErrorKind::Input => CliError::Input(err.to_string()),
            ErrorKind::Analysis => CliError::Analysis(err.to_string()),
        }
    }
}

fn input_err(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{context}: {err}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Synth(args) => synth(args),
        Command::Graph(args) => graph(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let config = AnalysisConfig {
        format: args.format.into(),
        weighting: args.weighting.into(),
        include_anonymous: args.include_anonymous,
        k: args.k,
        plateau: PlateauParams {
            epsilon: args.plateau_epsilon,
            window: args.plateau_window,
        },
        weighted_modularity: args.weighted_modularity,
        ..AnalysisConfig::default()
    };
    let output = run_pipeline(&args.posts, &args.roster, &config)?;
    let report_json = render_report_json(&output.report);

    match &args.out {
        None => print!("{report_json}"),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| input_err(&dir.display().to_string(), e))?;
            let report_path = dir.join("report.json");
            fs::write(&report_path, &report_json)
                .map_err(|e| input_err(&report_path.display().to_string(), e))?;
            if args.dot {
                let dot = export_dot(
                    &output.pruned_graph,
                    &output.partition,
                    &output.report.clusters,
                );
                let dot_path = dir.join("communities.dot");
                fs::write(&dot_path, dot)
                    .map_err(|e| input_err(&dot_path.display().to_string(), e))?;
            }
            // Volatile run metadata lives in a sidecar so the report itself
            // stays byte-stable.
            let sidecar = serde_json::json!({
                "posts": args.posts.display().to_string(),
                "roster": args.roster.display().to_string(),
                "duration_ms": started.elapsed().as_millis() as u64,
                "unix_time": SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            });
            let sidecar_path = dir.join("run.json");
            fs::write(&sidecar_path, format!("{sidecar:#}\n"))
                .map_err(|e| input_err(&sidecar_path.display().to_string(), e))?;
            eprintln!("wrote {}", report_path.display());
        }
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let raw = fs::read_to_string(&args.config)
        .map_err(|e| input_err(&args.config.display().to_string(), e))?;
    let mut config: SynthConfig = serde_json::from_str(&raw)
        .map_err(|e| input_err(&args.config.display().to_string(), e))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (log, roster) =
        generate_cohort(&config).map_err(|e| CliError::Input(e.to_string()))?;

    fs::create_dir_all(&args.out)
        .map_err(|e| input_err(&args.out.display().to_string(), e))?;
    let posts_path = args.out.join("posts.csv");
    let roster_path = args.out.join("roster.csv");
    write_file(&posts_path, |sink| write_posts_csv(&log, sink))?;
    write_file(&roster_path, |sink| write_roster_csv(&roster, sink))?;
    eprintln!("wrote {} and {}", posts_path.display(), roster_path.display());
    Ok(())
}

fn write_file<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), replynet::IngestError>,
{
    let mut bytes = Vec::new();
    write(&mut bytes).map_err(|e| CliError::Input(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| input_err(&path.display().to_string(), e))
}

fn graph(args: GraphArgs) -> Result<(), CliError> {
    let posts_bytes = fs::read(&args.posts)
        .map_err(|e| input_err(&args.posts.display().to_string(), e))?;
    let roster_bytes = fs::read(&args.roster)
        .map_err(|e| input_err(&args.roster.display().to_string(), e))?;
    let log = parse_posts(posts_bytes.as_slice(), args.format.into())
        .map_err(|e| CliError::Input(e.to_string()))?;
    let roster =
        parse_roster(roster_bytes.as_slice()).map_err(|e| CliError::Input(e.to_string()))?;
    let threads = assemble_threads(&log).map_err(|e| CliError::Input(e.to_string()))?;
    let arcs = build_arcs(
        &threads,
        &roster,
        args.weighting.into(),
        args.include_anonymous,
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    let graph = collapse_to_undirected(&arcs);

    let mut bytes = Vec::new();
    write_edge_list(&graph, &mut bytes)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    fs::write(&args.out, bytes).map_err(|e| input_err(&args.out.display().to_string(), e))?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}
