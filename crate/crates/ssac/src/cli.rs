//! The `ssac` command-line surface: dataset generation, single queries,
//! routing lookups, and the benchmark harness.
//!
//! Options come from flags plus an optional JSON config file; flags win.
//! The full effective configuration and the tool version are embedded in
//! every output file, and result files are deterministic for a fixed seed:
//! wall-clock measurements go to a separate `.timings.json` sidecar so the
//! main outputs stay byte-identical across runs.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or parse, 3 validation,
//! 4 no community / no route, 5 cap exceeded.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataio::{self, DataError, LoadedBundle, SyntheticSpec};
use crate::essac::{self, EnumerationCaps, EssacError};
use crate::gssac::{self, SearchCaps, SearchError, SearchTrace, StopReason};
use crate::metrics::{self, MetricsReport};
use crate::model::{Query, QueryError, RoadNodeId, SocialNodeId};
use crate::objectives::{ObjectiveError, QueryContext};
use crate::routing::{td_shortest_time, HeuristicMode, RoutingError, WeightPolicy};
use crate::VERSION;

#[derive(Parser, Debug)]
#[command(
    name = "ssac",
    version,
    about = "Semantic-spatial aware k-core community search over road-social networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic planted-community bundle.
    Gen(GenArgs),
    /// Run one community search query against a bundle.
    Query(QueryArgs),
    /// Compute one time-dependent shortest travel time.
    Dist(DistArgs),
    /// Compare essac, gssac, and the random baseline over sampled queries.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Essac,
    Gssac,
    Baseline,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Essac => "essac",
            Algo::Gssac => "gssac",
            Algo::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeuristicArg {
    Paper,
    Admissible,
    None,
}

impl From<HeuristicArg> for HeuristicMode {
    fn from(h: HeuristicArg) -> Self {
        match h {
            HeuristicArg::Paper => HeuristicMode::Paper,
            HeuristicArg::Admissible => HeuristicMode::Admissible,
            HeuristicArg::None => HeuristicMode::None,
        }
    }
}

/// One failure, classified for the exit code.
#[derive(Debug)]
pub struct CliError {
    pub category: ErrorCategory,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    Usage,
    Io,
    Validation,
    NoCommunity,
    CapExceeded,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 1,
            ErrorCategory::Io => 2,
            ErrorCategory::Validation => 3,
            ErrorCategory::NoCommunity => 4,
            ErrorCategory::CapExceeded => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

fn err(category: ErrorCategory, message: impl std::fmt::Display) -> CliError {
    CliError {
        category,
        message: message.to_string(),
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        let category = match &e {
            DataError::Io { .. } => ErrorCategory::Io,
            DataError::Parse { .. } => ErrorCategory::Io,
            DataError::Validation(_)
            | DataError::ChecksumMismatch { .. }
            | DataError::CountMismatch { .. }
            | DataError::Semantics(_) => ErrorCategory::Validation,
            DataError::BadSpec(_) => ErrorCategory::Usage,
        };
        err(category, e)
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        let category = match &e {
            QueryError::UnknownQueryNode(_) | QueryError::UnknownLocation(_) => {
                ErrorCategory::Validation
            }
            _ => ErrorCategory::Usage,
        };
        err(category, e)
    }
}

impl From<ObjectiveError> for CliError {
    fn from(e: ObjectiveError) -> Self {
        let category = match &e {
            ObjectiveError::MemberUnreachable { .. } => ErrorCategory::NoCommunity,
            _ => ErrorCategory::Validation,
        };
        err(category, e)
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        let category = match &e {
            SearchError::NoCommunity { .. } => ErrorCategory::NoCommunity,
            SearchError::InitialCapExceeded { .. } => ErrorCategory::CapExceeded,
            SearchError::Objective(ObjectiveError::MemberUnreachable { .. }) => {
                ErrorCategory::NoCommunity
            }
            _ => ErrorCategory::Validation,
        };
        err(category, e)
    }
}

impl From<EssacError> for CliError {
    fn from(e: EssacError) -> Self {
        let category = match &e {
            EssacError::NoCommunity => ErrorCategory::NoCommunity,
            EssacError::CandidateCapExceeded { .. } => ErrorCategory::CapExceeded,
            EssacError::Objective(ObjectiveError::MemberUnreachable { .. }) => {
                ErrorCategory::NoCommunity
            }
            _ => ErrorCategory::Validation,
        };
        err(category, e)
    }
}

impl From<RoutingError> for CliError {
    fn from(e: RoutingError) -> Self {
        let category = match &e {
            RoutingError::NoRoute { .. } => ErrorCategory::NoCommunity,
            RoutingError::NotFound(_) => ErrorCategory::Validation,
        };
        err(category, e)
    }
}

fn write_output(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| err(ErrorCategory::Io, e))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| err(ErrorCategory::Io, format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// gen

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Output directory for the bundle.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub communities: Option<usize>,
    #[arg(long)]
    pub size_min: Option<usize>,
    #[arg(long)]
    pub size_max: Option<usize>,
    #[arg(long)]
    pub p_intra: Option<f64>,
    #[arg(long)]
    pub p_inter: Option<f64>,
    /// Core order guaranteed inside every planted community.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub grid_width: Option<usize>,
    #[arg(long)]
    pub grid_height: Option<usize>,
    #[arg(long)]
    pub wave_base: Option<f64>,
    #[arg(long)]
    pub wave_amplitude: Option<f64>,
    #[arg(long)]
    pub wave_period: Option<f64>,
    #[arg(long)]
    pub keyword_clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct GenFileConfig {
    #[serde(flatten)]
    spec: PartialSpec,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct PartialSpec {
    communities: Option<usize>,
    size_min: Option<usize>,
    size_max: Option<usize>,
    p_intra: Option<f64>,
    p_inter: Option<f64>,
    k: Option<u32>,
    grid_width: Option<usize>,
    grid_height: Option<usize>,
    wave_base: Option<f64>,
    wave_amplitude: Option<f64>,
    wave_period: Option<f64>,
    keyword_clusters: Option<usize>,
    seed: Option<u64>,
}

fn load_config<T: for<'a> Deserialize<'a> + Default>(
    path: &Option<PathBuf>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| err(ErrorCategory::Io, format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| err(ErrorCategory::Usage, format!("{}: {e}", p.display())))
        }
    }
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let file: GenFileConfig = load_config(&args.config)?;
    let d = SyntheticSpec::default();
    let f = file.spec;
    let spec = SyntheticSpec {
        communities: args.communities.or(f.communities).unwrap_or(d.communities),
        size_min: args.size_min.or(f.size_min).unwrap_or(d.size_min),
        size_max: args.size_max.or(f.size_max).unwrap_or(d.size_max),
        p_intra: args.p_intra.or(f.p_intra).unwrap_or(d.p_intra),
        p_inter: args.p_inter.or(f.p_inter).unwrap_or(d.p_inter),
        k: args.k.or(f.k).unwrap_or(d.k),
        grid_width: args.grid_width.or(f.grid_width).unwrap_or(d.grid_width),
        grid_height: args.grid_height.or(f.grid_height).unwrap_or(d.grid_height),
        wave_base: args.wave_base.or(f.wave_base).unwrap_or(d.wave_base),
        wave_amplitude: args
            .wave_amplitude
            .or(f.wave_amplitude)
            .unwrap_or(d.wave_amplitude),
        wave_period: args.wave_period.or(f.wave_period).unwrap_or(d.wave_period),
        keyword_clusters: args
            .keyword_clusters
            .or(f.keyword_clusters)
            .unwrap_or(d.keyword_clusters),
        seed: args.seed.or(f.seed).unwrap_or(d.seed),
    };
    let manifest = dataio::generate_synthetic(&spec, &args.out)?;
    println!(
        "bundle written to {}: {} road nodes, {} road edges, {} social nodes, {} social edges, seed {}",
        args.out.display(),
        manifest.counts.road_nodes,
        manifest.counts.road_edges,
        manifest.counts.social_nodes,
        manifest.counts.social_edges,
        manifest.seed,
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// shared query options

#[derive(Debug, Clone, Default, Deserialize)]
struct QueryFileConfig {
    bundle: Option<PathBuf>,
    algo: Option<Algo>,
    q: Option<u64>,
    k: Option<u32>,
    kw: Option<Vec<String>>,
    lq: Option<u64>,
    t: Option<f64>,
    heuristic: Option<String>,
    fixed_departure_weights: Option<bool>,
    seed: Option<u64>,
    max_candidates: Option<usize>,
    max_size: Option<usize>,
    init_cap: Option<usize>,
    round_cap: Option<usize>,
    baseline_size: Option<usize>,
    #[cfg(feature = "remote")]
    remote: Option<crate::semantics::remote::PromptPipelineConfig>,
}

fn parse_heuristic(s: &str) -> Result<HeuristicMode, CliError> {
    match s {
        "paper" => Ok(HeuristicMode::Paper),
        "admissible" => Ok(HeuristicMode::Admissible),
        "none" => Ok(HeuristicMode::None),
        other => Err(err(
            ErrorCategory::Usage,
            format!("unknown heuristic {other:?}; expected paper, admissible, or none"),
        )),
    }
}

/// Effective query configuration, echoed into the output file.
#[derive(Debug, Clone, Serialize)]
pub struct QueryConfig {
    pub bundle: PathBuf,
    pub algo: Algo,
    pub q: u64,
    pub k: u32,
    pub kw: Vec<String>,
    pub lq: u64,
    pub t: f64,
    pub heuristic: HeuristicMode,
    pub fixed_departure_weights: bool,
    pub seed: u64,
    pub max_candidates: usize,
    pub max_size: Option<usize>,
    pub init_cap: usize,
    pub round_cap: usize,
    pub baseline_size: Option<usize>,
    pub remote_embed: bool,
}

impl QueryConfig {
    pub fn weight_policy(&self) -> WeightPolicy {
        if self.fixed_departure_weights {
            WeightPolicy::FixedDeparture
        } else {
            WeightPolicy::ArrivalTime
        }
    }

    pub fn enumeration_caps(&self) -> EnumerationCaps {
        EnumerationCaps {
            max_candidates: self.max_candidates,
            max_size: self.max_size,
        }
    }

    pub fn search_caps(&self) -> SearchCaps {
        SearchCaps {
            initial_additions: self.init_cap,
            expansion_rounds: self.round_cap,
        }
    }
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// Bundle directory.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    /// Query node id.
    #[arg(long)]
    pub q: Option<u64>,
    /// Core order k.
    #[arg(long)]
    pub k: Option<u32>,
    /// Query keywords (repeatable).
    #[arg(long, num_args = 1..)]
    pub kw: Option<Vec<String>>,
    /// Query location: road node id.
    #[arg(long)]
    pub lq: Option<u64>,
    /// Departure time in minutes.
    #[arg(long)]
    pub t: Option<f64>,
    /// Routing heuristic: paper, admissible, or none.
    #[arg(long)]
    pub heuristic: Option<String>,
    /// Evaluate edge weights at the departure time instead of arrival times.
    #[arg(long)]
    pub fixed_departure_weights: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enumeration candidate cap (essac).
    #[arg(long)]
    pub max_candidates: Option<usize>,
    /// Community size cap (essac enumeration).
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Initial-construction addition cap (gssac).
    #[arg(long)]
    pub init_cap: Option<usize>,
    /// Expansion round cap (gssac).
    #[arg(long)]
    pub round_cap: Option<usize>,
    /// Community size for the random baseline (defaults to k+1).
    #[arg(long)]
    pub baseline_size: Option<usize>,
    /// Result file path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the search trace (gssac) to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Process and embed the query keywords through the remote pipeline.
    #[arg(long)]
    pub remote_embed: bool,
    /// JSON config file; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Everything a query result file contains besides the config echo.
#[derive(Debug, Clone, Serialize)]
pub struct QueryResult {
    pub algo: Algo,
    pub members: Vec<u64>,
    pub k_value: f64,
    pub t_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub md: Option<f64>,
    pub metrics: MetricsReport,
    pub nodes_touched: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
struct QueryResultFile {
    version: String,
    config: QueryConfig,
    result: QueryResult,
}

#[derive(Debug, Clone, Serialize)]
struct TraceFile {
    version: String,
    config: QueryConfig,
    trace: SearchTrace,
}

fn merge_query_config(args: &QueryArgs) -> Result<QueryConfig, CliError> {
    let file: QueryFileConfig = load_config(&args.config)?;
    let require = |what: &str, flag: Option<u64>, cfg: Option<u64>| {
        flag.or(cfg)
            .ok_or_else(|| err(ErrorCategory::Usage, format!("missing required option --{what}")))
    };
    let bundle = args
        .bundle
        .clone()
        .or(file.bundle)
        .ok_or_else(|| err(ErrorCategory::Usage, "missing required option --bundle"))?;
    let heuristic = match args.heuristic.clone().or(file.heuristic) {
        Some(s) => parse_heuristic(&s)?,
        None => HeuristicMode::Admissible,
    };
    Ok(QueryConfig {
        bundle,
        algo: args.algo.or(file.algo).unwrap_or(Algo::Gssac),
        q: require("q", args.q, file.q)?,
        k: args
            .k
            .or(file.k)
            .ok_or_else(|| err(ErrorCategory::Usage, "missing required option --k"))?,
        kw: args
            .kw
            .clone()
            .or(file.kw)
            .unwrap_or_default(),
        lq: require("lq", args.lq, file.lq)?,
        t: args.t.or(file.t).unwrap_or(0.0),
        heuristic,
        fixed_departure_weights: args.fixed_departure_weights
            || file.fixed_departure_weights.unwrap_or(false),
        seed: args.seed.or(file.seed).unwrap_or(0),
        max_candidates: args
            .max_candidates
            .or(file.max_candidates)
            .unwrap_or(EnumerationCaps::default().max_candidates),
        max_size: args.max_size.or(file.max_size),
        init_cap: args
            .init_cap
            .or(file.init_cap)
            .unwrap_or(SearchCaps::default().initial_additions),
        round_cap: args
            .round_cap
            .or(file.round_cap)
            .unwrap_or(SearchCaps::default().expansion_rounds),
        baseline_size: args.baseline_size.or(file.baseline_size),
        remote_embed: args.remote_embed,
    })
}

#[cfg(feature = "remote")]
fn remote_process_and_embed(
    bundle: &mut LoadedBundle,
    file_remote: Option<crate::semantics::remote::PromptPipelineConfig>,
    keywords: &BTreeSet<String>,
) -> Result<BTreeSet<String>, CliError> {
    use crate::semantics::remote;

    let cfg = file_remote.ok_or_else(|| {
        err(
            ErrorCategory::Usage,
            "--remote-embed needs a `remote` section in the config file \
             (endpoint, chat_model, embed_model)",
        )
    })?;
    cfg.validate()
        .map_err(|e| err(ErrorCategory::Usage, e))?;

    let processed = remote::process_keywords_remote(&cfg, keywords);
    for w in &processed.warnings {
        eprintln!("warning: {w}");
    }
    let fetched = remote::embed_remote(&cfg, &processed.keywords, Some(bundle.store.dimension()))
        .map_err(|e| err(ErrorCategory::Io, e))?;

    let mut entries = Vec::new();
    for (kw, vec) in &fetched.keyword_vectors {
        bundle
            .store
            .insert_keyword(kw, crate::semantics::EmbeddingVector(vec.clone()))
            .map_err(|e| err(ErrorCategory::Validation, e))?;
        entries.push(dataio::VectorEntry::Keyword(kw.clone(), vec.clone()));
    }
    bundle
        .store
        .insert_set(
            fetched.set_key.clone(),
            crate::semantics::EmbeddingVector(fetched.set_vector.clone()),
        )
        .map_err(|e| err(ErrorCategory::Validation, e))?;
    entries.push(dataio::VectorEntry::Set(
        fetched.set_key.clone(),
        fetched.set_vector.clone(),
    ));

    // Persist only for file-backed bundles; hash-backed stores already
    // resolve every keyword deterministically without the file.
    if bundle.store.hash_seed().is_none() {
        dataio::append_vectors(&bundle.dir, &entries)?;
    } else {
        eprintln!(
            "note: bundle uses the hash embedding provider; fetched vectors \
             are used for this run but not persisted"
        );
    }
    Ok(processed.keywords)
}

pub fn cmd_query(args: &QueryArgs) -> Result<(), CliError> {
    let config = merge_query_config(args)?;
    if config.kw.is_empty() {
        return Err(err(ErrorCategory::Usage, "missing required option --kw"));
    }
    #[cfg_attr(not(feature = "remote"), allow(unused_mut))]
    let mut bundle = dataio::load_bundle(&config.bundle)?;

    #[cfg_attr(not(feature = "remote"), allow(unused_mut))]
    let mut keywords: BTreeSet<String> = config.kw.iter().cloned().collect();
    if config.remote_embed {
        #[cfg(feature = "remote")]
        {
            let file: QueryFileConfig = load_config(&args.config)?;
            keywords = remote_process_and_embed(&mut bundle, file.remote, &keywords)?;
        }
        #[cfg(not(feature = "remote"))]
        {
            return Err(err(
                ErrorCategory::Usage,
                "this build does not include remote support (feature `remote`)",
            ));
        }
    }

    let query = Query::new(
        &bundle.net,
        SocialNodeId(config.q),
        config.k,
        keywords,
        RoadNodeId(config.lq),
        config.t,
    )?;

    let started = Instant::now();
    let (result, trace) = run_query(&bundle, &query, &config)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

    eprintln!(
        "{}: {} members, K = {:.4}, T = {:.4}, {:.1} ms",
        config.algo.as_str(),
        result.members.len(),
        result.k_value,
        result.t_value,
        elapsed_ms
    );
    println!(
        "members: {}",
        result
            .members
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );

    if let Some(out) = &args.out {
        write_output(
            out,
            &QueryResultFile {
                version: VERSION.to_string(),
                config: config.clone(),
                result: result.clone(),
            },
        )?;
    }
    if let Some(path) = &args.trace {
        match trace {
            Some(trace) => write_output(
                path,
                &TraceFile {
                    version: VERSION.to_string(),
                    config: config.clone(),
                    trace,
                },
            )?,
            None => eprintln!("note: --trace applies to --algo gssac only; no trace written"),
        }
    }
    Ok(())
}

/// Run one query with the configured algorithm. Returns the result row and,
/// for the greedy search, its trace.
pub fn run_query(
    bundle: &LoadedBundle,
    query: &Query,
    config: &QueryConfig,
) -> Result<(QueryResult, Option<SearchTrace>), CliError> {
    let mode = config.heuristic;
    let policy = config.weight_policy();
    let ctx = QueryContext::new(&bundle.net, &bundle.store, query, mode, policy)?;

    let (members, k_value, t_value, md, nodes_touched, stop_reason, candidates, trace) =
        match config.algo {
            Algo::Gssac => {
                let out = gssac::gssac(
                    &bundle.net,
                    &bundle.store,
                    query,
                    config.search_caps(),
                    mode,
                    policy,
                )?;
                (
                    out.community.members,
                    out.community.k_value,
                    out.community.t_value,
                    out.community.md,
                    out.trace.nodes_touched,
                    Some(out.trace.stop),
                    None,
                    Some(out.trace),
                )
            }
            Algo::Essac => {
                let out = essac::essac(
                    &bundle.net,
                    &bundle.store,
                    query,
                    config.enumeration_caps(),
                    mode,
                    policy,
                )?;
                (
                    out.community.members,
                    out.community.k_value,
                    out.community.t_value,
                    out.community.md,
                    out.nodes_touched,
                    None,
                    Some(out.candidates),
                    None,
                )
            }
            Algo::Baseline => {
                let size = config.baseline_size.unwrap_or(config.k as usize + 1);
                let members = metrics::random_growth_baseline(
                    &bundle.net,
                    query.q,
                    size,
                    config.seed,
                )
                .map_err(|e| err(ErrorCategory::Validation, e))?;
                let pair = ctx.pair(&members)?;
                (
                    members,
                    pair.k_value,
                    pair.t_value,
                    None,
                    ctx.touched_count(),
                    None,
                    None,
                    None,
                )
            }
        };

    let report = metrics::report(
        &bundle.net,
        &bundle.store,
        &ctx.dist,
        &members,
        &query.keywords,
    )?;

    Ok((
        QueryResult {
            algo: config.algo,
            members: members.iter().map(|m| m.0).collect(),
            k_value,
            t_value,
            md,
            metrics: report,
            nodes_touched,
            stop_reason,
            candidates,
        },
        trace,
    ))
}

// ---------------------------------------------------------------------------
// dist

#[derive(Args, Debug)]
pub struct DistArgs {
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Source road node id.
    #[arg(long)]
    pub src: Option<u64>,
    /// Destination road node id.
    #[arg(long)]
    pub dst: Option<u64>,
    /// Departure time in minutes.
    #[arg(long)]
    pub t: Option<f64>,
    /// Routing heuristic: paper, admissible, or none.
    #[arg(long)]
    pub heuristic: Option<String>,
    #[arg(long)]
    pub fixed_departure_weights: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct DistFileConfig {
    bundle: Option<PathBuf>,
    src: Option<u64>,
    dst: Option<u64>,
    t: Option<f64>,
    heuristic: Option<String>,
    fixed_departure_weights: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistConfig {
    pub bundle: PathBuf,
    pub src: u64,
    pub dst: u64,
    pub t: f64,
    pub heuristic: HeuristicMode,
    pub fixed_departure_weights: bool,
}

#[derive(Debug, Clone, Serialize)]
struct DistResultFile {
    version: String,
    config: DistConfig,
    travel_time: f64,
    path: Vec<u64>,
    expanded: usize,
}

pub fn cmd_dist(args: &DistArgs) -> Result<(), CliError> {
    let file: DistFileConfig = load_config(&args.config)?;
    let config = DistConfig {
        bundle: args
            .bundle
            .clone()
            .or(file.bundle)
            .ok_or_else(|| err(ErrorCategory::Usage, "missing required option --bundle"))?,
        src: args
            .src
            .or(file.src)
            .ok_or_else(|| err(ErrorCategory::Usage, "missing required option --src"))?,
        dst: args
            .dst
            .or(file.dst)
            .ok_or_else(|| err(ErrorCategory::Usage, "missing required option --dst"))?,
        t: args.t.or(file.t).unwrap_or(0.0),
        heuristic: match args.heuristic.clone().or(file.heuristic) {
            Some(s) => parse_heuristic(&s)?,
            None => HeuristicMode::Admissible,
        },
        fixed_departure_weights: args.fixed_departure_weights
            || file.fixed_departure_weights.unwrap_or(false),
    };
    let bundle = dataio::load_bundle(&config.bundle)?;
    let policy = if config.fixed_departure_weights {
        WeightPolicy::FixedDeparture
    } else {
        WeightPolicy::ArrivalTime
    };
    let route = td_shortest_time(
        &bundle.net.road,
        RoadNodeId(config.src),
        RoadNodeId(config.dst),
        config.t,
        config.heuristic,
        policy,
    )?;
    println!("{}", route.travel_time);
    eprintln!(
        "path: {}",
        route
            .path
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    if let Some(out) = &args.out {
        write_output(
            out,
            &DistResultFile {
                version: VERSION.to_string(),
                config: config.clone(),
                travel_time: route.travel_time,
                path: route.path.iter().map(|n| n.0).collect(),
                expanded: route.expanded,
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Number of query nodes to sample.
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Departure time for every query.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for independent queries.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Routing heuristic: paper, admissible, or none.
    #[arg(long)]
    pub heuristic: Option<String>,
    #[arg(long)]
    pub fixed_departure_weights: bool,
    #[arg(long)]
    pub max_candidates: Option<usize>,
    #[arg(long)]
    pub max_size: Option<usize>,
    #[arg(long)]
    pub init_cap: Option<usize>,
    #[arg(long)]
    pub round_cap: Option<usize>,
    /// Result file path (timings go to a `.timings.json` sidecar).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct BenchFileConfig {
    bundle: Option<PathBuf>,
    queries: Option<usize>,
    k: Option<u32>,
    t: Option<f64>,
    seed: Option<u64>,
    jobs: Option<usize>,
    heuristic: Option<String>,
    fixed_departure_weights: Option<bool>,
    max_candidates: Option<usize>,
    max_size: Option<usize>,
    init_cap: Option<usize>,
    round_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchConfig {
    pub bundle: PathBuf,
    pub queries: usize,
    pub k: u32,
    pub t: f64,
    pub seed: u64,
    pub jobs: usize,
    pub heuristic: HeuristicMode,
    pub fixed_departure_weights: bool,
    pub max_candidates: usize,
    pub max_size: Option<usize>,
    pub init_cap: usize,
    pub round_cap: usize,
}

/// One (query, algorithm) outcome. Deterministic fields only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub q: u64,
    pub algo: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coe: Option<f64>,
    /// `None` inside `Some` means infinite (all members at the target).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_coe: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semantic_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes_touched: Option<usize>,
}

/// Per-algorithm means over the successful queries.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BenchMeans {
    pub queries_ok: usize,
    pub mean_size: f64,
    /// Average local clustering coefficient.
    pub mean_coe: f64,
    /// Mean over finite values; infinite occurrences counted separately.
    pub mean_t_coe: f64,
    pub t_coe_infinite: usize,
    pub mean_semantic_score: f64,
    pub mean_nodes_touched: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResultFile {
    pub version: String,
    pub config: serde_json::Value,
    pub rows: Vec<BenchRow>,
    pub means: BTreeMap<String, BenchMeans>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRow {
    pub q: u64,
    pub algo: String,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingsFile {
    pub version: String,
    pub rows: Vec<TimingRow>,
    pub mean_runtime_ms: BTreeMap<String, f64>,
}

fn merge_bench_config(args: &BenchArgs) -> Result<BenchConfig, CliError> {
    let file: BenchFileConfig = load_config(&args.config)?;
    Ok(BenchConfig {
        bundle: args
            .bundle
            .clone()
            .or(file.bundle)
            .ok_or_else(|| err(ErrorCategory::Usage, "missing required option --bundle"))?,
        queries: args.queries.or(file.queries).unwrap_or(100),
        k: args.k.or(file.k).unwrap_or(3),
        t: args.t.or(file.t).unwrap_or(0.0),
        seed: args.seed.or(file.seed).unwrap_or(0),
        jobs: args.jobs.or(file.jobs).unwrap_or(1).max(1),
        heuristic: match args.heuristic.clone().or(file.heuristic) {
            Some(s) => parse_heuristic(&s)?,
            None => HeuristicMode::Admissible,
        },
        fixed_departure_weights: args.fixed_departure_weights
            || file.fixed_departure_weights.unwrap_or(false),
        max_candidates: args
            .max_candidates
            .or(file.max_candidates)
            .unwrap_or(EnumerationCaps::default().max_candidates),
        max_size: args.max_size.or(file.max_size),
        init_cap: args
            .init_cap
            .or(file.init_cap)
            .unwrap_or(SearchCaps::default().initial_additions),
        round_cap: args
            .round_cap
            .or(file.round_cap)
            .unwrap_or(SearchCaps::default().expansion_rounds),
    })
}

fn mix_seed(seed: u64, q: u64) -> u64 {
    seed ^ q.wrapping_mul(0x9E3779B97F4A7C15)
}

/// Run the three algorithms over a seeded sample of query nodes. Queries
/// use each node's own keywords and location; the baseline community size
/// is matched to the greedy result for that query. Failures are recorded
/// per row and the harness continues.
pub fn run_bench(bundle: &LoadedBundle, config: &BenchConfig) -> (BenchResultFile, TimingsFile) {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Queries take their keywords and location from the node itself, so
    // only keyword-bearing nodes are eligible.
    let all: Vec<SocialNodeId> = bundle
        .net
        .social
        .nodes()
        .filter(|n| !n.keywords.is_empty())
        .map(|n| n.id)
        .collect();
    let mut sample: Vec<SocialNodeId> = Vec::new();
    let mut seen = BTreeSet::new();
    let want = config.queries.min(all.len());
    while sample.len() < want {
        let pick = all[rng.random_range(0..all.len())];
        if seen.insert(pick) {
            sample.push(pick);
        }
    }
    sample.sort_unstable();

    let rows = Mutex::new(Vec::<BenchRow>::new());
    let timings = Mutex::new(Vec::<TimingRow>::new());
    let next = std::sync::atomic::AtomicUsize::new(0);

    let worker = || {
        loop {
            let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            if i >= sample.len() {
                break;
            }
            let q = sample[i];
            let (mut new_rows, mut new_timings) = bench_one(bundle, config, q);
            rows.lock().unwrap().append(&mut new_rows);
            timings.lock().unwrap().append(&mut new_timings);
        }
    };
    std::thread::scope(|scope| {
        for _ in 0..config.jobs.min(sample.len().max(1)) {
            scope.spawn(worker);
        }
    });

    let mut rows = rows.into_inner().unwrap();
    rows.sort_by(|a, b| (a.q, &a.algo).cmp(&(b.q, &b.algo)));
    let mut timing_rows = timings.into_inner().unwrap();
    timing_rows.sort_by(|a, b| (a.q, &a.algo).cmp(&(b.q, &b.algo)));

    let mut means: BTreeMap<String, BenchMeans> = BTreeMap::new();
    for algo in ["baseline", "essac", "gssac"] {
        let ok_rows: Vec<&BenchRow> = rows.iter().filter(|r| r.algo == algo && r.ok).collect();
        let n = ok_rows.len();
        let mean = |f: &dyn Fn(&BenchRow) -> f64| {
            if n == 0 {
                0.0
            } else {
                ok_rows.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        let finite_t: Vec<f64> = ok_rows.iter().filter_map(|r| r.t_coe.flatten()).collect();
        means.insert(
            algo.to_string(),
            BenchMeans {
                queries_ok: n,
                mean_size: mean(&|r| r.size.unwrap_or(0) as f64),
                mean_coe: mean(&|r| r.coe.unwrap_or(0.0)),
                mean_t_coe: if finite_t.is_empty() {
                    0.0
                } else {
                    finite_t.iter().sum::<f64>() / finite_t.len() as f64
                },
                t_coe_infinite: ok_rows
                    .iter()
                    .filter(|r| matches!(r.t_coe, Some(None)))
                    .count(),
                mean_semantic_score: mean(&|r| r.semantic_score.unwrap_or(0.0)),
                mean_nodes_touched: mean(&|r| r.nodes_touched.unwrap_or(0) as f64),
            },
        );
    }

    let mut mean_runtime: BTreeMap<String, f64> = BTreeMap::new();
    for algo in ["baseline", "essac", "gssac"] {
        let times: Vec<f64> = timing_rows
            .iter()
            .filter(|t| t.algo == algo)
            .map(|t| t.runtime_ms)
            .collect();
        if !times.is_empty() {
            mean_runtime.insert(
                algo.to_string(),
                times.iter().sum::<f64>() / times.len() as f64,
            );
        }
    }

    (
        BenchResultFile {
            version: VERSION.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            rows,
            means,
        },
        TimingsFile {
            version: VERSION.to_string(),
            rows: timing_rows,
            mean_runtime_ms: mean_runtime,
        },
    )
}

fn bench_one(
    bundle: &LoadedBundle,
    config: &BenchConfig,
    q: SocialNodeId,
) -> (Vec<BenchRow>, Vec<TimingRow>) {
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let fail = |algo: &str, e: String| BenchRow {
        q: q.0,
        algo: algo.to_string(),
        ok: false,
        error: Some(e),
        size: None,
        coe: None,
        t_coe: None,
        semantic_score: None,
        nodes_touched: None,
    };

    let node = bundle.net.social.node(q).expect("sampled node exists");
    let keywords = node.keywords.clone();
    let location = node.location;
    let query = match Query::new(&bundle.net, q, config.k, keywords, location, config.t) {
        Ok(qy) => qy,
        Err(e) => {
            for algo in ["baseline", "essac", "gssac"] {
                rows.push(fail(algo, e.to_string()));
            }
            return (rows, timings);
        }
    };

    let base_cfg = QueryConfig {
        bundle: config.bundle.clone(),
        algo: Algo::Gssac,
        q: q.0,
        k: config.k,
        kw: query.keywords.iter().cloned().collect(),
        lq: location.0,
        t: config.t,
        heuristic: config.heuristic,
        fixed_departure_weights: config.fixed_departure_weights,
        seed: mix_seed(config.seed, q.0),
        max_candidates: config.max_candidates,
        max_size: config.max_size,
        init_cap: config.init_cap,
        round_cap: config.round_cap,
        baseline_size: None,
        remote_embed: false,
    };

    let mut run = |algo: Algo, baseline_size: Option<usize>| -> Option<usize> {
        let cfg = QueryConfig {
            algo,
            baseline_size,
            ..base_cfg.clone()
        };
        let started = Instant::now();
        let outcome = run_query(bundle, &query, &cfg);
        let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
        timings.push(TimingRow {
            q: q.0,
            algo: algo.as_str().to_string(),
            runtime_ms,
        });
        match outcome {
            Ok((result, _)) => {
                let size = result.members.len();
                rows.push(BenchRow {
                    q: q.0,
                    algo: algo.as_str().to_string(),
                    ok: true,
                    error: None,
                    size: Some(size),
                    coe: Some(result.metrics.coe),
                    t_coe: Some(result.metrics.t_coe),
                    semantic_score: Some(result.metrics.semantic_score),
                    nodes_touched: Some(result.nodes_touched),
                });
                Some(size)
            }
            Err(e) => {
                rows.push(fail(algo.as_str(), e.to_string()));
                None
            }
        }
    };

    let gssac_size = run(Algo::Gssac, None);
    run(Algo::Essac, None);
    // Baseline sizes are matched to the greedy community.
    match gssac_size {
        Some(size) => {
            run(Algo::Baseline, Some(size));
        }
        None => rows.push(fail("baseline", "no matched size: gssac failed".into())),
    }

    (rows, timings)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let config = merge_bench_config(args)?;
    let bundle = dataio::load_bundle(&config.bundle)?;
    let (result, timings) = run_bench(&bundle, &config);

    println!(
        "{:<9} {:>4} {:>7} {:>7} {:>9} {:>9} {:>10} {:>12}",
        "algo", "ok", "size", "coe", "t_coe", "semantic", "runtime_ms", "touched"
    );
    for (algo, m) in &result.means {
        let rt = timings.mean_runtime_ms.get(algo).copied().unwrap_or(0.0);
        println!(
            "{:<9} {:>4} {:>7.2} {:>7.4} {:>9.4} {:>9.4} {:>10.2} {:>12.1}",
            algo,
            m.queries_ok,
            m.mean_size,
            m.mean_coe,
            m.mean_t_coe,
            m.mean_semantic_score,
            rt,
            m.mean_nodes_touched
        );
    }

    if let Some(out) = &args.out {
        write_output(out, &result)?;
        let sidecar = out.with_extension("timings.json");
        write_output(&sidecar, &timings)?;
        eprintln!(
            "results: {} (timings: {})",
            out.display(),
            sidecar.display()
        );
    }
    Ok(())
}

/// Entry point used by the binary.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Query(args) => cmd_query(args),
        Command::Dist(args) => cmd_dist(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.category.exit_code()
        }
    }
}
