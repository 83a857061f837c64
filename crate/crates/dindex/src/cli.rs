//! The `dindex` command.
//!
//! Exit codes: 0 success, 2 bad usage or unreadable input, 3 corrupt
//! snapshot, 4 nothing eligible to analyze, 5 results computed from a
//! different snapshot.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dindex_core::analysis::{
    distribution_summary, marginal_effect_team_size, ols_fit, overlap_empirical,
    reference_length_independence, regression_rows, sweep_row, AnalysisError, Cohort,
    OverlapStudySpec, RefLenConfig, RegressionSpec, SeKind,
};
use dindex_core::disruption::{D4Mode, PopularThreshold, SelfCitationRule};
use dindex_core::zipf::{finish_survey, survey_row, ZipfConfig};
use dindex_core::{
    apply_filter, CitationGraph, CorpusFilter, DisruptionResult, DocType, Eligibility, PaperId,
    ResolvedVariants, VariantConfig, WindowSpec,
};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde_json::json;

use crate::batch::{compute_all, compute_blocks, thread_pool};
use crate::ids::IdCodec;
use crate::log;
use crate::output::{
    atomic_write, checksum_hex, read_results, write_kv, write_survey, ResultsFormat, ResultsHeader,
    ResultsWriter, NA, RESULTS_SCHEMA, RESULTS_VERSION,
};
use crate::snapshot::{load_snapshot, save_snapshot, write_snapshot, SnapshotError};
use crate::synth;
use crate::tsv::{read_edges, read_papers, ParseReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SNAPSHOT: i32 = 3;
pub const EXIT_NO_ELIGIBLE: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "dindex",
    version,
    about = "Disruption-index analytics over citation graphs"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for sampled operations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// File of `key=value` lines, one per long flag. Flags given on the
    /// command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse papers.tsv and edges.tsv into a snapshot.
    Ingest(IngestArgs),
    /// Compute D-index results for every eligible paper.
    Compute(ComputeArgs),
    /// Fit Zipf's law to the reference citations of sampled papers.
    Zipf(ZipfArgs),
    /// Run a corpus study on computed results.
    Study(StudyArgs),
    /// Write a synthetic corpus as papers.tsv and edges.tsv.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
    /// Snapshot to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Largest tolerated share of malformed lines per file.
    #[arg(long, default_value_t = 0.05)]
    pub max_malformed: f64,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long, conflicts_with_all = ["papers", "edges"], required_unless_present_all = ["papers", "edges"])]
    pub snapshot: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    pub papers: Option<PathBuf>,
    #[arg(long, requires = "papers")]
    pub edges: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub max_malformed: f64,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long, default_value_t = 1)]
    pub min_references: u64,
    #[arg(long, default_value_t = 1)]
    pub min_citations: u64,
    /// Comma-separated document types eligible as focal papers.
    #[arg(long, value_delimiter = ',', default_value = "journal-article")]
    pub doc_types: Vec<String>,
    #[arg(long)]
    pub min_year: Option<i16>,
    #[arg(long)]
    pub max_year: Option<i16>,
}

impl FilterArgs {
    fn filter(&self) -> anyhow::Result<CorpusFilter> {
        let doc_types = self
            .doc_types
            .iter()
            .map(|s| {
                DocType::ALL
                    .into_iter()
                    .find(|d| d.as_str() == s.trim())
                    .ok_or_else(|| anyhow!("unknown document type {s:?}"))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        if doc_types.is_empty() {
            return Err(anyhow!("--doc-types must name at least one type"));
        }
        Ok(CorpusFilter {
            min_references: self.min_references,
            min_citations: self.min_citations,
            doc_types,
            min_year: self.min_year,
            max_year: self.max_year,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantsArg {
    All,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelfCitationArg {
    AuthorOverlap,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum D4Arg {
    CitersOnly,
    IncludeK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Tsv,
}

fn parse_window(s: &str) -> Result<WindowSpec, String> {
    if s == "unlimited" {
        return Ok(WindowSpec::Unlimited);
    }
    let w: u16 = s
        .parse()
        .map_err(|_| format!("expected \"unlimited\" or a number of years, got {s:?}"))?;
    WindowSpec::years(w).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Citation window in years, or "unlimited".
    #[arg(long, value_parser = parse_window, default_value = "unlimited")]
    pub window: WindowSpec,
    /// Whether to report the D1-D4 variants.
    #[arg(long, value_enum, default_value_t = VariantsArg::All)]
    pub variants: VariantsArg,
    /// Quantile of cited-paper citation counts that makes a reference popular (D2).
    #[arg(long, default_value_t = 0.75)]
    pub popular_quantile: f64,
    /// Fixed popularity threshold; overrides --popular-quantile.
    #[arg(long)]
    pub popular_count: Option<u64>,
    #[arg(long, value_enum, default_value_t = SelfCitationArg::AuthorOverlap)]
    pub self_citation: SelfCitationArg,
    #[arg(long, value_enum, default_value_t = D4Arg::CitersOnly)]
    pub d4_mode: D4Arg,
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ZipfArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long, default_value_t = 1000)]
    pub sample: usize,
    #[arg(long, default_value_t = 3)]
    pub min_refs: usize,
    #[arg(long, value_parser = parse_window, default_value = "unlimited")]
    pub window: WindowSpec,
    /// Offset added to counts before taking logs.
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional key/value table of survey aggregates.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    Overlap,
    Distribution,
    Reflen,
    Regression,
    WindowSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeArg {
    Classical,
    Hc1,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad number {a:?}"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad number {b:?}"))?;
    Ok((lo, hi))
}

fn parse_cohort(s: &str) -> Result<Cohort, String> {
    let (years, window) = s
        .split_once(':')
        .ok_or_else(|| format!("expected YEAR[-YEAR]:WINDOW, got {s:?}"))?;
    let (first, last) = match years.split_once('-') {
        Some((a, b)) => (a, b),
        None => (years, years),
    };
    let year = |y: &str| {
        y.trim()
            .parse::<i16>()
            .map_err(|_| format!("bad year {y:?}"))
    };
    Ok(Cohort {
        first_year: year(first)?,
        last_year: year(last)?,
        window: parse_window(window.trim())?,
    })
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Results file from `dindex compute` on the same snapshot.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, value_enum)]
    pub study: StudyKind,
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Overlap: papers need more citations than this.
    #[arg(long, default_value_t = 100)]
    pub overlap_min_citations: u64,
    /// Overlap: papers need a D-index above this.
    #[arg(long, default_value_t = 0.2)]
    pub overlap_min_d: f64,
    #[arg(long, default_value_t = dindex_core::graph::TAXONOMY_SIZE)]
    pub taxonomy_size: u16,
    #[arg(long, default_value_t = 2)]
    pub fields_per_paper: u16,

    /// Distribution: minimum citations in the window.
    #[arg(long, default_value_t = 10)]
    pub dist_min_citations: u64,

    /// Reference-length study: inclusive d_p band.
    #[arg(long, value_parser = parse_pair, default_value = "0,0.05")]
    pub d_band: (f64, f64),
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    pub b_levels: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub level_tolerance: f64,
    #[arg(long, default_value_t = 5)]
    pub bucket_width: u32,
    #[arg(long, default_value_t = 10)]
    pub reflen_min_citations: u64,

    /// Regression sample bounds.
    #[arg(long, value_parser = parse_pair, default_value = "1,10")]
    pub k_range: (f64, f64),
    #[arg(long, value_parser = parse_pair, default_value = "5,50")]
    pub r_range: (f64, f64),
    #[arg(long, value_parser = parse_pair, default_value = "10,1000")]
    pub c_range: (f64, f64),
    #[arg(long, value_enum, default_value_t = SeArg::Classical)]
    pub se: SeArg,
    /// Team size at which the marginal effect is evaluated (default: mean).
    #[arg(long)]
    pub at_k: Option<f64>,

    /// Window-sweep cohorts as YEAR[-YEAR]:WINDOW, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = parse_cohort,
        default_value = "2019:1,2017:3,2015:5,2010:10,2000:20,1995:25"
    )]
    pub cohorts: Vec<Cohort>,
}

impl StudyArgs {
    fn regression_spec(&self) -> RegressionSpec {
        RegressionSpec {
            k_range: self.k_range,
            r_range: self.r_range,
            c_range: self.c_range,
            se_kind: match self.se {
                SeArg::Classical => SeKind::Classical,
                SeArg::Hc1 => SeKind::Hc1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Random,
    Scale,
    Lag,
    Reflen,
    NullFields,
    Zipf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Paper count (random, scale) or focal count (null-fields, zipf).
    #[arg(long, default_value_t = 1000)]
    pub papers: usize,
    /// Edge count (scale).
    #[arg(long, default_value_t = 10_000)]
    pub edges: usize,
    /// Edge probability (random).
    #[arg(long, default_value_t = 0.05)]
    pub edge_prob: f64,
    #[arg(long, default_value = "W")]
    pub prefix: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

trait ExitCode<T> {
    fn exit(self, code: i32) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitCode<T> for Result<T, E> {
    fn exit(self, code: i32) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn fail<T>(code: i32, error: anyhow::Error) -> Result<T, Failure> {
    Err(Failure { code, error })
}

/// Reads a `key=value` config file into flag tokens.
pub fn config_tokens(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", n + 1))?;
        let key = k.trim().trim_start_matches('-').replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(anyhow!("config line {}: invalid key {:?}", n + 1, k.trim()));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

const GLOBAL_VALUE_FLAGS: [&str; 3] = ["--workers", "--seed", "--config"];

fn flag_name(arg: &str) -> Option<&str> {
    let body = arg.strip_prefix("--")?;
    Some(body.split_once('=').map_or(body, |(k, _)| k))
}

/// Splices the settings of `--config FILE` into the argument list right after
/// the subcommand, skipping keys that are also given on the command line.
pub fn expand_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let strs: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut config = None;
    let mut keep = Vec::with_capacity(args.len());
    let mut subcommand = None;
    let mut i = 0;
    while i < strs.len() {
        let s = &strs[i];
        if i > 0 && (s == "--config" || s.starts_with("--config=")) {
            if let Some(v) = s.strip_prefix("--config=") {
                config = Some(PathBuf::from(v));
            } else {
                let v = args
                    .get(i + 1)
                    .ok_or_else(|| anyhow!("--config needs a path"))?;
                config = Some(PathBuf::from(v));
                i += 1;
            }
            i += 1;
            continue;
        }
        if i > 0 && subcommand.is_none() && !s.starts_with('-') {
            let prev = &strs[i - 1];
            if !GLOBAL_VALUE_FLAGS.contains(&prev.as_str()) {
                subcommand = Some(keep.len());
            }
        }
        keep.push(args[i].clone());
        i += 1;
    }
    let (Some(path), Some(at)) = (config, subcommand) else {
        return Ok(keep);
    };
    let text =
        fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let given: Vec<&str> = strs.iter().filter_map(|s| flag_name(s)).collect();
    let injected: Vec<OsString> = config_tokens(&text)?
        .into_iter()
        .filter(|(k, _)| !given.contains(&k.as_str()))
        .map(|(k, v)| OsString::from(format!("--{k}={v}")))
        .collect();
    let mut out = keep;
    out.splice(at + 1..at + 1, injected);
    Ok(out)
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            log::error("config", &[("message", &e)]);
            return EXIT_INPUT;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            log::error(
                "failed",
                &[("code", &f.code), ("message", &format!("{:#}", f.error))],
            );
            f.code
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Compute(a) => cmd_compute(&a, workers),
        Command::Zipf(a) => cmd_zipf(&a, workers, cli.seed),
        Command::Study(a) => cmd_study(&a, workers),
        Command::Synth(a) => cmd_synth(&a, cli.seed),
    }
}

fn log_parse(file: &Path, r: &ParseReport) {
    let level = if r.malformed > 0 { "warn" } else { "info" };
    log::emit(
        level,
        "parse",
        &[
            ("file", &file.display()),
            ("lines", &r.lines),
            ("parsed", &r.parsed),
            ("malformed", &r.malformed),
            ("self_loops", &r.self_loops),
        ],
    );
    for (line, message) in &r.samples {
        log::warn(
            "parse.line",
            &[
                ("file", &file.display()),
                ("line", line),
                ("message", message),
            ],
        );
    }
}

/// Parses raw TSV input into a graph.
pub fn ingest_files(
    papers: &Path,
    edges: &Path,
    max_malformed: f64,
) -> Result<(CitationGraph, IdCodec), Failure> {
    let open = |p: &Path| {
        fs::File::open(p)
            .map(|f| io::BufReader::with_capacity(1 << 20, f))
            .with_context(|| format!("opening {}", p.display()))
    };
    let mut codec = IdCodec::new();
    let (records, pr) = read_papers(open(papers).exit(EXIT_INPUT)?, &mut codec)
        .with_context(|| format!("reading {}", papers.display()))
        .exit(EXIT_INPUT)?;
    log_parse(papers, &pr);
    pr.check(max_malformed)
        .with_context(|| format!("reading {}", papers.display()))
        .exit(EXIT_INPUT)?;
    let (edge_list, er) = read_edges(open(edges).exit(EXIT_INPUT)?, &codec)
        .with_context(|| format!("reading {}", edges.display()))
        .exit(EXIT_INPUT)?;
    log_parse(edges, &er);
    er.check(max_malformed)
        .with_context(|| format!("reading {}", edges.display()))
        .exit(EXIT_INPUT)?;
    let (g, report) = dindex_core::build_graph(records, edge_list).exit(EXIT_INPUT)?;
    log::info(
        "build",
        &[
            ("papers", &report.papers),
            ("edges_in", &report.edges_in),
            ("edges_kept", &report.edges_kept),
            ("duplicates", &report.duplicate_edges),
            ("self_loops", &report.self_loops),
            ("dangling", &report.dangling),
        ],
    );
    for (a, b) in &report.dangling_samples {
        log::warn(
            "build.dangling",
            &[("citer", &codec.decode(*a)), ("cited", &codec.decode(*b))],
        );
    }
    Ok((g, codec))
}

fn cmd_ingest(a: &IngestArgs) -> Result<(), Failure> {
    let (g, codec) = ingest_files(&a.papers, &a.edges, a.max_malformed)?;
    let sum = save_snapshot(&g, &codec, &a.out)
        .with_context(|| format!("writing {}", a.out.display()))
        .exit(EXIT_INPUT)?;
    log::info(
        "ingest.done",
        &[
            ("snapshot", &a.out.display()),
            ("papers", &g.len()),
            ("edges", &g.edge_count()),
            ("checksum", &checksum_hex(sum)),
        ],
    );
    Ok(())
}

/// A graph with its codec and the checksum of its snapshot encoding.
pub struct Loaded {
    pub graph: CitationGraph,
    pub codec: IdCodec,
    pub checksum: u64,
}

pub fn load_input(input: &InputArgs) -> Result<Loaded, Failure> {
    if let Some(path) = &input.snapshot {
        let snap = load_snapshot(path).map_err(|e| {
            let code = match e {
                SnapshotError::Io(_) => EXIT_INPUT,
                _ => EXIT_SNAPSHOT,
            };
            Failure {
                code,
                error: anyhow::Error::new(e).context(format!("loading {}", path.display())),
            }
        })?;
        log::info(
            "load",
            &[
                ("snapshot", &path.display()),
                ("papers", &snap.graph.len()),
                ("edges", &snap.graph.edge_count()),
            ],
        );
        return Ok(Loaded {
            graph: snap.graph,
            codec: snap.codec,
            checksum: snap.checksum,
        });
    }
    let (papers, edges) = match (&input.papers, &input.edges) {
        (Some(p), Some(e)) => (p, e),
        _ => {
            return fail(
                EXIT_INPUT,
                anyhow!("give --snapshot or both --papers and --edges"),
            )
        }
    };
    let (graph, codec) = ingest_files(papers, edges, input.max_malformed)?;
    let checksum = write_snapshot(&graph, &codec, io::sink()).exit(EXIT_INPUT)?;
    Ok(Loaded {
        graph,
        codec,
        checksum,
    })
}

fn eligibility(g: &CitationGraph, args: &FilterArgs) -> Result<Eligibility, Failure> {
    let filter = args.filter().exit(EXIT_INPUT)?;
    let (elig, r) = apply_filter(g, &filter);
    log::info(
        "filter",
        &[
            ("total", &r.total),
            ("eligible", &r.eligible),
            ("too_few_references", &r.too_few_references),
            ("too_few_citations", &r.too_few_citations),
            ("doc_type", &r.doc_type),
            ("year_out_of_range", &r.year_out_of_range),
        ],
    );
    Ok(elig)
}

fn cmd_compute(a: &ComputeArgs, workers: usize) -> Result<(), Failure> {
    let input = load_input(&a.input)?;
    let g = &input.graph;
    let elig = eligibility(g, &a.filter)?;
    if !(0.0..=1.0).contains(&a.popular_quantile) {
        return fail(EXIT_INPUT, anyhow!("--popular-quantile must lie in [0, 1]"));
    }
    let cfg = VariantConfig {
        popular_threshold: match a.popular_count {
            Some(c) => PopularThreshold::Count(c),
            None => PopularThreshold::Quantile(a.popular_quantile),
        },
        self_citation_rule: match a.self_citation {
            SelfCitationArg::AuthorOverlap => SelfCitationRule::AuthorOverlap,
            SelfCitationArg::Off => SelfCitationRule::Off,
        },
        d4_mode: match a.d4_mode {
            D4Arg::CitersOnly => D4Mode::CitersOnly,
            D4Arg::IncludeK => D4Mode::IncludeK,
        },
    }
    .resolve(g);
    let header = results_header(input.checksum, a.window, a.variants, &cfg);
    if elig.count() == 0 {
        log::warn("compute.empty", &[("message", &"no eligible papers")]);
    }
    let format = match a.format {
        FormatArg::Jsonl => ResultsFormat::Jsonl,
        FormatArg::Tsv => ResultsFormat::Tsv,
    };
    let pool = thread_pool(workers);
    let strip = a.variants == VariantsArg::None;
    let rows = atomic_write(&a.out, |f| {
        let mut w = ResultsWriter::new(f, format, &header, input.codec.clone())?;
        compute_blocks(g, a.window, cfg, &elig, &pool, |rs| {
            for r in rs {
                if strip {
                    let mut r = r.clone();
                    (r.d1, r.d2, r.d3, r.d4) = (None, None, None, None);
                    w.write(&r)?;
                } else {
                    w.write(r)?;
                }
            }
            Ok::<_, io::Error>(())
        })?;
        let rows = w.rows;
        w.finish()?;
        Ok(rows)
    })
    .with_context(|| format!("writing {}", a.out.display()))
    .exit(EXIT_INPUT)?;
    log::info(
        "compute.done",
        &[
            ("rows", &rows),
            ("window", &a.window),
            ("workers", &workers),
            ("popular_min_citations", &cfg.popular_min_citations),
            ("out", &a.out.display()),
        ],
    );
    Ok(())
}

fn results_header(
    checksum: u64,
    window: WindowSpec,
    variants: VariantsArg,
    cfg: &ResolvedVariants,
) -> ResultsHeader {
    ResultsHeader {
        schema: RESULTS_SCHEMA.into(),
        version: RESULTS_VERSION,
        snapshot_checksum: checksum_hex(checksum),
        window: window.to_string(),
        variants: match variants {
            VariantsArg::All => "all",
            VariantsArg::None => "none",
        }
        .into(),
        popular_min_citations: cfg.popular_min_citations,
        self_citation: match cfg.self_citation_rule {
            SelfCitationRule::AuthorOverlap => "author-overlap",
            SelfCitationRule::Off => "off",
        }
        .into(),
        d4_mode: match cfg.d4_mode {
            D4Mode::CitersOnly => "citers-only",
            D4Mode::IncludeK => "include-k",
        }
        .into(),
    }
}

fn cmd_zipf(a: &ZipfArgs, workers: usize, seed: u64) -> Result<(), Failure> {
    let input = load_input(&a.input)?;
    let g = &input.graph;
    let elig = eligibility(g, &a.filter)?;
    let population: Vec<PaperId> = elig
        .indices()
        .filter(|&ix| g.n_references(ix) >= a.min_refs)
        .map(|ix| g.id(ix))
        .collect();
    if population.is_empty() {
        return fail(
            EXIT_NO_ELIGIBLE,
            anyhow!("no eligible papers with at least {} references", a.min_refs),
        );
    }
    let chosen: Vec<PaperId> = if a.sample >= population.len() {
        if a.sample > population.len() {
            log::warn(
                "zipf.sample",
                &[
                    ("requested", &a.sample),
                    ("population", &population.len()),
                    ("message", &"sample exceeds population, using all papers"),
                ],
            );
        }
        population
    } else {
        let mut ix = sample(&mut synth::rng(seed), population.len(), a.sample).into_vec();
        ix.sort_unstable();
        ix.into_iter().map(|i| population[i]).collect()
    };
    let cfg = ZipfConfig {
        smoothing: a.smoothing,
        ..ZipfConfig::default()
    };
    let rows = thread_pool(workers).install(|| {
        chosen
            .par_iter()
            .map(|&p| survey_row(g, p, a.window, &cfg))
            .collect()
    });
    let survey = finish_survey(rows, &cfg);
    atomic_write(&a.out, |w| write_survey(w, &survey, &input.codec))
        .with_context(|| format!("writing {}", a.out.display()))
        .exit(EXIT_INPUT)?;
    let s = &survey.summary;
    let pooled = survey.pooled.as_ref().and_then(|p| p.as_ref().ok());
    let table: Vec<(&str, String)> = vec![
        ("n_papers", s.n_papers.to_string()),
        ("n_fitted", s.n_fitted.to_string()),
        ("mean_n_refs", NA(s.mean_n_refs).to_string()),
        ("mean_a", NA(s.mean_a).to_string()),
        ("mean_b", NA(s.mean_b).to_string()),
        ("frac_a_gt_1", NA(s.frac_a_gt_1).to_string()),
        ("mean_ratio_emp", NA(s.mean_ratio_emp).to_string()),
        ("mean_ratio_theory", NA(s.mean_ratio_theory).to_string()),
        ("pooled_a", NA(pooled.map(|f| f.a)).to_string()),
        ("pooled_b", NA(pooled.map(|f| f.b)).to_string()),
    ];
    if let Some(path) = &a.summary {
        atomic_write(path, |w| write_kv(w, &table))
            .with_context(|| format!("writing {}", path.display()))
            .exit(EXIT_INPUT)?;
    }
    let fields: Vec<(&str, &dyn std::fmt::Display)> = table
        .iter()
        .map(|(k, v)| (*k, v as &dyn std::fmt::Display))
        .collect();
    log::info("zipf.done", &fields);
    Ok(())
}

fn analysis_failure(e: AnalysisError) -> Failure {
    let code = match e {
        AnalysisError::EmptySelection | AnalysisError::EmptyInput => EXIT_NO_ELIGIBLE,
        _ => EXIT_INPUT,
    };
    Failure {
        code,
        error: e.into(),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
    .with_context(|| format!("writing {}", path.display()))
    .exit(EXIT_INPUT)
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    atomic_write(path, |w| {
        writeln!(w, "{}", header.join("\t"))?;
        for r in rows {
            writeln!(w, "{}", r.join("\t"))?;
        }
        Ok(())
    })
    .with_context(|| format!("writing {}", path.display()))
    .exit(EXIT_INPUT)
}

fn s<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

fn na<T: std::fmt::Display>(v: Option<T>) -> String {
    NA(v).to_string()
}

fn cmd_study(a: &StudyArgs, workers: usize) -> Result<(), Failure> {
    let input = load_input(&a.input)?;
    let g = &input.graph;
    let (header, results) = read_results(&a.results, &input.codec)
        .with_context(|| format!("reading {}", a.results.display()))
        .exit(EXIT_INPUT)?;
    if header.snapshot_checksum != checksum_hex(input.checksum) {
        return fail(
            EXIT_MISMATCH,
            anyhow!(
                "results were computed from snapshot {} but the input is {}",
                header.snapshot_checksum,
                checksum_hex(input.checksum)
            ),
        );
    }
    let window = parse_window(&header.window)
        .map_err(|e| anyhow!("results header window: {e}"))
        .exit(EXIT_INPUT)?;
    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))
        .exit(EXIT_INPUT)?;
    let dir = &a.out_dir;
    match a.study {
        StudyKind::Overlap => {
            let spec = OverlapStudySpec {
                min_citations: a.overlap_min_citations,
                min_d: a.overlap_min_d,
                taxonomy_size: a.taxonomy_size,
                fields_per_paper: a.fields_per_paper,
            };
            let st = overlap_empirical(g, &results, &spec, window).map_err(analysis_failure)?;
            let se = (st.rate * (1.0 - st.rate) / st.n_pairs as f64).sqrt();
            let table = vec![
                ("selected", s(st.selected)),
                ("n_pairs", s(st.n_pairs)),
                ("n_overlap", s(st.n_overlap)),
                ("missing_fields", s(st.missing_fields)),
                ("rate", s(st.rate)),
                ("rate_se", s(se)),
                ("baseline", s(st.baseline)),
                ("ratio", s(st.rate / st.baseline)),
            ];
            atomic_write(&dir.join("overlap.tsv"), |w| write_kv(w, &table))
                .context("writing overlap.tsv")
                .exit(EXIT_INPUT)?;
            write_json(
                &dir.join("overlap.json"),
                &json!({
                    "selected": st.selected,
                    "n_pairs": st.n_pairs,
                    "n_overlap": st.n_overlap,
                    "missing_fields": st.missing_fields,
                    "rate": st.rate,
                    "rate_se": se,
                    "baseline": st.baseline,
                    "window": header.window,
                }),
            )?;
            log::info(
                "study.overlap",
                &[
                    ("n_pairs", &st.n_pairs),
                    ("rate", &st.rate),
                    ("baseline", &st.baseline),
                ],
            );
        }
        StudyKind::Distribution => {
            let d =
                distribution_summary(&results, a.dist_min_citations).map_err(analysis_failure)?;
            let table = vec![
                ("n", s(d.n)),
                ("min_citations", s(d.min_citations)),
                ("median_d_p", na(d.median_d_p)),
                ("median_b_p", na(d.median_b_p)),
                ("median_d0", na(d.median_d0)),
                ("characteristic_d0", na(d.characteristic_d0)),
                ("d_p_negative", s(d.d_p.negative)),
                ("d_p_zero", s(d.d_p.zero)),
                ("d_p_positive", s(d.d_p.positive)),
                ("d0_negative", s(d.d0.negative)),
                ("d0_zero", s(d.d0.zero)),
                ("d0_positive", s(d.d0.positive)),
                ("b_p_below_one", s(d.b_p.below_one)),
                ("b_p_one", s(d.b_p.one)),
                ("b_p_above_one", s(d.b_p.above_one)),
            ];
            atomic_write(&dir.join("distribution.tsv"), |w| write_kv(w, &table))
                .context("writing distribution.tsv")
                .exit(EXIT_INPUT)?;
            let points: Vec<Vec<String>> = results
                .iter()
                .filter(|r| r.c_p >= a.dist_min_citations && !r.flags.undefined())
                .map(|r| {
                    vec![
                        input.codec.decode(r.focal),
                        s(r.year),
                        s(r.c_p),
                        na(r.d_p),
                        na(r.b_p),
                        na(r.d0),
                    ]
                })
                .collect();
            write_table(
                &dir.join("distribution_points.tsv"),
                &["paper_id", "year", "c_p", "d_p", "b_p", "d0"],
                &points,
            )?;
            log::info(
                "study.distribution",
                &[
                    ("n", &d.n),
                    ("median_d_p", &NA(d.median_d_p)),
                    ("median_b_p", &NA(d.median_b_p)),
                ],
            );
        }
        StudyKind::Reflen => {
            let cfg = RefLenConfig {
                d_band: a.d_band,
                b_levels: a.b_levels.clone(),
                level_tolerance: a.level_tolerance,
                bucket_width: a.bucket_width,
                min_citations: a.reflen_min_citations,
            };
            let strata = reference_length_independence(&results, &cfg);
            let mut buckets = Vec::new();
            let mut slopes = Vec::new();
            for st in &strata {
                for b in &st.buckets {
                    buckets.push(vec![
                        s(st.level),
                        s(b.lo),
                        s(b.n),
                        s(b.mean_n_refs),
                        s(b.mean_d0),
                        na(st.theoretical_d0),
                    ]);
                }
                let (slope, se, ci, status) = match &st.slope {
                    Ok(sl) => (Some(sl.slope), sl.se, sl.ci95, "ok".to_string()),
                    Err(e) => (None, None, None, e.to_string()),
                };
                slopes.push(vec![
                    s(st.level),
                    s(st.n),
                    na(st.mean_d_p),
                    na(st.theoretical_d0),
                    na(slope),
                    na(se),
                    na(ci.map(|c| c.0)),
                    na(ci.map(|c| c.1)),
                    status,
                ]);
                log::info(
                    "study.reflen",
                    &[("level", &st.level), ("n", &st.n), ("slope", &NA(slope))],
                );
            }
            write_table(
                &dir.join("reflen.tsv"),
                &[
                    "b_level",
                    "bucket_lo",
                    "n",
                    "mean_n_refs",
                    "mean_d0",
                    "theoretical_d0",
                ],
                &buckets,
            )?;
            write_table(
                &dir.join("reflen_slopes.tsv"),
                &[
                    "b_level",
                    "n",
                    "mean_d_p",
                    "theoretical_d0",
                    "slope",
                    "se",
                    "ci_lo",
                    "ci_hi",
                    "status",
                ],
                &slopes,
            )?;
        }
        StudyKind::Regression => {
            let spec = a.regression_spec();
            let (rows, sample) = regression_rows(&results, &spec);
            let fit = ols_fit(&rows, &spec).map_err(analysis_failure)?;
            let me = marginal_effect_team_size(&fit, a.at_k).map_err(analysis_failure)?;
            let at_k = a.at_k.unwrap_or(fit.mean_k);
            let mut table = vec![
                vec![s("b0"), s(fit.coef.b0), s(fit.se.b0)],
                vec![s("b_k"), s(fit.coef.b_k), s(fit.se.b_k)],
                vec![s("b_r"), s(fit.coef.b_r), s(fit.se.b_r)],
                vec![s("b_c"), s(fit.coef.b_c), s(fit.se.b_c)],
            ];
            for (y, e) in &fit.year_effects {
                table.push(vec![format!("year_{y}"), s(e), s(fit.year_se[y])]);
            }
            write_table(
                &dir.join("regression.tsv"),
                &["term", "estimate", "se"],
                &table,
            )?;
            write_json(
                &dir.join("regression.json"),
                &json!({
                    "coefficients": {"b0": fit.coef.b0, "b_k": fit.coef.b_k, "b_r": fit.coef.b_r, "b_c": fit.coef.b_c},
                    "se": {"b0": fit.se.b0, "b_k": fit.se.b_k, "b_r": fit.se.b_r, "b_c": fit.se.b_c},
                    "se_kind": match fit.se_kind { SeKind::Classical => "classical", SeKind::Hc1 => "hc1" },
                    "year_effects": fit.year_effects.iter().map(|(y, e)| (y.to_string(), json!(e))).collect::<serde_json::Map<_, _>>(),
                    "dropped_year": fit.dropped_year,
                    "n": fit.n,
                    "n_params": fit.n_params,
                    "r2": fit.r2,
                    "sample": {"total": sample.total, "undefined_d0": sample.undefined_d0, "out_of_bounds": sample.out_of_bounds, "kept": sample.kept},
                    "marginal_effect_k": {"at_k": at_k, "value": me},
                    "window": header.window,
                }),
            )?;
            log::info(
                "study.regression",
                &[
                    ("n", &fit.n),
                    ("b_k", &fit.coef.b_k),
                    ("se_k", &fit.se.b_k),
                    ("r2", &fit.r2),
                ],
            );
        }
        StudyKind::WindowSweep => {
            let spec = a.regression_spec();
            let in_results: Vec<bool> = {
                let mut mask = vec![false; g.len()];
                for r in &results {
                    if let Some(ix) = g.index_of(r.focal) {
                        mask[ix as usize] = true;
                    }
                }
                mask
            };
            let cfg = results_config(&header);
            let pool = thread_pool(workers);
            let mut table = Vec::new();
            for &cohort in &a.cohorts {
                let members = Eligibility::from_mask(
                    (0..g.len() as u32)
                        .map(|ix| in_results[ix as usize] && cohort.contains(g.year(ix)))
                        .collect(),
                );
                let rs: Vec<DisruptionResult> = compute_all(g, cohort.window, cfg, &members, &pool);
                let row = sweep_row(cohort, &rs, &spec);
                let (b_k, se, me, status) = match &row.fit {
                    Ok(f) => (
                        Some(f.coef.b_k),
                        Some(f.se.b_k),
                        marginal_effect_team_size(f, a.at_k).ok(),
                        "ok".to_string(),
                    ),
                    Err(e) => (None, None, None, e.to_string()),
                };
                log::info(
                    "study.window_sweep",
                    &[
                        ("first_year", &cohort.first_year),
                        ("last_year", &cohort.last_year),
                        ("window", &cohort.window),
                        ("n", &row.sample.kept),
                        ("b_k", &NA(b_k)),
                    ],
                );
                table.push(vec![
                    s(cohort.first_year),
                    s(cohort.last_year),
                    s(cohort.window),
                    s(row.sample.kept),
                    na(b_k),
                    na(se),
                    na(b_k.zip(se).map(|(b, e)| b - 1.96 * e)),
                    na(b_k.zip(se).map(|(b, e)| b + 1.96 * e)),
                    na(me),
                    status,
                ]);
            }
            write_table(
                &dir.join("window_sweep.tsv"),
                &[
                    "first_year",
                    "last_year",
                    "window",
                    "n",
                    "b_k",
                    "se",
                    "ci_lo",
                    "ci_hi",
                    "marginal_effect",
                    "status",
                ],
                &table,
            )?;
        }
    }
    Ok(())
}

fn results_config(h: &ResultsHeader) -> ResolvedVariants {
    ResolvedVariants {
        popular_min_citations: h.popular_min_citations,
        self_citation_rule: if h.self_citation == "off" {
            SelfCitationRule::Off
        } else {
            SelfCitationRule::AuthorOverlap
        },
        d4_mode: if h.d4_mode == "include-k" {
            D4Mode::IncludeK
        } else {
            D4Mode::CitersOnly
        },
    }
}

fn cmd_synth(a: &SynthArgs, seed: u64) -> Result<(), Failure> {
    let mut rng = synth::rng(seed);
    let corpus = match a.kind {
        SynthKind::Random => synth::random_dag(&mut rng, a.papers, a.edge_prob),
        SynthKind::Scale => synth::scale_corpus(&mut rng, a.papers, a.edges),
        SynthKind::Lag => synth::lag_corpus(&mut rng, &synth::LagSpec::default()),
        SynthKind::Reflen => synth::reflen_corpus(2..=50, &[1, 10, 100]),
        SynthKind::NullFields => synth::null_field_corpus(&mut rng, a.papers, 2),
        SynthKind::Zipf => synth::zipf_corpus(a.papers, 29, 2.0, 1.4, 50_000.0),
    };
    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))
        .exit(EXIT_INPUT)?;
    corpus
        .write_tsv(&a.out_dir, &a.prefix)
        .with_context(|| format!("writing into {}", a.out_dir.display()))
        .exit(EXIT_INPUT)?;
    log::info(
        "synth.done",
        &[
            ("papers", &corpus.papers.len()),
            ("edges", &corpus.edges.len()),
            ("out_dir", &a.out_dir.display()),
        ],
    );
    Ok(())
}
