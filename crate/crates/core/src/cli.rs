//! The `ffd` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::embedding::{DictionaryEmbedder, EmbeddingError, EmbeddingProvider};
use crate::evaluation::{
    bench_scaling, matching_prf, BenchConfig, BenchError, GoldError, GoldPairs,
};
use crate::fd::{full_disjunction, FdError, FdOptions, DEFAULT_PERMUTATION_CAP};
use crate::matcher::{match_all, rewrite_tables, MatchError, MatcherConfig, DEFAULT_THETA};
use crate::table::{load_table, AlignedRelationSet, AlignmentSpec, LoadOptions, TableError};

pub const EMBED_URL_ENV: &str = "FFD_EMBED_URL";
pub const DEFAULT_EMBED_URL: &str = "http://127.0.0.1:8000";

#[derive(Debug, Parser)]
#[command(
    name = "ffd",
    version,
    about = "Fuzzy Full Disjunction over CSV tables"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOptions {
    /// Match values whose cosine distance is strictly below this, in [0, 2].
    #[arg(long, global = true, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    /// ngram, dictionary:<path>, remote, or remote:<url>.
    #[arg(long, global = true, default_value = "ngram")]
    pub provider: String,
    /// Skip value matching and integrate the tables as they are.
    #[arg(long, global = true)]
    pub regular: bool,
    /// Attributes matched concurrently [default: available cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Refuse Full Disjunction over more tables than this.
    #[arg(long, global = true, default_value_t = DEFAULT_PERMUTATION_CAP)]
    pub perm_cap: usize,
    /// Cell text read as NULL (case-insensitive). Replaces the defaults
    /// "", "NULL", and "nan" when given.
    #[arg(long = "null-marker", global = true)]
    pub null_markers: Vec<String>,
    /// Add a provenance column to integrated output.
    #[arg(long, global = true)]
    pub provenance: bool,
    #[arg(long, global = true, default_value_t = ',')]
    pub delimiter: char,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Input tables; the first is table 1, the next table 2, and so on.
    #[arg(long, num_args = 1..)]
    pub tables: Vec<PathBuf>,
    /// JSON alignment: {"attribute": [{"table": 1, "column": "..."}, ...]}.
    #[arg(long)]
    pub alignment: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match values of aligned columns and write the value sets as JSON.
    Match {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Match, rewrite, and write the Full Disjunction as CSV.
    Integrate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score matched value sets against gold pairs.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        /// JSON gold pairs: {"attribute": [["a", "b"], ...]}.
        #[arg(long)]
        gold: PathBuf,
        /// Also write the scores as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Time regular and fuzzy Full Disjunction on synthetic movie tables.
    Bench {
        /// Input sizes in rows, strictly increasing.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "5000,10000,15000,20000,25000,30000"
        )]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Share of copied identifiers written in upper case.
        #[arg(long, default_value_t = 0.0)]
        corruption: f64,
        /// Censor a size, and all larger ones, once a run takes longer.
        #[arg(long, default_value_t = 120)]
        timeout_secs: u64,
        /// Sizes above this are reported as censored without running.
        #[arg(long, default_value_t = 1_000_000)]
        max_rows: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Whitespace-separated series for plotting.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::Config(_) => Self::usage(e.to_string()),
            _ => Self::runtime(format!("embedding failed: {e}")),
        }
    }
}

impl From<MatchError> for CliError {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::Embedding(e) => e.into(),
            MatchError::Table(e) => e.into(),
            MatchError::InvalidTheta(_) => Self::usage(e.to_string()),
            MatchError::MissingRepresentative { .. } => Self::runtime(e.to_string()),
        }
    }
}

impl From<FdError> for CliError {
    fn from(e: FdError) -> Self {
        match e {
            FdError::PermutationCap { .. } => Self::usage(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

impl From<GoldError> for CliError {
    fn from(e: GoldError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Sizes => Self::usage(e.to_string()),
            BenchError::Match(e) => e.into(),
            BenchError::Fd(e) => e.into(),
        }
    }
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::runtime(format!("cannot write {}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command. Errors go to
/// `stderr`; output without an `--out` path goes to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

/// Builds the embedding provider named by `spec`.
pub fn provider_from_spec(
    spec: &str,
    env_url: Option<&str>,
) -> Result<EmbeddingProvider, CliError> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    match (kind, arg) {
        ("ngram", None) => Ok(EmbeddingProvider::ngram()),
        ("dictionary", Some(path)) if !path.is_empty() => {
            Ok(EmbeddingProvider::new(DictionaryEmbedder::load(path)?))
        }
        ("remote", url) => {
            let url = url
                .filter(|u| !u.is_empty())
                .or(env_url)
                .unwrap_or(DEFAULT_EMBED_URL);
            remote_provider(url)
        }
        _ => Err(CliError::usage(format!(
            "unknown provider {spec:?}; expected ngram, dictionary:<path>, remote, or remote:<url>"
        ))),
    }
}

#[cfg(feature = "remote")]
fn remote_provider(url: &str) -> Result<EmbeddingProvider, CliError> {
    use crate::embedding::{RemoteConfig, RemoteEmbedder};
    Ok(EmbeddingProvider::new(RemoteEmbedder::connect(
        RemoteConfig::new(url),
    )?))
}

#[cfg(not(feature = "remote"))]
fn remote_provider(_url: &str) -> Result<EmbeddingProvider, CliError> {
    Err(CliError::usage("this build has no remote provider support"))
}

fn load_inputs(inputs: &Inputs, global: &GlobalOptions) -> Result<AlignedRelationSet, CliError> {
    let mut options = LoadOptions::default();
    if !global.delimiter.is_ascii() {
        return Err(CliError::usage(
            "--delimiter must be a single ASCII character",
        ));
    }
    options.delimiter = global.delimiter as u8;
    if !global.null_markers.is_empty() {
        options.null_markers = global.null_markers.clone();
    }
    let spec = match &inputs.alignment {
        Some(path) => AlignmentSpec::load(path)?,
        None => AlignmentSpec::new(),
    };
    let tables = inputs
        .tables
        .iter()
        .enumerate()
        .map(|(i, path)| load_table(path, i + 1, &options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AlignedRelationSet::new(tables, spec)?)
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| write_err(p, e))?,
        )),
        None => Box::new(stdout),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| write_err(path, e))
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let g = &cli.global;
    if !(0.0..=2.0).contains(&g.theta) {
        return Err(CliError::usage(format!(
            "--theta must lie in [0, 2], got {}",
            g.theta
        )));
    }
    let jobs = g
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let fd_options = FdOptions {
        permutation_cap: g.perm_cap,
    };
    let env_url = std::env::var(EMBED_URL_ENV).ok();
    let provider = || provider_from_spec(&g.provider, env_url.as_deref());
    let started = Instant::now();

    match &cli.command {
        Command::Match { inputs, out } => {
            let set = load_inputs(inputs, g)?;
            let provider = provider()?;
            let report = match_all(&set, &MatcherConfig::new(g.theta, &provider)?, jobs)?;
            let mut w = open_output(out, stdout)?;
            writeln!(w, "{}", report.to_json()).map_err(CliError::runtime_io)?;
            w.flush().map_err(CliError::runtime_io)?;
            if g.verbose > 0 {
                let s = provider.stats();
                let _ = writeln!(
                    stderr,
                    "matched {} attributes in {:.3}s; {} embeddings, {} cache hits",
                    report.attributes.len(),
                    started.elapsed().as_secs_f64(),
                    s.misses,
                    s.hits
                );
            }
        }
        Command::Integrate { inputs, out } => {
            let set = load_inputs(inputs, g)?;
            let set = if g.regular {
                set
            } else {
                let provider = provider()?;
                let report = match_all(&set, &MatcherConfig::new(g.theta, &provider)?, jobs)?;
                rewrite_tables(&set, &report.representatives())?
            };
            let fd = full_disjunction(&set, &fd_options)?;
            let w = open_output(out, stdout)?;
            fd.write_csv(w, g.provenance)
                .map_err(|e| CliError::runtime(format!("cannot write output: {e}")))?;
            if g.verbose > 0 {
                let _ = writeln!(
                    stderr,
                    "{} input rows -> {} tuples in {:.3}s",
                    set.total_rows(),
                    fd.len(),
                    started.elapsed().as_secs_f64()
                );
            }
        }
        Command::Eval { inputs, gold, json } => {
            let gold = GoldPairs::load(gold)?;
            let set = load_inputs(inputs, g)?;
            let provider = provider()?;
            let report = match_all(&set, &MatcherConfig::new(g.theta, &provider)?, jobs)?;
            let scores = matching_prf(&report.partition(), &gold);
            stdout
                .write_all(scores.render().as_bytes())
                .map_err(CliError::runtime_io)?;
            if let Some(path) = json {
                write_file(
                    path,
                    &serde_json::to_string_pretty(&scores).expect("scores serialize"),
                )?;
            }
        }
        Command::Bench {
            sizes,
            reps,
            corruption,
            timeout_secs,
            max_rows,
            csv,
            json,
            plot,
        } => {
            if !(0.0..=1.0).contains(corruption) {
                return Err(CliError::usage("--corruption must lie in [0, 1]"));
            }
            let config = BenchConfig {
                sizes: sizes.clone(),
                repetitions: *reps,
                seed: g.seed,
                theta: g.theta,
                corruption: *corruption,
                timeout: Duration::from_secs(*timeout_secs),
                max_rows: *max_rows,
            };
            let _ = writeln!(stdout, "rows\tregular_s\tfuzzy_s\tratio\ttuples\tidentical");
            let report = bench_scaling(&config, |p| {
                let line = match (&p.censored, p.regular_seconds, p.fuzzy_seconds) {
                    (None, Some(r), Some(f)) => format!(
                        "{}\t{r:.3}\t{f:.3}\t{:.3}\t{}\t{}",
                        p.input_rows,
                        f / r,
                        p.fuzzy_tuples.unwrap_or(0),
                        p.identical_output.unwrap_or(false)
                    ),
                    (reason, _, _) => format!(
                        "{}\tcensored: {}",
                        p.target_rows,
                        reason.as_deref().unwrap_or("no timing")
                    ),
                };
                let _ = writeln!(stdout, "{line}");
            })?;
            if let Some(path) = csv {
                let mut buf = Vec::new();
                report.write_csv(&mut buf).map_err(|e| write_err(path, e))?;
                std::fs::write(path, buf).map_err(|e| write_err(path, e))?;
            }
            if let Some(path) = json {
                write_file(path, &report.to_json())?;
            }
            if let Some(path) = plot {
                write_file(path, &report.plot_series())?;
            }
            if g.verbose > 0 {
                let _ = writeln!(stderr, "sweep took {:.1}s", report.total_seconds);
            }
        }
    }
    Ok(())
}

impl CliError {
    fn runtime_io(e: io::Error) -> Self {
        Self::runtime(format!("cannot write output: {e}"))
    }
}
