//! Runtime of regular versus fuzzy Full Disjunction on growing inputs.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::synth::{movie_database, MovieDbConfig};
use crate::embedding::EmbeddingProvider;
use crate::fd::{full_disjunction, FdError, FdOptions, IntegratedTable};
use crate::matcher::{match_all, rewrite_tables, MatchError, MatcherConfig, DEFAULT_THETA};
use crate::table::AlignedRelationSet;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Target input sizes in rows, strictly increasing.
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub theta: f64,
    pub corruption: f64,
    /// A single run slower than this censors its point and every larger one.
    pub timeout: Duration,
    /// Sizes above this many rows are skipped and reported as censored.
    pub max_rows: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![5_000, 10_000, 15_000, 20_000, 25_000, 30_000],
            repetitions: 3,
            seed: 7,
            theta: DEFAULT_THETA,
            corruption: 0.0,
            timeout: Duration::from_secs(120),
            max_rows: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub target_rows: usize,
    pub input_rows: usize,
    /// Median seconds; `None` when censored.
    pub regular_seconds: Option<f64>,
    pub fuzzy_seconds: Option<f64>,
    /// Median seconds spent matching and rewriting, included in
    /// `fuzzy_seconds`.
    pub matching_seconds: Option<f64>,
    pub regular_tuples: Option<usize>,
    pub fuzzy_tuples: Option<usize>,
    /// Whether both outputs hold the same rows.
    pub identical_output: Option<bool>,
    pub censored: Option<String>,
}

impl BenchPoint {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.fuzzy_seconds? / self.regular_seconds?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub repetitions: usize,
    pub points: Vec<BenchPoint>,
    pub total_seconds: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Fd(#[from] FdError),
    #[error("benchmark sizes must be strictly increasing and positive")]
    Sizes,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Regular Full Disjunction of `set`.
pub fn run_regular(set: &AlignedRelationSet) -> Result<IntegratedTable, FdError> {
    full_disjunction(set, &FdOptions::default())
}

/// Value matching, rewriting, then Full Disjunction. Returns the output and
/// the seconds spent before the Full Disjunction step.
pub fn run_fuzzy(
    set: &AlignedRelationSet,
    provider: &EmbeddingProvider,
    theta: f64,
) -> Result<(IntegratedTable, f64), BenchError> {
    let start = Instant::now();
    let config = MatcherConfig::new(theta, provider)?;
    let report = match_all(set, &config, 1)?;
    let rewritten = rewrite_tables(set, &report.representatives())?;
    let matching = start.elapsed().as_secs_f64();
    Ok((
        full_disjunction(&rewritten, &FdOptions::default())?,
        matching,
    ))
}

/// Times both pipelines on movie catalogues of each configured size,
/// alternating regular and fuzzy runs. Each fuzzy run gets a fresh n-gram
/// provider so no embedding is reused across runs.
pub fn bench_scaling(
    config: &BenchConfig,
    mut progress: impl FnMut(&BenchPoint),
) -> Result<BenchReport, BenchError> {
    if config.sizes.is_empty()
        || config.sizes[0] == 0
        || config.sizes.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(BenchError::Sizes);
    }
    let started = Instant::now();
    let mut points = Vec::new();
    let mut censor: Option<String> = None;
    for &size in &config.sizes {
        let censored = |reason: String, input_rows: usize| BenchPoint {
            target_rows: size,
            input_rows,
            regular_seconds: None,
            fuzzy_seconds: None,
            matching_seconds: None,
            regular_tuples: None,
            fuzzy_tuples: None,
            identical_output: None,
            censored: Some(reason),
        };
        if let Some(reason) = &censor {
            points.push(censored(reason.clone(), 0));
            progress(points.last().expect("pushed"));
            continue;
        }
        if size > config.max_rows {
            points.push(censored(
                format!("exceeds row budget {}", config.max_rows),
                0,
            ));
            progress(points.last().expect("pushed"));
            continue;
        }
        let set = movie_database(&MovieDbConfig {
            seed: config.seed,
            target_rows: size,
            corruption: config.corruption,
        });
        let mut regular = Vec::new();
        let mut fuzzy = Vec::new();
        let mut matching = Vec::new();
        let mut outputs = None;
        for _ in 0..config.repetitions.max(1) {
            let t = Instant::now();
            let reg = run_regular(&set)?;
            regular.push(t.elapsed().as_secs_f64());
            let provider = EmbeddingProvider::ngram();
            let t = Instant::now();
            let (fz, m) = run_fuzzy(&set, &provider, config.theta)?;
            fuzzy.push(t.elapsed().as_secs_f64());
            matching.push(m);
            let slowest = regular
                .last()
                .copied()
                .unwrap_or(0.0)
                .max(*fuzzy.last().expect("ran"));
            outputs = Some((reg, fz));
            if slowest > config.timeout.as_secs_f64() {
                censor = Some(format!(
                    "a run at {size} rows exceeded {:?}",
                    config.timeout
                ));
                break;
            }
        }
        let (reg, fz) = outputs.expect("at least one repetition");
        points.push(if let Some(reason) = &censor {
            censored(reason.clone(), set.total_rows())
        } else {
            BenchPoint {
                target_rows: size,
                input_rows: set.total_rows(),
                regular_seconds: Some(median(regular)),
                fuzzy_seconds: Some(median(fuzzy)),
                matching_seconds: Some(median(matching)),
                regular_tuples: Some(reg.len()),
                fuzzy_tuples: Some(fz.len()),
                identical_output: Some(reg.rows() == fz.rows()),
                censored: None,
            }
        });
        progress(points.last().expect("pushed"));
    }
    Ok(BenchReport {
        seed: config.seed,
        repetitions: config.repetitions.max(1),
        points,
        total_seconds: started.elapsed().as_secs_f64(),
    })
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "target_rows",
            "input_rows",
            "regular_seconds",
            "fuzzy_seconds",
            "matching_seconds",
            "ratio",
            "regular_tuples",
            "fuzzy_tuples",
            "identical_output",
            "censored",
        ])?;
        let opt = |x: Option<String>| x.unwrap_or_default();
        for p in &self.points {
            w.write_record([
                p.target_rows.to_string(),
                p.input_rows.to_string(),
                opt(p.regular_seconds.map(|x| format!("{x:.6}"))),
                opt(p.fuzzy_seconds.map(|x| format!("{x:.6}"))),
                opt(p.matching_seconds.map(|x| format!("{x:.6}"))),
                opt(p.ratio().map(|x| format!("{x:.4}"))),
                opt(p.regular_tuples.map(|x| x.to_string())),
                opt(p.fuzzy_tuples.map(|x| x.to_string())),
                opt(p.identical_output.map(|x| x.to_string())),
                opt(p.censored.clone()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Whitespace-separated `rows regular fuzzy` lines for gnuplot and the
    /// like; censored points are left out.
    pub fn plot_series(&self) -> String {
        let mut out = String::from("# input_rows regular_seconds fuzzy_seconds\n");
        for p in &self.points {
            if let (Some(r), Some(f)) = (p.regular_seconds, p.fuzzy_seconds) {
                out.push_str(&format!("{} {r:.6} {f:.6}\n", p.input_rows));
            }
        }
        out
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(BenchPoint::ratio)
            .reduce(f64::max)
    }
}
