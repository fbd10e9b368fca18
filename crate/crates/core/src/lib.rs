//! Fuzzy Full Disjunction: integrate tables whose aligned columns spell the
//! same entity differently.
//!
//! Values of each aligned attribute are embedded, matched across columns by
//! minimum-cost assignment under a distance threshold, and replaced by one
//! representative per match set. The rewritten tables are then integrated
//! with Full Disjunction, the maximal combinations of join-consistent,
//! connected tuples.

pub mod assignment;
pub mod embedding;
pub mod evaluation;
pub mod fd;
pub mod fixtures;
pub mod matcher;
pub mod table;

#[cfg(feature = "cli")]
pub mod cli;

pub use embedding::{cosine_distance, EmbeddingError, EmbeddingProvider, EmbeddingVector};
pub use fd::{full_disjunction, FdError, FdOptions, IntegratedTable};
pub use matcher::{
    match_all, rewrite_tables, MatchError, MatchReport, MatcherConfig, DEFAULT_THETA,
};
pub use table::{AlignedRelationSet, AlignmentSpec, LoadOptions, Table, TableError};

/// Matches every aligned attribute, rewrites values to representatives, and
/// computes the Full Disjunction of the result.
pub fn fuzzy_full_disjunction(
    set: &AlignedRelationSet,
    config: &MatcherConfig<'_>,
    fd_options: &FdOptions,
) -> Result<(MatchReport, IntegratedTable), IntegrateError> {
    let report = match_all(set, config, 1)?;
    let rewritten = rewrite_tables(set, &report.representatives())?;
    let fd = full_disjunction(&rewritten, fd_options)?;
    Ok((report, fd))
}

#[derive(Debug, thiserror::Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Fd(#[from] FdError),
}
