//! Fuzzy value matching across aligned columns.
//!
//! For each aligned attribute the distinct values of the lowest-id column
//! seed a combined column. Every further column (ascending table id) is
//! matched against the combined column's representatives by a minimum-cost
//! bipartite assignment over cosine distances; assigned pairs at distance
//! `>= theta` are dropped. Matched entries absorb the new value and
//! re-elect their representative by global frequency, unmatched values
//! become new entries. The final entries are the disjoint value sets, and
//! every aligned cell is rewritten to its set's representative.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{linear_sum_assignment, CostMatrix};
use crate::embedding::{cosine_distance, EmbeddingError, EmbeddingProvider, EmbeddingVector};
use crate::table::{AlignedRelationSet, TableError, TableId};

pub const DEFAULT_THETA: f64 = 0.7;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("matching threshold must lie in [0, 2], got {0}")]
    InvalidTheta(f64),
    #[error("no representative for {value:?} of table {table} in attribute {attribute:?}")]
    MissingRepresentative {
        attribute: String,
        table: TableId,
        value: String,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct MatcherConfig<'p> {
    /// A pair matches iff its distance is strictly below this.
    pub theta: f64,
    pub provider: &'p EmbeddingProvider,
}

impl<'p> MatcherConfig<'p> {
    pub fn new(theta: f64, provider: &'p EmbeddingProvider) -> Result<Self, MatchError> {
        if !(0.0..=2.0).contains(&theta) {
            return Err(MatchError::InvalidTheta(theta));
        }
        Ok(Self { theta, provider })
    }
}

/// A value with its embedding.
#[derive(Debug, Clone)]
pub struct Embedded {
    pub value: String,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignedPair {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairwiseAssignment {
    /// Full optimal assignment before thresholding, sorted by `left`.
    pub assigned: Vec<AssignedPair>,
    /// Assigned pairs with `distance < theta`.
    pub matches: Vec<AssignedPair>,
    pub unmatched_left: Vec<usize>,
    pub unmatched_right: Vec<usize>,
}

impl PairwiseAssignment {
    /// Total distance of the unfiltered assignment, summed in `left` order.
    pub fn assigned_cost(&self) -> f64 {
        self.assigned.iter().map(|p| p.distance).sum()
    }
}

/// Minimum-total-distance assignment between two value lists, then
/// thresholded.
///
/// When every value of the shorter list also occurs verbatim in the longer
/// one, pairing equal strings has total distance 0, which no assignment can
/// beat, and the cost matrix is never built.
pub fn pairwise_assign(left: &[Embedded], right: &[Embedded], theta: f64) -> PairwiseAssignment {
    let assigned = match identical_cover(left, right) {
        Some(pairs) => pairs
            .into_iter()
            .map(|(i, j)| AssignedPair {
                left: i,
                right: j,
                distance: cosine_distance(&left[i].vector, &right[j].vector),
            })
            .collect(),
        None => dense_assignment(left, right),
    };
    threshold(left.len(), right.len(), assigned, theta)
}

/// [`pairwise_assign`] without the equal-string shortcut.
pub fn pairwise_assign_dense(
    left: &[Embedded],
    right: &[Embedded],
    theta: f64,
) -> PairwiseAssignment {
    threshold(
        left.len(),
        right.len(),
        dense_assignment(left, right),
        theta,
    )
}

fn dense_assignment(left: &[Embedded], right: &[Embedded]) -> Vec<AssignedPair> {
    let cost = CostMatrix::from_fn(left.len(), right.len(), |i, j| {
        cosine_distance(&left[i].vector, &right[j].vector)
    });
    linear_sum_assignment(&cost)
        .into_iter()
        .map(|(i, j)| AssignedPair {
            left: i,
            right: j,
            distance: cost.get(i, j),
        })
        .collect()
}

/// Pairs every value of the shorter side with an equal value on the other
/// side, or `None` if some value has no distinct equal partner.
fn identical_cover(left: &[Embedded], right: &[Embedded]) -> Option<Vec<(usize, usize)>> {
    let (short, long, flipped) = if left.len() <= right.len() {
        (left, right, false)
    } else {
        (right, left, true)
    };
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(long.len());
    for (j, e) in long.iter().enumerate() {
        if index.insert(e.value.as_str(), j).is_some() {
            return None;
        }
    }
    let mut pairs = Vec::with_capacity(short.len());
    for (i, e) in short.iter().enumerate() {
        let j = index.remove(e.value.as_str())?;
        pairs.push(if flipped { (j, i) } else { (i, j) });
    }
    pairs.sort_unstable();
    Some(pairs)
}

fn threshold(
    n_left: usize,
    n_right: usize,
    assigned: Vec<AssignedPair>,
    theta: f64,
) -> PairwiseAssignment {
    let (left, right) = (n_left, n_right);
    let matches: Vec<AssignedPair> = assigned
        .iter()
        .copied()
        .filter(|p| p.distance < theta)
        .collect();
    let matched_left: HashSet<usize> = matches.iter().map(|p| p.left).collect();
    let matched_right: HashSet<usize> = matches.iter().map(|p| p.right).collect();
    PairwiseAssignment {
        unmatched_left: (0..left).filter(|i| !matched_left.contains(i)).collect(),
        unmatched_right: (0..right).filter(|j| !matched_right.contains(j)).collect(),
        assigned,
        matches,
    }
}

/// One value of one aligned column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Member {
    pub table: TableId,
    pub value: String,
}

impl Member {
    pub fn new(table: TableId, value: impl Into<String>) -> Self {
        Self {
            table,
            value: value.into(),
        }
    }
}

/// Total occurrences of each value across all aligned columns of an
/// attribute, duplicates within a column included.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueCounts(HashMap<String, usize>);

impl ValueCounts {
    pub fn get(&self, value: &str) -> usize {
        self.0.get(value).copied().unwrap_or(0)
    }

    pub fn add(&mut self, value: &str, n: usize) {
        *self.0.entry(value.to_string()).or_default() += n;
    }
}

impl<'a> FromIterator<&'a str> for ValueCounts {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut counts = ValueCounts::default();
        for v in iter {
            counts.add(v, 1);
        }
        counts
    }
}

/// Most frequent member value; ties go to the value seen in the lowest
/// table id, then to the lexicographically smaller string.
///
/// Panics on an empty member set.
pub fn select_representative<'m>(members: &'m [Member], counts: &ValueCounts) -> &'m str {
    let mut first_table: HashMap<&str, TableId> = HashMap::new();
    for m in members {
        first_table
            .entry(m.value.as_str())
            .and_modify(|t| *t = (*t).min(m.table))
            .or_insert(m.table);
    }
    first_table
        .into_iter()
        .min_by(|(va, ta), (vb, tb)| {
            counts
                .get(vb)
                .cmp(&counts.get(va))
                .then(ta.cmp(tb))
                .then(va.cmp(vb))
        })
        .map(|(v, _)| v)
        .expect("representative of an empty member set")
}

/// A bipartite edge accepted by one fold step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEdge {
    /// Representative of the combined entry at the time of the step.
    pub left: Member,
    pub right: Member,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct CombinedEntry {
    pub representative: Member,
    pub vector: EmbeddingVector,
    pub members: Vec<(Member, EmbeddingVector)>,
    pub edges: Vec<MatchEdge>,
}

impl CombinedEntry {
    fn singleton(member: Member, vector: EmbeddingVector) -> Self {
        Self {
            representative: member.clone(),
            vector: vector.clone(),
            members: vec![(member, vector)],
            edges: Vec::new(),
        }
    }

    fn reelect(&mut self, counts: &ValueCounts) {
        let members: Vec<Member> = self.members.iter().map(|(m, _)| m.clone()).collect();
        let value = select_representative(&members, counts);
        let (member, vector) = self
            .members
            .iter()
            .filter(|(m, _)| m.value == value)
            .min_by_key(|(m, _)| m.table)
            .expect("representative is a member");
        self.representative = member.clone();
        self.vector = vector.clone();
    }
}

/// Running fold of matched aligned columns.
#[derive(Debug, Clone, Default)]
pub struct CombinedColumn {
    pub entries: Vec<CombinedEntry>,
}

impl CombinedColumn {
    /// Every value of `column` as its own entry.
    pub fn seed(table: TableId, column: &[Embedded]) -> Self {
        Self {
            entries: column
                .iter()
                .map(|e| CombinedEntry::singleton(Member::new(table, &e.value), e.vector.clone()))
                .collect(),
        }
    }

    pub fn representatives(&self) -> Vec<&str> {
        self.entries
            .iter()
            .map(|e| e.representative.value.as_str())
            .collect()
    }
}

/// Matches the next (deduplicated) column against the combined column.
pub fn fold_combine(
    mut combined: CombinedColumn,
    table: TableId,
    next: &[Embedded],
    theta: f64,
    counts: &ValueCounts,
) -> CombinedColumn {
    if next.is_empty() {
        return combined;
    }
    let reps: Vec<Embedded> = combined
        .entries
        .iter()
        .map(|e| Embedded {
            value: e.representative.value.clone(),
            vector: e.vector.clone(),
        })
        .collect();
    let assignment = pairwise_assign(&reps, next, theta);
    for pair in &assignment.matches {
        let entry = &mut combined.entries[pair.left];
        let incoming = Member::new(table, &next[pair.right].value);
        entry.edges.push(MatchEdge {
            left: entry.representative.clone(),
            right: incoming.clone(),
            distance: pair.distance,
        });
        entry
            .members
            .push((incoming, next[pair.right].vector.clone()));
        entry.reelect(counts);
    }
    for &j in &assignment.unmatched_right {
        combined.entries.push(CombinedEntry::singleton(
            Member::new(table, &next[j].value),
            next[j].vector.clone(),
        ));
    }
    combined
}

/// One disjoint value set of an attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSet {
    pub representative: String,
    pub members: Vec<Member>,
    pub edges: Vec<MatchEdge>,
    /// Largest pairwise distance between members. Can reach `theta` or more
    /// because members join through the representative, not each other.
    pub max_intra_distance: f64,
}

impl ValueSet {
    fn from_entry(entry: CombinedEntry) -> Self {
        let mut max = 0.0f64;
        for (i, (_, a)) in entry.members.iter().enumerate() {
            for (_, b) in &entry.members[i + 1..] {
                max = max.max(cosine_distance(a, b));
            }
        }
        Self {
            representative: entry.representative.value,
            members: entry.members.into_iter().map(|(m, _)| m).collect(),
            edges: entry.edges,
            max_intra_distance: max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMatch {
    pub attribute: String,
    pub sets: Vec<ValueSet>,
}

/// attribute → disjoint value sets.
pub type MatchPartition = IndexMap<String, Vec<Vec<Member>>>;

/// attribute → (table, value) → representative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepresentativeMap(HashMap<String, HashMap<Member, String>>);

impl RepresentativeMap {
    pub fn get(&self, attribute: &str, table: TableId, value: &str) -> Option<&str> {
        self.0
            .get(attribute)?
            .get(&Member::new(table, value))
            .map(String::as_str)
    }

    pub fn insert(&mut self, attribute: &str, member: Member, representative: String) {
        self.0
            .entry(attribute.to_string())
            .or_default()
            .insert(member, representative);
    }
}

/// Per-attribute match results; serializes as the match report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub theta: f64,
    pub attributes: Vec<AttributeMatch>,
}

impl MatchReport {
    pub fn partition(&self) -> MatchPartition {
        self.attributes
            .iter()
            .map(|a| {
                (
                    a.attribute.clone(),
                    a.sets.iter().map(|s| s.members.clone()).collect(),
                )
            })
            .collect()
    }

    pub fn representatives(&self) -> RepresentativeMap {
        let mut map = RepresentativeMap::default();
        for a in &self.attributes {
            for set in &a.sets {
                for m in &set.members {
                    map.insert(&a.attribute, m.clone(), set.representative.clone());
                }
            }
        }
        map
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("match report serializes")
    }
}

/// Solves the fuzzy value match problem for one aligned attribute.
pub fn match_values(
    set: &AlignedRelationSet,
    attribute: &str,
    config: &MatcherConfig<'_>,
) -> Result<AttributeMatch, MatchError> {
    let columns = set.project_aligned(attribute)?;
    let counts: ValueCounts = columns
        .iter()
        .flat_map(|c| c.values.iter().map(String::as_str))
        .collect();
    let distinct: Vec<(TableId, Vec<&str>)> = columns
        .iter()
        .map(|c| {
            let mut seen = HashSet::new();
            let values = c
                .values
                .iter()
                .map(String::as_str)
                .filter(|v| seen.insert(*v))
                .collect();
            (c.table_id, values)
        })
        .filter(|(_, v): &(TableId, Vec<&str>)| !v.is_empty())
        .collect();

    let sets = match distinct.len() {
        0 => Vec::new(),
        // Nothing to compare against: every value is its own set.
        1 => distinct[0]
            .1
            .iter()
            .map(|v| ValueSet {
                representative: v.to_string(),
                members: vec![Member::new(distinct[0].0, *v)],
                edges: Vec::new(),
                max_intra_distance: 0.0,
            })
            .collect(),
        _ => {
            let all: Vec<&str> = distinct
                .iter()
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let vectors = config.provider.embed_batch(&all)?;
            let mut vectors = vectors.into_iter();
            let embedded: Vec<(TableId, Vec<Embedded>)> = distinct
                .iter()
                .map(|(t, values)| {
                    let column = values
                        .iter()
                        .map(|v| Embedded {
                            value: v.to_string(),
                            vector: vectors.next().expect("one vector per value"),
                        })
                        .collect();
                    (*t, column)
                })
                .collect();
            let (first_table, first) = &embedded[0];
            let combined = embedded[1..].iter().fold(
                CombinedColumn::seed(*first_table, first),
                |acc, (table, column)| fold_combine(acc, *table, column, config.theta, &counts),
            );
            combined
                .entries
                .into_iter()
                .map(ValueSet::from_entry)
                .collect()
        }
    };
    Ok(AttributeMatch {
        attribute: attribute.to_string(),
        sets,
    })
}

/// Matches every aligned attribute, up to `jobs` attributes at a time.
pub fn match_all(
    set: &AlignedRelationSet,
    config: &MatcherConfig<'_>,
    jobs: usize,
) -> Result<MatchReport, MatchError> {
    let attributes: Vec<&str> = set.aligned_attributes().collect();
    let results: Vec<Mutex<Option<Result<AttributeMatch, MatchError>>>> =
        attributes.iter().map(|_| Mutex::new(None)).collect();
    let workers = jobs.clamp(1, attributes.len().max(1));
    if workers == 1 {
        for (slot, attr) in results.iter().zip(&attributes) {
            *slot.lock().expect("slot") = Some(match_values(set, attr, config));
        }
    } else {
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(attr) = attributes.get(i) else { break };
                    *results[i].lock().expect("slot") = Some(match_values(set, attr, config));
                });
            }
        });
    }
    let attributes = results
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("slot")
                .expect("attribute processed")
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MatchReport {
        theta: config.theta,
        attributes,
    })
}

/// Replaces every aligned non-null cell by its representative.
pub fn rewrite_tables(
    set: &AlignedRelationSet,
    map: &RepresentativeMap,
) -> Result<AlignedRelationSet, MatchError> {
    let mut aligned: HashMap<(TableId, &str), &str> = HashMap::new();
    for attribute in set.aligned_attributes() {
        for col in set.spec().columns(attribute).unwrap_or_default() {
            aligned.insert((col.table, col.column.as_str()), attribute);
        }
    }
    let tables = set
        .tables()
        .iter()
        .map(|table| {
            let column_attrs: Vec<Option<&str>> = table
                .columns()
                .iter()
                .map(|c| aligned.get(&(table.id(), c.as_str())).copied())
                .collect();
            if column_attrs.iter().all(Option::is_none) {
                return Ok(table.clone());
            }
            let rows = table
                .rows()
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&column_attrs)
                        .map(|(cell, attr)| match (cell, attr) {
                            (Some(value), Some(attribute)) => map
                                .get(attribute, table.id(), value)
                                .map(|r| Some(r.to_string()))
                                .ok_or_else(|| MatchError::MissingRepresentative {
                                    attribute: attribute.to_string(),
                                    table: table.id(),
                                    value: value.clone(),
                                }),
                            _ => Ok(cell.clone()),
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(table.with_rows(rows))
        })
        .collect::<Result<Vec<_>, MatchError>>()?;
    Ok(set.with_tables(tables))
}
