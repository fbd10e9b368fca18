//! Full Disjunction over aligned tables with labeled nulls.
//!
//! The engine left-folds outer joins over every order of the input tables,
//! outer-unions the results, and removes subsumed tuples. Two tuples join
//! when they agree on every attribute where both are non-null and share at
//! least one such attribute. [`fd_oracle`] computes the same result by
//! enumerating tuple subsets and is used to check the engine.

mod oracle;

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::num::NonZeroU32;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

use crate::table::{AlignedRelationSet, Cell};

pub use oracle::{fd_oracle, DEFAULT_ORACLE_BOUND};

pub const DEFAULT_PERMUTATION_CAP: usize = 7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FdError {
    #[error("{tables} tables exceed the permutation cap of {cap} (raise it with --perm-cap)")]
    PermutationCap { tables: usize, cap: usize },
    #[error("oracle refuses {tuples} input tuples (bound {bound})")]
    OracleBound { tuples: usize, bound: usize },
    #[error("cannot merge tuples that disagree on attribute {attribute:?}")]
    Inconsistent { attribute: String },
}

/// Interned cell value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(NonZeroU32);

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Attribute list plus the symbol table shared by all tuples of one
/// integration.
#[derive(Debug, Clone, Default)]
pub struct Universe {
    attributes: Vec<String>,
    symbols: Vec<String>,
    lookup: FxHashMap<String, Sym>,
}

impl Universe {
    pub fn new(attributes: Vec<String>) -> Self {
        Self {
            attributes,
            ..Self::default()
        }
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn intern(&mut self, value: &str) -> Sym {
        if let Some(&s) = self.lookup.get(value) {
            return s;
        }
        self.symbols.push(value.to_string());
        let sym = Sym(NonZeroU32::new(self.symbols.len() as u32).expect("non-zero"));
        self.lookup.insert(value.to_string(), sym);
        sym
    }

    pub fn resolve(&self, sym: Sym) -> &str {
        &self.symbols[sym.0.get() as usize - 1]
    }

    /// Builds a tuple over this universe with empty provenance.
    pub fn tuple(&mut self, cells: &[Option<&str>]) -> WideTuple {
        assert_eq!(cells.len(), self.attributes.len(), "tuple arity");
        let values = cells.iter().map(|c| c.map(|v| self.intern(v))).collect();
        WideTuple::new(values, Provenance::new())
    }
}

/// Contributing `(table id, 1-based row)` pairs, sorted.
pub type Provenance = SmallVec<[(u32, u32); 8]>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WideTuple {
    values: Box<[Option<Sym>]>,
    provenance: Provenance,
}

impl WideTuple {
    pub fn new(values: Vec<Option<Sym>>, mut provenance: Provenance) -> Self {
        provenance.sort_unstable();
        Self {
            values: values.into_boxed_slice(),
            provenance,
        }
    }

    pub fn values(&self) -> &[Option<Sym>] {
        &self.values
    }

    pub fn provenance(&self) -> &[(u32, u32)] {
        &self.provenance
    }

    pub fn non_null_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinCheck {
    /// No attribute where both are non-null and differ.
    pub consistent: bool,
    /// At least one attribute where both are non-null.
    pub connected: bool,
}

impl JoinCheck {
    pub fn joinable(self) -> bool {
        self.consistent && self.connected
    }
}

pub fn join_consistent(a: &WideTuple, b: &WideTuple) -> JoinCheck {
    debug_assert_eq!(a.values.len(), b.values.len());
    let mut connected = false;
    for (x, y) in a.values.iter().zip(b.values.iter()) {
        if let (Some(x), Some(y)) = (x, y) {
            if x != y {
                return JoinCheck {
                    consistent: false,
                    connected,
                };
            }
            connected = true;
        }
    }
    JoinCheck {
        consistent: true,
        connected,
    }
}

fn merge_pair(a: &WideTuple, b: &WideTuple) -> WideTuple {
    let values: Box<[Option<Sym>]> = a
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| x.or(*y))
        .collect();
    let mut provenance = a.provenance.clone();
    provenance.extend(b.provenance.iter().copied());
    provenance.sort_unstable();
    provenance.dedup();
    WideTuple { values, provenance }
}

/// Attribute-wise union of pairwise consistent tuples.
pub fn merge_tuples(universe: &Universe, parts: &[&WideTuple]) -> Result<WideTuple, FdError> {
    let (first, rest) = parts.split_first().expect("merge of no tuples");
    rest.iter().try_fold((*first).clone(), |acc, t| {
        if let Some(i) = acc
            .values
            .iter()
            .zip(t.values.iter())
            .position(|(x, y)| matches!((x, y), (Some(x), Some(y)) if x != y))
        {
            return Err(FdError::Inconsistent {
                attribute: universe.attributes[i].clone(),
            });
        }
        Ok(merge_pair(&acc, t))
    })
}

/// `a` carries everything `b` does and strictly more.
pub fn subsumes(a: &WideTuple, b: &WideTuple) -> bool {
    let mut strictly_more = false;
    for (x, y) in a.values.iter().zip(b.values.iter()) {
        match (x, y) {
            (_, None) => strictly_more |= x.is_some(),
            (Some(x), Some(y)) if x == y => {}
            _ => return false,
        }
    }
    strictly_more
}

/// Set of wide tuples over one universe.
#[derive(Debug, Clone)]
pub struct IntegratedTable {
    universe: Arc<Universe>,
    tuples: Vec<WideTuple>,
}

impl IntegratedTable {
    pub fn new(universe: Arc<Universe>, tuples: Vec<WideTuple>) -> Self {
        Self { universe, tuples }
    }

    pub fn empty(universe: Arc<Universe>) -> Self {
        Self::new(universe, Vec::new())
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn attributes(&self) -> &[String] {
        &self.universe.attributes
    }

    pub fn tuples(&self) -> &[WideTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn cells(&self, tuple: &WideTuple) -> Vec<Cell> {
        tuple
            .values
            .iter()
            .map(|v| v.map(|s| self.universe.resolve(s).to_string()))
            .collect()
    }

    fn compare(&self, a: &WideTuple, b: &WideTuple) -> Ordering {
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            let ord = match (x, y) {
                (Some(x), Some(y)) if x == y => Ordering::Equal,
                (Some(x), Some(y)) => self.universe.resolve(*x).cmp(self.universe.resolve(*y)),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        a.provenance.cmp(&b.provenance)
    }

    /// Sorts tuples by attribute values, NULLs last.
    pub fn sort(&mut self) {
        let mut tuples = std::mem::take(&mut self.tuples);
        tuples.sort_by(|a, b| self.compare(a, b));
        self.tuples = tuples;
    }

    /// Resolved rows in deterministic order; equal tables give equal rows.
    pub fn rows(&self) -> Vec<Vec<Cell>> {
        let mut rows: Vec<Vec<Cell>> = self.tuples.iter().map(|t| self.cells(t)).collect();
        rows.sort_by(|a, b| cmp_rows(a, b));
        rows
    }

    /// Header is the attribute list, plus `provenance` when requested;
    /// NULL is an empty field.
    pub fn write_csv<W: Write>(&self, writer: W, provenance: bool) -> Result<(), csv::Error> {
        if self.attributes().is_empty() {
            return Ok(());
        }
        let mut sorted = self.clone();
        sorted.sort();
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.attributes().iter().map(String::as_str).collect();
        if provenance {
            header.push("provenance");
        }
        out.write_record(&header)?;
        for t in &sorted.tuples {
            let mut record: Vec<String> = t
                .values
                .iter()
                .map(|v| {
                    v.map(|s| self.universe.resolve(s).to_string())
                        .unwrap_or_default()
                })
                .collect();
            if provenance {
                record.push(format_provenance(&t.provenance));
            }
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn format_provenance(p: &[(u32, u32)]) -> String {
    p.iter()
        .map(|(t, r)| format!("T{t}:{r}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Orders rows by cell, NULLs last.
pub fn cmp_rows(a: &[Cell], b: &[Cell]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = match (x, y) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// Postings from `(attribute, value)` to the tuples of one relation.
struct JoinIndex(FxHashMap<(u32, Sym), Vec<u32>>);

impl JoinIndex {
    fn build(rel: &IntegratedTable) -> Self {
        let mut index: FxHashMap<(u32, Sym), Vec<u32>> = FxHashMap::default();
        for (k, t) in rel.tuples.iter().enumerate() {
            for (attr, v) in t.values.iter().enumerate() {
                if let Some(v) = v {
                    index.entry((attr as u32, *v)).or_default().push(k as u32);
                }
            }
        }
        Self(index)
    }
}

/// Full outer join: every joinable pair merged, plus the tuples of either
/// side that joined with nothing.
pub fn outer_join(r: &IntegratedTable, s: &IntegratedTable) -> IntegratedTable {
    assert!(
        Arc::ptr_eq(&r.universe, &s.universe),
        "outer join across universes"
    );
    IntegratedTable::new(r.universe.clone(), join_indexed(r, s, &JoinIndex::build(s)))
}

fn join_indexed(r: &IntegratedTable, s: &IntegratedTable, index: &JoinIndex) -> Vec<WideTuple> {
    let index = &index.0;
    let mut out = Vec::with_capacity(r.tuples.len() + s.tuples.len());
    let mut s_matched = vec![false; s.tuples.len()];
    // Stamp per S tuple: the R index that last probed it.
    let mut seen = vec![u32::MAX; s.tuples.len()];
    for (i, rt) in r.tuples.iter().enumerate() {
        let mut matched = false;
        for (attr, v) in rt.values.iter().enumerate() {
            let Some(v) = v else { continue };
            let Some(hits) = index.get(&(attr as u32, *v)) else {
                continue;
            };
            for &k in hits {
                let k = k as usize;
                if seen[k] == i as u32 {
                    continue;
                }
                seen[k] = i as u32;
                // Sharing (attr, v) already makes the pair connected.
                if join_consistent(rt, &s.tuples[k]).consistent {
                    out.push(merge_pair(rt, &s.tuples[k]));
                    s_matched[k] = true;
                    matched = true;
                }
            }
        }
        if !matched {
            out.push(rt.clone());
        }
    }
    out.extend(
        s.tuples
            .iter()
            .zip(&s_matched)
            .filter(|(_, m)| !**m)
            .map(|(t, _)| t.clone()),
    );
    out
}

/// Accumulates tuples keyed by values; a duplicate keeps the smaller
/// provenance so the result does not depend on insertion order.
#[derive(Default)]
struct TupleSet {
    map: FxHashMap<Box<[Option<Sym>]>, Provenance>,
}

impl TupleSet {
    fn insert(&mut self, t: &WideTuple) {
        match self.map.get_mut(&t.values) {
            Some(p) => {
                if t.provenance < *p {
                    *p = t.provenance.clone();
                }
            }
            None => {
                self.map.insert(t.values.clone(), t.provenance.clone());
            }
        }
    }

    fn insert_owned(&mut self, t: WideTuple) {
        match self.map.get_mut(&t.values) {
            Some(p) => {
                if t.provenance < *p {
                    *p = t.provenance;
                }
            }
            None => {
                self.map.insert(t.values, t.provenance);
            }
        }
    }

    fn into_tuples(self) -> Vec<WideTuple> {
        self.map
            .into_iter()
            .map(|(values, provenance)| WideTuple { values, provenance })
            .collect()
    }
}

/// Union over a shared universe with exact duplicates collapsed. Tuples
/// are already padded, as every relation spans the whole universe.
pub fn outer_union(relations: &[IntegratedTable]) -> Option<IntegratedTable> {
    let first = relations.first()?;
    let mut set = TupleSet::default();
    for rel in relations {
        assert!(Arc::ptr_eq(&rel.universe, &first.universe));
        rel.tuples.iter().for_each(|t| set.insert(t));
    }
    let mut out = IntegratedTable::new(first.universe.clone(), set.into_tuples());
    out.sort();
    Some(out)
}

/// Keeps the tuples no other tuple subsumes, one copy of each.
pub fn remove_subsumed(table: &IntegratedTable) -> IntegratedTable {
    let mut set = TupleSet::default();
    table.tuples.iter().for_each(|t| set.insert(t));
    let mut out = IntegratedTable::new(table.universe.clone(), prune_subsumed(set.into_tuples()));
    out.sort();
    out
}

/// Inputs must be duplicate-free.
fn prune_subsumed(tuples: Vec<WideTuple>) -> Vec<WideTuple> {
    let mut postings: FxHashMap<(u32, Sym), Vec<u32>> = FxHashMap::default();
    for (k, t) in tuples.iter().enumerate() {
        for (attr, v) in t.values.iter().enumerate() {
            if let Some(v) = v {
                postings
                    .entry((attr as u32, *v))
                    .or_default()
                    .push(k as u32);
            }
        }
    }
    let counts: Vec<usize> = tuples.iter().map(WideTuple::non_null_count).collect();
    let keep: Vec<bool> = tuples
        .iter()
        .enumerate()
        .map(|(k, t)| {
            // Any subsumer contains t's rarest (attribute, value).
            let rarest = t
                .values
                .iter()
                .enumerate()
                .filter_map(|(attr, v)| v.map(|v| &postings[&(attr as u32, v)]))
                .min_by_key(|p| p.len());
            match rarest {
                None => false,
                Some(candidates) => !candidates.iter().any(|&u| {
                    let u = u as usize;
                    u != k && counts[u] > counts[k] && subsumes(&tuples[u], t)
                }),
            }
        })
        .collect();
    tuples
        .into_iter()
        .zip(keep)
        .filter_map(|(t, k)| k.then_some(t))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct FdOptions {
    pub permutation_cap: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            permutation_cap: DEFAULT_PERMUTATION_CAP,
        }
    }
}

/// The universe of `set` and one relation per table. All-null rows are
/// dropped; provenance is `(table id, 1-based row)`.
pub fn base_relations(set: &AlignedRelationSet) -> (Arc<Universe>, Vec<IntegratedTable>) {
    let mut universe = Universe::new(set.attributes().to_vec());
    let mut tuples_per_table = Vec::with_capacity(set.tables().len());
    for (idx, table) in set.tables().iter().enumerate() {
        let mut tuples = Vec::with_capacity(table.rows().len());
        for (row_no, row) in set.padded_rows(idx).into_iter().enumerate() {
            if row.iter().all(Option::is_none) {
                continue;
            }
            let values = row
                .iter()
                .map(|c| c.as_deref().map(|v| universe.intern(v)))
                .collect();
            let mut provenance = Provenance::new();
            provenance.push((table.id() as u32, row_no as u32 + 1));
            tuples.push(WideTuple::new(values, provenance));
        }
        tuples_per_table.push(tuples);
    }
    let universe = Arc::new(universe);
    let relations = tuples_per_table
        .into_iter()
        .map(|tuples| {
            let mut set = TupleSet::default();
            tuples.iter().for_each(|t| set.insert(t));
            let mut rel = IntegratedTable::new(universe.clone(), set.into_tuples());
            rel.sort();
            rel
        })
        .collect();
    (universe, relations)
}

/// Outer joins in every table order, outer union, subsumption removal.
pub fn full_disjunction(
    set: &AlignedRelationSet,
    options: &FdOptions,
) -> Result<IntegratedTable, FdError> {
    let n = set.tables().len();
    if n > options.permutation_cap {
        return Err(FdError::PermutationCap {
            tables: n,
            cap: options.permutation_cap,
        });
    }
    let (universe, bases) = base_relations(set);
    Ok(full_disjunction_of(universe, &bases))
}

/// [`full_disjunction`] over prepared relations sharing `universe`.
pub fn full_disjunction_of(universe: Arc<Universe>, bases: &[IntegratedTable]) -> IntegratedTable {
    let mut leaves = TupleSet::default();
    match bases.len() {
        0 => return IntegratedTable::empty(universe),
        1 => bases[0].tuples.iter().for_each(|t| leaves.insert(t)),
        n => {
            let indexes: Vec<JoinIndex> = bases.iter().map(JoinIndex::build).collect();
            // Outer join is commutative, so each unordered first pair is
            // expanded once; prefixes are shared along the search tree.
            for a in 0..n {
                for b in a + 1..n {
                    let prefix = IntegratedTable::new(
                        universe.clone(),
                        join_indexed(&bases[a], &bases[b], &indexes[b]),
                    );
                    let used = (1u64 << a) | (1u64 << b);
                    extend_orders(bases, &indexes, prefix, used, &mut leaves);
                }
            }
        }
    }
    let mut out = IntegratedTable::new(universe, prune_subsumed(leaves.into_tuples()));
    out.sort();
    out
}

fn extend_orders(
    bases: &[IntegratedTable],
    indexes: &[JoinIndex],
    prefix: IntegratedTable,
    used: u64,
    leaves: &mut TupleSet,
) {
    if used.count_ones() as usize == bases.len() {
        prefix
            .tuples
            .into_iter()
            .for_each(|t| leaves.insert_owned(t));
        return;
    }
    for (k, base) in bases.iter().enumerate() {
        if used & (1 << k) == 0 {
            let next = IntegratedTable::new(
                prefix.universe.clone(),
                join_indexed(&prefix, base, &indexes[k]),
            );
            extend_orders(bases, indexes, next, used | (1 << k), leaves);
        }
    }
}

#[cfg(test)]
mod tests;
