//! Brute-force Full Disjunction for desk-scale inputs.
//!
//! Works on resolved strings and shares no code with the join engine: every
//! choice of at most one tuple per table that is pairwise consistent and
//! connected is merged, and the maximal merges are kept.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{FdError, IntegratedTable, Provenance, Universe, WideTuple};
use crate::table::{AlignedRelationSet, Cell};

pub const DEFAULT_ORACLE_BOUND: usize = 20;

type Row = Vec<Cell>;

fn consistent(a: &Row, b: &Row) -> bool {
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    })
}

fn shares_value(a: &Row, b: &Row) -> bool {
    a.iter().zip(b).any(|(x, y)| x.is_some() && y.is_some())
}

fn connected(rows: &[&Row]) -> bool {
    let mut reached = vec![false; rows.len()];
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..rows.len() {
            if !reached[j] && shares_value(rows[i], rows[j]) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// `a` agrees with `b` wherever `b` is non-null, and `a != b`.
fn contains(a: &Row, b: &Row) -> bool {
    a != b
        && a.iter().zip(b).all(|(x, y)| match y {
            None => true,
            Some(y) => x.as_ref() == Some(y),
        })
}

pub fn fd_oracle(set: &AlignedRelationSet, bound: usize) -> Result<IntegratedTable, FdError> {
    let width = set.attributes().len();
    let tables: Vec<Vec<(Row, (u32, u32))>> = set
        .tables()
        .iter()
        .enumerate()
        .map(|(idx, t)| {
            set.padded_rows(idx)
                .into_iter()
                .enumerate()
                .filter(|(_, r)| r.iter().any(Option::is_some))
                .map(|(k, r)| (r, (t.id() as u32, k as u32 + 1)))
                .collect()
        })
        .collect();
    let total: usize = tables.iter().map(Vec::len).sum();
    if total > bound {
        return Err(FdError::OracleBound {
            tuples: total,
            bound,
        });
    }

    // Odometer over per-table choices; digit 0 means "no tuple".
    let mut merged: BTreeMap<Row, Vec<(u32, u32)>> = BTreeMap::new();
    let mut digits = vec![0usize; tables.len()];
    loop {
        let picked: Vec<&(Row, (u32, u32))> = digits
            .iter()
            .zip(&tables)
            .filter(|(d, _)| **d > 0)
            .map(|(d, t)| &t[*d - 1])
            .collect();
        if !picked.is_empty() {
            let rows: Vec<&Row> = picked.iter().map(|(r, _)| r).collect();
            let pairwise = rows
                .iter()
                .enumerate()
                .all(|(i, a)| rows[i + 1..].iter().all(|b| consistent(a, b)));
            if pairwise && connected(&rows) {
                let mut row: Row = vec![None; width];
                for r in &rows {
                    for (cell, v) in row.iter_mut().zip(r.iter()) {
                        if cell.is_none() {
                            cell.clone_from(v);
                        }
                    }
                }
                let mut prov: Vec<(u32, u32)> = picked.iter().map(|(_, p)| *p).collect();
                prov.sort_unstable();
                merged
                    .entry(row)
                    .and_modify(|p| {
                        if prov < *p {
                            p.clone_from(&prov);
                        }
                    })
                    .or_insert(prov);
            }
        }
        // Advance.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(build(set, merged));
            }
            digits[pos] += 1;
            if digits[pos] <= tables[pos].len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn build(set: &AlignedRelationSet, merged: BTreeMap<Row, Vec<(u32, u32)>>) -> IntegratedTable {
    let rows: Vec<(&Row, &Vec<(u32, u32)>)> = merged.iter().collect();
    let maximal: Vec<_> = rows
        .iter()
        .filter(|(r, _)| !rows.iter().any(|(other, _)| contains(other, r)))
        .collect();
    let mut universe = Universe::new(set.attributes().to_vec());
    let tuples: Vec<WideTuple> = maximal
        .iter()
        .map(|(row, prov)| {
            let values = row
                .iter()
                .map(|c| c.as_deref().map(|v| universe.intern(v)))
                .collect();
            WideTuple::new(values, prov.iter().copied().collect::<Provenance>())
        })
        .collect();
    let mut out = IntegratedTable::new(Arc::new(universe), tuples);
    out.sort();
    out
}
