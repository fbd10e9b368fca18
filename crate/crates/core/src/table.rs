//! Tables with labeled nulls, alignment specifications, and the aligned
//! relation set that binds physical columns to integrated attributes.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based position of a table in its integration set.
pub type TableId = usize;

/// A cell is either a string value or a labeled null.
pub type Cell = Option<String>;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited text in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing header row")]
    MissingHeader { path: String },
    #[error("{path}: row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        path: String,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("table {table}: unknown column {column:?}")]
    UnknownColumn { table: TableId, column: String },
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("alignment references table {table}, but the integration set has {count} tables")]
    UnknownTable { table: TableId, count: usize },
    #[error("attribute {attribute:?} aligns more than one column of table {table}")]
    DuplicateTableInAttribute { attribute: String, table: TableId },
    #[error("column {column:?} of table {table} is aligned to both {first:?} and {second:?}")]
    ColumnAlignedTwice {
        table: TableId,
        column: String,
        first: String,
        second: String,
    },
    #[error("invalid alignment specification: {0}")]
    AlignmentFormat(String),
}

/// Options for reading delimited text.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Compared case-insensitively after trimming.
    pub null_markers: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            null_markers: vec![String::new(), "NULL".into(), "nan".into()],
        }
    }
}

impl LoadOptions {
    fn is_null(&self, cell: &str) -> bool {
        self.null_markers
            .iter()
            .any(|marker| marker.eq_ignore_ascii_case(cell))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    id: TableId,
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Builds a table, rejecting rows whose length differs from the header.
    pub fn new(
        id: TableId,
        name: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self, TableError> {
        let name = name.into();
        if let Some((row, cells)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != columns.len())
        {
            return Err(TableError::RaggedRow {
                path: name,
                row: row + 1,
                found: cells.len(),
                expected: columns.len(),
            });
        }
        Ok(Self {
            id,
            name,
            columns,
            rows,
        })
    }

    pub fn id(&self) -> TableId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column_index(&self, column: &str) -> Result<usize, TableError> {
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| TableError::UnknownColumn {
                table: self.id,
                column: column.to_string(),
            })
    }

    /// Non-null values of `column` in first-occurrence order, with their
    /// multiplicities.
    pub fn distinct_values(&self, column: &str) -> Result<DistinctValues, TableError> {
        let idx = self.column_index(column)?;
        Ok(DistinctValues::from_iter(
            self.rows.iter().filter_map(|row| row[idx].as_deref()),
        ))
    }

    pub(crate) fn with_rows(&self, rows: Vec<Vec<Cell>>) -> Self {
        Self {
            id: self.id,
            name: self.name.clone(),
            columns: self.columns.clone(),
            rows,
        }
    }

    /// Writes the table as delimited text; NULL cells become empty fields.
    pub fn write_to<W: Write>(&self, writer: W, delimiter: u8) -> Result<(), csv::Error> {
        let mut out = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(writer);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Deduplicated column values plus the multiplicity of each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistinctValues {
    values: Vec<String>,
    counts: HashMap<String, usize>,
}

impl DistinctValues {
    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn count(&self, value: &str) -> usize {
        self.counts.get(value).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<'a> FromIterator<&'a str> for DistinctValues {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut out = DistinctValues::default();
        for value in iter {
            match out.counts.get_mut(value) {
                Some(n) => *n += 1,
                None => {
                    out.counts.insert(value.to_string(), 1);
                    out.values.push(value.to_string());
                }
            }
        }
        out
    }
}

/// Loads a delimited text file whose first row is the header.
pub fn load_table(
    path: impl AsRef<Path>,
    id: TableId,
    options: &LoadOptions,
) -> Result<Table, TableError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| TableError::Io {
        path: display.clone(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    let mut table = parse_table(file, id, &display, options)?;
    table.name = name;
    Ok(table)
}

/// Parses delimited text from any reader. `source` names the input in errors.
pub fn parse_table<R: Read>(
    reader: R,
    id: TableId,
    source: &str,
    options: &LoadOptions,
) -> Result<Table, TableError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| TableError::Csv {
            path: source.to_string(),
            source: e,
        })?,
        None => {
            return Err(TableError::MissingHeader {
                path: source.to_string(),
            })
        }
    };
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record.map_err(|e| TableError::Csv {
            path: source.to_string(),
            source: e,
        })?;
        if record.len() != columns.len() {
            return Err(TableError::RaggedRow {
                path: source.to_string(),
                row: i + 1,
                found: record.len(),
                expected: columns.len(),
            });
        }
        rows.push(
            record
                .iter()
                .map(|cell| (!options.is_null(cell)).then(|| cell.to_string()))
                .collect(),
        );
    }
    Ok(Table {
        id,
        name: source.to_string(),
        columns,
        rows,
    })
}

/// One physical column bound to an attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: TableId,
    pub column: String,
}

/// Attribute name → aligned columns, at most one per table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlignmentSpec {
    attributes: IndexMap<String, Vec<ColumnRef>>,
}

impl AlignmentSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn align(
        mut self,
        attribute: impl Into<String>,
        columns: impl IntoIterator<Item = (TableId, &'static str)>,
    ) -> Self {
        self.attributes.insert(
            attribute.into(),
            columns
                .into_iter()
                .map(|(table, column)| ColumnRef {
                    table,
                    column: column.to_string(),
                })
                .collect(),
        );
        self
    }

    pub fn insert(&mut self, attribute: impl Into<String>, columns: Vec<ColumnRef>) {
        self.attributes.insert(attribute.into(), columns);
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        serde_json::from_str(text).map_err(|e| TableError::AlignmentFormat(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("alignment spec serializes")
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &[ColumnRef])> {
        self.attributes
            .iter()
            .map(|(name, cols)| (name.as_str(), cols.as_slice()))
    }

    pub fn columns(&self, attribute: &str) -> Option<&[ColumnRef]> {
        self.attributes.get(attribute).map(Vec::as_slice)
    }

    fn validate(&self, tables: &[Table]) -> Result<(), TableError> {
        let mut bound: HashMap<(TableId, &str), &str> = HashMap::new();
        for (attribute, columns) in &self.attributes {
            let mut seen = HashSet::new();
            for col in columns {
                let table = col.table.checked_sub(1).and_then(|i| tables.get(i)).ok_or(
                    TableError::UnknownTable {
                        table: col.table,
                        count: tables.len(),
                    },
                )?;
                table.column_index(&col.column)?;
                if !seen.insert(col.table) {
                    return Err(TableError::DuplicateTableInAttribute {
                        attribute: attribute.clone(),
                        table: col.table,
                    });
                }
                if let Some(first) = bound.insert((col.table, col.column.as_str()), attribute) {
                    return Err(TableError::ColumnAlignedTwice {
                        table: col.table,
                        column: col.column.clone(),
                        first: first.to_string(),
                        second: attribute.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Non-null values of one aligned column, duplicates kept, row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnValues {
    pub table_id: TableId,
    pub column: String,
    pub values: Vec<String>,
}

/// Tables of one integration set together with the attribute binding of
/// every physical column.
#[derive(Debug, Clone)]
pub struct AlignedRelationSet {
    tables: Vec<Table>,
    spec: AlignmentSpec,
    attributes: Vec<String>,
    /// `bindings[t][c]` is the attribute index of column `c` of table `t`.
    bindings: Vec<Vec<usize>>,
}

impl AlignedRelationSet {
    /// Table ids are reassigned to input positions (1-based).
    ///
    /// Aligned columns take their attribute name. Every unaligned column
    /// becomes an attribute of its own, named by its header, or
    /// `T<id>.<header>` when the header is already taken.
    pub fn new(tables: Vec<Table>, spec: AlignmentSpec) -> Result<Self, TableError> {
        let tables: Vec<Table> = tables
            .into_iter()
            .enumerate()
            .map(|(i, mut t)| {
                t.id = i + 1;
                t
            })
            .collect();
        spec.validate(&tables)?;

        let mut aligned: HashMap<(TableId, &str), &str> = HashMap::new();
        for (attribute, columns) in spec.attributes() {
            for col in columns {
                aligned.insert((col.table, col.column.as_str()), attribute);
            }
        }
        let spec_names: HashSet<&str> = spec.attributes().map(|(n, _)| n).collect();
        let mut header_uses: HashMap<&str, usize> = HashMap::new();
        for t in &tables {
            for c in &t.columns {
                if !aligned.contains_key(&(t.id, c.as_str())) {
                    *header_uses.entry(c.as_str()).or_default() += 1;
                }
            }
        }

        let mut attributes: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut bindings = Vec::with_capacity(tables.len());
        for t in &tables {
            let mut row = Vec::with_capacity(t.columns.len());
            for c in &t.columns {
                let name = match aligned.get(&(t.id, c.as_str())) {
                    Some(attr) => attr.to_string(),
                    None if header_uses[c.as_str()] == 1 && !spec_names.contains(c.as_str()) => {
                        c.clone()
                    }
                    None => format!("T{}.{}", t.id, c),
                };
                let next = attributes.len();
                let idx = *index.entry(name.clone()).or_insert_with(|| {
                    attributes.push(name);
                    next
                });
                row.push(idx);
            }
            bindings.push(row);
        }
        // Attributes named in the spec with no columns still exist.
        for name in spec_names {
            if !index.contains_key(name) {
                index.insert(name.to_string(), attributes.len());
                attributes.push(name.to_string());
            }
        }

        Ok(Self {
            tables,
            spec,
            attributes,
            bindings,
        })
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn spec(&self) -> &AlignmentSpec {
        &self.spec
    }

    /// Union of all attribute names, in first-appearance order.
    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    /// Attributes listed in the alignment specification.
    pub fn aligned_attributes(&self) -> impl Iterator<Item = &str> {
        self.spec.attributes().map(|(name, _)| name)
    }

    pub fn attribute_index(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == attribute)
    }

    /// Attribute index for each column of the table at position `table_idx`.
    pub fn column_attributes(&self, table_idx: usize) -> &[usize] {
        &self.bindings[table_idx]
    }

    /// One entry per aligned column of `attribute`, ascending by table id.
    pub fn project_aligned(&self, attribute: &str) -> Result<Vec<ColumnValues>, TableError> {
        let columns = self
            .spec
            .columns(attribute)
            .ok_or_else(|| TableError::UnknownAttribute(attribute.to_string()))?;
        let mut out: Vec<ColumnValues> = columns
            .iter()
            .map(|col| {
                let table = &self.tables[col.table - 1];
                let idx = table.column_index(&col.column).expect("validated");
                ColumnValues {
                    table_id: col.table,
                    column: col.column.clone(),
                    values: table.rows.iter().filter_map(|r| r[idx].clone()).collect(),
                }
            })
            .collect();
        out.sort_by_key(|c| c.table_id);
        Ok(out)
    }

    /// Each table's rows laid out over the full attribute list, NULL where
    /// the table lacks the attribute.
    pub fn padded_rows(&self, table_idx: usize) -> Vec<Vec<Cell>> {
        let binding = &self.bindings[table_idx];
        self.tables[table_idx]
            .rows
            .iter()
            .map(|row| {
                let mut wide = vec![None; self.attributes.len()];
                for (cell, &attr) in row.iter().zip(binding) {
                    wide[attr] = cell.clone();
                }
                wide
            })
            .collect()
    }

    pub(crate) fn with_tables(&self, tables: Vec<Table>) -> Self {
        Self {
            tables,
            spec: self.spec.clone(),
            attributes: self.attributes.clone(),
            bindings: self.bindings.clone(),
        }
    }

    pub fn total_rows(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Table, TableError> {
        parse_table(text.as_bytes(), 1, "inline", &LoadOptions::default())
    }

    #[test]
    fn parses_header_and_rows() {
        let t = parse("City,Cases\nBerlin,200\n").unwrap();
        assert_eq!(t.columns(), ["City", "Cases"]);
        assert_eq!(t.rows().len(), 1);
        assert_eq!(t.rows()[0], vec![Some("Berlin".into()), Some("200".into())]);
    }

    #[test]
    fn null_markers_are_case_insensitive() {
        let t = parse("A,B,C,D\nBerlin,,null,NaN\n").unwrap();
        assert_eq!(t.rows()[0], vec![Some("Berlin".into()), None, None, None]);
    }

    #[test]
    fn surrounding_whitespace_is_trimmed_but_case_kept() {
        let t = parse("A\n  barcelona  \n").unwrap();
        assert_eq!(t.rows()[0][0].as_deref(), Some("barcelona"));
    }

    #[test]
    fn ragged_row_names_the_row() {
        let err = parse("A,B,C\n1,2,3\nx,y\n").unwrap_err();
        match err {
            TableError::RaggedRow {
                row,
                found,
                expected,
                ..
            } => {
                assert_eq!((row, found, expected), (2, 2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_has_no_header() {
        assert!(matches!(parse(""), Err(TableError::MissingHeader { .. })));
    }

    #[test]
    fn distinct_values_keep_counts() {
        let t = parse("X\nA\nA\n\nB\n").unwrap();
        let d = t.distinct_values("X").unwrap();
        assert_eq!(d.values(), ["A", "B"]);
        assert_eq!(d.count("A"), 2);
        assert_eq!(d.count("B"), 1);
        let nulls = parse("X,Y\n,1\nNULL,2\n").unwrap();
        assert!(nulls.distinct_values("X").unwrap().is_empty());
        assert!(matches!(
            t.distinct_values("Z"),
            Err(TableError::UnknownColumn { .. })
        ));
    }

    fn three_city_tables() -> Vec<Table> {
        vec![
            parse("City,Country\nBerlinn,Germany\nToronto,Canada\n").unwrap(),
            parse("City,Code\nBerlin,DE\n").unwrap(),
            parse("Town,Cases\nBerlin,3\n").unwrap(),
        ]
    }

    #[test]
    fn project_aligned_is_ordered_by_table() {
        let spec = AlignmentSpec::new()
            .align("City", [(3, "Town"), (1, "City"), (2, "City")])
            .align("Country", [(1, "Country")]);
        let set = AlignedRelationSet::new(three_city_tables(), spec).unwrap();
        let city = set.project_aligned("City").unwrap();
        let ids: Vec<_> = city.iter().map(|c| c.table_id).collect();
        assert_eq!(ids, [1, 2, 3]);
        assert_eq!(city[0].values, ["Berlinn", "Toronto"]);
        assert_eq!(set.project_aligned("Country").unwrap().len(), 1);
        assert!(matches!(
            set.project_aligned("Cuntry"),
            Err(TableError::UnknownAttribute(_))
        ));
    }

    #[test]
    fn attributes_cover_unaligned_columns() {
        let spec = AlignmentSpec::new().align("City", [(1, "City"), (2, "City"), (3, "Town")]);
        let set = AlignedRelationSet::new(three_city_tables(), spec).unwrap();
        assert_eq!(set.attributes(), ["City", "Country", "Code", "Cases"]);
        let padded = set.padded_rows(2);
        assert_eq!(
            padded[0],
            vec![Some("Berlin".into()), None, None, Some("3".into())]
        );
    }

    #[test]
    fn colliding_unaligned_headers_are_qualified() {
        let tables = vec![
            parse("City,Cases\nA,1\n").unwrap(),
            parse("City,Cases\nB,2\n").unwrap(),
        ];
        let spec = AlignmentSpec::new().align("City", [(1, "City"), (2, "City")]);
        let set = AlignedRelationSet::new(tables, spec).unwrap();
        assert_eq!(set.attributes(), ["City", "T1.Cases", "T2.Cases"]);
    }

    #[test]
    fn alignment_rejects_two_columns_from_one_table() {
        let spec = AlignmentSpec::new().align("X", [(1, "City"), (1, "Country")]);
        let err = AlignedRelationSet::new(three_city_tables(), spec).unwrap_err();
        assert!(matches!(err, TableError::DuplicateTableInAttribute { .. }));
    }

    #[test]
    fn alignment_rejects_missing_references() {
        let spec = AlignmentSpec::new().align("X", [(4, "City")]);
        assert!(matches!(
            AlignedRelationSet::new(three_city_tables(), spec),
            Err(TableError::UnknownTable { .. })
        ));
        let spec = AlignmentSpec::new().align("X", [(1, "Nope")]);
        assert!(matches!(
            AlignedRelationSet::new(three_city_tables(), spec),
            Err(TableError::UnknownColumn { .. })
        ));
    }

    #[test]
    fn alignment_json_shape() {
        let spec = AlignmentSpec::from_json(
            r#"{"City": [{"table": 1, "column": "City"}, {"table": 2, "column": "City"}]}"#,
        )
        .unwrap();
        assert_eq!(spec.columns("City").unwrap().len(), 2);
        assert!(AlignmentSpec::from_json(r#"{"City": [{"table": "x"}]}"#).is_err());
        assert_eq!(AlignmentSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}
