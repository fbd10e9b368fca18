//! Small worked-example integration sets: COVID-19 case tables for three
//! cities lists with a typo, country codes vs names, and a case variant.

use crate::embedding::{DictionaryEmbedder, EmbeddingProvider};
use crate::table::{AlignedRelationSet, AlignmentSpec, Table};

pub const COVID_SYNONYMS: &[&[&str]] = &[
    &["Berlin", "Berlinn"],
    &["Germany", "DE"],
    &["Canada", "CA"],
    &["Spain", "ES"],
    &["Barcelona", "barcelona"],
];

pub fn covid_dictionary() -> EmbeddingProvider {
    EmbeddingProvider::new(
        DictionaryEmbedder::new(COVID_SYNONYMS.iter().map(|g| g.iter().copied()))
            .expect("fixture groups are disjoint"),
    )
}

pub const COVID_T1: &str = "\
City,Country,Total Cases
Berlinn,Germany,1413
Toronto,Canada,1285
Barcelona,Spain,2430
New Delhi,India,2010
";

pub const COVID_T2: &str = "\
City,Country,Vaccination Rate
Toronto,CA,83%
,US,79%
Berlin,DE,76%
Barcelona,ES,87%
";

pub const COVID_T3: &str = "\
City,Death Rate
Berlin,0.4%
barcelona,0.9%
Toronto,0.6%
Boston,0.5%
";

pub const COVID_ALIGNMENT: &str = r#"{
  "City": [
    {"table": 1, "column": "City"},
    {"table": 2, "column": "City"},
    {"table": 3, "column": "City"}
  ],
  "Country": [
    {"table": 1, "column": "Country"},
    {"table": 2, "column": "Country"}
  ]
}"#;

fn parse(id: usize, name: &str, text: &str) -> Table {
    let mut t = crate::table::parse_table(text.as_bytes(), id, name, &Default::default())
        .expect("fixture parses");
    // parse_table names the table after its source.
    t = Table::new(id, name, t.columns().to_vec(), t.rows().to_vec()).expect("fixture shape");
    t
}

/// Three tables `T1`–`T3` with `City` aligned across all and `Country`
/// across the first two. Rows are `t1`..`t12` in order.
pub fn covid_tables() -> AlignedRelationSet {
    AlignedRelationSet::new(
        vec![
            parse(1, "T1", COVID_T1),
            parse(2, "T2", COVID_T2),
            parse(3, "T3", COVID_T3),
        ],
        AlignmentSpec::from_json(COVID_ALIGNMENT).expect("fixture alignment"),
    )
    .expect("fixture set")
}

/// The three aligned `City` columns alone, one single-column table each.
pub fn city_columns() -> AlignedRelationSet {
    let column = |id: usize, values: &[&str]| {
        Table::new(
            id,
            format!("City T{id}"),
            vec!["City".into()],
            values.iter().map(|v| vec![Some(v.to_string())]).collect(),
        )
        .expect("fixture shape")
    };
    AlignedRelationSet::new(
        vec![
            column(1, &["Berlinn", "Toronto", "Barcelona", "New Delhi"]),
            column(2, &["Berlin", "Toronto", "Barcelona"]),
            column(3, &["Berlin", "Toronto", "barcelona", "Boston"]),
        ],
        AlignmentSpec::new().align("City", [(1, "City"), (2, "City"), (3, "City")]),
    )
    .expect("fixture set")
}

/// Two single-column tables aligned as attribute `K`. An empty slice gives
/// a table holding one NULL row.
pub fn two_column_set(left: &[&str], right: &[&str]) -> AlignedRelationSet {
    let column = |id: usize, values: &[&str]| {
        let rows = if values.is_empty() {
            vec![vec![None]]
        } else {
            values.iter().map(|v| vec![Some(v.to_string())]).collect()
        };
        Table::new(id, format!("T{id}"), vec!["K".into()], rows).expect("fixture shape")
    };
    AlignedRelationSet::new(
        vec![column(1, left), column(2, right)],
        AlignmentSpec::new().align("K", [(1, "K"), (2, "K")]),
    )
    .expect("fixture set")
}
