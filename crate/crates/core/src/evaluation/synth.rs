//! Seeded generators for test and benchmark integration sets.

use std::collections::{BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::GoldPairs;
use crate::table::{AlignedRelationSet, AlignmentSpec, Cell, ColumnRef, Table};

/// Size limits for [`random_integration_set`].
#[derive(Debug, Clone)]
pub struct RandomSetShape {
    /// Exact table count; `0` picks one in `1..=3`.
    pub tables: usize,
    pub max_rows: usize,
    pub max_attributes: usize,
    /// Values per attribute domain. Small domains make joins likely.
    pub domain: usize,
    pub null_rate: f64,
    /// Every table after the first shares exactly one attribute with the
    /// tables before it, giving a join tree.
    pub acyclic: bool,
}

impl Default for RandomSetShape {
    fn default() -> Self {
        Self {
            tables: 0,
            max_rows: 5,
            max_attributes: 4,
            domain: 3,
            null_rate: 0.15,
            acyclic: true,
        }
    }
}

/// Small random tables over attributes `a0`, `a1`, ..., each column named
/// after its attribute and aligned wherever two tables share it.
pub fn random_integration_set(rng: &mut ChaCha8Rng, shape: &RandomSetShape) -> AlignedRelationSet {
    let n_tables = if shape.tables == 0 {
        rng.random_range(1..=3)
    } else {
        shape.tables
    };
    let n_attrs = rng.random_range(2..=shape.max_attributes.max(2));
    let mut schemas: Vec<Vec<usize>> = Vec::with_capacity(n_tables);
    if shape.acyclic {
        let mut fresh = 0usize;
        let mut used: Vec<usize> = Vec::new();
        for t in 0..n_tables {
            let mut schema = Vec::new();
            if t > 0 {
                schema.push(*used.choose(rng).expect("first table has attributes"));
            }
            let wanted = if t == 0 {
                rng.random_range(1..=2)
            } else {
                rng.random_range(0..=1)
            };
            for _ in 0..wanted {
                if fresh < n_attrs {
                    schema.push(fresh);
                    used.push(fresh);
                    fresh += 1;
                }
            }
            schemas.push(schema);
        }
    } else {
        for _ in 0..n_tables {
            let mut schema: Vec<usize> = (0..n_attrs).filter(|_| rng.random_bool(0.5)).collect();
            if schema.is_empty() {
                schema.push(rng.random_range(0..n_attrs));
            }
            schemas.push(schema);
        }
    }

    let tables: Vec<Table> = schemas
        .iter()
        .enumerate()
        .map(|(i, schema)| {
            let rows = (0..rng.random_range(1..=shape.max_rows))
                .map(|_| {
                    schema
                        .iter()
                        .map(|_| {
                            if rng.random_bool(shape.null_rate) {
                                None
                            } else {
                                Some(format!("v{}", rng.random_range(0..shape.domain)))
                            }
                        })
                        .collect()
                })
                .collect();
            let columns = schema.iter().map(|a| format!("a{a}")).collect();
            Table::new(i + 1, format!("R{}", i + 1), columns, rows).expect("rows match schema")
        })
        .collect();

    let mut spec = AlignmentSpec::new();
    for a in 0..n_attrs {
        let columns: Vec<ColumnRef> = schemas
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(&a))
            .map(|(i, _)| ColumnRef {
                table: i + 1,
                column: format!("a{a}"),
            })
            .collect();
        if columns.len() > 1 {
            spec.insert(format!("a{a}"), columns);
        }
    }
    AlignedRelationSet::new(tables, spec).expect("generated alignment is valid")
}

const WORDS: &[&str] = &[
    "river", "night", "stone", "garden", "silver", "winter", "harbor", "echo", "crown", "shadow",
    "fire", "glass", "empire", "road", "storm", "island", "letter", "dream", "summer", "machine",
    "forest", "ghost", "city", "heart",
];
const FIRST: &[&str] = &[
    "Ada", "Bruno", "Clara", "Dmitri", "Elena", "Farid", "Greta", "Hiro", "Ines", "Jonas", "Kemal",
    "Lena", "Marco", "Nadia", "Omar", "Paula",
];
const LAST: &[&str] = &[
    "Abe", "Berg", "Costa", "Duval", "Eriksen", "Fischer", "Garcia", "Holm", "Ito", "Jansen",
    "Kowalski", "Lind", "Moreau", "Novak", "Okafor", "Petrov",
];
const GENRES: &[&str] = &[
    "Drama",
    "Comedy",
    "Documentary",
    "Short",
    "Thriller",
    "Animation",
];
const REGIONS: &[(&str, &str)] = &[
    ("US", "en"),
    ("DE", "de"),
    ("FR", "fr"),
    ("JP", "ja"),
    ("BR", "pt"),
];
const CATEGORIES: &[&str] = &["actor", "actress", "director", "writer", "composer"];

/// Knobs for [`movie_database`].
#[derive(Debug, Clone)]
pub struct MovieDbConfig {
    pub seed: u64,
    /// Stop before the total row count would exceed this.
    pub target_rows: usize,
    /// Probability that an identifier outside the first table of its
    /// attribute is written in upper case.
    pub corruption: f64,
}

impl MovieDbConfig {
    pub fn new(seed: u64, target_rows: usize) -> Self {
        Self {
            seed,
            target_rows,
            corruption: 0.0,
        }
    }
}

/// A six-table movie catalogue: titles, people, ratings, alternative
/// titles, credits, and episodes. `tconst` is aligned across the five title
/// tables (`titleId` in the alternative titles) and `nconst` across people
/// and credits.
///
/// Every identifier referenced anywhere appears in the first table of its
/// attribute, so without corruption value matching maps each value to
/// itself.
pub fn movie_database(config: &MovieDbConfig) -> AlignedRelationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut basics = Vec::new();
    let mut names = Vec::new();
    let mut ratings = Vec::new();
    let mut akas = Vec::new();
    let mut principals = Vec::new();
    let mut episodes = Vec::new();
    let mut people: Vec<String> = Vec::new();
    let mut total = 0usize;
    let mut title_no = 0usize;
    let s = |v: String| Some(v);

    loop {
        let mut new_people = Vec::new();
        let mut credit_people = Vec::new();
        let n_credits = rng.random_range(1..=3);
        for _ in 0..n_credits {
            if people.is_empty() || rng.random_bool(0.4) {
                let id = format!("nm{:07}", 1000 + people.len() + new_people.len());
                new_people.push(id.clone());
                credit_people.push(id);
            } else {
                credit_people.push(people.choose(&mut rng).expect("non-empty").clone());
            }
        }
        credit_people.sort();
        credit_people.dedup();
        let has_rating = rng.random_bool(0.9);
        let n_akas = rng.random_range(0..=2);
        let has_episode = rng.random_bool(0.3);
        let rows = 1
            + new_people.len()
            + has_rating as usize
            + n_akas
            + credit_people.len()
            + has_episode as usize;
        if total + rows > config.target_rows {
            break;
        }
        total += rows;
        title_no += 1;
        let tconst = format!("tt{:07}", 100 + title_no * 13);

        let title = format!(
            "The {} {}",
            capitalize(WORDS.choose(&mut rng).expect("words")),
            capitalize(WORDS.choose(&mut rng).expect("words"))
        );
        basics.push(vec![
            s(tconst.clone()),
            s(title),
            s(rng.random_range(1920..2024).to_string()),
            s(GENRES.choose(&mut rng).expect("genres").to_string()),
        ]);
        for id in &new_people {
            names.push(vec![
                s(id.clone()),
                s(format!(
                    "{} {}",
                    FIRST.choose(&mut rng).expect("names"),
                    LAST.choose(&mut rng).expect("names")
                )),
                s(rng.random_range(1900..2005).to_string()),
            ]);
        }
        people.extend(new_people);
        let corrupt = |rng: &mut ChaCha8Rng, id: &str| {
            if config.corruption > 0.0 && rng.random_bool(config.corruption) {
                id.to_uppercase()
            } else {
                id.to_string()
            }
        };
        if has_rating {
            ratings.push(vec![
                s(corrupt(&mut rng, &tconst)),
                s(format!("{:.1}", rng.random_range(10..100) as f64 / 10.0)),
                s(rng.random_range(5..100_000).to_string()),
            ]);
        }
        let mut regions: Vec<&(&str, &str)> = REGIONS.iter().collect();
        regions.shuffle(&mut rng);
        for (region, language) in regions.into_iter().take(n_akas) {
            akas.push(vec![
                s(corrupt(&mut rng, &tconst)),
                s(region.to_string()),
                s(language.to_string()),
            ]);
        }
        for person in credit_people {
            principals.push(vec![
                s(corrupt(&mut rng, &tconst)),
                s(corrupt(&mut rng, &person)),
                s(CATEGORIES.choose(&mut rng).expect("categories").to_string()),
            ]);
        }
        if has_episode {
            episodes.push(vec![
                s(corrupt(&mut rng, &tconst)),
                s(rng.random_range(1..10).to_string()),
                s(rng.random_range(1..25).to_string()),
            ]);
        }
    }

    let table = |id: usize, name: &str, columns: &[&str], rows: Vec<Vec<Cell>>| {
        Table::new(
            id,
            name,
            columns.iter().map(|c| c.to_string()).collect(),
            rows,
        )
        .expect("generated rows match header")
    };
    let tables = vec![
        table(
            1,
            "title_basics",
            &["tconst", "primaryTitle", "startYear", "genre"],
            basics,
        ),
        table(
            2,
            "name_basics",
            &["nconst", "primaryName", "birthYear"],
            names,
        ),
        table(
            3,
            "title_ratings",
            &["tconst", "averageRating", "numVotes"],
            ratings,
        ),
        table(4, "title_akas", &["titleId", "region", "language"], akas),
        table(
            5,
            "title_principals",
            &["tconst", "nconst", "category"],
            principals,
        ),
        table(
            6,
            "title_episode",
            &["tconst", "seasonNumber", "episodeNumber"],
            episodes,
        ),
    ];
    let spec = AlignmentSpec::new()
        .align(
            "tconst",
            [
                (1, "tconst"),
                (3, "tconst"),
                (4, "titleId"),
                (5, "tconst"),
                (6, "tconst"),
            ],
        )
        .align("nconst", [(2, "nconst"), (5, "nconst")]);
    AlignedRelationSet::new(tables, spec).expect("generated alignment is valid")
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Output of [`corrupted_entities`].
#[derive(Debug, Clone)]
pub struct CorruptedEntities {
    pub set: AlignedRelationSet,
    /// Each entity's spellings, for a dictionary embedder.
    pub groups: Vec<Vec<String>>,
    pub gold: GoldPairs,
}

/// Tables listing the same entities under an aligned `name` column, with
/// spellings outside the first table corrupted at `rate` by a single edit
/// (drop, duplicate, swap, or case change).
pub fn corrupted_entities(
    seed: u64,
    entities: usize,
    tables: usize,
    rate: f64,
) -> CorruptedEntities {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: HashSet<String> = HashSet::new();
    let mut originals = Vec::with_capacity(entities);
    while originals.len() < entities {
        let name = format!(
            "{}{}",
            capitalize(WORDS.choose(&mut rng).expect("words")),
            WORDS.choose(&mut rng).expect("words")
        );
        if taken.insert(name.clone()) {
            originals.push(name);
        }
    }

    let mut groups: Vec<BTreeSet<String>> = originals
        .iter()
        .map(|o| BTreeSet::from([o.clone()]))
        .collect();
    // Per entity: the spelling used in each table, if listed there.
    let mut spellings: Vec<Vec<Option<String>>> = vec![vec![None; tables]; entities];
    for (e, original) in originals.iter().enumerate() {
        for (t, slot) in spellings[e].iter_mut().enumerate() {
            if !rng.random_bool(0.8) {
                continue;
            }
            let mut spelling = original.clone();
            if t > 0 && rng.random_bool(rate) {
                for _ in 0..20 {
                    let candidate = single_edit(&mut rng, original);
                    if candidate != *original
                        && (groups[e].contains(&candidate) || !taken.contains(&candidate))
                    {
                        spelling = candidate;
                        break;
                    }
                }
            }
            taken.insert(spelling.clone());
            groups[e].insert(spelling.clone());
            *slot = Some(spelling);
        }
    }

    let mut gold = GoldPairs::new();
    let mut built = Vec::with_capacity(tables);
    let mut spec_columns = Vec::with_capacity(tables);
    for t in 0..tables {
        let mut order: Vec<usize> = (0..entities).collect();
        order.shuffle(&mut rng);
        let rows: Vec<Vec<Cell>> = order
            .into_iter()
            .filter_map(|e| spellings[e][t].clone().map(|s| (e, s)))
            .map(|(e, s)| vec![Some(s), Some(format!("{}", e * 10 + t))])
            .collect();
        built.push(
            Table::new(
                t + 1,
                format!("E{}", t + 1),
                vec!["name".into(), format!("info{}", t + 1)],
                rows,
            )
            .expect("two columns"),
        );
        spec_columns.push(ColumnRef {
            table: t + 1,
            column: "name".into(),
        });
    }
    for per_table in &spellings {
        for (i, a) in per_table.iter().enumerate() {
            for b in &per_table[i + 1..] {
                if let (Some(a), Some(b)) = (a, b) {
                    if a != b {
                        gold.insert("name", a, b);
                    }
                }
            }
        }
    }
    let mut spec = AlignmentSpec::new();
    spec.insert("name", spec_columns);
    CorruptedEntities {
        set: AlignedRelationSet::new(built, spec).expect("generated alignment is valid"),
        groups: groups
            .into_iter()
            .map(|g| g.into_iter().collect())
            .collect(),
        gold,
    }
}

fn single_edit(rng: &mut ChaCha8Rng, word: &str) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    let i = rng.random_range(0..chars.len());
    match rng.random_range(0..4) {
        0 if chars.len() > 3 => {
            chars.remove(i);
        }
        1 => chars.insert(i, chars[i]),
        2 if i + 1 < chars.len() => chars.swap(i, i + 1),
        _ => {
            chars[i] = if chars[i].is_uppercase() {
                chars[i].to_lowercase().next().unwrap_or(chars[i])
            } else {
                chars[i].to_uppercase().next().unwrap_or(chars[i])
            }
        }
    }
    chars.into_iter().collect()
}
