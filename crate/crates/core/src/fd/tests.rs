use super::*;
use crate::evaluation::synth::{random_integration_set, RandomSetShape};
use crate::fixtures;
use crate::table::{AlignmentSpec, Table};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn universe(attrs: &[&str]) -> Universe {
    Universe::new(attrs.iter().map(|s| s.to_string()).collect())
}

#[test]
fn consistency_and_connectedness() {
    let mut u = universe(&["City", "Country", "Cases"]);
    let a = u.tuple(&[Some("Berlin"), None, None]);
    let b = u.tuple(&[Some("Berlin"), None, Some("200")]);
    let c = u.tuple(&[Some("Toronto"), None, None]);
    let d = u.tuple(&[None, Some("DE"), None]);
    assert_eq!(
        join_consistent(&a, &b),
        JoinCheck {
            consistent: true,
            connected: true
        }
    );
    assert!(!join_consistent(&a, &c).consistent);
    let ad = join_consistent(&b, &d);
    assert!(ad.consistent && !ad.connected);
    assert!(!ad.joinable());
}

#[test]
fn merge_fills_nulls_and_is_idempotent() {
    let mut u = universe(&["A", "B"]);
    let a = u.tuple(&[Some("1"), None]);
    let b = u.tuple(&[Some("1"), Some("2")]);
    let m = merge_tuples(&u, &[&a, &b]).unwrap();
    assert_eq!(m.values(), b.values());
    assert_eq!(merge_tuples(&u, &[&a, &a]).unwrap(), a);
    let c = u.tuple(&[Some("9"), None]);
    assert_eq!(
        merge_tuples(&u, &[&a, &c]),
        Err(FdError::Inconsistent {
            attribute: "A".into()
        })
    );
}

#[test]
fn subsumption_is_proper_containment() {
    let mut u = universe(&["City", "Country", "Cases"]);
    let full = u.tuple(&[Some("Berlin"), Some("DE"), Some("200")]);
    let partial = u.tuple(&[Some("Berlin"), None, Some("200")]);
    assert!(subsumes(&full, &partial));
    assert!(!subsumes(&partial, &full));
    assert!(!subsumes(&full, &full));
    let x = u.tuple(&[Some("Berlin"), None, None]);
    let y = u.tuple(&[None, Some("DE"), None]);
    assert!(!subsumes(&x, &y) && !subsumes(&y, &x));
}

fn table(u: &Arc<Universe>, tuples: Vec<WideTuple>) -> IntegratedTable {
    IntegratedTable::new(u.clone(), tuples)
}

#[test]
fn outer_join_examples() {
    let mut u = universe(&["City", "Cases", "Country"]);
    let r1 = u.tuple(&[Some("Berlin"), Some("200"), None]);
    let s1 = u.tuple(&[Some("Berlin"), None, Some("DE")]);
    let s2 = u.tuple(&[Some("Boston"), None, Some("US")]);
    let u = Arc::new(u);
    let joined = outer_join(&table(&u, vec![r1.clone()]), &table(&u, vec![s1.clone()]));
    assert_eq!(
        joined.rows(),
        vec![vec![
            Some("Berlin".into()),
            Some("200".into()),
            Some("DE".into())
        ]]
    );
    let disjoint = outer_join(&table(&u, vec![r1.clone()]), &table(&u, vec![s2.clone()]));
    assert_eq!(disjoint.len(), 2);
    let empty = outer_join(&table(&u, vec![]), &table(&u, vec![s1.clone(), s2.clone()]));
    assert_eq!(empty.rows(), table(&u, vec![s1, s2]).rows());
}

#[test]
fn outer_union_collapses_duplicates() {
    let mut u = universe(&["A", "X"]);
    let a = u.tuple(&[Some("a"), None]);
    let b = u.tuple(&[Some("b"), Some("x")]);
    let u = Arc::new(u);
    let rel = table(&u, vec![a.clone(), b.clone()]);
    assert_eq!(
        outer_union(&[rel.clone(), rel.clone()]).unwrap().rows(),
        rel.rows()
    );
    let joined = outer_union(&[table(&u, vec![a]), table(&u, vec![b])]).unwrap();
    assert_eq!(joined.len(), 2);
    // The tuple lacking X carries it as NULL.
    assert!(joined.rows().iter().any(|r| r[1].is_none()));
    assert!(outer_union(&[]).is_none());
}

#[test]
fn remove_subsumed_examples() {
    let mut u = universe(&["A", "B"]);
    let ab = u.tuple(&[Some("a"), Some("b")]);
    let a_ = u.tuple(&[Some("a"), None]);
    let c_ = u.tuple(&[Some("c"), None]);
    let _b = u.tuple(&[None, Some("d")]);
    let u = Arc::new(u);
    let out = remove_subsumed(&table(&u, vec![a_.clone(), ab.clone()]));
    assert_eq!(out.rows(), table(&u, vec![ab.clone()]).rows());
    let antichain = table(&u, vec![ab.clone(), c_.clone(), _b.clone()]);
    assert_eq!(remove_subsumed(&antichain).rows(), antichain.rows());
    assert_eq!(remove_subsumed(&table(&u, vec![ab.clone(), ab])).len(), 1);
}

fn covid_rows(set: &AlignedRelationSet) -> Vec<Vec<Cell>> {
    full_disjunction(set, &FdOptions::default()).unwrap().rows()
}

#[test]
fn regular_fd_on_covid_tables() {
    let set = fixtures::covid_tables();
    let fd = full_disjunction(&set, &FdOptions::default()).unwrap();
    let oracle = fd_oracle(&set, DEFAULT_ORACLE_BOUND).unwrap();
    assert_eq!(fd.rows(), oracle.rows());
    assert_eq!(fd.len(), 10);
    let berlin_like = fd
        .tuples()
        .iter()
        .filter(|t| {
            let city = fd.cells(t)[0].clone();
            matches!(city.as_deref(), Some("Berlin" | "Berlinn"))
        })
        .count();
    assert_eq!(berlin_like, 2);
}

#[test]
fn single_table_is_itself_minus_subsumed() {
    let t = Table::new(
        1,
        "T",
        vec!["A".into(), "B".into()],
        vec![
            vec![Some("a".into()), None],
            vec![Some("a".into()), Some("b".into())],
            vec![Some("a".into()), Some("b".into())],
            vec![None, None],
        ],
    )
    .unwrap();
    let set = AlignedRelationSet::new(vec![t], AlignmentSpec::new()).unwrap();
    let fd = full_disjunction(&set, &FdOptions::default()).unwrap();
    assert_eq!(fd.rows(), vec![vec![Some("a".into()), Some("b".into())]]);
    assert_eq!(fd.rows(), fd_oracle(&set, 20).unwrap().rows());
}

#[test]
fn empty_set_and_caps() {
    let set = AlignedRelationSet::new(vec![], AlignmentSpec::new()).unwrap();
    assert!(full_disjunction(&set, &FdOptions::default())
        .unwrap()
        .is_empty());
    let covid = fixtures::covid_tables();
    assert_eq!(
        full_disjunction(&covid, &FdOptions { permutation_cap: 2 }).unwrap_err(),
        FdError::PermutationCap { tables: 3, cap: 2 }
    );
    assert_eq!(
        fd_oracle(&covid, 5).unwrap_err(),
        FdError::OracleBound {
            tuples: 12,
            bound: 5
        }
    );
}

#[test]
fn two_tables_equal_outer_join() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let set = random_integration_set(
            &mut rng,
            &RandomSetShape {
                tables: 2,
                ..Default::default()
            },
        );
        let (_, bases) = base_relations(&set);
        let joined = remove_subsumed(&outer_join(&bases[0], &bases[1]));
        assert_eq!(joined.rows(), fd_oracle(&set, 20).unwrap().rows());
    }
}

#[test]
fn provenance_tracks_contributing_rows() {
    let set = fixtures::covid_tables();
    let fd = full_disjunction(&set, &FdOptions::default()).unwrap();
    let berlin = fd
        .tuples()
        .iter()
        .find(|t| fd.cells(t)[0].as_deref() == Some("Berlin"))
        .unwrap();
    // t7 is row 3 of T2, t9 is row 1 of T3.
    assert_eq!(berlin.provenance(), &[(2, 3), (3, 1)]);
    let mut csv = Vec::new();
    fd.write_csv(&mut csv, true).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("City,Country,Total Cases,Vaccination Rate,Death Rate,provenance\n"));
    assert!(text.contains("T2:3;T3:1"));
}

#[test]
fn output_is_complete_and_subsumption_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let set = random_integration_set(&mut rng, &RandomSetShape::default());
        let fd = full_disjunction(&set, &FdOptions::default()).unwrap();
        let tuples = fd.tuples();
        for (i, a) in tuples.iter().enumerate() {
            for (j, b) in tuples.iter().enumerate() {
                assert!(i == j || (!subsumes(a, b) && a.values() != b.values()));
            }
        }
        let (_, bases) = base_relations(&set);
        for base in &bases {
            for t in base.tuples() {
                let cells = base.cells(t);
                assert!(fd.tuples().iter().any(|o| {
                    fd.cells(o)
                        .iter()
                        .zip(&cells)
                        .all(|(x, y)| y.is_none() || x == y)
                }));
            }
        }
    }
}

#[test]
fn cyclic_instances_also_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = RandomSetShape {
        acyclic: false,
        ..Default::default()
    };
    for _ in 0..60 {
        let set = random_integration_set(&mut rng, &shape);
        let fd = full_disjunction(&set, &FdOptions::default()).unwrap();
        assert_eq!(fd.rows(), fd_oracle(&set, 20).unwrap().rows());
    }
}

#[test]
fn fuzzy_covid_rows_merge_entities() {
    use crate::matcher::{match_all, rewrite_tables, MatcherConfig, DEFAULT_THETA};
    let provider = fixtures::covid_dictionary();
    let config = MatcherConfig::new(DEFAULT_THETA, &provider).unwrap();
    let set = fixtures::covid_tables();
    let rewritten = rewrite_tables(
        &set,
        &match_all(&set, &config, 1).unwrap().representatives(),
    )
    .unwrap();
    let rows = covid_rows(&rewritten);
    assert_eq!(rows.len(), 6);
    assert!(rows.len() < covid_rows(&set).len());
}
