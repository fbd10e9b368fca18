//! Acceptance checks, run in sequence so the timing check has the machine
//! to itself. Prints one PASS/FAIL line per check and exits non-zero if any
//! check fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fuzzy_fd::embedding::{DictionaryEmbedder, EmbeddingProvider, EmbeddingVector};
use fuzzy_fd::evaluation::bench::{bench_scaling, run_fuzzy, run_regular, BenchConfig};
use fuzzy_fd::evaluation::synth::{
    corrupted_entities, movie_database, random_integration_set, MovieDbConfig, RandomSetShape,
};
use fuzzy_fd::evaluation::{matching_prf, GoldPairs, MatchScore};
use fuzzy_fd::fd::{fd_oracle, full_disjunction, FdOptions, IntegratedTable, DEFAULT_ORACLE_BOUND};
use fuzzy_fd::fixtures;
use fuzzy_fd::matcher::{
    match_all, match_values, pairwise_assign, Embedded, MatchPartition, MatcherConfig, Member,
    DEFAULT_THETA,
};
use fuzzy_fd::table::{AlignedRelationSet, AlignmentSpec, ColumnRef, Table};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Minimum total cost over all maximum-cardinality matchings, enumerated
/// directly. Sums run in left-index order.
fn exhaustive_min(cost: &[Vec<f64>], rows: usize, cols: usize) -> f64 {
    fn go(
        i: usize,
        cost: &[Vec<f64>],
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
        skips: usize,
    ) {
        if i == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, cost, used, acc + cost[i][j], best, skips);
                used[j] = false;
            }
        }
        // A row may stay unassigned only while rows outnumber columns.
        if skips > 0 {
            go(i + 1, cost, used, acc, best, skips - 1);
        }
    }
    let mut best = f64::INFINITY;
    go(
        0,
        cost,
        &mut vec![false; cols],
        0.0,
        &mut best,
        rows.saturating_sub(cols),
    );
    if rows == 0 || cols == 0 {
        0.0
    } else {
        best
    }
}

fn random_column(rng: &mut ChaCha8Rng, n: usize, reuse: &[Embedded]) -> Vec<Embedded> {
    let mut out: Vec<Embedded> = Vec::with_capacity(n);
    while out.len() < n {
        if !reuse.is_empty() && rng.random_bool(0.5) {
            let e = reuse[rng.random_range(0..reuse.len())].clone();
            if out.iter().all(|o| o.value != e.value) {
                out.push(e);
            }
            continue;
        }
        let values: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        out.push(Embedded {
            value: format!("v{}", rng.random::<u32>()),
            vector: EmbeddingVector::new(values),
        });
    }
    out
}

fn assignment_optimality() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    for case in 0..200 {
        let (m, n) = (rng.random_range(0..=7), rng.random_range(0..=7));
        let left = random_column(&mut rng, m, &[]);
        // Half the cases copy values across so some columns contain the other.
        let right = if case % 2 == 0 {
            random_column(&mut rng, n, &left)
        } else {
            random_column(&mut rng, n, &[])
        };
        let cost: Vec<Vec<f64>> = left
            .iter()
            .map(|l| {
                right
                    .iter()
                    .map(|r| fuzzy_fd::cosine_distance(&l.vector, &r.vector))
                    .collect()
            })
            .collect();
        let got = pairwise_assign(&left, &right, DEFAULT_THETA);
        let expected = exhaustive_min(&cost, m, n);
        ensure(got.assigned.len() == m.min(n), || {
            format!("case {case}: not a maximum matching")
        })?;
        ensure(got.assigned_cost() == expected, || {
            format!(
                "case {case} ({m}x{n}): cost {} != exhaustive {expected}",
                got.assigned_cost()
            )
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "200 instances, exact cost equality, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

/// Rows as attribute-name keyed maps, independent of column order.
fn row_set(t: &IntegratedTable) -> Vec<BTreeMap<String, String>> {
    let mut rows: Vec<BTreeMap<String, String>> = t
        .rows()
        .into_iter()
        .map(|r| {
            t.attributes()
                .iter()
                .zip(r)
                .filter_map(|(a, v)| v.map(|v| (a.clone(), v)))
                .collect()
        })
        .collect();
    rows.sort();
    rows
}

/// The same set with its tables listed in `order`.
fn reorder(set: &AlignedRelationSet, order: &[usize]) -> AlignedRelationSet {
    let tables: Vec<Table> = order
        .iter()
        .enumerate()
        .map(|(pos, &old)| {
            let t = &set.tables()[old];
            Table::new(pos + 1, t.name(), t.columns().to_vec(), t.rows().to_vec()).unwrap()
        })
        .collect();
    let mut spec = AlignmentSpec::new();
    for (attr, columns) in set.spec().attributes() {
        spec.insert(
            attr,
            columns
                .iter()
                .map(|c| ColumnRef {
                    table: order.iter().position(|&o| o + 1 == c.table).unwrap() + 1,
                    column: c.column.clone(),
                })
                .collect(),
        );
    }
    AlignedRelationSet::new(tables, spec).unwrap()
}

fn fd_correctness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_602);
    let mut tuples = 0;
    for case in 0..100 {
        let set = random_integration_set(&mut rng, &RandomSetShape::default());
        let fd = full_disjunction(&set, &FdOptions::default()).map_err(|e| e.to_string())?;
        let oracle = fd_oracle(&set, DEFAULT_ORACLE_BOUND).map_err(|e| e.to_string())?;
        ensure(fd.rows() == oracle.rows(), || {
            format!("case {case}: engine and oracle differ")
        })?;
        let mut order: Vec<usize> = (0..set.tables().len()).collect();
        order.shuffle(&mut rng);
        let permuted = full_disjunction(&reorder(&set, &order), &FdOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(row_set(&permuted) == row_set(&fd), || {
            format!("case {case}: output changes under table order {order:?}")
        })?;
        tuples += fd.len();
    }
    Ok(format!(
        "100 acyclic instances equal the oracle and are order-invariant ({tuples} tuples)"
    ))
}

fn provenance_has(t: &[(u32, u32)], rows: &[(u32, u32)]) -> bool {
    rows.iter().all(|r| t.contains(r))
}

fn worked_example_integration() -> Result<String, String> {
    let set = fixtures::covid_tables();
    let provider = fixtures::covid_dictionary();
    let config = MatcherConfig::new(DEFAULT_THETA, &provider).map_err(|e| e.to_string())?;
    let (_, fuzzy) = fuzzy_fd::fuzzy_full_disjunction(&set, &config, &FdOptions::default())
        .map_err(|e| e.to_string())?;
    let regular = run_regular(&set).map_err(|e| e.to_string())?;
    // Rows t1..t4 are T1, t5..t8 T2, t9..t12 T3.
    let (t1, t2, t3, t5, t7, t8, t9, t10) = (
        (1, 1),
        (1, 2),
        (1, 3),
        (2, 1),
        (2, 3),
        (2, 4),
        (3, 1),
        (3, 2),
    );
    let find = |table: &IntegratedTable, rows: &[(u32, u32)]| {
        table
            .tuples()
            .iter()
            .find(|t| provenance_has(t.provenance(), rows))
            .cloned()
    };
    let berlin = find(&fuzzy, &[t1, t7, t9]).ok_or("fuzzy: t1, t7, t9 not merged")?;
    ensure(fuzzy.cells(&berlin)[0].as_deref() == Some("Berlin"), || {
        "merged tuple is not Berlin".into()
    })?;
    find(&fuzzy, &[t2, t5]).ok_or("fuzzy: t2, t5 not merged")?;
    find(&fuzzy, &[t3, t8, t10]).ok_or("fuzzy: t3, t8, t10 not merged")?;
    ensure(find(&regular, &[t1, t7]).is_none(), || {
        "regular: t1 and t7 merged".into()
    })?;
    let city_of = |table: &IntegratedTable, row: (u32, u32)| {
        find(table, &[row]).map(|t| table.cells(&t)[0].clone())
    };
    ensure(
        city_of(&regular, t1) == Some(Some("Berlinn".into())),
        || "regular: t1 lost".into(),
    )?;
    ensure(city_of(&regular, t7) == Some(Some("Berlin".into())), || {
        "regular: t7 lost".into()
    })?;
    Ok(format!(
        "fuzzy merges t1/t7/t9, t2/t5, t3/t8/t10 ({} tuples); regular keeps t1 and t7 apart ({} tuples)",
        fuzzy.len(),
        regular.len()
    ))
}

fn worked_example_representatives() -> Result<String, String> {
    let provider = fixtures::covid_dictionary();
    let config = MatcherConfig::new(DEFAULT_THETA, &provider).map_err(|e| e.to_string())?;
    let matched =
        match_values(&fixtures::city_columns(), "City", &config).map_err(|e| e.to_string())?;
    let mut reps: Vec<&str> = matched
        .sets
        .iter()
        .map(|s| s.representative.as_str())
        .collect();
    reps.sort();
    ensure(
        reps == ["Barcelona", "Berlin", "Boston", "New Delhi", "Toronto"],
        || format!("representatives {reps:?}"),
    )?;
    let berlin = matched
        .sets
        .iter()
        .find(|s| s.representative == "Berlin")
        .expect("checked above");
    let count = |v: &str| berlin.members.iter().filter(|m| m.value == v).count();
    ensure(count("Berlin") == 2 && count("Berlinn") == 1, || {
        format!("Berlin set members {:?}", berlin.members)
    })?;
    Ok(format!("representatives {reps:?}; Berlin 2 > Berlinn 1"))
}

fn equi_join_parity() -> Result<String, String> {
    let mut checked = Vec::new();
    for (seed, rows) in [(1, 2_000), (2, 5_000), (3, 8_000)] {
        let set = movie_database(&MovieDbConfig::new(seed, rows));
        let regular = run_regular(&set).map_err(|e| e.to_string())?;
        let provider = EmbeddingProvider::ngram();
        let (fuzzy, _) = run_fuzzy(&set, &provider, DEFAULT_THETA).map_err(|e| e.to_string())?;
        ensure(fuzzy.rows() == regular.rows(), || {
            format!("seed {seed}: outputs differ")
        })?;
        checked.push(format!("{}->{}", set.total_rows(), regular.len()));
    }
    Ok(format!(
        "identical outputs on movie tables, rows->tuples {}",
        checked.join(", ")
    ))
}

fn runtime_overhead() -> Result<String, String> {
    let config = BenchConfig::default();
    let report = bench_scaling(&config, |p| {
        if let Some(r) = p.ratio() {
            eprintln!(
                "  {} rows: regular {:.3}s fuzzy {:.3}s ratio {r:.3}",
                p.input_rows,
                p.regular_seconds.unwrap_or_default(),
                p.fuzzy_seconds.unwrap_or_default()
            );
        }
    })
    .map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for p in &report.points {
        let ratio = p
            .ratio()
            .ok_or_else(|| format!("{} rows censored: {:?}", p.target_rows, p.censored))?;
        ensure(ratio <= 1.25, || {
            format!("{} rows: ratio {ratio:.3} > 1.25", p.input_rows)
        })?;
        summary.push(format!("{}:{ratio:.2}", p.input_rows));
    }
    ensure(report.total_seconds <= 900.0, || {
        format!("sweep took {:.0}s", report.total_seconds)
    })?;
    Ok(format!(
        "fuzzy/regular {} (limit 1.25), sweep {:.0}s",
        summary.join(" "),
        report.total_seconds
    ))
}

fn partition(sets: &[&[(usize, &str)]]) -> MatchPartition {
    let mut p = MatchPartition::new();
    p.insert(
        "K".into(),
        sets.iter()
            .map(|s| s.iter().map(|(t, v)| Member::new(*t, *v)).collect())
            .collect(),
    );
    p
}

fn gold(pairs: &[(&str, &str)]) -> GoldPairs {
    let mut g = GoldPairs::new();
    for (a, b) in pairs {
        g.insert("K", a, b);
    }
    g
}

fn metric_sanity() -> Result<String, String> {
    let perfect = matching_prf(
        &partition(&[&[(1, "a"), (2, "x")], &[(1, "b"), (2, "y")]]),
        &gold(&[("a", "x"), ("b", "y")]),
    );
    let one = MatchScore {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };
    ensure(perfect.macro_average == one, || {
        format!("perfect: {:?}", perfect.macro_average)
    })?;

    let singletons = matching_prf(
        &partition(&[&[(1, "a")], &[(2, "x")], &[(1, "b")], &[(2, "y")]]),
        &gold(&[("a", "x"), ("b", "y")]),
    );
    let zero = MatchScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    ensure(singletons.macro_average == zero, || {
        format!("singletons: {:?}", singletons.macro_average)
    })?;

    // Predicted pairs: {a,x} {a,p} {x,p} from the first set, {b,y} from the
    // second: 4. Gold: {a,x} {b,y} {c,z}, plus {b,q} with unknown q: 3.
    // Overlap {a,x} {b,y}: 2. P = 2/4, R = 2/3, F1 = 4/7.
    let partial = matching_prf(
        &partition(&[
            &[(1, "a"), (2, "x"), (3, "p")],
            &[(1, "b"), (2, "y")],
            &[(1, "c")],
            &[(2, "z")],
        ]),
        &gold(&[("a", "x"), ("b", "y"), ("c", "z"), ("b", "q")]),
    );
    let a = &partial.per_attribute[0];
    ensure((a.true_positives, a.predicted, a.gold) == (2, 4, 3), || {
        format!(
            "partial counts {:?}",
            (a.true_positives, a.predicted, a.gold)
        )
    })?;
    let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
    ensure(
        close(a.score.precision, 0.5)
            && close(a.score.recall, 2.0 / 3.0)
            && close(a.score.f1, 4.0 / 7.0),
        || format!("partial scores {:?}", a.score),
    )?;
    ensure(partial.warnings.len() == 1, || {
        format!("warnings {:?}", partial.warnings)
    })?;
    Ok("perfect 1/1/1, singletons 0/0/0, partial P=1/2 R=2/3 F1=4/7".into())
}

fn corruption_benchmark() -> Result<String, String> {
    let bench = corrupted_entities(20_240_603, 300, 3, 0.5);
    let provider = EmbeddingProvider::new(
        DictionaryEmbedder::new(bench.groups.iter().map(|g| g.iter().map(String::as_str)))
            .map_err(|e| e.to_string())?,
    );
    let config = MatcherConfig::new(DEFAULT_THETA, &provider).map_err(|e| e.to_string())?;
    let report = match_all(&bench.set, &config, 1).map_err(|e| e.to_string())?;
    let scores = matching_prf(&report.partition(), &bench.gold);
    let gold_pairs = scores.per_attribute[0].gold;
    ensure(gold_pairs > 100, || format!("only {gold_pairs} gold pairs"))?;
    ensure(scores.macro_average.f1 == 1.0, || {
        format!("scores {:?}", scores.macro_average)
    })?;
    Ok(format!("F1 = 1.0 over {gold_pairs} gold pairs"))
}

fn main() {
    let checks: &[(&str, Check)] = &[
        ("assignment optimality", assignment_optimality),
        ("full disjunction vs oracle", fd_correctness),
        ("worked example integration", worked_example_integration),
        (
            "worked example representatives",
            worked_example_representatives,
        ),
        ("equi-join parity", equi_join_parity),
        ("matching metric sanity", metric_sanity),
        ("synthetic corruption F1", corruption_benchmark),
        ("runtime overhead", runtime_overhead),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.1}s]");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
