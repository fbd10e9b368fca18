//! Browser bindings for trying value matching and integration on small
//! hand-edited inputs. Each exported function returns JSON for the page to
//! render; the `*_json` functions hold the logic and also run natively.

use fuzzy_fd::embedding::{DictionaryEmbedder, EmbeddingProvider};
use fuzzy_fd::fd::format_provenance;
use fuzzy_fd::matcher::{match_values, MatcherConfig};
use fuzzy_fd::table::{parse_table, AlignedRelationSet, AlignmentSpec, LoadOptions, Table};
use fuzzy_fd::{cosine_distance, full_disjunction, rewrite_tables, FdOptions};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// The example synonym groups, as the page pre-fills them.
pub fn example_synonyms() -> String {
    serde_json::to_string_pretty(fuzzy_fd::fixtures::COVID_SYNONYMS).expect("static groups")
}

/// Character n-gram embeddings, or a dictionary when `synonyms` holds a
/// non-empty JSON array of groups.
fn provider(synonyms: &str) -> Result<EmbeddingProvider, String> {
    if synonyms.trim().is_empty() {
        return Ok(EmbeddingProvider::ngram());
    }
    DictionaryEmbedder::from_json(synonyms)
        .map(EmbeddingProvider::new)
        .map_err(|e| e.to_string())
}

fn config(theta: f64, provider: &EmbeddingProvider) -> Result<MatcherConfig<'_>, String> {
    MatcherConfig::new(theta, provider).map_err(|e| e.to_string())
}

/// `{"distance": d, "matches": d < theta}` for two strings.
pub fn distance_json(a: &str, b: &str, theta: f64, synonyms: &str) -> Result<String, String> {
    let a = a.trim();
    let b = b.trim();
    if a.is_empty() || b.is_empty() {
        return Err("enter two non-empty strings".into());
    }
    let provider = provider(synonyms)?;
    let u = provider.embed_one(a).map_err(|e| e.to_string())?;
    let v = provider.embed_one(b).map_err(|e| e.to_string())?;
    let d = cosine_distance(&u, &v);
    Ok(json!({ "distance": d, "matches": d < theta }).to_string())
}

/// Matches columns given one value per line, as a single aligned attribute.
pub fn match_columns_json(
    columns: &[String],
    theta: f64,
    synonyms: &str,
) -> Result<String, String> {
    let tables = columns
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let rows = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| vec![Some(l.to_string())])
                .collect();
            Table::new(
                i + 1,
                format!("Column {}", i + 1),
                vec!["value".into()],
                rows,
            )
            .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let columns: Vec<(usize, &'static str)> = (1..=tables.len()).map(|t| (t, "value")).collect();
    let set = AlignedRelationSet::new(tables, AlignmentSpec::new().align("value", columns))
        .map_err(|e| e.to_string())?;
    let provider = provider(synonyms)?;
    let matched =
        match_values(&set, "value", &config(theta, &provider)?).map_err(|e| e.to_string())?;
    let sets: Vec<Value> = matched
        .sets
        .iter()
        .map(|s| {
            json!({
                "representative": s.representative,
                "members": s.members.iter().map(|m| json!({"column": m.table, "value": m.value})).collect::<Vec<_>>(),
                "edges": s.edges.iter().map(|e| json!({"from": e.left.value, "to": e.right.value, "distance": e.distance})).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({ "sets": sets }).to_string())
}

/// Integrates CSV tables under an alignment, with or without value
/// matching. Returns `{"attributes": [...], "rows": [[...]], "provenance": [...]}`.
pub fn integrate_json(
    tables_csv: &[String],
    alignment: &str,
    theta: f64,
    fuzzy: bool,
    synonyms: &str,
) -> Result<String, String> {
    let tables = tables_csv
        .iter()
        .enumerate()
        .map(|(i, text)| {
            parse_table(
                text.as_bytes(),
                i + 1,
                &format!("T{}", i + 1),
                &LoadOptions::default(),
            )
            .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spec = if alignment.trim().is_empty() {
        AlignmentSpec::new()
    } else {
        AlignmentSpec::from_json(alignment).map_err(|e| e.to_string())?
    };
    let mut set = AlignedRelationSet::new(tables, spec).map_err(|e| e.to_string())?;
    if fuzzy {
        let provider = provider(synonyms)?;
        let report =
            fuzzy_fd::match_all(&set, &config(theta, &provider)?, 1).map_err(|e| e.to_string())?;
        set = rewrite_tables(&set, &report.representatives()).map_err(|e| e.to_string())?;
    }
    let fd = full_disjunction(&set, &FdOptions::default()).map_err(|e| e.to_string())?;
    Ok(json!({
        "attributes": fd.attributes(),
        "rows": fd.rows(),
        "provenance": fd.tuples().iter().map(|t| format_provenance(t.provenance())).collect::<Vec<_>>(),
    })
    .to_string())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = exampleSynonyms)]
pub fn example_synonyms_js() -> String {
    example_synonyms()
}

#[wasm_bindgen]
pub fn distance(a: &str, b: &str, theta: f64, synonyms: &str) -> Result<String, JsValue> {
    js(distance_json(a, b, theta, synonyms))
}

#[wasm_bindgen(js_name = matchColumns)]
pub fn match_columns(columns: Vec<String>, theta: f64, synonyms: &str) -> Result<String, JsValue> {
    js(match_columns_json(&columns, theta, synonyms))
}

#[wasm_bindgen]
pub fn integrate(
    tables: Vec<String>,
    alignment: &str,
    theta: f64,
    fuzzy: bool,
    synonyms: &str,
) -> Result<String, JsValue> {
    js(integrate_json(&tables, alignment, theta, fuzzy, synonyms))
}
