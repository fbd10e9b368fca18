use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::{MatchPartition, Member};

#[derive(Debug, Error)]
pub enum GoldError {
    #[error("cannot read gold file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed gold file: {0}")]
    Malformed(String),
}

/// Unordered value pair, stored smaller-first.
pub type ValuePair = (String, String);

fn pair(a: &str, b: &str) -> ValuePair {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// attribute → value pairs that should be matched.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldPairs {
    pairs: IndexMap<String, BTreeSet<ValuePair>>,
}

impl GoldPairs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, attribute: &str, a: &str, b: &str) {
        self.pairs
            .entry(attribute.to_string())
            .or_default()
            .insert(pair(a, b));
    }

    pub fn attribute(&self, attribute: &str) -> Option<&BTreeSet<ValuePair>> {
        self.pairs.get(attribute)
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.pairs.keys().map(String::as_str)
    }

    /// `{"attribute": [["a", "b"], ...], ...}`
    pub fn from_json(text: &str) -> Result<Self, GoldError> {
        let raw: IndexMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| GoldError::Malformed(e.to_string()))?;
        let mut gold = GoldPairs::new();
        for (attribute, entries) in raw {
            let entries = entries.as_array().ok_or_else(|| {
                GoldError::Malformed(format!(
                    "attribute {attribute:?}: expected an array of pairs"
                ))
            })?;
            gold.pairs.entry(attribute.clone()).or_default();
            for (i, entry) in entries.iter().enumerate() {
                match entry.as_array().map(Vec::as_slice) {
                    Some([serde_json::Value::String(a), serde_json::Value::String(b)]) => {
                        gold.insert(&attribute, a, b)
                    }
                    _ => return Err(GoldError::Malformed(format!(
                        "attribute {attribute:?}, entry {i}: expected [value, value], got {entry}"
                    ))),
                }
            }
        }
        Ok(gold)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GoldError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GoldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let raw: IndexMap<&str, Vec<[&str; 2]>> = self
            .pairs
            .iter()
            .map(|(k, v)| {
                (
                    k.as_str(),
                    v.iter().map(|(a, b)| [a.as_str(), b.as_str()]).collect(),
                )
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("gold serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MatchScore {
    pub fn from_counts(true_positives: usize, predicted: usize, gold: usize) -> Self {
        let precision = match predicted {
            0 if gold == 0 => 1.0,
            0 => 0.0,
            p => true_positives as f64 / p as f64,
        };
        let recall = match gold {
            0 => 1.0,
            g => true_positives as f64 / g as f64,
        };
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeScore {
    pub attribute: String,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
    pub score: MatchScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_attribute: Vec<AttributeScore>,
    /// Mean of per-attribute precision, recall, and F1.
    pub macro_average: MatchScore,
    /// Scores from pair counts pooled over attributes.
    pub micro_average: MatchScore,
    pub warnings: Vec<String>,
}

impl ScoreReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out.push_str("attribute\tprecision\trecall\tf1\n");
        for a in &self.per_attribute {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\n",
                a.attribute, a.score.precision, a.score.recall, a.score.f1
            ));
        }
        for (label, s) in [
            ("macro", &self.macro_average),
            ("micro", &self.micro_average),
        ] {
            out.push_str(&format!(
                "{label}\t{:.4}\t{:.4}\t{:.4}\n",
                s.precision, s.recall, s.f1
            ));
        }
        out
    }
}

/// Unordered pairs of distinct values, from different columns, that share
/// a value set.
pub fn predicted_pairs(sets: &[Vec<Member>]) -> BTreeSet<ValuePair> {
    let mut out = BTreeSet::new();
    for set in sets {
        for (i, a) in set.iter().enumerate() {
            for b in &set[i + 1..] {
                if a.table != b.table && a.value != b.value {
                    out.insert(pair(&a.value, &b.value));
                }
            }
        }
    }
    out
}

/// Precision, recall, and F1 of predicted value sets against gold pairs,
/// per attribute and averaged.
pub fn matching_prf(predicted: &MatchPartition, gold: &GoldPairs) -> ScoreReport {
    let mut warnings = Vec::new();
    let mut attributes: Vec<&str> = gold.attributes().collect();
    for a in predicted.keys() {
        if gold.attribute(a).is_none() {
            warnings.push(format!("attribute {a:?} has no gold pairs"));
            attributes.push(a);
        }
    }
    let empty = BTreeSet::new();
    let mut per_attribute = Vec::new();
    for attribute in attributes {
        let sets = predicted
            .get(attribute)
            .map(Vec::as_slice)
            .unwrap_or_default();
        if predicted.get(attribute).is_none() {
            warnings.push(format!(
                "attribute {attribute:?} has no predicted value sets"
            ));
        }
        let known: HashSet<&str> = sets.iter().flatten().map(|m| m.value.as_str()).collect();
        let mut gold_pairs = BTreeSet::new();
        for (a, b) in gold.attribute(attribute).unwrap_or(&empty) {
            match [a, b].into_iter().find(|v| !known.contains(v.as_str())) {
                Some(unknown) => warnings.push(format!(
                    "attribute {attribute:?}: gold pair ({a:?}, {b:?}) references unknown value {unknown:?}; ignored"
                )),
                None => {
                    gold_pairs.insert((a.clone(), b.clone()));
                }
            }
        }
        let pred = predicted_pairs(sets);
        let tp = pred.intersection(&gold_pairs).count();
        per_attribute.push(AttributeScore {
            attribute: attribute.to_string(),
            true_positives: tp,
            predicted: pred.len(),
            gold: gold_pairs.len(),
            score: MatchScore::from_counts(tp, pred.len(), gold_pairs.len()),
        });
    }

    let n = per_attribute.len();
    let macro_average = if n == 0 {
        MatchScore::from_counts(0, 0, 0)
    } else {
        let mean = |f: fn(&MatchScore) -> f64| {
            per_attribute.iter().map(|a| f(&a.score)).sum::<f64>() / n as f64
        };
        MatchScore {
            precision: mean(|s| s.precision),
            recall: mean(|s| s.recall),
            f1: mean(|s| s.f1),
        }
    };
    let (tp, p, g) = per_attribute.iter().fold((0, 0, 0), |acc, a| {
        (
            acc.0 + a.true_positives,
            acc.1 + a.predicted,
            acc.2 + a.gold,
        )
    });
    ScoreReport {
        per_attribute,
        macro_average,
        micro_average: MatchScore::from_counts(tp, p, g),
        warnings,
    }
}
