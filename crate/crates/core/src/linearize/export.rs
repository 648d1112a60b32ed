use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::DualExample;
use crate::manifest::sha256_hex;
use crate::rdf::{Iri, PrefixMap};
use crate::sampling::{FoldAssignment, Stratum, StratumLabel};

use super::{build_prompt, encode_turtlelight, LinearizeError, Weights, LINEARIZATION, LOG_BASE};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("example {index} ({entity:?}): {source}")]
    Linearize { index: usize, entity: Iri, source: LinearizeError },
    #[error("inconsistent export inputs: {0}")]
    Inconsistent(String),
}

/// Which abstract goes into the prompt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstractFormat {
    Plain,
    Markdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedRecord {
    pub prompt: String,
    pub target: String,
    pub weight: f64,
    pub stratum: StratumLabel,
    pub fold: usize,
    pub synthetic: bool,
    pub entity: Iri,
}

#[derive(Clone, Debug)]
pub struct ExportOptions {
    pub seed: u64,
    pub spec_hash: String,
    pub format: AbstractFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub seed: u64,
    pub spec_hash: String,
    pub log_base: String,
    pub linearization: String,
    pub format: AbstractFormat,
    pub k: usize,
    pub examples: usize,
    pub synthetic: usize,
    pub weights: BTreeMap<String, f64>,
    /// Relative path to SHA-256 of every written split file.
    pub files: BTreeMap<String, String>,
}

/// One record per dataset example, in dataset order.
pub fn weighted_records(
    dataset: &[DualExample],
    strata: &[Stratum],
    weights: &Weights,
    folds: &FoldAssignment,
    prefixes: &PrefixMap,
    format: AbstractFormat,
) -> Result<Vec<WeightedRecord>, ExportError> {
    let mut stratum_of: BTreeMap<usize, &StratumLabel> = BTreeMap::new();
    for s in strata {
        for &m in &s.members {
            if stratum_of.insert(m, &s.label).is_some() {
                return Err(ExportError::Inconsistent(format!("example {m} is in two strata")));
            }
        }
    }
    let expected: BTreeSet<usize> = (0..dataset.len()).collect();
    if !stratum_of.keys().copied().eq(expected.iter().copied()) {
        return Err(ExportError::Inconsistent("strata do not partition the dataset".into()));
    }
    if !folds.fold_of.keys().copied().eq(expected.iter().copied()) {
        return Err(ExportError::Inconsistent("folds do not cover the dataset".into()));
    }
    dataset
        .iter()
        .enumerate()
        .map(|(index, example)| {
            let wrap = |source| ExportError::Linearize { index, entity: example.entity.clone(), source };
            let text = match format {
                AbstractFormat::Plain => &example.abstract_plain,
                AbstractFormat::Markdown => &example.abstract_md,
            };
            let label = stratum_of[&index];
            let weight = weights
                .get(label)
                .ok_or_else(|| ExportError::Inconsistent(format!("no weight for stratum {label}")))?;
            Ok(WeightedRecord {
                prompt: build_prompt(&example.entity, text).map_err(wrap)?,
                target: encode_turtlelight(&example.graph, prefixes).map_err(wrap)?.text,
                weight,
                stratum: label.clone(),
                fold: folds.fold_of[&index],
                synthetic: example.is_synthetic(),
                entity: example.entity.clone(),
            })
        })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<(), ExportError> {
    let io = |source| ExportError::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

/// Write `fold_<i>/{train,val,test}.jsonl` for every cross-validation round
/// plus `manifest.json` under `dir`.
pub fn export_training_set(
    dir: &Path,
    dataset: &[DualExample],
    strata: &[Stratum],
    weights: &Weights,
    folds: &FoldAssignment,
    prefixes: &PrefixMap,
    options: &ExportOptions,
) -> Result<ExportManifest, ExportError> {
    let records = weighted_records(dataset, strata, weights, folds, prefixes, options.format)?;
    let mut files = BTreeMap::new();
    for (i, split) in folds.splits().iter().enumerate() {
        for (name, members) in [("train", &split.train), ("val", &split.validation), ("test", &split.test)] {
            let mut text = String::new();
            for &m in members {
                text.push_str(&serde_json::to_string(&records[m]).expect("record serializes"));
                text.push('\n');
            }
            let rel = format!("fold_{i}/{name}.jsonl");
            write(&dir.join(&rel), &text)?;
            files.insert(rel, sha256_hex(&text));
        }
    }
    let manifest = ExportManifest {
        seed: options.seed,
        spec_hash: options.spec_hash.clone(),
        log_base: LOG_BASE.to_string(),
        linearization: LINEARIZATION.to_string(),
        format: options.format,
        k: folds.k,
        examples: dataset.len(),
        synthetic: dataset.iter().filter(|e| e.is_synthetic()).count(),
        weights: weights.by_label.iter().map(|(l, w)| (l.to_string(), *w)).collect(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(&dir.join("manifest.json"), &text)?;
    Ok(manifest)
}
