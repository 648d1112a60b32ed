//! Strict scoring of predicted graphs against gold graphs.
//!
//! Triples match only when subject, predicate and object are identical,
//! literal datatype and language included. Both sides are first restricted
//! to the shape's properties.
//!
//! Two averages are reported. `f1_micro` is the mean of per-graph F1 scores.
//! `f1_macro` pools triples per property across all graphs and averages the
//! per-property F1 scores. Example-averaged precision and recall sit next to
//! the pooled ones, each labelled as such.

mod baseline;
mod breakdown;
mod corrections;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::DualExample;
use crate::linearize::decode_turtlelight;
use crate::rdf::{Graph, Iri, PrefixMap, Triple};
use crate::shacl::ShaclShape;

pub use baseline::{
    align_baseline, literal_from_text, read_baseline_triples, AlignOutput, BaselineTriple, RelationMapping,
};
pub use breakdown::{per_property_breakdown, Breakdown, BreakdownRow};
pub use corrections::{apply_corrections, Correction, CorrectionOutcome, CorrectionSet, ErrorClass, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("({entity:?}, {triple}) is corrected twice")]
    DuplicateCorrection { entity: Iri, triple: String },
    #[error("mapping: {0}")]
    Mapping(String),
}

/// A model output for one entity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub entity: Iri,
    pub raw_output: String,
    /// Present exactly when the output is well-formed.
    pub decoded: Option<Graph>,
}

impl Prediction {
    pub fn from_raw(entity: Iri, raw_output: impl Into<String>, prefixes: &PrefixMap) -> Self {
        let raw_output = raw_output.into();
        let decoded = decode_turtlelight(&raw_output, prefixes).ok();
        Prediction { entity, raw_output, decoded }
    }

    pub fn from_graph(entity: Iri, graph: Graph, raw_output: impl Into<String>) -> Self {
        Prediction { entity, raw_output: raw_output.into(), decoded: Some(graph) }
    }

    pub fn well_formed(&self) -> bool {
        self.decoded.is_some()
    }
}

#[derive(Serialize, Deserialize)]
struct PredictionRecord {
    entity: Iri,
    output: String,
}

/// Read predictions from JSON Lines of `{"entity": ..., "output": ...}`.
pub fn read_predictions(text: &str, prefixes: &PrefixMap) -> Result<Vec<Prediction>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let r: PredictionRecord =
                serde_json::from_str(line).map_err(|e| EvalError::Record { line: n + 1, message: e.to_string() })?;
            Ok(Prediction::from_raw(r.entity, r.output, prefixes))
        })
        .collect()
}

pub fn prediction_to_json(p: &Prediction) -> String {
    serde_json::to_string(&PredictionRecord { entity: p.entity.clone(), output: p.raw_output.clone() })
        .expect("record serializes")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    /// `tp / (tp + fp)`, or 0 without predictions.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, or 0 without gold triples.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Harmonic mean, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionStatus {
    WellFormed,
    Malformed,
    Missing,
}

/// Gold and predicted triples of one example, restricted to the shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoredGraph {
    pub entity: Iri,
    pub gold: BTreeSet<Triple>,
    pub predicted: BTreeSet<Triple>,
    pub status: PredictionStatus,
}

impl ScoredGraph {
    pub fn counts(&self) -> Counts {
        let tp = self.gold.intersection(&self.predicted).count();
        Counts { tp, fp: self.predicted.len() - tp, fn_: self.gold.len() - tp }
    }

    fn property_counts(&self) -> BTreeMap<Iri, Counts> {
        let mut out: BTreeMap<Iri, Counts> = BTreeMap::new();
        for t in &self.gold {
            let c = out.entry(t.predicate.clone()).or_default();
            if self.predicted.contains(t) {
                c.tp += 1;
            } else {
                c.fn_ += 1;
            }
        }
        for t in self.predicted.difference(&self.gold) {
            out.entry(t.predicate.clone()).or_default().fp += 1;
        }
        out
    }
}

/// Everything a report is computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalInputs {
    pub graphs: Vec<ScoredGraph>,
    pub subject_match_rate: Option<f64>,
    /// Predictions for entities absent from the gold set.
    pub unknown_predictions: usize,
    /// Predicted triples dropped because their predicate is not in the shape.
    pub out_of_shape: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphScore {
    pub entity: Iri,
    pub status: PredictionStatus,
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyScore {
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Mean of per-graph precision.
    pub precision_example_avg: f64,
    /// Mean of per-graph recall.
    pub recall_example_avg: f64,
    pub f1_micro: f64,
    pub f1_macro: f64,
    pub precision_pooled: f64,
    pub recall_pooled: f64,
    pub f1_pooled: f64,
    pub wellformed_rate: Option<f64>,
    pub subject_match_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub graphs: Vec<GraphScore>,
    pub properties: BTreeMap<Iri, PropertyScore>,
    pub totals: Counts,
    pub aggregates: Aggregates,
    pub missing_predictions: usize,
    pub unknown_predictions: usize,
    pub out_of_shape: usize,
}

/// Share of well-formed predictions whose subjects all equal their entity.
/// `None` when no prediction is well-formed.
pub fn subject_match_rate(preds: &[Prediction]) -> Option<f64> {
    let decoded: Vec<(&Iri, &Graph)> =
        preds.iter().filter_map(|p| p.decoded.as_ref().map(|g| (&p.entity, g))).collect();
    if decoded.is_empty() {
        return None;
    }
    let matching = decoded.iter().filter(|(e, g)| g.iter().all(|t| &t.subject == *e)).count();
    Some(matching as f64 / decoded.len() as f64)
}

/// Pair gold examples with predictions. The n-th prediction for an entity
/// goes to the n-th gold example of that entity.
pub fn score_inputs(gold: &[DualExample], preds: &[Prediction], shape: &ShaclShape) -> EvalInputs {
    let properties = shape.properties();
    let mut queues: BTreeMap<&Iri, VecDeque<&Prediction>> = BTreeMap::new();
    for p in preds {
        queues.entry(&p.entity).or_default().push_back(p);
    }
    let mut assigned: Vec<Option<&Prediction>> = Vec::with_capacity(gold.len());
    for g in gold {
        assigned.push(queues.get_mut(&g.entity).and_then(VecDeque::pop_front));
    }
    let unknown_predictions: usize = queues.values().map(VecDeque::len).sum();
    if unknown_predictions > 0 {
        warn!("{unknown_predictions} predictions match no gold example and are skipped");
    }
    let scored: Vec<(ScoredGraph, usize)> = gold
        .par_iter()
        .zip(assigned.par_iter())
        .map(|(g, p)| {
            let gold_triples = g.graph.restrict_to(&properties).triples().clone();
            let (predicted, status, dropped) = match p.map(|p| &p.decoded) {
                None => (BTreeSet::new(), PredictionStatus::Missing, 0),
                Some(None) => (BTreeSet::new(), PredictionStatus::Malformed, 0),
                Some(Some(decoded)) => {
                    let kept = decoded.restrict_to(&properties).triples().clone();
                    let dropped = decoded.len() - kept.len();
                    (kept, PredictionStatus::WellFormed, dropped)
                }
            };
            (ScoredGraph { entity: g.entity.clone(), gold: gold_triples, predicted, status }, dropped)
        })
        .collect();
    let matched: Vec<Prediction> = assigned.iter().flatten().map(|p| (*p).clone()).collect();
    EvalInputs {
        out_of_shape: scored.iter().map(|(_, d)| d).sum(),
        graphs: scored.into_iter().map(|(g, _)| g).collect(),
        subject_match_rate: subject_match_rate(&matched),
        unknown_predictions,
    }
}

pub fn report(inputs: &EvalInputs) -> EvalReport {
    let mut totals = Counts::default();
    let mut pools: BTreeMap<Iri, Counts> = BTreeMap::new();
    let mut graphs = Vec::with_capacity(inputs.graphs.len());
    for g in &inputs.graphs {
        let c = g.counts();
        totals.add(c);
        for (p, pc) in g.property_counts() {
            pools.entry(p).or_default().add(pc);
        }
        graphs.push(GraphScore {
            entity: g.entity.clone(),
            status: g.status,
            counts: c,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        });
    }
    let properties: BTreeMap<Iri, PropertyScore> = pools
        .into_iter()
        .map(|(p, c)| (p, PropertyScore { counts: c, precision: c.precision(), recall: c.recall(), f1: c.f1() }))
        .collect();
    let mean =
        |values: Vec<f64>| if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / values.len() as f64 };
    let predicted: Vec<&ScoredGraph> = inputs.graphs.iter().filter(|g| g.status != PredictionStatus::Missing).collect();
    let wellformed_rate = (!predicted.is_empty()).then(|| {
        predicted.iter().filter(|g| g.status == PredictionStatus::WellFormed).count() as f64 / predicted.len() as f64
    });
    let aggregates = Aggregates {
        precision_example_avg: mean(graphs.iter().map(|g| g.precision).collect()),
        recall_example_avg: mean(graphs.iter().map(|g| g.recall).collect()),
        f1_micro: mean(graphs.iter().map(|g| g.f1).collect()),
        f1_macro: mean(properties.values().map(|p| p.f1).collect()),
        precision_pooled: totals.precision(),
        recall_pooled: totals.recall(),
        f1_pooled: totals.f1(),
        wellformed_rate,
        subject_match_rate: inputs.subject_match_rate,
    };
    EvalReport {
        missing_predictions: inputs.graphs.len() - predicted.len(),
        graphs,
        properties,
        totals,
        aggregates,
        unknown_predictions: inputs.unknown_predictions,
        out_of_shape: inputs.out_of_shape,
    }
}

pub fn score(gold: &[DualExample], preds: &[Prediction], shape: &ShaclShape) -> EvalReport {
    report(&score_inputs(gold, preds, shape))
}
