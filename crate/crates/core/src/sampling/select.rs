use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::ingest::DualExample;
use crate::shacl::ShaclShape;

use super::{exposure::sufficient_exposure_sample, rng, FrequencySplit, SamplingError};

/// Size of every cross-evaluation set.
pub const CROSS_EVAL_SIZE: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossEvalSet {
    /// Articles created on or after the date cutoff.
    New,
    /// Graphs using frequent properties only.
    Frequent,
    /// Graphs using at least one rare property.
    Rare,
    /// Any example, whatever its creation date.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "set")]
pub enum SampleKind {
    /// At least one datatype and one object property.
    BiasedDtOp,
    /// At least one rare property.
    RareBiased,
    RandomScaled,
    SufficientExposure,
    CrossEval(CrossEvalSet),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    #[serde(flatten)]
    pub kind: SampleKind,
    pub size: usize,
    pub seed: u64,
    /// Examples created before this date qualify for training samples;
    /// `CrossEval(New)` takes those created on or after it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_cutoff: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposure_threshold: Option<usize>,
}

impl SampleSpec {
    pub fn new(kind: SampleKind, size: usize, seed: u64) -> Self {
        SampleSpec { kind, size, seed, date_cutoff: None, exposure_threshold: None }
    }

    pub fn cross_eval(set: CrossEvalSet, seed: u64) -> Self {
        SampleSpec::new(SampleKind::CrossEval(set), CROSS_EVAL_SIZE, seed)
    }

    pub fn with_cutoff(mut self, cutoff: NaiveDate) -> Self {
        self.date_cutoff = Some(cutoff);
        self
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        let invalid = |m: &str| Err(SamplingError::InvalidSpec(m.to_string()));
        if self.size == 0 {
            return invalid("size must be positive");
        }
        match (self.kind == SampleKind::SufficientExposure, self.exposure_threshold) {
            (true, None) => return invalid("sufficient-exposure needs an exposure threshold"),
            (false, Some(_)) => return invalid("exposure threshold only applies to sufficient-exposure"),
            _ => {}
        }
        if self.kind == SampleKind::CrossEval(CrossEvalSet::New) && self.date_cutoff.is_none() {
            return invalid("the never-seen set needs a date cutoff");
        }
        Ok(())
    }
}

/// Whether `example` passes the filter of `spec`.
pub fn eligible(example: &DualExample, spec: &SampleSpec, shape: &ShaclShape, split: &FrequencySplit) -> bool {
    let props = example.graph.property_set();
    let before_cutoff = spec.date_cutoff.is_none_or(|c| example.created_date < c);
    let has_rare = props.iter().any(|p| split.rare.contains(p));
    match spec.kind {
        SampleKind::BiasedDtOp => {
            let dt = shape.datatype_properties();
            let op = shape.object_properties();
            before_cutoff && props.iter().any(|p| dt.contains(p)) && props.iter().any(|p| op.contains(p))
        }
        SampleKind::RareBiased => before_cutoff && has_rare,
        SampleKind::RandomScaled | SampleKind::SufficientExposure => before_cutoff,
        SampleKind::CrossEval(CrossEvalSet::New) => spec.date_cutoff.is_some_and(|c| example.created_date >= c),
        SampleKind::CrossEval(CrossEvalSet::Frequent) => {
            before_cutoff && !props.is_empty() && props.iter().all(|p| split.frequent.contains(p))
        }
        SampleKind::CrossEval(CrossEvalSet::Rare) => before_cutoff && has_rare,
        SampleKind::CrossEval(CrossEvalSet::Random) => true,
    }
}

/// Seeded uniform draw without replacement of `spec.size` eligible
/// examples, returned as ascending indices into `base`. Examples whose id is
/// in `exclude` are never drawn, which keeps evaluation sets disjoint from
/// the training sample they accompany.
pub fn sample(
    base: &[DualExample],
    spec: &SampleSpec,
    shape: &ShaclShape,
    split: &FrequencySplit,
    exclude: &BTreeSet<String>,
) -> Result<Vec<usize>, SamplingError> {
    spec.validate()?;
    let pool: Vec<usize> = (0..base.len())
        .filter(|&i| !exclude.contains(&base[i].id()) && eligible(&base[i], spec, shape, split))
        .collect();
    if spec.kind == SampleKind::SufficientExposure {
        let sub: Vec<DualExample> = pool.iter().map(|&i| base[i].clone()).collect();
        let threshold = spec.exposure_threshold.expect("validated");
        let picked = sufficient_exposure_sample(&sub, shape, threshold, spec.seed)?;
        let mut out: Vec<usize> = picked.into_iter().map(|i| pool[i]).collect();
        out.sort_unstable();
        return Ok(out);
    }
    if pool.len() < spec.size {
        return Err(SamplingError::InsufficientEligibleExamples { needed: spec.size, available: pool.len() });
    }
    let mut rng = rng(spec.seed);
    let mut out: Vec<usize> = index::sample(&mut rng, pool.len(), spec.size).into_iter().map(|i| pool[i]).collect();
    out.sort_unstable();
    Ok(out)
}
