//! Dataset construction: property statistics, the frequent/rare split,
//! filtered samples, stratification, folds, sufficient-exposure sampling and
//! template augmentation.
//!
//! Every sampler is sequential and driven by a seeded ChaCha generator, so a
//! seed fully determines its output. Samples are returned as indices into
//! the slice they were drawn from.

mod augment;
mod exposure;
mod folds;
mod select;
mod stats;
mod stratify;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rdf::Iri;

pub use augment::{augment_template, build_template, AugmentOutput, AugmentStrategy, Template};
pub use exposure::{selection_counts, sufficient_exposure_sample};
pub use folds::{assign_folds, kfold, FoldAssignment, Split};
pub use select::{eligible, sample, CrossEvalSet, SampleKind, SampleSpec, CROSS_EVAL_SIZE};
pub use stats::{compute_stats, split_by_frequency, FrequencySplit, PropertyCount, PropertyStats};
pub use stratify::{stratify, Stratum, StratumLabel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SamplingError {
    #[error("invalid sample spec: {0}")]
    InvalidSpec(String),
    #[error("need {needed} eligible examples, only {available} available")]
    InsufficientEligibleExamples { needed: usize, available: usize },
    #[error("only {available} examples use {property:?}")]
    InsufficientCoverage { property: Iri, available: usize },
    #[error("k = {k} exceeds the dataset size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("statistics cover different properties")]
    PropertyUniverseMismatch,
    #[error("no example using {0:?} can serve as a template")]
    NoTemplate(Iri),
    #[error("ran out of template/donor pairs for {property:?} at {count} of {threshold} examples")]
    ExhaustedDonors { property: Iri, count: usize, threshold: usize },
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
