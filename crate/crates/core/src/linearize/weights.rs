use std::collections::BTreeMap;

use log::warn;
use serde::Serialize;

use crate::sampling::{Stratum, StratumLabel};

use super::LinearizeError;

/// Logarithm used for the weights, as recorded in export manifests.
pub const LOG_BASE: &str = "e";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Weights {
    pub by_label: BTreeMap<StratumLabel, f64>,
    /// A single stratum makes every weight zero.
    pub degenerate: bool,
}

impl Weights {
    pub fn get(&self, label: &StratumLabel) -> Option<f64> {
        self.by_label.get(label).copied()
    }
}

/// `w_y = ln(sum_i |c_i| / |c_y|)` for every stratum `c_y`.
pub fn weights_from_counts(counts: &BTreeMap<StratumLabel, usize>) -> Result<Weights, LinearizeError> {
    if let Some((label, _)) = counts.iter().find(|(_, &n)| n == 0) {
        return Err(LinearizeError::EmptyStratum(label.to_string()));
    }
    let total: usize = counts.values().sum();
    let by_label = counts.iter().map(|(l, &n)| (l.clone(), (total as f64 / n as f64).ln())).collect();
    let degenerate = counts.len() == 1;
    if degenerate {
        warn!("a single stratum gives every example weight 0");
    }
    Ok(Weights { by_label, degenerate })
}

pub fn compute_weights(strata: &[Stratum]) -> Result<Weights, LinearizeError> {
    let counts = strata.iter().map(|s| (s.label.clone(), s.members.len())).collect();
    weights_from_counts(&counts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CeLoss {
    pub ce: f64,
    pub wce: f64,
}

/// Token-averaged cross-entropy of predicted distributions against gold
/// distributions, and the same value scaled by `weight`.
///
/// A gold token predicted with probability zero gives an infinite loss.
pub fn reference_ce(gold: &[Vec<f64>], predicted: &[Vec<f64>], weight: f64) -> Result<CeLoss, LinearizeError> {
    if gold.len() != predicted.len() || gold.is_empty() {
        return Err(LinearizeError::LengthMismatch { gold: gold.len(), predicted: predicted.len() });
    }
    let mut sum = 0.0;
    for (t, (y, y_hat)) in gold.iter().zip(predicted).enumerate() {
        if y.len() != y_hat.len() {
            return Err(LinearizeError::InvalidDistribution(
                t,
                format!("vocabulary sizes {} and {}", y.len(), y_hat.len()),
            ));
        }
        for dist in [y, y_hat] {
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-9 || dist.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(LinearizeError::InvalidDistribution(t, format!("not a distribution (sum {total})")));
            }
        }
        for (&p, &q) in y.iter().zip(y_hat) {
            if p > 0.0 {
                sum += p * q.ln();
            }
        }
    }
    let ce = -sum / gold.len() as f64;
    let ce = if ce == 0.0 { 0.0 } else { ce };
    let wce = if weight == 0.0 { 0.0 } else { weight * ce };
    Ok(CeLoss { ce, wce })
}
