use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use crate::ingest::DualExample;
use crate::rdf::Iri;
use crate::shacl::ShaclShape;

use super::{rng, SamplingError};

/// Number of selected examples using each shape property.
pub fn selection_counts(base: &[DualExample], selected: &[usize], shape: &ShaclShape) -> BTreeMap<Iri, usize> {
    let mut counts: BTreeMap<Iri, usize> = shape.properties().into_iter().map(|p| (p, 0)).collect();
    for &i in selected {
        for p in base[i].graph.property_set() {
            if let Some(n) = counts.get_mut(&p) {
                *n += 1;
            }
        }
    }
    counts
}

/// Smallest-effort draw giving every shape property at least `threshold`
/// examples.
///
/// Properties are visited from the least to the most used in `base` (ties
/// by IRI). For each, examples using it are drawn uniformly without
/// replacement until its count, which includes examples drawn earlier for
/// other properties, reaches the threshold. Returns indices into `base` in
/// draw order, so the last index is the draw that completed the sample.
pub fn sufficient_exposure_sample(
    base: &[DualExample],
    shape: &ShaclShape,
    threshold: usize,
    seed: u64,
) -> Result<Vec<usize>, SamplingError> {
    let properties: Vec<BTreeSet<Iri>> = base.iter().map(|e| e.graph.property_set()).collect();
    let available = selection_counts(base, &(0..base.len()).collect::<Vec<_>>(), shape);
    if let Some((p, &n)) = available.iter().find(|(_, &n)| n < threshold) {
        return Err(SamplingError::InsufficientCoverage { property: p.clone(), available: n });
    }
    let mut order: Vec<(&Iri, usize)> = available.iter().map(|(p, &n)| (p, n)).collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let mut rng = rng(seed);
    let mut counts: BTreeMap<&Iri, usize> = available.keys().map(|p| (p, 0)).collect();
    let mut taken = vec![false; base.len()];
    let mut selected = Vec::new();
    for (p, _) in order {
        if counts[p] >= threshold {
            continue;
        }
        let mut candidates: Vec<usize> = (0..base.len()).filter(|&i| !taken[i] && properties[i].contains(p)).collect();
        candidates.shuffle(&mut rng);
        for i in candidates {
            if counts[p] >= threshold {
                break;
            }
            taken[i] = true;
            selected.push(i);
            for q in &properties[i] {
                if let Some(n) = counts.get_mut(q) {
                    *n += 1;
                }
            }
        }
    }
    Ok(selected)
}
