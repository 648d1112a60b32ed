use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ingest::DualExample;
use crate::rdf::Iri;

use super::rng;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum StratumLabel {
    Property(Iri),
    Other,
}

impl fmt::Display for StratumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratumLabel::Property(p) => f.write_str(p.as_str()),
            StratumLabel::Other => f.write_str("Other"),
        }
    }
}

impl From<StratumLabel> for String {
    fn from(label: StratumLabel) -> String {
        label.to_string()
    }
}

impl TryFrom<String> for StratumLabel {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        if s == "Other" {
            return Ok(StratumLabel::Other);
        }
        Iri::new(s).map(StratumLabel::Property).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: StratumLabel,
    /// Ascending indices into the stratified dataset.
    pub members: Vec<usize>,
}

/// Assign every example to one stratum.
///
/// A graph with exactly one rare property joins that property's stratum; a
/// graph with several joins the stratum of whichever of them has the fewest
/// members so far (ties to the smaller IRI); a graph without rare properties
/// joins `Other`. Examples are visited in an order fixed by sorting on id and
/// shuffling with `seed`, so the result does not depend on input order.
/// Empty strata are omitted; property strata come first, in IRI order.
pub fn stratify(dataset: &[DualExample], rare: &BTreeSet<Iri>, seed: u64) -> Vec<Stratum> {
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let ids: Vec<String> = dataset.iter().map(DualExample::id).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]).then(a.cmp(&b)));
    order.shuffle(&mut rng(seed));

    let mut members: BTreeMap<StratumLabel, Vec<usize>> = BTreeMap::new();
    for i in order {
        let present: Vec<Iri> = dataset[i].graph.property_set().into_iter().filter(|p| rare.contains(p)).collect();
        let label = present
            .into_iter()
            .min_by(|a, b| {
                let size = |p: &Iri| members.get(&StratumLabel::Property(p.clone())).map_or(0, Vec::len);
                size(a).cmp(&size(b)).then_with(|| a.cmp(b))
            })
            .map_or(StratumLabel::Other, StratumLabel::Property);
        members.entry(label).or_default().push(i);
    }
    members
        .into_iter()
        .map(|(label, mut members)| {
            members.sort_unstable();
            Stratum { label, members }
        })
        .collect()
}
