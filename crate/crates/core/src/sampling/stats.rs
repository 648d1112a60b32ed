use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::DualExample;
use crate::rdf::{Iri, PrefixMap};
use crate::shacl::ShaclShape;

use super::SamplingError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertyCount {
    pub triples: u64,
    pub examples: u64,
    /// Share of examples whose graph uses the property.
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyStats {
    pub dataset_size: u64,
    pub properties: BTreeMap<Iri, PropertyCount>,
}

impl PropertyStats {
    /// Statistics given as published rows of `(property, triples, frequency)`.
    /// Example counts are recovered as `frequency * dataset_size`, rounded.
    pub fn from_table(dataset_size: u64, rows: impl IntoIterator<Item = (Iri, u64, f64)>) -> Self {
        let properties = rows
            .into_iter()
            .map(|(p, triples, frequency)| {
                let examples = (frequency * dataset_size as f64).round() as u64;
                (p, PropertyCount { triples, examples, frequency })
            })
            .collect();
        PropertyStats { dataset_size, properties }
    }

    pub fn frequency(&self, property: &Iri) -> Option<f64> {
        self.properties.get(property).map(|c| c.frequency)
    }

    pub fn get(&self, property: &Iri) -> Option<&PropertyCount> {
        self.properties.get(property)
    }

    /// Arithmetic mean of the per-property frequencies.
    pub fn mean_frequency(&self) -> f64 {
        if self.properties.is_empty() {
            return 0.0;
        }
        self.properties.values().map(|c| c.frequency).sum::<f64>() / self.properties.len() as f64
    }

    /// Tab-separated table sorted by decreasing triple count.
    pub fn to_tsv(&self, prefixes: &PrefixMap) -> String {
        let mut rows: Vec<_> = self.properties.iter().collect();
        rows.sort_by(|a, b| b.1.triples.cmp(&a.1.triples).then_with(|| a.0.cmp(b.0)));
        let mut out = String::from("property\ttriples\texamples\tfrequency\n");
        for (p, c) in rows {
            let name = prefixes.compact(p).unwrap_or_else(|| p.to_string());
            out.push_str(&format!("{name}\t{}\t{}\t{:.4}\n", c.triples, c.examples, c.frequency));
        }
        out.push_str(&format!("#examples\t{}\n", self.dataset_size));
        out
    }

    /// Parse the table written by [`PropertyStats::to_tsv`]. Properties may
    /// be CURIEs or full IRIs.
    pub fn from_tsv(text: &str, prefixes: &PrefixMap) -> Result<Self, SamplingError> {
        let bad = |line: usize, m: &str| SamplingError::InvalidSpec(format!("stats line {line}: {m}"));
        let mut dataset_size = None;
        let mut properties = BTreeMap::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [""] => {}
                ["#examples", size] => dataset_size = Some(size.trim().parse().map_err(|_| bad(n + 1, "bad size"))?),
                [p, triples, examples, frequency] => {
                    let p = prefixes.resolve(p).ok_or_else(|| bad(n + 1, "bad property"))?;
                    let count = PropertyCount {
                        triples: triples.trim().parse().map_err(|_| bad(n + 1, "bad triple count"))?,
                        examples: examples.trim().parse().map_err(|_| bad(n + 1, "bad example count"))?,
                        frequency: frequency.trim().parse().map_err(|_| bad(n + 1, "bad frequency"))?,
                    };
                    properties.insert(p, count);
                }
                _ => return Err(bad(n + 1, "expected four columns")),
            }
        }
        let dataset_size = dataset_size.ok_or_else(|| bad(0, "missing #examples row"))?;
        Ok(PropertyStats { dataset_size, properties })
    }
}

/// Triple and example counts for every property of the shape, including
/// unused ones. Triples outside the shape are ignored.
pub fn compute_stats<'a>(dataset: impl IntoIterator<Item = &'a DualExample>, shape: &ShaclShape) -> PropertyStats {
    let mut triples: BTreeMap<Iri, u64> = shape.properties().into_iter().map(|p| (p, 0)).collect();
    let mut examples = triples.clone();
    let mut size = 0u64;
    for example in dataset {
        size += 1;
        let mut seen = BTreeSet::new();
        for t in &example.graph {
            if let Some(n) = triples.get_mut(&t.predicate) {
                *n += 1;
                seen.insert(&t.predicate);
            }
        }
        for p in seen {
            *examples.get_mut(p).expect("shape property") += 1;
        }
    }
    let properties = triples
        .into_iter()
        .map(|(p, t)| {
            let e = examples[&p];
            let frequency = if size == 0 { 0.0 } else { e as f64 / size as f64 };
            (p, PropertyCount { triples: t, examples: e, frequency })
        })
        .collect();
    PropertyStats { dataset_size: size, properties }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencySplit {
    pub mu_p: f64,
    pub frequent: BTreeSet<Iri>,
    pub rare: BTreeSet<Iri>,
}

impl FrequencySplit {
    pub fn is_rare(&self, p: &Iri) -> bool {
        self.rare.contains(p)
    }
}

/// The threshold is the mean frequency of `threshold`; a property is
/// frequent when its frequency in `classification` is strictly above it.
pub fn split_by_frequency(
    classification: &PropertyStats,
    threshold: &PropertyStats,
) -> Result<FrequencySplit, SamplingError> {
    if !classification.properties.keys().eq(threshold.properties.keys()) {
        return Err(SamplingError::PropertyUniverseMismatch);
    }
    let mu_p = threshold.mean_frequency();
    let (frequent, rare) = classification
        .properties
        .iter()
        .map(|(p, c)| (p.clone(), c.frequency))
        .partition::<Vec<_>, _>(|(_, f)| *f > mu_p);
    Ok(FrequencySplit {
        mu_p,
        frequent: frequent.into_iter().map(|(p, _)| p).collect(),
        rare: rare.into_iter().map(|(p, _)| p).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::iri;

    fn p(name: &str) -> Iri {
        iri(&format!("http://example.org/{name}"))
    }

    #[test]
    fn uniform_frequencies_are_all_rare() {
        let stats = PropertyStats::from_table(100, [(p("a"), 10, 0.3), (p("b"), 10, 0.3), (p("c"), 10, 0.3)]);
        let split = split_by_frequency(&stats, &stats).unwrap();
        assert!(split.frequent.is_empty());
        assert_eq!(split.rare.len(), 3);
    }

    #[test]
    fn classification_and_threshold_differ() {
        let threshold = PropertyStats::from_table(10, [(p("a"), 1, 0.1), (p("b"), 1, 0.3)]);
        let classification = PropertyStats::from_table(10, [(p("a"), 1, 0.25), (p("b"), 1, 0.1)]);
        let split = split_by_frequency(&classification, &threshold).unwrap();
        assert!((split.mu_p - 0.2).abs() < 1e-12);
        assert_eq!(split.frequent, BTreeSet::from([p("a")]));
        let other = PropertyStats::from_table(10, [(p("a"), 1, 0.25)]);
        assert_eq!(split_by_frequency(&other, &threshold), Err(SamplingError::PropertyUniverseMismatch));
    }

    #[test]
    fn table_rows_recover_example_counts() {
        let stats = PropertyStats::from_table(200, [(p("a"), 500, 0.25)]);
        assert_eq!(stats.get(&p("a")).unwrap().examples, 50);
        assert!(stats.to_tsv(&PrefixMap::standard()).contains("http://example.org/a\t500\t50\t0.2500"));
    }

    #[test]
    fn tsv_round_trip() {
        let prefixes = PrefixMap::standard();
        let stats =
            PropertyStats::from_table(8, [(iri("http://dbpedia.org/ontology/birthDate"), 9, 0.75), (p("a"), 2, 0.25)]);
        let back = PropertyStats::from_tsv(&stats.to_tsv(&prefixes), &prefixes).unwrap();
        assert_eq!(back, stats);
        assert!(PropertyStats::from_tsv("property\ttriples\texamples\tfrequency\n", &prefixes).is_err());
    }
}
