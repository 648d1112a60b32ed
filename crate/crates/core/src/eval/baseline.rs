//! Aligning free-text relation triples from an external extractor with the
//! knowledge-graph vocabulary so they can be scored like model outputs.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{EvalError, Prediction};
use crate::lookup::{EntityLinker, TripleLookup};
use crate::rdf::{iri, serialize_statements, Graph, Iri, Literal, PrefixMap, Term, Triple};
use crate::rules::{apply_rules, RuleSet};
use crate::shacl::ConstraintKind;
use crate::vocab;

/// One extracted triple. `entity` is the example whose abstract it was
/// extracted from; subject and object are surface text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineTriple {
    pub entity: Iri,
    pub subject: String,
    pub relation: String,
    pub object: String,
}

/// JSON Lines of [`BaselineTriple`].
pub fn read_baseline_triples(text: &str) -> Result<Vec<BaselineTriple>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| EvalError::Record { line: n + 1, message: e.to_string() }))
        .collect()
}

/// Extractor relation label to knowledge-graph property.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationMapping {
    entries: BTreeMap<String, (Iri, ConstraintKind)>,
}

#[derive(Deserialize)]
struct MappingRow {
    label: String,
    property: String,
    kind: String,
}

impl RelationMapping {
    pub fn new() -> Self {
        RelationMapping::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, property: Iri, kind: ConstraintKind) {
        self.entries.insert(label.into(), (property, kind));
    }

    pub fn get(&self, label: &str) -> Option<&(Iri, ConstraintKind)> {
        self.entries.get(label.trim())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with header `label,property,kind`; kind is `datatype` or `object`
    /// and the property may be a CURIE.
    pub fn read_csv(reader: impl std::io::Read, prefixes: &PrefixMap) -> Result<Self, EvalError> {
        let mut out = RelationMapping::new();
        let mut rdr = csv::Reader::from_reader(reader);
        for (n, row) in rdr.deserialize::<MappingRow>().enumerate() {
            let line = n + 2;
            let row = row.map_err(|e| EvalError::Record { line, message: e.to_string() })?;
            let property = prefixes
                .expand_curie(row.property.trim())
                .map(Ok)
                .unwrap_or_else(|| Iri::new(row.property.trim()))
                .map_err(|e| EvalError::Record { line, message: e.to_string() })?;
            let kind = match row.kind.trim() {
                "datatype" => ConstraintKind::Datatype,
                "object" => ConstraintKind::Object,
                other => return Err(EvalError::Record { line, message: format!("unknown kind `{other}`") }),
            };
            if out.entries.contains_key(row.label.trim()) {
                return Err(EvalError::Mapping(format!("label `{}` mapped twice", row.label.trim())));
            }
            out.insert(row.label.trim(), property, kind);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignOutput {
    /// One per requested entity, in the requested order.
    pub predictions: Vec<Prediction>,
    /// Triples whose relation has no mapping.
    pub unmapped: usize,
    /// Triples whose subject or object resource could not be linked.
    pub unlinked: usize,
    pub diagnostics: Vec<String>,
}

/// Date-like text to a typed literal. Full dates become `xsd:date`, bare
/// four-digit years `xsd:gYear`; anything else stays a plain literal.
pub fn literal_from_text(text: &str) -> Literal {
    let text = text.trim();
    for format in ["%Y-%m-%d", "%d %B %Y", "%B %d, %Y", "%d %b %Y", "%b %d, %Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(text, format) {
            return Literal::typed(d.format("%Y-%m-%d").to_string(), iri(vocab::XSD_DATE));
        }
    }
    if text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit()) {
        return Literal::typed(text, iri(vocab::XSD_GYEAR));
    }
    Literal::plain(text)
}

/// Map, link and enrich extracted triples. Each entity's prediction holds
/// all triples extracted from its abstract, whatever their subject, closed
/// under `rules`. Entities without extractions get an empty prediction.
pub fn align_baseline(
    entities: &[Iri],
    triples: &[BaselineTriple],
    mapping: &RelationMapping,
    linker: &dyn EntityLinker,
    rules: &RuleSet,
    aux: &dyn TripleLookup,
    prefixes: &PrefixMap,
) -> AlignOutput {
    let mut graphs: BTreeMap<&Iri, Graph> = entities.iter().map(|e| (e, Graph::new())).collect();
    let mut unmapped = 0;
    let mut unlinked = 0;
    let mut diagnostics = Vec::new();
    let link = |text: &str, diagnostics: &mut Vec<String>| match linker.link(text) {
        Ok(found) => found,
        Err(e) => {
            diagnostics.push(e.to_string());
            None
        }
    };
    for bt in triples {
        let Some(graph) = graphs.get_mut(&bt.entity) else {
            diagnostics.push(format!("triple for unrequested entity {}", bt.entity.as_str()));
            continue;
        };
        let Some((property, kind)) = mapping.get(&bt.relation) else {
            unmapped += 1;
            continue;
        };
        let Some(subject) = link(&bt.subject, &mut diagnostics) else {
            unlinked += 1;
            continue;
        };
        let object: Term = match kind {
            ConstraintKind::Datatype => literal_from_text(&bt.object).into(),
            ConstraintKind::Object => match link(&bt.object, &mut diagnostics) {
                Some(o) => o.into(),
                None => {
                    unlinked += 1;
                    continue;
                }
            },
        };
        graph.insert(Triple::new(subject, property.clone(), object)).expect("graph has no primary subject");
    }
    let predictions = entities
        .iter()
        .map(|e| {
            let raw = &graphs[e];
            let enriched = apply_rules(raw, rules, aux).unwrap_or_else(|err| {
                diagnostics.push(format!("{}: {err}", e.as_str()));
                raw.clone()
            });
            let text = serialize_statements(&enriched, prefixes);
            Prediction::from_graph(e.clone(), enriched, text)
        })
        .collect();
    AlignOutput { predictions, unmapped, unlinked, diagnostics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookup::{LinkTable, NoLookup};

    #[test]
    fn date_text() {
        let d = |s: &str| literal_from_text(s);
        assert_eq!(d("8 May 1945"), Literal::typed("1945-05-08", iri(vocab::XSD_DATE)));
        assert_eq!(d("May 8, 1945"), Literal::typed("1945-05-08", iri(vocab::XSD_DATE)));
        assert_eq!(d("1945-05-08"), Literal::typed("1945-05-08", iri(vocab::XSD_DATE)));
        assert_eq!(d("1945"), Literal::typed("1945", iri(vocab::XSD_GYEAR)));
        assert_eq!(d("spring 1945"), Literal::plain("spring 1945"));
    }

    #[test]
    fn aligns_and_counts() {
        let p = PrefixMap::standard();
        let csv = "label,property,kind\nplace of birth,dbo:birthPlace,object\ndate of birth,dbo:birthDate,datatype\n";
        let mapping = RelationMapping::read_csv(csv.as_bytes(), &p).unwrap();
        let e = iri("http://dbpedia.org/resource/A");
        let mut linker = LinkTable::new();
        linker.insert("A", e.clone());
        linker.insert("Nice", iri("http://dbpedia.org/resource/Nice"));
        let bt = |r: &str, s: &str, o: &str| BaselineTriple {
            entity: e.clone(),
            subject: s.into(),
            relation: r.into(),
            object: o.into(),
        };
        let triples = vec![
            bt("place of birth", "A", "Nice"),
            bt("date of birth", "A", "1 June 1900"),
            bt("employer", "A", "X"),
            bt("place of birth", "A", "Atlantis"),
            bt("place of birth", "Nobody", "Nice"),
        ];
        let out = align_baseline(
            &[e.clone(), iri("http://dbpedia.org/resource/B")],
            &triples,
            &mapping,
            &linker,
            &RuleSet::default(),
            &NoLookup,
            &p,
        );
        assert_eq!((out.unmapped, out.unlinked), (1, 2));
        assert_eq!(out.predictions.len(), 2);
        assert_eq!(out.predictions[0].decoded.as_ref().unwrap().len(), 2);
        assert!(out.predictions[1].decoded.as_ref().unwrap().is_empty());
    }
}
