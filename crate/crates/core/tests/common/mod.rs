#![allow(dead_code)]
pub mod gen;

use std::path::PathBuf;

use shapeforge::ingest::{build_dual_base, entities_of_class, DualExample, Fetcher};
use shapeforge::rdf::{parse_turtle, Graph, Iri, PrefixMap};
use shapeforge::rules::{parse_rules, RuleSet};
use shapeforge::shacl::{parse_shape, ShaclShape};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn shape() -> ShaclShape {
    parse_shape(&read("fixtures/person_shape.ttl")).unwrap()
}

pub fn prefixes() -> PrefixMap {
    PrefixMap::standard()
}

pub fn desk_graph(name: &str) -> Graph {
    parse_turtle(&read(&format!("tests/fixtures/desk/{name}")), &prefixes()).unwrap()
}

pub fn desk_rules() -> RuleSet {
    parse_rules(&read("tests/fixtures/desk/rules.rul"), &prefixes()).unwrap()
}

pub fn desk_fetcher() -> Fetcher {
    Fetcher::offline(fixture("tests/fixtures/desk/cache"))
}

pub fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}

pub fn dbo(local: &str) -> Iri {
    iri(&format!("http://dbpedia.org/ontology/{local}"))
}

pub fn dbr(local: &str) -> Iri {
    iri(&format!("http://dbpedia.org/resource/{local}"))
}

/// The dual base of the desk knowledge graph, built offline.
pub fn desk_base() -> Vec<DualExample> {
    let kg = desk_graph("kg.ttl");
    let entities = entities_of_class(&kg, &dbo("Person"));
    let (base, diagnostics) = build_dual_base(&kg, &entities, &desk_fetcher());
    assert_eq!(diagnostics.len(), 1, "{diagnostics:?}");
    base
}
