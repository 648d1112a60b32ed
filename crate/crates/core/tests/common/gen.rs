//! Proptest strategies for graphs built from the person vocabulary.

use proptest::prelude::*;

use shapeforge::rdf::{Graph, Iri, Literal, Term, Triple};

use super::{dbo, dbr, iri};

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

pub const PREDICATES: &[&str] = &[
    "http://www.w3.org/2000/01/rdf-schema#label",
    "http://dbpedia.org/ontology/alias",
    "http://dbpedia.org/ontology/birthName",
    "http://dbpedia.org/ontology/birthDate",
    "http://dbpedia.org/ontology/birthYear",
    "http://dbpedia.org/ontology/deathDate",
    "http://dbpedia.org/ontology/deathYear",
    "http://dbpedia.org/ontology/birthPlace",
    "http://dbpedia.org/ontology/deathPlace",
    "http://dbpedia.org/ontology/nationality",
    "http://dbpedia.org/ontology/spouse",
];

/// Local names including ones that need backslash escapes.
pub fn local_name() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[A-Za-z][A-Za-z0-9_]{0,10}",
        1 => prop::sample::select(vec![
            "A_(b)", "São_Paulo", "Mr._Smith", "1990s", "O'Brien", "50%_off", "a,b", "x.", "-lead", "Ünïcødé",
            "a/b?c#d", "_under", "a~b=c&d", "x*y+z", "at@home", "semi;colon", "$cash!", "",
        ])
        .prop_map(str::to_string),
    ]
}

pub fn resource() -> impl Strategy<Value = Iri> {
    local_name().prop_map(|l| Iri::new(format!("http://dbpedia.org/resource/{l}")).unwrap())
}

pub fn lexical() -> impl Strategy<Value = String> {
    let ch = prop_oneof![
        6 => any::<char>(),
        1 => prop::sample::select(vec!['"', '\\', '\n', '\r', '\t', '\'', '@', '^', ' ']),
    ];
    prop::collection::vec(ch, 0..16).prop_map(|cs| cs.into_iter().collect())
}

pub fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        lexical().prop_map(Literal::plain),
        (lexical(), prop::sample::select(vec!["en", "pt-BR", "de"])).prop_map(|(l, t)| Literal::lang(l, t)),
        (1000..2100i32, 1..13u32, 1..29u32).prop_map(|(y, m, d)| Literal::typed(
            format!("{y:04}-{m:02}-{d:02}"),
            Iri::new(format!("{XSD}date")).unwrap()
        )),
        (1000..2100i32).prop_map(|y| Literal::typed(y.to_string(), Iri::new(format!("{XSD}gYear")).unwrap())),
        lexical().prop_map(|l| Literal::typed(l, Iri::new(format!("{XSD}string")).unwrap())),
    ]
}

pub fn term() -> impl Strategy<Value = Term> {
    prop_oneof![literal().prop_map(Term::Literal), resource().prop_map(Term::Iri)]
}

pub fn predicate() -> impl Strategy<Value = Iri> {
    prop::sample::select(PREDICATES).prop_map(|p| Iri::new(p).unwrap())
}

/// Graphs about one subject.
pub fn entity_graph() -> impl Strategy<Value = Graph> {
    (resource(), prop::collection::vec((predicate(), term()), 0..10))
        .prop_map(|(s, pos)| Graph::from_triples(pos.into_iter().map(|(p, o)| Triple::new(s.clone(), p, o))))
}

/// Graphs about up to three subjects.
pub fn multi_graph() -> impl Strategy<Value = Graph> {
    prop::collection::vec((resource(), predicate(), term()), 0..14)
        .prop_map(|ts| Graph::from_triples(ts.into_iter().map(|(s, p, o)| Triple::new(s, p, o))))
}

pub const CITIES: &[&str] = &["Lyon", "Turin", "Porto", "Ghent", "Graz", "Bergen", "Cork", "São_Paulo", "Nowhere"];

/// Person triples over the desk places and date edge cases.
pub fn person_triple() -> impl Strategy<Value = Triple> {
    let subject = prop::sample::select(vec!["A", "B", "C"]).prop_map(dbr);
    let date = prop_oneof![
        (1000..2100i32, 1..13u32, 1..29u32).prop_map(|(y, m, d)| format!("{y:04}-{m:02}-{d:02}")),
        Just("-0044-03-15".to_string()),
        Just("12345-01-01".to_string()),
        Just("1999".to_string()),
    ];
    let date_triple = (prop::sample::select(vec!["birthDate", "deathDate"]), date)
        .prop_map(|(p, d)| (dbo(p), Term::Literal(Literal::typed(d, iri("http://www.w3.org/2001/XMLSchema#date")))));
    let place_triple =
        (prop::sample::select(vec!["birthPlace", "deathPlace", "nationality"]), prop::sample::select(CITIES))
            .prop_map(|(p, c)| (dbo(p), Term::Iri(dbr(c))));
    let label = "[a-z]{1,5}"
        .prop_map(|l| (iri("http://www.w3.org/2000/01/rdf-schema#label"), Term::Literal(Literal::plain(l))));
    (subject, prop_oneof![date_triple, place_triple, label]).prop_map(|(s, (p, o))| Triple::new(s, p, o))
}

pub fn person_graph() -> impl Strategy<Value = Graph> {
    prop::collection::vec(person_triple(), 0..12).prop_map(Graph::from_triples)
}
