//! RDF value model: terms, triples and entity-centric graphs.
//!
//! All values are immutable once built and compare strictly: a plain literal
//! `"1945"` never equals the typed literal `"1945"^^xsd:gYear`, and lexical
//! forms are never normalized.

mod prefix;
pub mod turtle;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prefix::PrefixMap;
pub use turtle::{parse_turtle, serialize_statements, serialize_turtle, TurtleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("invalid IRI `{0}`")]
    InvalidIri(String),
    #[error("a literal cannot carry both a datatype and a language tag")]
    DatatypeAndLanguage,
    #[error("triple subject <{found}> differs from the graph's primary subject <{expected}>")]
    SubjectMismatch { expected: Iri, found: Iri },
}

/// An IRI reference. Constructed through [`Iri::new`], which rejects
/// characters that can never appear in an IRI.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        let bad = |c: char| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\');
        if value.is_empty() || value.chars().any(bad) {
            return Err(RdfError::InvalidIri(value));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the IRI carries a scheme (`http:`, `urn:`, ...).
    pub fn is_absolute(&self) -> bool {
        match self.0.find(':') {
            Some(idx) if idx > 0 => {
                let scheme = &self.0[..idx];
                scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
            }
            _ => false,
        }
    }

    /// The part after the last `/` or `#`.
    pub fn local_name(&self) -> &str {
        let cut = self.0.rfind(['/', '#']).map(|i| i + 1).unwrap_or(0);
        &self.0[cut..]
    }
}

impl TryFrom<String> for Iri {
    type Error = RdfError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl TryFrom<&str> for Iri {
    type Error = RdfError;
    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(value: Iri) -> Self {
        value.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

/// Build an IRI from a compile-time constant.
pub(crate) fn iri(value: &str) -> Iri {
    Iri::new(value).expect("constant IRI is valid")
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    lexical: String,
    datatype: Option<Iri>,
    language: Option<String>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), datatype: None, language: None }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal { lexical: lexical.into(), datatype: Some(datatype), language: None }
    }

    pub fn lang(lexical: impl Into<String>, tag: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), datatype: None, language: Some(tag.into()) }
    }

    pub fn new(lexical: impl Into<String>, datatype: Option<Iri>, language: Option<String>) -> Result<Self, RdfError> {
        if datatype.is_some() && language.is_some() {
            return Err(RdfError::DatatypeAndLanguage);
        }
        Ok(Literal { lexical: lexical.into(), datatype, language })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn has_datatype(&self, datatype: &str) -> bool {
        self.datatype.as_ref().is_some_and(|d| d.as_str() == datatype)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    /// IRI string for resources, lexical form for literals.
    pub fn lexical_form(&self) -> &str {
        match self {
            Term::Iri(i) => i.as_str(),
            Term::Literal(l) => l.lexical(),
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            Term::Iri(_) => None,
        }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Term::Iri(_) => 0,
            Term::Literal(_) => 1,
        }
    }
}

// Objects order by lexical form first so serialized output is sorted the way
// a reader scans it.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lexical_form().cmp(other.lexical_form()).then_with(|| self.kind_rank().cmp(&other.kind_rank())).then_with(
            || match (self, other) {
                (Term::Literal(a), Term::Literal(b)) => {
                    a.datatype.cmp(&b.datatype).then_with(|| a.language.cmp(&b.language))
                }
                _ => Ordering::Equal,
            },
        )
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Iri> for Term {
    fn from(value: Iri) -> Self {
        Term::Iri(value)
    }
}

impl From<Literal> for Term {
    fn from(value: Literal) -> Self {
        Term::Literal(value)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple { subject, predicate, object: object.into() }
    }
}

/// A set of triples, optionally pinned to a single subject.
///
/// Equality compares the triple sets only; the primary subject is a
/// construction constraint rather than content.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    primary_subject: Option<Iri>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// An empty description graph of `entity`.
    pub fn for_entity(entity: Iri) -> Self {
        Graph { triples: BTreeSet::new(), primary_subject: Some(entity) }
    }

    /// Collect triples into an unpinned graph, dropping duplicates.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        Graph { triples: triples.into_iter().collect(), primary_subject: None }
    }

    /// Pin the graph to `entity`; fails if some triple has another subject.
    pub fn with_primary_subject(mut self, entity: Iri) -> Result<Self, RdfError> {
        if let Some(t) = self.triples.iter().find(|t| t.subject != entity) {
            return Err(RdfError::SubjectMismatch { expected: entity, found: t.subject.clone() });
        }
        self.primary_subject = Some(entity);
        Ok(self)
    }

    pub fn primary_subject(&self) -> Option<&Iri> {
        self.primary_subject.as_ref()
    }

    /// Insert a triple; returns whether it was new.
    pub fn insert(&mut self, triple: Triple) -> Result<bool, RdfError> {
        if let Some(expected) = &self.primary_subject {
            if &triple.subject != expected {
                return Err(RdfError::SubjectMismatch { expected: expected.clone(), found: triple.subject });
            }
        }
        Ok(self.triples.insert(triple))
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        self.triples.remove(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    /// Distinct predicates used in the graph.
    pub fn property_set(&self) -> BTreeSet<Iri> {
        self.triples.iter().map(|t| t.predicate.clone()).collect()
    }

    pub fn subjects(&self) -> BTreeSet<&Iri> {
        self.triples.iter().map(|t| &t.subject).collect()
    }

    pub fn objects<'a>(&'a self, subject: &'a Iri, predicate: &'a Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples.iter().filter(move |t| &t.subject == subject && &t.predicate == predicate).map(|t| &t.object)
    }

    pub fn with_predicate<'a>(&'a self, predicate: &'a Iri) -> impl Iterator<Item = &'a Triple> + 'a {
        self.triples.iter().filter(move |t| &t.predicate == predicate)
    }

    /// Keep only triples whose predicate is in `props`.
    pub fn restrict_to(&self, props: &BTreeSet<Iri>) -> Graph {
        Graph {
            triples: self.triples.iter().filter(|t| props.contains(&t.predicate)).cloned().collect(),
            primary_subject: self.primary_subject.clone(),
        }
    }

    /// Triples whose subject is `entity`, pinned to it.
    pub fn description_of(&self, entity: &Iri) -> Graph {
        Graph {
            triples: self.triples.iter().filter(|t| &t.subject == entity).cloned().collect(),
            primary_subject: Some(entity.clone()),
        }
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Triple) -> bool) {
        self.triples.retain(|t| keep(t));
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;
    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

/// Set of distinct predicate IRIs used in `g`.
pub fn property_set(g: &Graph) -> BTreeSet<Iri> {
    g.property_set()
}
