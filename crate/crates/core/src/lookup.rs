//! Read-only views onto background knowledge: object lookups for rule
//! joins, class lookups for range checks, and surface-form entity linking.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::rdf::{iri, Graph, Iri, Term};
use crate::vocab;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LookupError {
    #[error("lookup of {iri:?} failed: {reason}")]
    Failure { iri: Iri, reason: String },
}

/// Resolves `(subject, predicate, ?)` against a background knowledge graph.
pub trait TripleLookup: Sync {
    fn objects(&self, subject: &Iri, predicate: &Iri) -> Result<Vec<Term>, LookupError>;
}

/// An in-memory graph answers lookups directly; unknown subjects have no
/// objects.
impl TripleLookup for Graph {
    fn objects(&self, subject: &Iri, predicate: &Iri) -> Result<Vec<Term>, LookupError> {
        Ok(Graph::objects(self, subject, predicate).cloned().collect())
    }
}

/// A lookup that is never available.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoLookup;

impl TripleLookup for NoLookup {
    fn objects(&self, subject: &Iri, _: &Iri) -> Result<Vec<Term>, LookupError> {
        Err(LookupError::Failure { iri: subject.clone(), reason: "no background graph configured".into() })
    }
}

impl TypeLookup for NoLookup {
    fn types(&self, entity: &Iri) -> Result<BTreeSet<Iri>, LookupError> {
        Err(LookupError::Failure { iri: entity.clone(), reason: "no type source configured".into() })
    }
}

/// `rdf:type` classes of a resource.
pub trait TypeLookup: Sync {
    fn types(&self, entity: &Iri) -> Result<BTreeSet<Iri>, LookupError>;
}

impl TypeLookup for Graph {
    fn types(&self, entity: &Iri) -> Result<BTreeSet<Iri>, LookupError> {
        let rdf_type = iri(vocab::RDF_TYPE);
        Ok(Graph::objects(self, entity, &rdf_type).filter_map(|t| t.as_iri().cloned()).collect())
    }
}

/// Maps a surface form to a knowledge-graph resource.
pub trait EntityLinker: Sync {
    fn link(&self, text: &str) -> Result<Option<Iri>, LookupError>;
}

/// Exact-match linking table.
#[derive(Clone, Debug, Default)]
pub struct LinkTable {
    entries: BTreeMap<String, Iri>,
}

impl LinkTable {
    pub fn new() -> Self {
        LinkTable::default()
    }

    pub fn insert(&mut self, text: impl Into<String>, target: Iri) {
        self.entries.insert(text.into(), target);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(String, Iri)> for LinkTable {
    fn from_iter<T: IntoIterator<Item = (String, Iri)>>(iter: T) -> Self {
        LinkTable { entries: iter.into_iter().collect() }
    }
}

impl EntityLinker for LinkTable {
    fn link(&self, text: &str) -> Result<Option<Iri>, LookupError> {
        Ok(self.entries.get(text.trim()).cloned())
    }
}
