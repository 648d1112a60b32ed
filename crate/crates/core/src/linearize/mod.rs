//! Seq2seq targets and prompts.
//!
//! TurtleLight writes an entity graph on one line: the subject once, then
//! `predicate object, object` groups joined by `; `, closed by ` .`.
//! Predicates and objects are sorted, names are always prefixed, and typed
//! literals keep their datatype:
//!
//! ```text
//! dbr:E dbo:birthYear "1945"^^xsd:gYear; rdfs:label "E"@en .
//! ```
//!
//! Decoding accepts any Turtle the graph reader accepts, so model output
//! with reordered predicates still decodes to the same graph.

mod export;
mod weights;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::rdf::turtle::write_quoted;
use crate::rdf::{parse_turtle, Graph, Iri, PrefixMap, Term, TurtleError};

pub use export::{
    export_training_set, weighted_records, AbstractFormat, ExportError, ExportManifest, ExportOptions, WeightedRecord,
};
pub use weights::{compute_weights, reference_ce, weights_from_counts, CeLoss, Weights, LOG_BASE};

pub const LINEARIZATION: &str = "turtlelight-v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("{0:?} has no prefixed form")]
    UnprefixableIri(Iri),
    #[error("graph describes more than one subject")]
    NotEntityCentric,
    #[error("malformed graph text at line {line}, column {col}: {message}")]
    Malformed { line: usize, col: usize, message: String },
    #[error("prompt needs a non-empty abstract")]
    EmptyAbstract,
    #[error("stratum {0} is empty")]
    EmptyStratum(String),
    #[error("sequence lengths differ: {gold} gold steps, {predicted} predicted")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("step {0}: {1}")]
    InvalidDistribution(usize, String),
}

/// A graph with its TurtleLight text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearGraph {
    pub text: String,
    pub graph: Graph,
}

fn name(iri: &Iri, prefixes: &PrefixMap) -> Result<String, LinearizeError> {
    prefixes.compact_escaped(iri).ok_or_else(|| LinearizeError::UnprefixableIri(iri.clone()))
}

fn object(term: &Term, prefixes: &PrefixMap) -> Result<String, LinearizeError> {
    match term {
        Term::Iri(i) => name(i, prefixes),
        Term::Literal(l) => {
            let mut out = String::new();
            write_quoted(&mut out, l.lexical());
            if let Some(tag) = l.language() {
                out.push('@');
                out.push_str(tag);
            } else if let Some(dt) = l.datatype() {
                out.push_str("^^");
                out.push_str(&name(dt, prefixes)?);
            }
            Ok(out)
        }
    }
}

pub fn encode_turtlelight(g: &Graph, prefixes: &PrefixMap) -> Result<LinearGraph, LinearizeError> {
    let subjects = g.subjects();
    if subjects.len() > 1 {
        return Err(LinearizeError::NotEntityCentric);
    }
    let Some(subject) = subjects.into_iter().next() else {
        return Ok(LinearGraph { text: String::new(), graph: g.clone() });
    };
    let mut groups: BTreeMap<&Iri, Vec<&Term>> = BTreeMap::new();
    for t in g {
        groups.entry(&t.predicate).or_default().push(&t.object);
    }
    let mut parts = Vec::with_capacity(groups.len());
    for (p, objects) in groups {
        let objects = objects.into_iter().map(|o| object(o, prefixes)).collect::<Result<Vec<_>, _>>()?;
        parts.push(format!("{} {}", name(p, prefixes)?, objects.join(", ")));
    }
    let text = format!("{} {} .", name(subject, prefixes)?, parts.join("; "));
    Ok(LinearGraph { text, graph: g.clone() })
}

pub fn decode_turtlelight(text: &str, prefixes: &PrefixMap) -> Result<Graph, LinearizeError> {
    parse_turtle(text, prefixes).map_err(|e| match e {
        TurtleError::Syntax { line, col, message } => LinearizeError::Malformed { line, col, message },
        TurtleError::UnknownPrefix(p) => {
            let at = text.find(&format!("{p}:")).unwrap_or(0);
            LinearizeError::Malformed {
                line: 1,
                col: text[..at].chars().count() + 1,
                message: format!("unknown prefix `{p}:`"),
            }
        }
    })
}

/// `<entity IRI> : <abstract>`.
pub fn build_prompt(entity: &Iri, abstract_text: &str) -> Result<String, LinearizeError> {
    if abstract_text.trim().is_empty() {
        return Err(LinearizeError::EmptyAbstract);
    }
    Ok(format!("{entity} : {abstract_text}"))
}

/// Inverse of [`build_prompt`]. IRIs contain no spaces, so the first ` : `
/// always ends the entity.
pub fn split_prompt(prompt: &str) -> Option<(Iri, &str)> {
    let (entity, text) = prompt.split_once(" : ")?;
    Some((Iri::new(entity).ok()?, text))
}
