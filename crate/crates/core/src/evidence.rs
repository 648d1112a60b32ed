//! Textual evidence for triples, and distillation of the dual base into the
//! evidence-backed corpus.
//!
//! Literal values are searched in the plain abstract: strings as exact,
//! case-sensitive substrings, dates through a closed list of renderings.
//! Resource values must be the target of a link in the Markdown abstract and
//! carry the class the shape expects.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate};
use percent_encoding::percent_decode_str;
use rayon::prelude::*;
use serde::Serialize;

use crate::ingest::DualExample;
use crate::lookup::{LookupError, TripleLookup, TypeLookup};
use crate::rdf::{Iri, Literal, PrefixMap, Term, Triple};
use crate::rules::{apply_rules, RuleSet};
use crate::shacl::{ConstraintKind, PropertyConstraint, ShaclShape};
use crate::vocab;

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

const WIKI_PREFIXES: &[&str] = &[
    "https://en.wikipedia.org/wiki/",
    "http://en.wikipedia.org/wiki/",
    "//en.wikipedia.org/wiki/",
    "/wiki/",
    "./",
    "http://dbpedia.org/resource/",
    "https://dbpedia.org/resource/",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceReason {
    ExactString,
    DateForm,
    MarkdownLink,
    RangeMismatch,
    NotFound,
}

impl EvidenceReason {
    pub fn is_support(self) -> bool {
        matches!(self, EvidenceReason::ExactString | EvidenceReason::DateForm | EvidenceReason::MarkdownLink)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvidenceVerdict {
    pub triple: Triple,
    pub supported: bool,
    pub reason: EvidenceReason,
}

impl EvidenceVerdict {
    fn new(triple: &Triple, reason: EvidenceReason) -> Self {
        EvidenceVerdict { triple: triple.clone(), supported: reason.is_support(), reason }
    }
}

/// Surface forms under which a date or year literal counts as evidenced.
///
/// `xsd:date` values render as `1945-05-08`, `8 May 1945`, `May 8, 1945`
/// and `8 May`; `xsd:gYear` values as the bare year. Other literals have no
/// date renderings.
pub fn date_renderings(literal: &Literal) -> Vec<String> {
    let lexical = literal.lexical();
    if literal.has_datatype(vocab::XSD_GYEAR) {
        return vec![lexical.to_string()];
    }
    if !literal.has_datatype(vocab::XSD_DATE) {
        return Vec::new();
    }
    let Ok(date) = NaiveDate::parse_from_str(lexical, "%Y-%m-%d") else {
        return vec![lexical.to_string()];
    };
    let (day, month, year) = (date.day(), MONTHS[date.month0() as usize], date.year());
    vec![
        lexical.to_string(),
        format!("{day} {month} {year}"),
        format!("{month} {day}, {year}"),
        format!("{day} {month}"),
    ]
}

/// Occurrence of `needle` not glued to further digits on either side, so
/// that `8 May` is not found inside `18 May`.
pub(crate) fn contains_date_form(text: &str, needle: &str) -> bool {
    text.match_indices(needle).any(|(at, _)| date_form_at(text, at, needle))
}

/// Whether the occurrence of `needle` at byte `at` stands on its own digits.
pub(crate) fn date_form_at(text: &str, at: usize, needle: &str) -> bool {
    let first_digit = needle.starts_with(|c: char| c.is_ascii_digit());
    let last_digit = needle.ends_with(|c: char| c.is_ascii_digit());
    let before_ok = !first_digit || !text[..at].ends_with(|c: char| c.is_ascii_digit());
    let after_ok = !last_digit || !text[at + needle.len()..].starts_with(|c: char| c.is_ascii_digit());
    before_ok && after_ok
}

/// Look for a literal object in plain text.
pub fn check_datatype_triple(text: &str, triple: &Triple) -> EvidenceVerdict {
    let Term::Literal(literal) = &triple.object else {
        return EvidenceVerdict::new(triple, EvidenceReason::RangeMismatch);
    };
    let renderings = date_renderings(literal);
    if !renderings.is_empty() {
        let found = renderings.iter().any(|form| contains_date_form(text, form));
        let reason = if found { EvidenceReason::DateForm } else { EvidenceReason::NotFound };
        return EvidenceVerdict::new(triple, reason);
    }
    let lexical = literal.lexical();
    let reason = if !lexical.is_empty() && text.contains(lexical) {
        EvidenceReason::ExactString
    } else {
        EvidenceReason::NotFound
    };
    EvidenceVerdict::new(triple, reason)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarkdownLink {
    pub anchor: String,
    pub url: String,
}

/// All `[anchor](url)` links in document order. A `]` closes the nearest
/// open `[`; parentheses inside the URL nest.
pub fn extract_markdown_links(md: &str) -> Vec<MarkdownLink> {
    let mut links = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let bytes = md.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 1,
            b'[' => open.push(i),
            b']' => {
                if let Some(start) = open.pop() {
                    if bytes.get(i + 1) == Some(&b'(') {
                        if let Some(end) = url_end(md, i + 2) {
                            links.push((
                                start,
                                MarkdownLink {
                                    anchor: md[start + 1..i].to_string(),
                                    url: md[i + 2..end].trim().to_string(),
                                },
                            ));
                            i = end;
                        }
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    links.sort_by_key(|(start, _)| *start);
    links.into_iter().map(|(_, l)| l).collect()
}

fn url_end(md: &str, from: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (offset, c) in md[from..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' if depth == 0 => return Some(from + offset),
            ')' => depth -= 1,
            '\n' => return None,
            _ => {}
        }
    }
    None
}

/// The DBpedia resource a Wikipedia (or DBpedia) link points at.
///
/// `…/wiki/X`, `/wiki/X` and `./X` map to `http://dbpedia.org/resource/X`
/// with percent-escapes decoded, underscores kept and any fragment or query
/// removed.
pub fn resource_of_url(url: &str) -> Option<String> {
    let url = url.split(['#', '?']).next().unwrap_or_default();
    let title = WIKI_PREFIXES.iter().find_map(|p| url.strip_prefix(p))?;
    if title.is_empty() {
        return None;
    }
    let title = percent_decode_str(title).decode_utf8().ok()?.replace(' ', "_");
    Some(format!("{}{}", vocab::DBR, title))
}

pub(crate) fn decoded_iri(iri: &Iri) -> String {
    percent_decode_str(iri.as_str()).decode_utf8_lossy().into_owned()
}

/// Look for a resource object among the Markdown links and check its type.
pub fn check_object_triple(
    md: &str,
    triple: &Triple,
    constraint: &PropertyConstraint,
    types: &dyn TypeLookup,
) -> Result<EvidenceVerdict, LookupError> {
    let Term::Iri(object) = &triple.object else {
        return Ok(EvidenceVerdict::new(triple, EvidenceReason::RangeMismatch));
    };
    let wanted = decoded_iri(object);
    let linked = extract_markdown_links(md).iter().any(|l| resource_of_url(&l.url).as_deref() == Some(wanted.as_str()));
    if !linked {
        return Ok(EvidenceVerdict::new(triple, EvidenceReason::NotFound));
    }
    let reason = if types.types(object)?.contains(&constraint.range) {
        EvidenceReason::MarkdownLink
    } else {
        EvidenceReason::RangeMismatch
    };
    Ok(EvidenceVerdict::new(triple, reason))
}

/// Check one triple against the example's abstracts under `constraint`.
pub fn check_triple(
    example: &DualExample,
    triple: &Triple,
    constraint: &PropertyConstraint,
    types: &dyn TypeLookup,
) -> Result<EvidenceVerdict, LookupError> {
    match constraint.kind {
        ConstraintKind::Datatype => Ok(check_datatype_triple(&example.abstract_plain, triple)),
        ConstraintKind::Object => check_object_triple(&example.abstract_md, triple, constraint, types),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerdictRecord {
    pub entity: Iri,
    pub triple: String,
    pub supported: bool,
    pub reason: EvidenceReason,
}

impl VerdictRecord {
    pub fn new(entity: &Iri, verdict: &EvidenceVerdict, prefixes: &PrefixMap) -> Self {
        VerdictRecord {
            entity: entity.clone(),
            triple: triple_to_turtle(&verdict.triple, prefixes),
            supported: verdict.supported,
            reason: verdict.reason,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistillDiagnostic {
    pub entity: Iri,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct DistillOutput {
    pub examples: Vec<DualExample>,
    pub verdicts: Vec<(Iri, EvidenceVerdict)>,
    pub diagnostics: Vec<DistillDiagnostic>,
}

enum Outcome {
    Kept(DualExample, Vec<EvidenceVerdict>),
    Dropped(Vec<EvidenceVerdict>, Option<String>),
}

/// Rule closure, restriction to the shape, evidence filter, empty-graph drop.
///
/// Failures of individual examples (lookup errors) exclude that example and
/// are reported in the diagnostics; the run continues.
pub fn distill(
    base: &[DualExample],
    shape: &ShaclShape,
    rules: &RuleSet,
    aux: &dyn TripleLookup,
    types: &dyn TypeLookup,
) -> DistillOutput {
    let properties = shape.properties();
    let outcomes: Vec<Outcome> =
        base.par_iter().map(|example| distill_one(example, shape, &properties, rules, aux, types)).collect();
    let mut out = DistillOutput::default();
    for (example, outcome) in base.iter().zip(outcomes) {
        let verdicts = match outcome {
            Outcome::Kept(kept, verdicts) => {
                out.examples.push(kept);
                verdicts
            }
            Outcome::Dropped(verdicts, reason) => {
                let message = reason.unwrap_or_else(|| "no evidenced triple left".to_string());
                out.diagnostics.push(DistillDiagnostic { entity: example.entity.clone(), message });
                verdicts
            }
        };
        out.verdicts.extend(verdicts.into_iter().map(|v| (example.entity.clone(), v)));
    }
    out
}

fn distill_one(
    example: &DualExample,
    shape: &ShaclShape,
    properties: &BTreeSet<Iri>,
    rules: &RuleSet,
    aux: &dyn TripleLookup,
    types: &dyn TypeLookup,
) -> Outcome {
    let closed = match apply_rules(&example.graph, rules, aux) {
        Ok(g) => g.restrict_to(properties),
        Err(e) => return Outcome::Dropped(Vec::new(), Some(e.to_string())),
    };
    let mut verdicts = Vec::with_capacity(closed.len());
    for triple in &closed {
        let constraint = shape.constraint(&triple.predicate).expect("graph restricted to the shape");
        match check_triple(example, triple, constraint, types) {
            Ok(v) => verdicts.push(v),
            Err(e) => return Outcome::Dropped(verdicts, Some(e.to_string())),
        }
    }
    let mut kept = closed;
    let rejected: BTreeSet<&Triple> = verdicts.iter().filter(|v| !v.supported).map(|v| &v.triple).collect();
    kept.retain(|t| !rejected.contains(t));
    if kept.is_empty() {
        return Outcome::Dropped(verdicts, None);
    }
    let kept = example.with_graph(kept).expect("rules keep the subject");
    Outcome::Kept(kept, verdicts)
}

/// A single triple as one Turtle statement, without the trailing newline.
pub fn triple_to_turtle(triple: &Triple, prefixes: &PrefixMap) -> String {
    let g = crate::rdf::Graph::from_triples([triple.clone()]);
    crate::rdf::serialize_statements(&g, prefixes).trim_end().to_string()
}

/// Parse text holding exactly one triple statement.
pub fn triple_from_turtle(text: &str, prefixes: &PrefixMap) -> Result<Triple, String> {
    let g = crate::rdf::parse_turtle(text, prefixes).map_err(|e| e.to_string())?;
    let mut it = g.iter();
    match (it.next(), it.next()) {
        (Some(t), None) => Ok(t.clone()),
        _ => Err(format!("expected exactly one triple, found {}", g.len())),
    }
}
