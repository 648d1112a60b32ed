//! Forward-chaining enrichment of description graphs.
//!
//! Two rule families are supported: deriving a year literal from a date
//! literal (`DERIVE`), and copying a resource-valued property onto the
//! resource's country through a bridge property looked up in a background
//! graph (`PROPAGATE`). Rules are written one per line:
//!
//! ```text
//! DERIVE dbo:birthDate -> dbo:birthYear BY year-of-date
//! PROPAGATE dbo:country OVER dbo:birthPlace,dbo:deathPlace,dbo:nationality
//! ```

use std::collections::BTreeSet;

use log::warn;
use thiserror::Error;

pub use crate::lookup::{LookupError, NoLookup, TripleLookup};
use crate::rdf::{iri, Graph, Iri, Literal, PrefixMap, Term, Triple};
use crate::vocab;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: unknown directive `{directive}`")]
    UnknownDirective { line: usize, directive: String },
    #[error("line {line}: unknown transform `{name}`")]
    UnknownTransform { line: usize, name: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("rule derives {0:?} from itself")]
    SelfDerivation(Iri),
    #[error("bridge property {0:?} is also propagated over")]
    BridgeInOver(Iri),
    #[error(transparent)]
    Lookup(#[from] LookupError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    YearOfDate,
}

impl Transform {
    fn name(self) -> &'static str {
        match self {
            Transform::YearOfDate => "year-of-date",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    LiteralDerive { source: Iri, target: Iri, transform: Transform },
    PropagateVia { bridge: Iri, over: BTreeSet<Iri> },
}

impl Rule {
    pub fn literal_derive(source: Iri, target: Iri, transform: Transform) -> Result<Self, RuleError> {
        if source == target {
            return Err(RuleError::SelfDerivation(source));
        }
        Ok(Rule::LiteralDerive { source, target, transform })
    }

    pub fn propagate_via(bridge: Iri, over: BTreeSet<Iri>) -> Result<Self, RuleError> {
        if over.contains(&bridge) {
            return Err(RuleError::BridgeInOver(bridge));
        }
        Ok(Rule::PropagateVia { bridge, over })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        RuleSet { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Only the `DERIVE` rules.
    pub fn literal_rules(&self) -> RuleSet {
        RuleSet::new(self.rules.iter().filter(|r| matches!(r, Rule::LiteralDerive { .. })).cloned().collect())
    }

    /// Only the `PROPAGATE` rules.
    pub fn propagation_rules(&self) -> RuleSet {
        RuleSet::new(self.rules.iter().filter(|r| matches!(r, Rule::PropagateVia { .. })).cloned().collect())
    }

    pub fn to_text(&self, prefixes: &PrefixMap) -> String {
        let name = |i: &Iri| prefixes.compact(i).unwrap_or_else(|| format!("<{i}>"));
        let mut out = String::new();
        for rule in &self.rules {
            match rule {
                Rule::LiteralDerive { source, target, transform } => {
                    out.push_str(&format!("DERIVE {} -> {} BY {}\n", name(source), name(target), transform.name()))
                }
                Rule::PropagateVia { bridge, over } => {
                    let over: Vec<_> = over.iter().map(name).collect();
                    out.push_str(&format!("PROPAGATE {} OVER {}\n", name(bridge), over.join(",")))
                }
            }
        }
        out
    }
}

/// Parse the rule DSL. `#` starts a comment line; `PREFIX label: <ns>` lines
/// extend `prefixes` for the rest of the file.
pub fn parse_rules(text: &str, prefixes: &PrefixMap) -> Result<RuleSet, RuleError> {
    let mut prefixes = prefixes.clone();
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut words = content.split_whitespace();
        let directive = words.next().unwrap_or_default();
        let rest: Vec<&str> = words.collect();
        let malformed = |message: &str| RuleError::Malformed { line, message: message.to_string() };
        let resolve = |name: &str, prefixes: &PrefixMap| {
            prefixes
                .resolve(name)
                .ok_or_else(|| RuleError::Malformed { line, message: format!("cannot resolve `{name}` to an IRI") })
        };
        match directive.to_ascii_uppercase().as_str() {
            "PREFIX" => {
                let [label, ns] = rest.as_slice() else {
                    return Err(malformed("expected `PREFIX label: <namespace>`"));
                };
                let label = label.strip_suffix(':').ok_or_else(|| malformed("prefix label must end with `:`"))?;
                let ns = ns
                    .strip_prefix('<')
                    .and_then(|n| n.strip_suffix('>'))
                    .ok_or_else(|| malformed("namespace must be written as <iri>"))?;
                prefixes.insert(label, ns);
            }
            "DERIVE" => {
                let [source, arrow, target, by, transform] = rest.as_slice() else {
                    return Err(malformed("expected `DERIVE <source> -> <target> BY <transform>`"));
                };
                if *arrow != "->" || !by.eq_ignore_ascii_case("BY") {
                    return Err(malformed("expected `DERIVE <source> -> <target> BY <transform>`"));
                }
                let transform = match *transform {
                    "year-of-date" => Transform::YearOfDate,
                    other => return Err(RuleError::UnknownTransform { line, name: other.to_string() }),
                };
                rules.push(Rule::literal_derive(resolve(source, &prefixes)?, resolve(target, &prefixes)?, transform)?);
            }
            "PROPAGATE" => {
                let (bridge, over) = match rest.as_slice() {
                    [bridge, kw, list @ ..] if kw.eq_ignore_ascii_case("OVER") && !list.is_empty() => {
                        (bridge, list.join(""))
                    }
                    _ => return Err(malformed("expected `PROPAGATE <bridge> OVER <p1>,<p2>,...`")),
                };
                let over = over.split(',').filter(|s| !s.is_empty()).map(|p| resolve(p, &prefixes)).collect::<Result<
                    BTreeSet<_>,
                    _,
                >>(
                )?;
                if over.is_empty() {
                    return Err(malformed("PROPAGATE needs at least one property"));
                }
                rules.push(Rule::propagate_via(resolve(bridge, &prefixes)?, over)?);
            }
            _ => return Err(RuleError::UnknownDirective { line, directive: directive.to_string() }),
        }
    }
    Ok(RuleSet { rules })
}

/// Outcome of extracting a year from a date literal.
#[derive(Debug, PartialEq, Eq)]
pub(crate) enum YearOf {
    Year(String),
    NotADate,
    Rejected,
}

/// Leading four-digit year of an `xsd:date` / `xsd:dateTime` lexical form.
/// Negative and five-digit years are rejected.
pub(crate) fn year_of_date(literal: &Literal) -> YearOf {
    if !(literal.has_datatype(vocab::XSD_DATE) || literal.has_datatype(vocab::XSD_DATE_TIME)) {
        return YearOf::NotADate;
    }
    let lex = literal.lexical();
    let digits = lex.chars().take_while(char::is_ascii_digit).count();
    let well_formed = digits == 4 && lex[4..].starts_with('-') && lex.len() >= 10;
    if well_formed {
        YearOf::Year(lex[..4].to_string())
    } else {
        YearOf::Rejected
    }
}

/// Close `g` under `rules`. Original triples are kept; derived triples are
/// added until nothing new appears. Propagation performs one join per source
/// triple and never re-propagates a triple it produced.
pub fn apply_rules(g: &Graph, rules: &RuleSet, aux: &dyn TripleLookup) -> Result<Graph, RuleError> {
    let mut out = g.clone();
    if rules.is_empty() || g.is_empty() {
        return Ok(out);
    }
    let mut propagated: BTreeSet<Triple> = BTreeSet::new();
    loop {
        let mut fresh: Vec<(Triple, bool)> = Vec::new();
        for rule in &rules.rules {
            match rule {
                Rule::LiteralDerive { source, target, transform: Transform::YearOfDate } => {
                    for t in out.with_predicate(source) {
                        let Term::Literal(lit) = &t.object else { continue };
                        match year_of_date(lit) {
                            YearOf::Year(year) => {
                                let derived = Triple::new(
                                    t.subject.clone(),
                                    target.clone(),
                                    Literal::typed(year, iri(vocab::XSD_GYEAR)),
                                );
                                if !out.contains(&derived) {
                                    fresh.push((derived, false));
                                }
                            }
                            YearOf::Rejected => {
                                warn!(
                                    "skipping {:?} {:?}: `{}` has no four-digit year",
                                    t.subject,
                                    source,
                                    lit.lexical()
                                )
                            }
                            YearOf::NotADate => {}
                        }
                    }
                }
                Rule::PropagateVia { bridge, over } => {
                    for t in out.iter().filter(|t| over.contains(&t.predicate) && !propagated.contains(t)) {
                        let Term::Iri(place) = &t.object else { continue };
                        for country in aux.objects(place, bridge)? {
                            let Term::Iri(country) = country else { continue };
                            let derived = Triple::new(t.subject.clone(), t.predicate.clone(), country);
                            if !out.contains(&derived) {
                                fresh.push((derived, true));
                            }
                        }
                    }
                }
            }
        }
        if fresh.is_empty() {
            return Ok(out);
        }
        for (triple, via_propagation) in fresh {
            if via_propagation {
                propagated.insert(triple.clone());
            }
            out.insert(triple).map_err(|e| RuleError::Malformed { line: 0, message: e.to_string() })?;
        }
    }
}
