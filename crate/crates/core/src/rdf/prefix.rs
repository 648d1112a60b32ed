use std::collections::BTreeMap;

use super::Iri;
use crate::vocab;

/// Prefix label to namespace IRI.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixMap {
    entries: BTreeMap<String, String>,
}

impl PrefixMap {
    pub fn new() -> Self {
        PrefixMap::default()
    }

    /// rdf, rdfs, xsd, sh, owl, dbo and dbr.
    pub fn standard() -> Self {
        let mut map = PrefixMap::new();
        for (label, ns) in [
            ("rdf", vocab::RDF),
            ("rdfs", vocab::RDFS),
            ("xsd", vocab::XSD),
            ("sh", vocab::SH),
            ("owl", vocab::OWL),
            ("dbo", vocab::DBO),
            ("dbr", vocab::DBR),
        ] {
            map.insert(label, ns);
        }
        map
    }

    pub fn insert(&mut self, label: impl Into<String>, namespace: impl Into<String>) {
        self.entries.insert(label.into(), namespace.into());
    }

    pub fn get(&self, label: &str) -> Option<&str> {
        self.entries.get(label).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Expand `label:local`; `None` when the label is undeclared.
    pub fn expand(&self, label: &str, local: &str) -> Option<String> {
        self.get(label).map(|ns| format!("{ns}{local}"))
    }

    /// Expand a `label:local` string, or `None` if it is not a declared
    /// prefixed name.
    pub fn expand_curie(&self, curie: &str) -> Option<Iri> {
        let (label, local) = curie.split_once(':')?;
        let expanded = self.expand(label, local)?;
        Iri::new(expanded).ok()
    }

    /// Prefixed form of `iri` under the longest matching namespace, provided the
    /// local part reads back unchanged.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        self.entries
            .iter()
            .filter_map(|(label, ns)| {
                let local = iri.as_str().strip_prefix(ns.as_str())?;
                is_safe_local(local).then(|| (ns.len(), format!("{label}:{local}")))
            })
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
            .map(|(_, curie)| curie)
    }

    /// Like [`compact`](Self::compact), but reserved characters of the local
    /// part are backslash-escaped instead of forcing the full IRI.
    pub fn compact_escaped(&self, iri: &Iri) -> Option<String> {
        self.entries
            .iter()
            .filter_map(|(label, ns)| {
                let local = iri.as_str().strip_prefix(ns.as_str())?;
                escape_local(local).map(|local| (ns.len(), format!("{label}:{local}")))
            })
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
            .map(|(_, curie)| curie)
    }

    /// Accept either `label:local` or a full IRI.
    pub fn resolve(&self, text: &str) -> Option<Iri> {
        let text = text.trim();
        if let Some(inner) = text.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
            return Iri::new(inner).ok();
        }
        if let Some(iri) = self.expand_curie(text) {
            return Some(iri);
        }
        if text.contains("://") || text.starts_with("urn:") {
            return Iri::new(text).ok();
        }
        None
    }
}

/// Local names written without escapes: letters, digits, `_`, `-`, and
/// interior dots.
pub(crate) fn is_safe_local(local: &str) -> bool {
    let Some(first) = local.chars().next() else {
        return false;
    };
    if first == '-' || first == '.' || local.ends_with('.') {
        return false;
    }
    local.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn escape_local(local: &str) -> Option<String> {
    let last = local.chars().count().saturating_sub(1);
    let mut out = String::with_capacity(local.len());
    for (i, c) in local.chars().enumerate() {
        let edge = i == 0 || i == last;
        if c.is_alphanumeric() || c == '_' || c == ':' || (c == '-' && i != 0) || (c == '.' && !edge) {
            out.push(c);
        } else if super::turtle::LOCAL_ESCAPES.contains(c) {
            out.push('\\');
            out.push(c);
        } else {
            return None;
        }
    }
    Some(out)
}
