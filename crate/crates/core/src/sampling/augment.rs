//! Synthetic examples from abstract templates.
//!
//! A template is an abstract in which every surface form of its own gold
//! graph (literal renderings and the anchors of linked objects) has been cut
//! out into a slot. Filling the slots with another entity's values yields a
//! new abstract whose gold graph is that entity's values for the slotted
//! properties.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evidence::{
    check_datatype_triple, date_form_at, date_renderings, decoded_iri, extract_markdown_links, resource_of_url,
    MarkdownLink,
};
use crate::ingest::DualExample;
use crate::rdf::{Graph, Iri, Term, Triple};

use super::{rng, SamplingError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AugmentStrategy {
    /// Templates in turn, value donors uniformly at random.
    #[serde(rename = "KR0")]
    Kr0,
    /// Templates whose graphs cover the most under-threshold properties first.
    #[serde(rename = "KR1")]
    Kr1,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Form {
    /// The lexical form itself.
    Lexical,
    /// Index into `date_renderings`.
    Date(usize),
    /// The anchor of a Markdown link.
    Link,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Slot {
    property: Iri,
    ordinal: usize,
    form: Form,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub source: Iri,
    pub properties: BTreeSet<Iri>,
    slots: Vec<Slot>,
    plain: Vec<Piece>,
    md: Vec<Piece>,
}

fn values_by_property(g: &Graph) -> BTreeMap<&Iri, Vec<&Term>> {
    let mut out: BTreeMap<&Iri, Vec<&Term>> = BTreeMap::new();
    for t in g {
        out.entry(&t.predicate).or_default().push(&t.object);
    }
    out
}

fn link_to<'a>(links: &'a [MarkdownLink], object: &Iri) -> Option<&'a MarkdownLink> {
    let wanted = decoded_iri(object);
    links.iter().find(|l| !l.anchor.is_empty() && resource_of_url(&l.url).as_deref() == Some(wanted.as_str()))
}

fn markup(link: &MarkdownLink) -> String {
    format!("[{}]({})", link.anchor, link.url)
}

struct Needle {
    text: String,
    slot: Option<usize>,
    digits_bounded: bool,
}

/// Leftmost-longest replacement of needles by slots. Needles without a slot
/// are copied verbatim and only shield their span.
fn cut(text: &str, needles: &[Needle]) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut literal = String::new();
    let mut i = 0;
    while i < text.len() {
        let hit = needles
            .iter()
            .filter(|n| {
                !n.text.is_empty()
                    && text[i..].starts_with(&n.text)
                    && (!n.digits_bounded || date_form_at(text, i, &n.text))
            })
            .max_by(|a, b| a.text.len().cmp(&b.text.len()).then(b.slot.cmp(&a.slot)));
        match hit {
            Some(n) => {
                match n.slot {
                    Some(s) => {
                        if !literal.is_empty() {
                            pieces.push(Piece::Text(std::mem::take(&mut literal)));
                        }
                        pieces.push(Piece::Slot(s));
                    }
                    None => literal.push_str(&n.text),
                }
                i += n.text.len();
            }
            None => {
                let c = text[i..].chars().next().expect("in bounds");
                literal.push(c);
                i += c.len_utf8();
            }
        }
    }
    if !literal.is_empty() {
        pieces.push(Piece::Text(literal));
    }
    pieces
}

/// Cut every gold surface form out of `example`'s abstracts. `None` when
/// some triple has no verbatim surface form.
pub fn build_template(example: &DualExample) -> Option<Template> {
    let links = extract_markdown_links(&example.abstract_md);
    let mut slots = Vec::new();
    let mut plain_needles = Vec::new();
    let mut md_needles = Vec::new();
    for (property, values) in values_by_property(&example.graph) {
        for (ordinal, value) in values.into_iter().enumerate() {
            let id = slots.len();
            let form = match value {
                Term::Literal(l) => {
                    let renderings = date_renderings(l);
                    let (form, surface) = if renderings.is_empty() {
                        if l.lexical().is_empty() || !example.abstract_plain.contains(l.lexical()) {
                            return None;
                        }
                        (Form::Lexical, l.lexical().to_string())
                    } else {
                        let k = renderings
                            .iter()
                            .position(|r| crate::evidence::contains_date_form(&example.abstract_plain, r))?;
                        (Form::Date(k), renderings[k].clone())
                    };
                    let bounded = matches!(form, Form::Date(_));
                    plain_needles.push(Needle { text: surface.clone(), slot: Some(id), digits_bounded: bounded });
                    md_needles.push(Needle { text: surface, slot: Some(id), digits_bounded: bounded });
                    form
                }
                Term::Iri(o) => {
                    let link = link_to(&links, o)?;
                    if !example.abstract_plain.contains(&link.anchor) {
                        return None;
                    }
                    plain_needles.push(Needle { text: link.anchor.clone(), slot: Some(id), digits_bounded: false });
                    md_needles.push(Needle { text: markup(link), slot: Some(id), digits_bounded: false });
                    Form::Link
                }
            };
            slots.push(Slot { property: property.clone(), ordinal, form });
        }
    }
    if slots.is_empty() {
        return None;
    }
    let slotted: BTreeSet<String> = md_needles.iter().map(|n| n.text.clone()).collect();
    for link in &links {
        let text = markup(link);
        if !slotted.contains(&text) {
            md_needles.push(Needle { text, slot: None, digits_bounded: false });
        }
    }
    Some(Template {
        source: example.entity.clone(),
        properties: example.graph.property_set(),
        plain: cut(&example.abstract_plain, &plain_needles),
        md: cut(&example.abstract_md, &md_needles),
        slots,
    })
}

impl Template {
    /// Fill the slots with `donor`'s values. `None` when the donor lacks a
    /// slotted value, has no link for a slotted object, or the result would
    /// not evidence its own graph.
    pub fn fill(&self, donor: &DualExample) -> Option<DualExample> {
        let values = values_by_property(&donor.graph);
        let links = extract_markdown_links(&donor.abstract_md);
        let mut plain_fill = Vec::with_capacity(self.slots.len());
        let mut md_fill = Vec::with_capacity(self.slots.len());
        let mut graph = Graph::for_entity(donor.entity.clone());
        for slot in &self.slots {
            let term = *values.get(&slot.property)?.get(slot.ordinal)?;
            let (plain, md) = match (&slot.form, term) {
                (Form::Lexical, Term::Literal(l)) if date_renderings(l).is_empty() && !l.lexical().is_empty() => {
                    (l.lexical().to_string(), l.lexical().to_string())
                }
                (Form::Date(k), Term::Literal(l)) => {
                    let r = date_renderings(l).get(*k)?.clone();
                    (r.clone(), r)
                }
                (Form::Link, Term::Iri(o)) => {
                    let link = link_to(&links, o)?;
                    (link.anchor.clone(), markup(link))
                }
                _ => return None,
            };
            plain_fill.push(plain);
            md_fill.push(md);
            graph.insert(Triple::new(donor.entity.clone(), slot.property.clone(), term.clone())).ok()?;
        }
        let render = |pieces: &[Piece], fill: &[String]| -> String {
            pieces
                .iter()
                .map(|p| match p {
                    Piece::Text(t) => t.as_str(),
                    Piece::Slot(s) => fill[*s].as_str(),
                })
                .collect()
        };
        let plain = render(&self.plain, &plain_fill);
        let md = render(&self.md, &md_fill);
        if !self_consistent(&graph, &plain, &md) {
            return None;
        }
        let mut out =
            DualExample::new(donor.entity.clone(), plain, md, graph, donor.created_date, donor.wiki_page_id).ok()?;
        if donor.entity != self.source {
            out.template = Some(self.source.clone());
        }
        Some(out)
    }
}

fn self_consistent(graph: &Graph, plain: &str, md: &str) -> bool {
    let links = extract_markdown_links(md);
    graph.iter().all(|t| match &t.object {
        Term::Literal(_) => check_datatype_triple(plain, t).supported,
        Term::Iri(o) => link_to(&links, o).is_some(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentOutput {
    /// The input dataset followed by the synthetic examples.
    pub dataset: Vec<DualExample>,
    pub synthetic: usize,
    /// Template/donor pairs that could not be filled.
    pub unfillable: usize,
}

fn count_bearing(dataset: &[DualExample], p: &Iri) -> usize {
    dataset.iter().filter(|e| e.graph.property_set().contains(p)).count()
}

/// Append synthetic examples until `target` is used by `threshold` examples.
///
/// Templates come from the dataset's examples using `target`; value donors
/// are the examples of `base` using `target`, never the template's own
/// entity, and each template/donor pair is tried at most once.
pub fn augment_template(
    base: &[DualExample],
    dataset: &[DualExample],
    target: &Iri,
    threshold: usize,
    strategy: AugmentStrategy,
    seed: u64,
) -> Result<AugmentOutput, SamplingError> {
    let mut out = AugmentOutput { dataset: dataset.to_vec(), synthetic: 0, unfillable: 0 };
    let mut count = count_bearing(dataset, target);
    if count >= threshold {
        return Ok(out);
    }
    let mut templates: Vec<Template> =
        dataset.iter().filter(|e| e.graph.property_set().contains(target)).filter_map(build_template).collect();
    if templates.is_empty() {
        return Err(SamplingError::NoTemplate(target.clone()));
    }
    let mut rng = rng(seed);
    templates.sort_by(|a, b| a.source.cmp(&b.source));
    templates.dedup_by(|a, b| a.source == b.source);
    templates.shuffle(&mut rng);
    let mut donors: Vec<&DualExample> = base.iter().filter(|e| e.graph.property_set().contains(target)).collect();
    donors.sort_by_key(|e| e.id());

    let mut remaining: Vec<Vec<usize>> =
        templates.iter().map(|t| (0..donors.len()).filter(|&d| donors[d].entity != t.source).collect()).collect();
    let mut property_counts: BTreeMap<Iri, usize> = BTreeMap::new();
    for e in dataset {
        for p in e.graph.property_set() {
            *property_counts.entry(p).or_default() += 1;
        }
    }
    let mut cursor = 0;
    while count < threshold {
        let open: Vec<usize> = (0..templates.len()).filter(|&t| !remaining[t].is_empty()).collect();
        if open.is_empty() {
            return Err(SamplingError::ExhaustedDonors { property: target.clone(), count, threshold });
        }
        let t = match strategy {
            AugmentStrategy::Kr0 => {
                let t = *open.iter().find(|&&t| t >= cursor).unwrap_or(&open[0]);
                cursor = t + 1;
                t
            }
            AugmentStrategy::Kr1 => {
                let gain = |t: usize| {
                    templates[t]
                        .properties
                        .iter()
                        .filter(|p| *p != target && property_counts.get(*p).copied().unwrap_or(0) < threshold)
                        .count()
                };
                *open.iter().max_by(|&&a, &&b| gain(a).cmp(&gain(b)).then(b.cmp(&a))).expect("non-empty")
            }
        };
        let pick = rng.random_range(0..remaining[t].len());
        let d = remaining[t].swap_remove(pick);
        match templates[t].fill(donors[d]) {
            Some(synthetic) => {
                for p in synthetic.graph.property_set() {
                    *property_counts.entry(p).or_default() += 1;
                }
                out.dataset.push(synthetic);
                out.synthetic += 1;
                count += 1;
            }
            None => out.unfillable += 1,
        }
    }
    Ok(out)
}
