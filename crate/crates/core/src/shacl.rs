//! SHACL shape subset: node shapes with a target class and a flat list of
//! property constraints, plus the property-combination patterns they admit.
//!
//! The pattern space of a shape is never enumerated. A graph is valid
//! against a pattern when its predicate set equals the pattern, so both
//! validity and the census of realized patterns reduce to set comparisons.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::rdf::turtle::{read_document, Node, RawTriple};
use crate::rdf::{iri, Graph, Iri, PrefixMap, TurtleError};
use crate::vocab;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShapeError {
    #[error(transparent)]
    Turtle(#[from] TurtleError),
    #[error("property constraint without sh:path")]
    MissingPath,
    #[error("constraint on {0:?} declares both sh:datatype and sh:class")]
    BothDatatypeAndClass(Iri),
    #[error("constraint on {0:?} declares neither sh:datatype nor sh:class")]
    MissingRange(Iri),
    #[error("node shape {0} has no sh:targetClass")]
    NoTargetClass(String),
    #[error("document declares no node shape")]
    NoShape,
    #[error("node shapes must be named")]
    AnonymousShape,
    #[error("path {0:?} is constrained twice")]
    DuplicatePath(Iri),
    #[error("shape declares no property constraints")]
    NoConstraints,
    #[error("invalid value for {0}: {1}")]
    InvalidCount(&'static str, String),
    #[error("{0:?} is not a property of the shape")]
    UnknownProperty(Iri),
    #[error("cannot restrict a shape to an empty property set")]
    EmptyRestriction,
    #[error("pattern space of {0} properties does not fit in 64 bits")]
    Overflow(usize),
    #[error("property {0:?} lies outside the shape")]
    PropertyOutsideShape(Iri),
    #[error("a pattern needs at least one property")]
    EmptyPattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// Literal-valued; the range is a datatype IRI.
    Datatype,
    /// Resource-valued; the range is a class IRI.
    Object,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyConstraint {
    pub path: Iri,
    pub kind: ConstraintKind,
    pub range: Iri,
    pub min_count: u32,
    pub max_count: Option<u32>,
}

impl PropertyConstraint {
    pub fn is_required(&self) -> bool {
        self.min_count >= 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShaclShape {
    pub id: Iri,
    pub target_class: Iri,
    constraints: Vec<PropertyConstraint>,
}

impl ShaclShape {
    pub fn new(id: Iri, target_class: Iri, constraints: Vec<PropertyConstraint>) -> Result<Self, ShapeError> {
        if constraints.is_empty() {
            return Err(ShapeError::NoConstraints);
        }
        let mut seen = BTreeSet::new();
        for c in &constraints {
            if !seen.insert(&c.path) {
                return Err(ShapeError::DuplicatePath(c.path.clone()));
            }
        }
        Ok(ShaclShape { id, target_class, constraints })
    }

    pub fn constraints(&self) -> &[PropertyConstraint] {
        &self.constraints
    }

    pub fn constraint(&self, path: &Iri) -> Option<&PropertyConstraint> {
        self.constraints.iter().find(|c| &c.path == path)
    }

    /// P(s): the constrained property paths.
    pub fn properties(&self) -> BTreeSet<Iri> {
        self.constraints.iter().map(|c| c.path.clone()).collect()
    }

    pub fn properties_of_kind(&self, kind: ConstraintKind) -> BTreeSet<Iri> {
        self.constraints.iter().filter(|c| c.kind == kind).map(|c| c.path.clone()).collect()
    }

    pub fn datatype_properties(&self) -> BTreeSet<Iri> {
        self.properties_of_kind(ConstraintKind::Datatype)
    }

    pub fn object_properties(&self) -> BTreeSet<Iri> {
        self.properties_of_kind(ConstraintKind::Object)
    }

    pub fn has_property(&self, path: &Iri) -> bool {
        self.constraint(path).is_some()
    }
}

/// A non-empty combination of a shape's properties.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern(BTreeSet<Iri>);

impl Pattern {
    pub fn new(properties: BTreeSet<Iri>, shape: &ShaclShape) -> Result<Self, ShapeError> {
        if properties.is_empty() {
            return Err(ShapeError::EmptyPattern);
        }
        if let Some(p) = properties.iter().find(|p| !shape.has_property(p)) {
            return Err(ShapeError::PropertyOutsideShape(p.clone()));
        }
        Ok(Pattern(properties))
    }

    /// The pattern a graph realizes, checked against `shape`.
    pub fn of_graph(g: &Graph, shape: &ShaclShape) -> Result<Self, ShapeError> {
        Pattern::new(g.property_set(), shape)
    }

    pub fn properties(&self) -> &BTreeSet<Iri> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Parse every node shape declared in `turtle`.
pub fn parse_shapes(turtle: &str) -> Result<Vec<ShaclShape>, ShapeError> {
    let doc = read_document(turtle, &PrefixMap::standard(), true)?;
    let triples = &doc.triples;
    let node_shape = Node::Iri(iri(vocab::SH_NODE_SHAPE));

    let mut shape_nodes: Vec<&Node> = Vec::new();
    for t in triples {
        let declares = (t.predicate.as_str() == vocab::RDF_TYPE && t.object == node_shape)
            || t.predicate.as_str() == vocab::SH_TARGET_CLASS;
        if declares && !shape_nodes.contains(&&t.subject) {
            shape_nodes.push(&t.subject);
        }
    }
    if shape_nodes.is_empty() {
        return Err(ShapeError::NoShape);
    }

    shape_nodes.into_iter().map(|node| shape_from_node(node, triples)).collect()
}

/// Parse a document that declares exactly the shape of interest; when several
/// node shapes are present the first one declared is returned.
pub fn parse_shape(turtle: &str) -> Result<ShaclShape, ShapeError> {
    parse_shapes(turtle).map(|mut shapes| shapes.swap_remove(0))
}

fn values<'a>(triples: &'a [RawTriple], subject: &'a Node, predicate: &'a str) -> impl Iterator<Item = &'a Node> {
    triples.iter().filter(move |t| &t.subject == subject && t.predicate.as_str() == predicate).map(|t| &t.object)
}

fn shape_from_node(node: &Node, triples: &[RawTriple]) -> Result<ShaclShape, ShapeError> {
    let Node::Iri(id) = node else {
        return Err(ShapeError::AnonymousShape);
    };
    let target_class = values(triples, node, vocab::SH_TARGET_CLASS)
        .find_map(|n| match n {
            Node::Iri(i) => Some(i.clone()),
            _ => None,
        })
        .ok_or_else(|| ShapeError::NoTargetClass(id.to_string()))?;

    let constraints = values(triples, node, vocab::SH_PROPERTY)
        .map(|prop| constraint_from_node(prop, triples))
        .collect::<Result<Vec<_>, _>>()?;
    ShaclShape::new(id.clone(), target_class, constraints)
}

fn constraint_from_node(node: &Node, triples: &[RawTriple]) -> Result<PropertyConstraint, ShapeError> {
    let first_iri = |pred: &str| {
        values(triples, node, pred).find_map(|n| match n {
            Node::Iri(i) => Some(i.clone()),
            _ => None,
        })
    };
    let count = |pred: &'static str, name: &'static str| -> Result<Option<u32>, ShapeError> {
        match values(triples, node, pred).next() {
            None => Ok(None),
            Some(Node::Literal(l)) => {
                l.lexical().parse().map(Some).map_err(|_| ShapeError::InvalidCount(name, l.lexical().to_string()))
            }
            Some(other) => Err(ShapeError::InvalidCount(name, format!("{other:?}"))),
        }
    };

    let path = first_iri(vocab::SH_PATH).ok_or(ShapeError::MissingPath)?;
    let (kind, range) = match (first_iri(vocab::SH_DATATYPE), first_iri(vocab::SH_CLASS)) {
        (Some(_), Some(_)) => return Err(ShapeError::BothDatatypeAndClass(path)),
        (Some(dt), None) => (ConstraintKind::Datatype, dt),
        (None, Some(class)) => (ConstraintKind::Object, class),
        (None, None) => return Err(ShapeError::MissingRange(path)),
    };
    Ok(PropertyConstraint {
        path,
        kind,
        range,
        min_count: count(vocab::SH_MIN_COUNT, "sh:minCount")?.unwrap_or(0),
        max_count: count(vocab::SH_MAX_COUNT, "sh:maxCount")?,
    })
}

/// |Π(s)| = 2^|P(s)| − 1.
pub fn pattern_count(shape: &ShaclShape) -> Result<u64, ShapeError> {
    let n = shape.constraints.len();
    if n > 62 {
        return Err(ShapeError::Overflow(n));
    }
    Ok((1u64 << n) - 1)
}

/// True iff the graph uses exactly the pattern's properties.
pub fn valid_against_pattern(g: &Graph, pattern: &Pattern) -> bool {
    g.property_set() == pattern.0
}

/// Count how many graphs realize each pattern.
pub fn realized_patterns<'a>(
    graphs: impl IntoIterator<Item = &'a Graph>,
    shape: &ShaclShape,
) -> Result<BTreeMap<Pattern, usize>, ShapeError> {
    let mut counts = BTreeMap::new();
    for g in graphs {
        *counts.entry(Pattern::of_graph(g, shape)?).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Keep only the constraints on `props`.
pub fn restrict_shape(shape: &ShaclShape, props: &BTreeSet<Iri>) -> Result<ShaclShape, ShapeError> {
    if props.is_empty() {
        return Err(ShapeError::EmptyRestriction);
    }
    if let Some(p) = props.iter().find(|p| !shape.has_property(p)) {
        return Err(ShapeError::UnknownProperty(p.clone()));
    }
    Ok(ShaclShape {
        id: shape.id.clone(),
        target_class: shape.target_class.clone(),
        constraints: shape.constraints.iter().filter(|c| props.contains(&c.path)).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Literal, Triple};

    const PERSON: &str = include_str!("../fixtures/person_shape.ttl");

    fn dbo(local: &str) -> Iri {
        iri(&format!("{}{local}", vocab::DBO))
    }

    fn graph(props: &[&str]) -> Graph {
        let e = iri("http://dbpedia.org/resource/E");
        Graph::from_triples(props.iter().map(|p| Triple::new(e.clone(), dbo(p), Literal::plain("v"))))
    }

    #[test]
    fn person_shape_has_seven_datatype_and_three_object_constraints() {
        let shape = parse_shape(PERSON).unwrap();
        assert_eq!(shape.target_class, iri(vocab::DBO_PERSON));
        assert_eq!(shape.constraints().len(), 10);
        assert_eq!(shape.datatype_properties().len(), 7);
        let expected: BTreeSet<_> = ["birthPlace", "nationality", "deathPlace"].into_iter().map(dbo).collect();
        assert_eq!(shape.object_properties(), expected);
        let label = shape.constraint(&iri(vocab::RDFS_LABEL)).unwrap();
        assert!(label.is_required());
        assert_eq!(label.max_count, Some(1));
    }

    #[test]
    fn single_datatype_constraint() {
        let text = "@prefix ex: <http://ex.org/> . ex:S a sh:NodeShape ; sh:targetClass ex:C ; \
                    sh:property [ sh:path ex:p ; sh:datatype xsd:string ] .";
        let shape = parse_shape(text).unwrap();
        assert_eq!(shape.constraints().len(), 1);
        assert_eq!(shape.constraints()[0].kind, ConstraintKind::Datatype);
        assert_eq!(shape.constraints()[0].range, iri(vocab::XSD_STRING));
    }

    #[test]
    fn both_datatype_and_class_is_rejected() {
        let text = "@prefix ex: <http://ex.org/> . ex:S a sh:NodeShape ; sh:targetClass ex:C ; \
                    sh:property [ sh:path ex:p ; sh:datatype xsd:string ; sh:class ex:D ] .";
        assert_eq!(parse_shape(text), Err(ShapeError::BothDatatypeAndClass(iri("http://ex.org/p"))));
    }

    #[test]
    fn missing_path_and_target() {
        let no_path = "@prefix ex: <http://ex.org/> . ex:S a sh:NodeShape ; sh:targetClass ex:C ; \
                       sh:property [ sh:datatype xsd:string ] .";
        assert_eq!(parse_shape(no_path), Err(ShapeError::MissingPath));
        let no_target = "@prefix ex: <http://ex.org/> . ex:S a sh:NodeShape ; \
                         sh:property [ sh:path ex:p ; sh:datatype xsd:string ] .";
        assert!(matches!(parse_shape(no_target), Err(ShapeError::NoTargetClass(_))));
    }

    #[test]
    fn pattern_counts() {
        let shape = parse_shape(PERSON).unwrap();
        assert_eq!(pattern_count(&shape).unwrap(), 1023);
        let one = restrict_shape(&shape, &[dbo("alias")].into()).unwrap();
        assert_eq!(pattern_count(&one).unwrap(), 1);
        let two = restrict_shape(&shape, &[dbo("alias"), dbo("birthName")].into()).unwrap();
        assert_eq!(pattern_count(&two).unwrap(), 3);
    }

    #[test]
    fn pattern_count_refuses_to_wrap() {
        let constraints = (0..63)
            .map(|i| PropertyConstraint {
                path: iri(&format!("http://ex.org/p{i}")),
                kind: ConstraintKind::Datatype,
                range: iri(vocab::XSD_STRING),
                min_count: 0,
                max_count: None,
            })
            .collect();
        let shape = ShaclShape::new(iri("http://ex.org/S"), iri("http://ex.org/C"), constraints).unwrap();
        assert_eq!(pattern_count(&shape), Err(ShapeError::Overflow(63)));
    }

    #[test]
    fn pattern_validity_is_set_equality() {
        let shape = parse_shape(PERSON).unwrap();
        let with_label = |props: &[&str]| {
            let e = iri("http://dbpedia.org/resource/E");
            let mut g = graph(props);
            g.insert(Triple::new(e, iri(vocab::RDFS_LABEL), Literal::plain("E"))).unwrap();
            g
        };
        let pi = Pattern::new([dbo("birthDate"), iri(vocab::RDFS_LABEL)].into(), &shape).unwrap();
        assert!(valid_against_pattern(&with_label(&["birthDate"]), &pi));
        assert!(!valid_against_pattern(&graph(&["birthDate"]), &pi));
        let only_date = Pattern::new([dbo("birthDate")].into(), &shape).unwrap();
        assert!(!valid_against_pattern(&graph(&["birthDate", "alias"]), &only_date));
    }

    #[test]
    fn realized_patterns_group_identical_property_sets() {
        let shape = parse_shape(PERSON).unwrap();
        let graphs = [graph(&["birthDate", "alias"]), graph(&["alias", "birthDate"])];
        let counts = realized_patterns(&graphs, &shape).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts.values().copied().collect::<Vec<_>>(), [2]);
        let outside = [graph(&["spouse"])];
        assert_eq!(realized_patterns(&outside, &shape), Err(ShapeError::PropertyOutsideShape(dbo("spouse"))));
    }

    #[test]
    fn restriction() {
        let shape = parse_shape(PERSON).unwrap();
        let op = restrict_shape(&shape, &shape.object_properties()).unwrap();
        assert_eq!(op.constraints().len(), 3);
        assert!(op.constraints().iter().all(|c| c.kind == ConstraintKind::Object));
        assert_eq!(op.target_class, shape.target_class);
        assert_eq!(restrict_shape(&shape, &shape.properties()).unwrap(), shape);
        assert_eq!(
            restrict_shape(&shape, &[dbo("notInShape")].into()),
            Err(ShapeError::UnknownProperty(dbo("notInShape")))
        );
        assert_eq!(restrict_shape(&shape, &BTreeSet::new()), Err(ShapeError::EmptyRestriction));
        let p = [dbo("alias"), dbo("birthPlace")].into();
        let once = restrict_shape(&shape, &p).unwrap();
        assert_eq!(restrict_shape(&once, &p).unwrap(), once);
    }
}
