//! The dual base: abstracts paired with the description graph of the entity
//! they describe.

pub mod fetch;
mod html;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use log::warn;
use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fetch::{AbstractRecord, Endpoints, FetchMode, FetchPolicy, Fetcher, HttpTransport, Transport};
pub use html::html_to_markdown;

use crate::rdf::{iri, parse_turtle, serialize_statements, Graph, Iri, PrefixMap, RdfError, TurtleError};
use crate::vocab;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("no cached {endpoint} record for {key} and live fetching is off")]
    NotInFixture { endpoint: String, key: String },
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("cannot decode response: {0}")]
    Decode(String),
    #[error("expected an entity IRI, got {0}")]
    NotAnIri(String),
    #[error("invalid fetch policy: {0}")]
    InvalidPolicy(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("example for {0:?} has an empty plain abstract")]
    EmptyAbstract(Iri),
    #[error(transparent)]
    Rdf(#[from] RdfError),
}

/// One `(abstract, markdown abstract, graph)` record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualExample {
    pub entity: Iri,
    pub abstract_plain: String,
    pub abstract_md: String,
    pub graph: Graph,
    pub created_date: NaiveDate,
    pub wiki_page_id: u64,
    /// For synthetic examples, the entity whose abstract served as template.
    pub template: Option<Iri>,
}

impl DualExample {
    pub fn new(
        entity: Iri,
        abstract_plain: impl Into<String>,
        abstract_md: impl Into<String>,
        graph: Graph,
        created_date: NaiveDate,
        wiki_page_id: u64,
    ) -> Result<Self, IngestError> {
        let abstract_plain = abstract_plain.into();
        if abstract_plain.trim().is_empty() {
            return Err(IngestError::EmptyAbstract(entity));
        }
        let graph = graph.with_primary_subject(entity.clone())?;
        Ok(DualExample {
            entity,
            abstract_plain,
            abstract_md: abstract_md.into(),
            graph,
            created_date,
            wiki_page_id,
            template: None,
        })
    }

    pub fn is_synthetic(&self) -> bool {
        self.template.is_some()
    }

    /// Identifier unique within a dataset: the entity IRI, suffixed with the
    /// template entity for synthetic examples.
    pub fn id(&self) -> String {
        match &self.template {
            Some(t) => format!("{}@{}", self.entity, t),
            None => self.entity.to_string(),
        }
    }

    pub fn with_graph(&self, graph: Graph) -> Result<Self, IngestError> {
        let graph = graph.with_primary_subject(self.entity.clone())?;
        Ok(DualExample { graph, ..self.clone() })
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    entity: Iri,
    abstract_plain: String,
    abstract_md: String,
    graph_ttl: String,
    created_date: NaiveDate,
    wiki_page_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    synthetic_template: Option<Iri>,
}

pub fn example_to_json(example: &DualExample) -> String {
    let record = Record {
        entity: example.entity.clone(),
        abstract_plain: example.abstract_plain.clone(),
        abstract_md: example.abstract_md.clone(),
        graph_ttl: serialize_statements(&example.graph, &PrefixMap::standard()),
        created_date: example.created_date,
        wiki_page_id: example.wiki_page_id,
        synthetic_template: example.template.clone(),
    };
    serde_json::to_string(&record).expect("record serializes")
}

pub fn example_from_json(line: &str) -> Result<DualExample, String> {
    let record: Record = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let graph = parse_turtle(&record.graph_ttl, &PrefixMap::standard()).map_err(|e: TurtleError| e.to_string())?;
    let mut example = DualExample::new(
        record.entity,
        record.abstract_plain,
        record.abstract_md,
        graph,
        record.created_date,
        record.wiki_page_id,
    )
    .map_err(|e| e.to_string())?;
    example.template = record.synthetic_template;
    Ok(example)
}

/// Read a dual base from JSON Lines. Blank lines are skipped.
pub fn read_dual_base(reader: impl BufRead) -> Result<Vec<DualExample>, IngestError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(example_from_json(&line).map_err(|message| IngestError::Record { line: n + 1, message })?);
    }
    Ok(out)
}

pub fn write_dual_base<'a>(
    mut writer: impl Write,
    examples: impl IntoIterator<Item = &'a DualExample>,
) -> std::io::Result<()> {
    for example in examples {
        writeln!(writer, "{}", example_to_json(example))?;
    }
    writer.flush()
}

/// True iff the fetched page is the one the knowledge graph describes.
pub fn check_temporal_consistency(example: &DualExample, expected_page_id: Option<u64>) -> bool {
    match expected_page_id {
        Some(id) => example.wiki_page_id == id,
        None => {
            warn!("{}: no wikiPageID in the knowledge graph", example.entity);
            false
        }
    }
}

/// Seeded uniform sub-sample of `n` entities, kept in input order.
pub fn subsample_entities(entities: &[Iri], n: usize, seed: u64) -> Vec<Iri> {
    if n >= entities.len() {
        return entities.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, entities.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| entities[i].clone()).collect()
}

/// Entities typed with `class` in `kg`.
pub fn entities_of_class(kg: &Graph, class: &Iri) -> Vec<Iri> {
    let rdf_type = iri(vocab::RDF_TYPE);
    kg.with_predicate(&rdf_type)
        .filter(|t| t.object.as_iri() == Some(class))
        .map(|t| t.subject.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IngestDiagnostic {
    pub entity: Iri,
    pub message: String,
}

/// Pair each entity's description in `kg` with its fetched abstract.
///
/// The `dbo:wikiPageID` triple is used for the temporal-consistency check and
/// then dropped; `rdf:type` triples are dropped as well. Entities that fail
/// to fetch or whose page id disagrees are excluded with a diagnostic.
pub fn build_dual_base(kg: &Graph, entities: &[Iri], fetcher: &Fetcher) -> (Vec<DualExample>, Vec<IngestDiagnostic>) {
    let page_id_prop = iri(vocab::DBO_WIKI_PAGE_ID);
    let type_prop = iri(vocab::RDF_TYPE);
    let mut examples = Vec::new();
    let mut diagnostics = Vec::new();
    let mut fail = |entity: &Iri, message: String| {
        warn!("{entity}: {message}");
        diagnostics.push(IngestDiagnostic { entity: entity.clone(), message });
    };
    for entity in entities {
        let mut description = kg.description_of(entity);
        let expected = description.objects(entity, &page_id_prop).find_map(|t| t.lexical_form().parse::<u64>().ok());
        description.retain(|t| t.predicate != page_id_prop && t.predicate != type_prop);
        let record = match fetcher.fetch_abstract(entity) {
            Ok(r) => r,
            Err(e) => {
                fail(entity, e.to_string());
                continue;
            }
        };
        let md = html_to_markdown(&record.html);
        let example = match DualExample::new(
            entity.clone(),
            record.plain,
            md,
            description,
            record.created_date,
            record.page_id,
        ) {
            Ok(e) => e,
            Err(e) => {
                fail(entity, e.to_string());
                continue;
            }
        };
        if !check_temporal_consistency(&example, expected) {
            fail(entity, format!("page id {} does not match the knowledge graph ({expected:?})", example.wiki_page_id));
            continue;
        }
        examples.push(example);
    }
    (examples, diagnostics)
}
