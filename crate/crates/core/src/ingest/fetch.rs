//! Cache-first access to the Wikipedia REST API and DBpedia.
//!
//! Every answer is stored as one JSON record per file under
//! `<cache-dir>/<endpoint>/<percent-encoded key>.json`. In fixture-only mode
//! the cache is the only source and a miss is an error; in live mode a miss
//! goes to the network through a single throttled queue and the answer is
//! written back atomically.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use log::{debug, warn};
use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::lookup::{EntityLinker, LookupError, TripleLookup, TypeLookup};
use crate::rdf::{iri, Iri, Literal, Term};
use crate::vocab;

const FILE_KEY: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.');
const URL_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'_')
    .remove(b'.')
    .remove(b'~')
    .remove(b'(')
    .remove(b')')
    .remove(b',')
    .remove(b'\'');
const MAX_ATTEMPTS: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FetchMode {
    FixtureOnly,
    LiveWithCache,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FetchPolicy {
    pub mode: FetchMode,
    /// Requests per second for live calls.
    pub rate_limit: f64,
    pub cache_dir: PathBuf,
}

impl FetchPolicy {
    pub fn fixture_only(cache_dir: impl Into<PathBuf>) -> Self {
        FetchPolicy { mode: FetchMode::FixtureOnly, rate_limit: 1.0, cache_dir: cache_dir.into() }
    }

    pub fn live(cache_dir: impl Into<PathBuf>, rate_limit: f64) -> Self {
        FetchPolicy { mode: FetchMode::LiveWithCache, rate_limit, cache_dir: cache_dir.into() }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.mode == FetchMode::LiveWithCache && !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(IngestError::InvalidPolicy(format!("rate limit must be positive, got {}", self.rate_limit)));
        }
        Ok(())
    }
}

/// URL templates. `{title}`, `{page_id}`, `{name}` and `{query}` are
/// substituted percent-encoded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoints {
    pub wikipedia_summary: String,
    pub wikipedia_first_revision: String,
    pub dbpedia_resource: String,
    pub dbpedia_lookup: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Endpoints {
            wikipedia_summary: "https://en.wikipedia.org/api/rest_v1/page/summary/{title}".into(),
            wikipedia_first_revision: "https://en.wikipedia.org/w/api.php?action=query&format=json&prop=revisions\
                                       &rvlimit=1&rvdir=newer&rvprop=timestamp&pageids={page_id}"
                .into(),
            dbpedia_resource: "https://dbpedia.org/data/{name}.json".into(),
            dbpedia_lookup: "https://lookup.dbpedia.org/api/search?format=JSON&maxResults=1&query={query}".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
    pub retry_after: Option<Duration>,
}

/// Blocking GET transport.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, IngestError>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new() -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .user_agent(concat!("shapeforge/", env!("CARGO_PKG_VERSION")))
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        HttpTransport { agent: config.into() }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport::new()
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, IngestError> {
        let mut response = self
            .agent
            .get(url)
            .header("Accept", "application/json")
            .call()
            .map_err(|e| IngestError::Transport(format!("{url}: {e}")))?;
        let status = response.status().as_u16();
        let retry_after = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = response.body_mut().read_to_string().map_err(|e| IngestError::Transport(format!("{url}: {e}")))?;
        Ok(HttpResponse { status, body, retry_after })
    }
}

/// Spaces calls at least `1 / rate` seconds apart.
#[derive(Debug)]
pub struct Throttle {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl Throttle {
    pub fn new(rate_per_second: f64) -> Self {
        Throttle { interval: Duration::from_secs_f64(1.0 / rate_per_second), next_slot: Mutex::new(None) }
    }

    /// Block until the caller may issue its request.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_slot.lock().expect("throttle lock poisoned");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractRecord {
    pub entity: Iri,
    pub plain: String,
    pub html: String,
    pub page_id: u64,
    pub created_date: NaiveDate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct TypesRecord {
    entity: Iri,
    types: BTreeSet<Iri>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceValue {
    #[serde(rename = "type")]
    pub kind: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl ResourceValue {
    fn to_term(&self) -> Option<Term> {
        if self.kind == "uri" {
            return Iri::new(self.value.as_str()).ok().map(Term::Iri);
        }
        if self.kind != "literal" {
            return None;
        }
        let datatype = self.datatype.as_deref().and_then(|d| Iri::new(d).ok());
        let lang = if datatype.is_some() { None } else { self.lang.clone() };
        Literal::new(self.value.as_str(), datatype, lang).ok().map(Term::Literal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct ResourceRecord {
    entity: Iri,
    properties: BTreeMap<String, Vec<ResourceValue>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct LinkRecord {
    query: String,
    resource: Option<Iri>,
}

pub struct Fetcher {
    policy: FetchPolicy,
    endpoints: Endpoints,
    transport: Box<dyn Transport>,
    throttle: Throttle,
    backoff: Duration,
    network_calls: AtomicUsize,
}

impl Fetcher {
    pub fn new(policy: FetchPolicy, endpoints: Endpoints, transport: Box<dyn Transport>) -> Result<Self, IngestError> {
        policy.validate()?;
        let rate = if policy.rate_limit > 0.0 { policy.rate_limit } else { 1.0 };
        Ok(Fetcher {
            throttle: Throttle::new(rate),
            policy,
            endpoints,
            transport,
            backoff: Duration::from_secs(1),
            network_calls: AtomicUsize::new(0),
        })
    }

    /// A fetcher that reads only from `policy.cache_dir`.
    pub fn offline(cache_dir: impl Into<PathBuf>) -> Self {
        Fetcher::new(FetchPolicy::fixture_only(cache_dir), Endpoints::default(), Box::new(HttpTransport::new()))
            .expect("fixture-only policy is always valid")
    }

    /// Base delay of the exponential backoff on HTTP 429 without Retry-After.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    /// Number of requests handed to the transport so far.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn fetch_abstract(&self, entity: &Iri) -> Result<AbstractRecord, IngestError> {
        self.cached("abstract", entity.as_str(), || {
            let title = wikipedia_title(entity)?;
            let url = fill(&self.endpoints.wikipedia_summary, "title", &title);
            let summary: serde_json::Value = self.get_json(&url)?;
            let plain = summary["extract"].as_str().unwrap_or_default().to_string();
            let html = summary["extract_html"].as_str().unwrap_or_default().to_string();
            let page_id =
                summary["pageid"].as_u64().ok_or_else(|| IngestError::Decode(format!("{url}: missing pageid")))?;
            let url = fill(&self.endpoints.wikipedia_first_revision, "page_id", &page_id.to_string());
            let revisions: serde_json::Value = self.get_json(&url)?;
            let timestamp = revisions["query"]["pages"][page_id.to_string()]["revisions"][0]["timestamp"]
                .as_str()
                .ok_or_else(|| IngestError::Decode(format!("{url}: missing first revision timestamp")))?;
            let created_date = timestamp
                .get(..10)
                .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
                .ok_or_else(|| IngestError::Decode(format!("{url}: bad timestamp `{timestamp}`")))?;
            Ok(AbstractRecord { entity: entity.clone(), plain, html, page_id, created_date })
        })
    }

    /// `rdf:type` classes of `entity`. Literals are rejected.
    pub fn type_lookup(&self, entity: &Term) -> Result<BTreeSet<Iri>, IngestError> {
        let Term::Iri(entity) = entity else {
            return Err(IngestError::NotAnIri(entity.lexical_form().to_string()));
        };
        let record: TypesRecord = self.cached("types", entity.as_str(), || {
            let resource = self.resource(entity)?;
            let types = resource
                .properties
                .get(vocab::RDF_TYPE)
                .into_iter()
                .flatten()
                .filter(|v| v.kind == "uri")
                .filter_map(|v| Iri::new(v.value.as_str()).ok())
                .collect();
            Ok(TypesRecord { entity: entity.clone(), types })
        })?;
        Ok(record.types)
    }

    /// Outgoing values of `subject` for `predicate`, from the DBpedia
    /// resource description.
    pub fn resource_objects(&self, subject: &Iri, predicate: &Iri) -> Result<Vec<Term>, IngestError> {
        let resource = self.resource(subject)?;
        Ok(resource
            .properties
            .get(predicate.as_str())
            .into_iter()
            .flatten()
            .filter_map(ResourceValue::to_term)
            .collect())
    }

    /// First DBpedia Lookup hit for a surface form.
    pub fn lookup_resource(&self, text: &str) -> Result<Option<Iri>, IngestError> {
        let record: LinkRecord = self.cached("lookup", text, || {
            let url = fill(&self.endpoints.dbpedia_lookup, "query", text);
            let body: serde_json::Value = self.get_json(&url)?;
            let resource = body["docs"][0]["resource"]
                .as_array()
                .and_then(|r| r.first())
                .or_else(|| body["docs"][0]["resource"].as_str().map(|_| &body["docs"][0]["resource"]))
                .and_then(|v| v.as_str())
                .and_then(|v| Iri::new(v).ok());
            Ok(LinkRecord { query: text.to_string(), resource })
        })?;
        Ok(record.resource)
    }

    fn resource(&self, entity: &Iri) -> Result<ResourceRecord, IngestError> {
        self.cached("resource", entity.as_str(), || {
            let name = entity
                .as_str()
                .strip_prefix(vocab::DBR)
                .ok_or_else(|| IngestError::NotAnIri(format!("{entity} is not a DBpedia resource")))?;
            let name = percent_decode_str(name).decode_utf8_lossy().into_owned();
            let url = fill(&self.endpoints.dbpedia_resource, "name", &name);
            let body: BTreeMap<String, BTreeMap<String, Vec<ResourceValue>>> = self.get_json(&url)?;
            let properties = body.get(entity.as_str()).cloned().unwrap_or_default();
            Ok(ResourceRecord { entity: entity.clone(), properties })
        })
    }

    fn cache_path(&self, endpoint: &str, key: &str) -> PathBuf {
        cache_path(&self.policy.cache_dir, endpoint, key)
    }

    fn cached<T, F>(&self, endpoint: &str, key: &str, fetch: F) -> Result<T, IngestError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, IngestError>,
    {
        let path = self.cache_path(endpoint, key);
        match fs::read_to_string(&path) {
            Ok(text) => {
                return serde_json::from_str(&text)
                    .map_err(|e| IngestError::Decode(format!("{}: {e}", path.display())));
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(IngestError::Io(e.to_string())),
        }
        if self.policy.mode == FetchMode::FixtureOnly {
            return Err(IngestError::NotInFixture { endpoint: endpoint.to_string(), key: key.to_string() });
        }
        let value = fetch()?;
        write_record(&path, &value)?;
        Ok(value)
    }

    fn get_json<T: DeserializeOwned>(&self, url: &str) -> Result<T, IngestError> {
        let body = self.get(url)?;
        serde_json::from_str(&body).map_err(|e| IngestError::Decode(format!("{url}: {e}")))
    }

    /// Throttled GET; HTTP 429 backs off and retries instead of failing.
    pub fn get(&self, url: &str) -> Result<String, IngestError> {
        for attempt in 0..MAX_ATTEMPTS {
            self.throttle.acquire();
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            debug!("GET {url}");
            let response = self.transport.get(url)?;
            match response.status {
                200..=299 => return Ok(response.body),
                429 => {
                    let wait = response.retry_after.unwrap_or(self.backoff * 2u32.pow(attempt));
                    warn!("rate limited on {url}; retrying in {wait:?}");
                    std::thread::sleep(wait);
                }
                status => return Err(IngestError::Http { status, url: url.to_string() }),
            }
        }
        Err(IngestError::Http { status: 429, url: url.to_string() })
    }
}

impl TypeLookup for Fetcher {
    fn types(&self, entity: &Iri) -> Result<BTreeSet<Iri>, LookupError> {
        self.type_lookup(&Term::Iri(entity.clone()))
            .map_err(|e| LookupError::Failure { iri: entity.clone(), reason: e.to_string() })
    }
}

impl TripleLookup for Fetcher {
    fn objects(&self, subject: &Iri, predicate: &Iri) -> Result<Vec<Term>, LookupError> {
        self.resource_objects(subject, predicate)
            .map_err(|e| LookupError::Failure { iri: subject.clone(), reason: e.to_string() })
    }
}

impl EntityLinker for Fetcher {
    fn link(&self, text: &str) -> Result<Option<Iri>, LookupError> {
        self.lookup_resource(text)
            .map_err(|e| LookupError::Failure { iri: iri(vocab::DBR), reason: format!("linking `{text}`: {e}") })
    }
}

pub fn cache_path(cache_dir: &Path, endpoint: &str, key: &str) -> PathBuf {
    cache_dir.join(endpoint).join(format!("{}.json", utf8_percent_encode(key, FILE_KEY)))
}

/// Write `value` as pretty JSON via a temporary file renamed into place.
pub fn write_record<T: Serialize>(path: &Path, value: &T) -> Result<(), IngestError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| IngestError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IngestError::Io(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IngestError::Decode(e.to_string()))?;
    text.push('\n');
    tmp.write_all(text.as_bytes()).map_err(|e| IngestError::Io(e.to_string()))?;
    tmp.persist(path).map_err(|e| IngestError::Io(e.to_string()))?;
    Ok(())
}

/// Store an abstract record in the cache layout `fetch_abstract` reads.
pub fn store_abstract(cache_dir: &Path, record: &AbstractRecord) -> Result<(), IngestError> {
    write_record(&cache_path(cache_dir, "abstract", record.entity.as_str()), record)
}

/// Store a type record in the cache layout `type_lookup` reads.
pub fn store_types(cache_dir: &Path, entity: &Iri, types: &BTreeSet<Iri>) -> Result<(), IngestError> {
    let record = TypesRecord { entity: entity.clone(), types: types.clone() };
    write_record(&cache_path(cache_dir, "types", entity.as_str()), &record)
}

fn wikipedia_title(entity: &Iri) -> Result<String, IngestError> {
    let local = entity
        .as_str()
        .strip_prefix(vocab::DBR)
        .ok_or_else(|| IngestError::NotAnIri(format!("{entity} is not a DBpedia resource")))?;
    Ok(percent_decode_str(local).decode_utf8_lossy().into_owned())
}

fn fill(template: &str, name: &str, value: &str) -> String {
    template.replace(&format!("{{{name}}}"), &utf8_percent_encode(value, URL_SEGMENT).to_string())
}
