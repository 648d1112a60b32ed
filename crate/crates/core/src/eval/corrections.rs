//! Adjudicated corrections applied to gold graphs before re-scoring.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{report, EvalError, EvalInputs, EvalReport};
use crate::evidence::{triple_from_turtle, triple_to_turtle};
use crate::rdf::{Iri, PrefixMap, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorClass {
    #[serde(rename = "FP")]
    FalsePositive,
    #[serde(rename = "FN")]
    FalseNegative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// A predicted triple that is true and evidenced but missing from gold.
    NewFact,
    /// A gold triple the model missed.
    Omission,
    /// A gold triple that is wrong or unevidenced.
    KgNoise,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correction {
    pub entity: Iri,
    pub triple: Triple,
    pub class: ErrorClass,
    pub verdict: Verdict,
}

/// At most one correction per `(entity, triple)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorrectionSet {
    entries: BTreeMap<(Iri, Triple), (ErrorClass, Verdict)>,
}

#[derive(Deserialize, Serialize)]
struct CorrectionRow {
    entity: String,
    triple: String,
    class: ErrorClass,
    verdict: Verdict,
}

impl CorrectionSet {
    pub fn new() -> Self {
        CorrectionSet::default()
    }

    pub fn insert(&mut self, c: Correction, prefixes: &PrefixMap) -> Result<(), EvalError> {
        let key = (c.entity, c.triple);
        if self.entries.contains_key(&key) {
            return Err(EvalError::DuplicateCorrection { entity: key.0, triple: triple_to_turtle(&key.1, prefixes) });
        }
        self.entries.insert(key, (c.class, c.verdict));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Correction> + '_ {
        self.entries.iter().map(|((entity, triple), (class, verdict))| Correction {
            entity: entity.clone(),
            triple: triple.clone(),
            class: *class,
            verdict: *verdict,
        })
    }

    /// CSV with header `entity,triple,class,verdict`; the triple is one
    /// Turtle statement.
    pub fn read_csv(reader: impl std::io::Read, prefixes: &PrefixMap) -> Result<Self, EvalError> {
        let mut set = CorrectionSet::new();
        let mut rdr = csv::Reader::from_reader(reader);
        for (n, row) in rdr.deserialize::<CorrectionRow>().enumerate() {
            let line = n + 2;
            let bad = |message: String| EvalError::Record { line, message };
            let row = row.map_err(|e| bad(e.to_string()))?;
            let entity = Iri::new(row.entity.trim()).map_err(|e| bad(e.to_string()))?;
            let triple = triple_from_turtle(&row.triple, prefixes).map_err(bad)?;
            set.insert(Correction { entity, triple, class: row.class, verdict: row.verdict }, prefixes)?;
        }
        Ok(set)
    }

    pub fn write_csv(&self, writer: impl std::io::Write, prefixes: &PrefixMap) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for c in self.iter() {
            w.serialize(CorrectionRow {
                entity: c.entity.as_str().to_string(),
                triple: triple_to_turtle(&c.triple, prefixes),
                class: c.class,
                verdict: c.verdict,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionOutcome {
    pub inputs: EvalInputs,
    pub report: EvalReport,
    pub applied: usize,
    /// Corrections whose entity or triple was not where their class says.
    pub unmatched: Vec<Correction>,
}

/// A new-fact false positive joins the gold graph; a kg-noise false negative
/// leaves it. Other verdicts change nothing.
pub fn apply_corrections(inputs: &EvalInputs, set: &CorrectionSet) -> CorrectionOutcome {
    let mut corrected = inputs.clone();
    let mut applied = 0;
    let mut unmatched = Vec::new();
    for c in set.iter() {
        let Some(g) = corrected.graphs.iter_mut().find(|g| g.entity == c.entity) else {
            unmatched.push(c);
            continue;
        };
        let in_gold = g.gold.contains(&c.triple);
        let in_pred = g.predicted.contains(&c.triple);
        let matches = match c.class {
            ErrorClass::FalsePositive => in_pred && !in_gold,
            ErrorClass::FalseNegative => in_gold && !in_pred,
        };
        if !matches {
            unmatched.push(c);
            continue;
        }
        match (c.class, c.verdict) {
            (ErrorClass::FalsePositive, Verdict::NewFact) => {
                g.gold.insert(c.triple);
                applied += 1;
            }
            (ErrorClass::FalseNegative, Verdict::KgNoise) => {
                g.gold.remove(&c.triple);
                applied += 1;
            }
            _ => {}
        }
    }
    let report = report(&corrected);
    CorrectionOutcome { inputs: corrected, report, applied, unmatched }
}
