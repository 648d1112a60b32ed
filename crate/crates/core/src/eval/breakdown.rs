//! Per-property F1 tables across several systems.

use std::collections::BTreeSet;

use serde::Serialize;

use super::EvalReport;
use crate::rdf::{Iri, PrefixMap};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub property: Iri,
    /// One value per system, in input order; `None` when the property does
    /// not occur in that system's gold or predictions.
    pub f1: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Breakdown {
    pub systems: Vec<String>,
    pub rows: Vec<BreakdownRow>,
}

pub fn per_property_breakdown(reports: &[(&str, &EvalReport)]) -> Breakdown {
    let properties: BTreeSet<&Iri> = reports.iter().flat_map(|(_, r)| r.properties.keys()).collect();
    let rows = properties
        .into_iter()
        .map(|p| BreakdownRow {
            property: p.clone(),
            f1: reports.iter().map(|(_, r)| r.properties.get(p).map(|s| s.f1)).collect(),
        })
        .collect();
    Breakdown { systems: reports.iter().map(|(name, _)| name.to_string()).collect(), rows }
}

impl Breakdown {
    /// Tab-separated table; missing cells are empty.
    pub fn to_tsv(&self, prefixes: &PrefixMap) -> String {
        let mut out = String::from("property");
        for s in &self.systems {
            out.push('\t');
            out.push_str(s);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&prefixes.compact(&row.property).unwrap_or_else(|| row.property.as_str().to_string()));
            for v in &row.f1 {
                out.push('\t');
                if let Some(v) = v {
                    out.push_str(&format!("{v:.4}"));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Grouped-bar plot data: `{"systems": [...], "properties": [...],
    /// "f1": [[...per system...] per property]}`.
    pub fn to_plot_json(&self, prefixes: &PrefixMap) -> serde_json::Value {
        let names: Vec<String> = self
            .rows
            .iter()
            .map(|r| prefixes.compact(&r.property).unwrap_or_else(|| r.property.as_str().to_string()))
            .collect();
        serde_json::json!({
            "systems": self.systems,
            "properties": names,
            "f1": self.rows.iter().map(|r| &r.f1).collect::<Vec<_>>(),
        })
    }
}
