//! Mapping from property semantic types to context predicates and
//! literal renderings.
//!
//! Context documents describe device state with string literals like
//! `"on"`/`"off"` while devices exchange booleans, and the corpus uses
//! more than one predicate for the same device family (curtains appear
//! under both `iot:currentStatus` and `iot:status`). The table keeps
//! those pairings configurable instead of frozen in code: each entry maps
//! a property's semantic type IRI to the predicate IRI used in context
//! graphs, plus optional literals standing for boolean true/false.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::rdf::Term;
use crate::td::{render_number, DataValue};

#[derive(Debug, Error)]
pub enum PredicateTableError {
    #[error("cannot read `{0}`: {1}")]
    Io(String, String),
    #[error("line {0}: expected `semanticTypeIRI predicateIRI [trueLiteral falseLiteral]`")]
    Malformed(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateMapping {
    pub predicate: String,
    pub true_literal: Option<String>,
    pub false_literal: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateTable {
    entries: BTreeMap<String, PredicateMapping>,
}

const IOT: &str = "http://iotschema.org/";

impl Default for PredicateTable {
    /// Seeded with the pairs the fixture corpus uses.
    fn default() -> Self {
        let mut table = PredicateTable { entries: BTreeMap::new() };
        let mut seed = |semantic: &str, predicate: &str, on_off: Option<(&str, &str)>| {
            table.entries.insert(
                format!("{IOT}{semantic}"),
                PredicateMapping {
                    predicate: format!("{IOT}{predicate}"),
                    true_literal: on_off.map(|(t, _)| t.to_string()),
                    false_literal: on_off.map(|(_, f)| f.to_string()),
                },
            );
        };
        seed("SwitchStatus", "switchstatus", Some(("on", "off")));
        seed("CurrentStatus", "currentStatus", Some(("open", "closed")));
        seed("CurtainStatus", "status", Some(("open", "closed")));
        seed("HeatingStatus", "heatingstatus", Some(("on", "off")));
        seed("CoolingStatus", "coolingstatus", Some(("on", "off")));
        seed("TemperatureData", "temperature", None);
        seed("TargetTemperature", "targettemperature", None);
        seed("Brightness", "brightness", None);
        table
    }
}

impl PredicateTable {
    pub fn empty() -> PredicateTable {
        PredicateTable { entries: BTreeMap::new() }
    }

    /// Loads a table from a text file: one
    /// `semanticTypeIRI predicateIRI [trueLiteral falseLiteral]` entry
    /// per line, whitespace separated, `#` comments allowed.
    pub fn load(path: &Path) -> Result<PredicateTable, PredicateTableError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PredicateTableError::Io(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<PredicateTable, PredicateTableError> {
        let mut table = PredicateTable::empty();
        for (number, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [semantic, predicate] => {
                    table.insert(semantic, predicate, None);
                }
                [semantic, predicate, true_lit, false_lit] => {
                    table.insert(semantic, predicate, Some((*true_lit, *false_lit)));
                }
                _ => return Err(PredicateTableError::Malformed(number + 1)),
            }
        }
        Ok(table)
    }

    pub fn insert(
        &mut self,
        semantic_type: &str,
        predicate: &str,
        literals: Option<(&str, &str)>,
    ) {
        self.entries.insert(
            semantic_type.to_string(),
            PredicateMapping {
                predicate: predicate.to_string(),
                true_literal: literals.map(|(t, _)| t.to_string()),
                false_literal: literals.map(|(_, f)| f.to_string()),
            },
        );
    }

    pub fn mapping(&self, semantic_type: &str) -> Option<&PredicateMapping> {
        self.entries.get(semantic_type)
    }

    /// Picks the mapping for a property by its first mapped semantic
    /// type, in sorted order.
    pub fn mapping_for<'a>(
        &'a self,
        semantic_types: impl IntoIterator<Item = &'a String>,
    ) -> Option<&'a PredicateMapping> {
        semantic_types.into_iter().find_map(|t| self.entries.get(t))
    }

    /// Renders a device value as a context literal through a mapping.
    pub fn render(&self, mapping: &PredicateMapping, value: &DataValue) -> Term {
        match value {
            DataValue::Bool(b) => {
                let lit = if *b { &mapping.true_literal } else { &mapping.false_literal };
                match lit {
                    Some(text) => Term::text(text.clone()),
                    None => Term::boolean(*b),
                }
            }
            DataValue::Text(s) => Term::text(s.clone()),
            DataValue::Number(n) => Term::number(render_number(*n))
                .expect("rendered numbers are valid lexicals"),
            other => Term::text(other.canonical_json()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_covers_switch_status() {
        let table = PredicateTable::default();
        let m = table.mapping("http://iotschema.org/SwitchStatus").unwrap();
        assert_eq!(m.predicate, "http://iotschema.org/switchstatus");
        assert_eq!(table.render(m, &DataValue::Bool(false)), Term::text("off"));
        assert_eq!(table.render(m, &DataValue::Bool(true)), Term::text("on"));
    }

    #[test]
    fn numbers_render_without_trailing_zero() {
        let table = PredicateTable::default();
        let m = table.mapping("http://iotschema.org/TemperatureData").unwrap();
        assert_eq!(m.predicate, "http://iotschema.org/temperature");
        assert_eq!(table.render(m, &DataValue::Number(18.0)), Term::number("18").unwrap());
        assert_eq!(table.render(m, &DataValue::Number(18.5)), Term::number("18.5").unwrap());
    }

    #[test]
    fn parse_round_trips_config_lines() {
        let text = "\
# custom pairs
http://e/Lock http://e/lockstate locked unlocked
http://e/Level http://e/level
";
        let table = PredicateTable::parse(text).unwrap();
        let lock = table.mapping("http://e/Lock").unwrap();
        assert_eq!(lock.false_literal.as_deref(), Some("unlocked"));
        let level = table.mapping("http://e/Level").unwrap();
        assert_eq!(level.true_literal, None);

        assert!(matches!(
            PredicateTable::parse("a b c"),
            Err(PredicateTableError::Malformed(1))
        ));
    }
}
