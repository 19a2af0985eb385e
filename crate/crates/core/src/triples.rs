//! Loader for tab-separated triple dumps.
//!
//! One triple per line: `subject<TAB>predicate<TAB>object`. Objects written as
//! `"text"` or `"text"^^type` are literals and become node properties; any other
//! object is an entity reference and becomes a relationship. Lines starting with
//! `#` and blank lines are ignored; malformed lines are counted and skipped.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::graph::{Properties, PropertyGraph, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub nodes: usize,
    pub relationships: usize,
    pub properties: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Object {
    Literal(Value),
    Entity(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Object,
}

/// Parse one non-comment line. `None` means the line is malformed.
pub fn parse_line(line: &str) -> Option<Triple> {
    let mut fields = line.split('\t');
    let subject = fields.next()?.trim();
    let predicate = fields.next()?.trim();
    let object = fields.next()?.trim();
    if fields.next().is_some() || subject.is_empty() || predicate.is_empty() || object.is_empty() {
        return None;
    }
    if subject.contains(char::is_whitespace) || predicate.contains(char::is_whitespace) {
        return None;
    }
    let object = if object.starts_with('"') {
        Object::Literal(parse_literal(object)?)
    } else if object.contains(char::is_whitespace) {
        return None;
    } else {
        Object::Entity(object.to_string())
    };
    Some(Triple { subject: subject.to_string(), predicate: predicate.to_string(), object })
}

fn parse_literal(raw: &str) -> Option<Value> {
    let mut chars = raw.char_indices().skip(1);
    let mut text = String::new();
    let mut close = None;
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => {
                let (_, escaped) = chars.next()?;
                text.push(match escaped {
                    'n' => '\n',
                    't' => '\t',
                    '"' => '"',
                    '\\' => '\\',
                    _ => return None,
                });
            }
            '"' => {
                close = Some(i);
                break;
            }
            _ => text.push(c),
        }
    }
    let rest = &raw[close? + 1..];
    if rest.is_empty() {
        return Some(Value::Text(text));
    }
    let datatype = rest.strip_prefix("^^")?;
    match datatype {
        "int" => text.trim().parse().ok().map(Value::Integer),
        "float" => text
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Real),
        "" => None,
        _ => Some(Value::Text(text)),
    }
}

/// Ingest triples from text into `graph`.
pub fn load_triples_str(graph: &mut PropertyGraph, text: &str) -> IngestReport {
    let before = graph.stats();
    let mut skipped = 0;
    for raw in text.lines() {
        let line: String = raw.trim_end_matches('\r').nfc().collect();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(triple) = parse_line(&line) else {
            skipped += 1;
            continue;
        };
        let subject = match graph.ensure_node(&triple.subject) {
            Ok(id) => id,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let outcome = match triple.object {
            Object::Literal(value) => graph.add_property(subject, &triple.predicate, value),
            Object::Entity(key) => graph
                .ensure_node(&key)
                .and_then(|end| graph.create_relationship(subject, &triple.predicate, end, Properties::new()))
                .map(|_| ()),
        };
        if outcome.is_err() {
            skipped += 1;
        }
    }
    graph.freeze();
    let after = graph.stats();
    IngestReport {
        nodes: after.nodes - before.nodes,
        relationships: after.relationships - before.relationships,
        properties: after.properties - before.properties,
        skipped,
    }
}

pub fn load_triples(graph: &mut PropertyGraph, path: &Path) -> io::Result<IngestReport> {
    let text = fs::read_to_string(path)?;
    Ok(load_triples_str(graph, &text))
}
