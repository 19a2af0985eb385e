//! In-memory property graph.
//!
//! Nodes carry a canonical key plus a property map, relationships are
//! directed and labeled. Keys are registered in named exact-match indexes;
//! every node lands in the default index at creation time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the index every node key is registered under unless configured otherwise.
pub const DEFAULT_INDEX: &str = "DBPediaIndex";

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("key `{0}` already present in the default index")]
    DuplicateKey(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node key must not be empty")]
    EmptyKey,
    #[error("relationship label must not be empty")]
    EmptyLabel,
    #[error("invalid value: {0}")]
    InvalidValue(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelId(pub u32);

/// A property value. Lists hold text only and are never empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Boolean(bool),
    Integer(i64),
    Real(f64),
    Text(String),
    List(Vec<String>),
}

impl Value {
    /// Number of scalar values held (list elements count individually).
    pub fn arity(&self) -> usize {
        match self {
            Value::List(items) => items.len(),
            _ => 1,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        match self {
            Value::Real(x) if !x.is_finite() => {
                Err(GraphError::InvalidValue(format!("non-finite real {x}")))
            }
            Value::List(items) if items.is_empty() => {
                Err(GraphError::InvalidValue("empty list".into()))
            }
            _ => Ok(()),
        }
    }

    /// Merge another value for the same property into this one, turning the
    /// pair into a text list.
    pub fn accumulate(self, other: Value) -> Value {
        let mut items = self.into_texts();
        items.extend(other.into_texts());
        Value::List(items)
    }

    fn into_texts(self) -> Vec<String> {
        match self {
            Value::List(items) => items,
            other => vec![other.to_string()],
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
            Value::List(items) => f.write_str(&items.join(", ")),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Integer(i)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

pub type Properties = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub key: String,
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relationship {
    pub id: RelId,
    pub label: String,
    pub start: NodeId,
    pub end: NodeId,
    pub properties: Properties,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyIndex {
    pub name: String,
    entries: BTreeMap<String, BTreeSet<NodeId>>,
}

impl KeyIndex {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), entries: BTreeMap::new() }
    }

    pub fn get(&self, key: &str) -> Option<&BTreeSet<NodeId>> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub relationships: usize,
    pub properties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyGraph {
    nodes: Vec<Node>,
    relationships: Vec<Relationship>,
    outgoing: Vec<Vec<RelId>>,
    incoming: Vec<Vec<RelId>>,
    indexes: BTreeMap<String, KeyIndex>,
    default_index: String,
    aliases: BTreeMap<String, String>,
    #[serde(skip)]
    relationship_labels: Option<BTreeSet<String>>,
}

impl Default for PropertyGraph {
    fn default() -> Self {
        Self::with_default_index(DEFAULT_INDEX)
    }
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty graph whose default index carries `name`. The short spelling
    /// `DBPedia` is registered as an alias of the default index.
    pub fn with_default_index(name: &str) -> Self {
        let mut indexes = BTreeMap::new();
        indexes.insert(name.to_string(), KeyIndex::new(name));
        let mut aliases = BTreeMap::new();
        if name != "DBPedia" {
            aliases.insert("DBPedia".to_string(), name.to_string());
        }
        Self {
            nodes: Vec::new(),
            relationships: Vec::new(),
            outgoing: Vec::new(),
            incoming: Vec::new(),
            indexes,
            default_index: name.to_string(),
            aliases,
            relationship_labels: None,
        }
    }

    pub fn default_index(&self) -> &str {
        &self.default_index
    }

    pub fn add_alias(&mut self, alias: &str, index: &str) {
        self.aliases.insert(alias.to_string(), index.to_string());
    }

    pub fn create_index(&mut self, name: &str) {
        self.indexes.entry(name.to_string()).or_insert_with(|| KeyIndex::new(name));
    }

    /// Register `node` under `key` in a secondary index (created on demand).
    pub fn index_insert(&mut self, index: &str, key: &str, node: NodeId) -> Result<(), GraphError> {
        self.check_node(node)?;
        self.create_index(index);
        let idx = self.indexes.get_mut(index).expect("index just created");
        idx.entries.entry(key.to_string()).or_default().insert(node);
        Ok(())
    }

    pub fn create_node(&mut self, key: &str, properties: Properties) -> Result<NodeId, GraphError> {
        if key.is_empty() {
            return Err(GraphError::EmptyKey);
        }
        if self.node_by_key(key).is_some() {
            return Err(GraphError::DuplicateKey(key.to_string()));
        }
        for value in properties.values() {
            value.validate()?;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { id, key: key.to_string(), properties });
        self.outgoing.push(Vec::new());
        self.incoming.push(Vec::new());
        let default = self.default_index.clone();
        self.indexes
            .get_mut(&default)
            .expect("default index always exists")
            .entries
            .entry(key.to_string())
            .or_default()
            .insert(id);
        Ok(id)
    }

    /// Node with `key` in the default index, creating it if absent.
    pub fn ensure_node(&mut self, key: &str) -> Result<NodeId, GraphError> {
        match self.node_by_key(key) {
            Some(id) => Ok(id),
            None => self.create_node(key, Properties::new()),
        }
    }

    pub fn create_relationship(
        &mut self,
        start: NodeId,
        label: &str,
        end: NodeId,
        properties: Properties,
    ) -> Result<RelId, GraphError> {
        self.check_node(start)?;
        self.check_node(end)?;
        if label.is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        for value in properties.values() {
            value.validate()?;
        }
        let id = RelId(self.relationships.len() as u32);
        self.relationships.push(Relationship {
            id,
            label: label.to_string(),
            start,
            end,
            properties,
        });
        self.outgoing[start.index()].push(id);
        self.incoming[end.index()].push(id);
        self.relationship_labels = None;
        Ok(id)
    }

    /// Set a property, accumulating into a list when the name is already present.
    pub fn add_property(&mut self, node: NodeId, name: &str, value: Value) -> Result<(), GraphError> {
        self.check_node(node)?;
        value.validate()?;
        let props = &mut self.nodes[node.index()].properties;
        let merged = match props.remove(name) {
            Some(existing) => existing.accumulate(value),
            None => value,
        };
        props.insert(name.to_string(), merged);
        Ok(())
    }

    /// Exact-match lookup; unknown index or key gives the empty set.
    pub fn index_lookup(&self, index: &str, key: &str) -> BTreeSet<NodeId> {
        let name = self.aliases.get(index).map(String::as_str).unwrap_or(index);
        self.indexes
            .get(name)
            .and_then(|idx| idx.get(key))
            .cloned()
            .unwrap_or_default()
    }

    pub fn node_by_key(&self, key: &str) -> Option<NodeId> {
        self.indexes
            .get(&self.default_index)
            .and_then(|idx| idx.get(key))
            .and_then(|ids| ids.iter().next().copied())
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn relationship(&self, id: RelId) -> Option<&Relationship> {
        self.relationships.get(id.0 as usize)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn relationships(&self) -> &[Relationship] {
        &self.relationships
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Relationships touching `node`, ascending by relationship id.
    pub fn neighbors(
        &self,
        node: NodeId,
        label: Option<&str>,
        direction: Direction,
    ) -> Result<Vec<(RelId, NodeId)>, GraphError> {
        self.check_node(node)?;
        let matches = |rel: &Relationship| label.is_none_or(|l| rel.label == l);
        let mut out: Vec<(RelId, NodeId)> = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            for &rid in &self.outgoing[node.index()] {
                let rel = &self.relationships[rid.0 as usize];
                if matches(rel) {
                    out.push((rid, rel.end));
                }
            }
        }
        if matches!(direction, Direction::In | Direction::Both) {
            for &rid in &self.incoming[node.index()] {
                let rel = &self.relationships[rid.0 as usize];
                // a self-loop is already present from the outgoing pass
                if direction == Direction::Both && rel.start == rel.end {
                    continue;
                }
                if matches(rel) {
                    out.push((rid, rel.start));
                }
            }
        }
        if direction == Direction::Both {
            out.sort_by_key(|(rid, _)| *rid);
        }
        Ok(out)
    }

    /// Whether some relationship `from -[label]-> to` exists.
    pub fn has_edge(&self, from: NodeId, label: &str, to: NodeId) -> bool {
        self.outgoing
            .get(from.index())
            .is_some_and(|rels| {
                rels.iter().any(|rid| {
                    let rel = &self.relationships[rid.0 as usize];
                    rel.end == to && rel.label == label
                })
            })
    }

    pub fn has_relationship_label(&self, label: &str) -> bool {
        match &self.relationship_labels {
            Some(labels) => labels.contains(label),
            None => self.relationships.iter().any(|r| r.label == label),
        }
    }

    pub fn has_property_name(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n.properties.contains_key(name))
    }

    /// Cache the relationship label set; call once ingestion is finished.
    pub fn freeze(&mut self) {
        self.relationship_labels =
            Some(self.relationships.iter().map(|r| r.label.clone()).collect());
    }

    pub fn stats(&self) -> GraphStats {
        let count_props = |props: &Properties| props.values().map(Value::arity).sum::<usize>();
        GraphStats {
            nodes: self.nodes.len(),
            relationships: self.relationships.len(),
            properties: self.nodes.iter().map(|n| count_props(&n.properties)).sum::<usize>()
                + self
                    .relationships
                    .iter()
                    .map(|r| count_props(&r.properties))
                    .sum::<usize>(),
        }
    }

    /// All edges as `(start key, label, end key)`, sorted.
    pub fn edge_list(&self) -> Vec<(String, String, String)> {
        let mut edges: Vec<_> = self
            .relationships
            .iter()
            .map(|r| {
                (
                    self.nodes[r.start.index()].key.clone(),
                    r.label.clone(),
                    self.nodes[r.end.index()].key.clone(),
                )
            })
            .collect();
        edges.sort();
        edges
    }

    fn check_node(&self, id: NodeId) -> Result<(), GraphError> {
        if id.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(id))
        }
    }

    /// Lookup table used by the engine for index aliasing.
    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn index_names(&self) -> impl Iterator<Item = &str> {
        self.indexes.keys().map(String::as_str)
    }

    /// Reverse lookup of all keys registered in an index.
    pub fn index_entries(&self, index: &str) -> HashMap<&str, &BTreeSet<NodeId>> {
        self.indexes
            .get(index)
            .map(|idx| idx.entries.iter().map(|(k, v)| (k.as_str(), v)).collect())
            .unwrap_or_default()
    }
}
