//! Entity construction: keywords become entity mentions (proper nouns), or
//! schema terms classified as properties or relationships.
//!
//! Dictionary entries win over the role classifier. The classifier is a binary
//! logistic regression whose features include whether the KB already uses the
//! term's graph name as a property or as a relationship label.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{FeatureVector, TrainConfig};
use crate::graph::PropertyGraph;
use crate::nlp::{Tag, TaggedToken};

/// Nouns that name the class of the entity they precede ("tập đoàn FPT").
pub const TYPE_WORDS: &[&str] = &[
    "tập_đoàn",
    "công_ty",
    "vua",
    "thành_phố",
    "tỉnh",
    "nước",
    "quốc_gia",
    "thủ_tướng",
    "tổng_thống",
    "nhà_văn",
    "nhà_thơ",
    "tác_phẩm",
    "ông",
    "bà",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConstructionError {
    #[error("no proper noun in the question")]
    NoEntity,
    #[error("role dictionary line {line}: {message}")]
    Dictionary { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Property,
    Relationship,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Property => "P",
            Role::Relationship => "R",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub key: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermSource {
    Dictionary,
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaTerm {
    pub surface: String,
    pub role: Role,
    pub graph_name: String,
    pub confidence: f64,
    pub source: TermSource,
    /// Position of the term in the question (first syllable index).
    pub position: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstructionResult {
    pub entities: Vec<EntityMention>,
    pub properties: Vec<SchemaTerm>,
    pub relationships: Vec<SchemaTerm>,
    /// Class nouns absorbed by the entity they precede.
    pub type_words: Vec<String>,
}

impl ConstructionResult {
    /// Properties and relationships together, in question order.
    pub fn terms(&self) -> Vec<&SchemaTerm> {
        let mut all: Vec<&SchemaTerm> = self.properties.iter().chain(&self.relationships).collect();
        all.sort_by_key(|t| t.position);
        all
    }
}

/// camelCase join: first syllable keeps a lowercase initial, later syllables
/// get an uppercase initial; diacritics and the remaining letters are kept.
pub fn to_graph_name(surface: &str) -> String {
    let mut out = String::with_capacity(surface.len());
    for (i, syl) in surface.split(|c: char| c == '_' || c.is_whitespace()).filter(|s| !s.is_empty()).enumerate() {
        let mut chars = syl.chars();
        let first = chars.next().expect("non-empty syllable");
        if i == 0 {
            out.extend(first.to_lowercase());
        } else {
            out.extend(first.to_uppercase());
        }
        out.push_str(chars.as_str());
    }
    out
}

fn dict_key(surface: &str) -> String {
    surface
        .split(|c: char| c == '_' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictEntry {
    pub role: Role,
    pub graph_name: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoleDictionary {
    entries: BTreeMap<String, DictEntry>,
}

impl RoleDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse `surface<TAB>P|R<TAB>graphName` lines.
    pub fn parse(text: &str) -> Result<Self, ConstructionError> {
        let mut dict = RoleDictionary::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| ConstructionError::Dictionary { line: i + 1, message: message.to_string() };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [surface, role, graph_name] = fields[..] else {
                return Err(err("expected surface<TAB>P|R<TAB>graphName"));
            };
            let role = match role {
                "P" => Role::Property,
                "R" => Role::Relationship,
                _ => return Err(err("role must be P or R")),
            };
            if surface.is_empty() || graph_name.is_empty() {
                return Err(err("empty field"));
            }
            dict.insert(surface, role, graph_name);
        }
        Ok(dict)
    }

    pub fn insert(&mut self, surface: &str, role: Role, graph_name: &str) {
        self.entries.insert(dict_key(surface), DictEntry { role, graph_name: graph_name.to_string() });
    }

    pub fn get(&self, surface: &str) -> Option<&DictEntry> {
        self.entries.get(&dict_key(surface))
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.get(surface).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DictEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Features for a candidate schema term.
pub fn role_features(surface: &str, graph_name: &str, graph: &PropertyGraph) -> FeatureVector {
    let mut f = FeatureVector::new();
    f.add(format!("w={}", dict_key(surface)), 1.0);
    let syllables = dict_key(surface).split('_').count();
    f.add(format!("syl={}", syllables.min(4)), 1.0);
    if graph.has_property_name(graph_name) {
        f.add("kb_prop", 1.0);
    }
    if graph.has_relationship_label(graph_name) {
        f.add("kb_rel", 1.0);
    }
    f
}

/// Anything that scores how likely a term is a relationship.
pub trait RoleModel {
    fn relationship_probability(&self, features: &FeatureVector) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleClassifier {
    pub weights: BTreeMap<String, f64>,
    pub bias: f64,
    pub config: TrainConfig,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl RoleClassifier {
    pub fn zeros(config: TrainConfig) -> Self {
        Self { weights: BTreeMap::new(), bias: 0.0, config }
    }

    pub fn score(&self, features: &FeatureVector) -> f64 {
        self.bias
            + features
                .iter()
                .map(|(id, x)| self.weights.get(id).copied().unwrap_or(0.0) * x)
                .sum::<f64>()
    }

    pub fn predict(&self, features: &FeatureVector) -> (Role, f64) {
        let p = self.relationship_probability(features);
        if p > 0.5 {
            (Role::Relationship, p)
        } else {
            (Role::Property, 1.0 - p)
        }
    }

    /// Mean log loss (relationship = positive class) plus `l2/2 * ||w||²`.
    pub fn loss(&self, data: &[(FeatureVector, Role)]) -> f64 {
        let n = data.len().max(1) as f64;
        let nll: f64 = data
            .iter()
            .map(|(x, y)| {
                let p = sigmoid(self.score(x));
                if *y == Role::Relationship { -p.ln() } else { -(1.0 - p).ln() }
            })
            .sum();
        nll / n + 0.5 * self.config.l2 * self.weights.values().map(|w| w * w).sum::<f64>()
    }

    pub fn gradient(&self, data: &[(FeatureVector, Role)]) -> (BTreeMap<String, f64>, f64) {
        let n = data.len().max(1) as f64;
        let mut gw: BTreeMap<String, f64> = BTreeMap::new();
        let mut gb = 0.0;
        for (x, y) in data {
            let target = if *y == Role::Relationship { 1.0 } else { 0.0 };
            let r = sigmoid(self.score(x)) - target;
            gb += r / n;
            for (id, v) in x.iter() {
                *gw.entry(id.to_string()).or_insert(0.0) += v * r / n;
            }
        }
        for (id, w) in &self.weights {
            *gw.entry(id.clone()).or_insert(0.0) += self.config.l2 * w;
        }
        (gw, gb)
    }
}

impl RoleModel for RoleClassifier {
    fn relationship_probability(&self, features: &FeatureVector) -> f64 {
        sigmoid(self.score(features))
    }
}

pub fn train_role_classifier(
    data: &[(FeatureVector, Role)],
    config: &TrainConfig,
) -> Result<RoleClassifier, ConstructionError> {
    let has = |r: Role| data.iter().any(|(_, y)| *y == r);
    if !has(Role::Property) || !has(Role::Relationship) {
        return Err(ConstructionError::Config("role classifier needs both property and relationship examples".into()));
    }
    let mut model = RoleClassifier::zeros(config.clone());
    for _ in 0..config.epochs {
        let (gw, gb) = model.gradient(data);
        for (id, g) in gw {
            *model.weights.entry(id).or_insert(0.0) -= config.learning_rate * g;
        }
        model.bias -= config.learning_rate * gb;
    }
    Ok(model)
}

/// Training examples from dictionary entries, with KB features drawn from `graph`.
pub fn role_training_set(dict: &RoleDictionary, graph: &PropertyGraph) -> Vec<(FeatureVector, Role)> {
    dict.iter()
        .map(|(surface, e)| (role_features(surface, &e.graph_name, graph), e.role))
        .collect()
}

fn contiguous(a: &TaggedToken, b: &TaggedToken) -> bool {
    a.token.span.1 == b.token.span.0
}

/// The KB key for `surface`, also trying a lowercase initial (sentence-initial capitals).
fn kb_key(graph: &PropertyGraph, surface: &str) -> Option<String> {
    if graph.node_by_key(surface).is_some() {
        return Some(surface.to_string());
    }
    let mut chars = surface.chars();
    let lowered: String = chars.next()?.to_lowercase().chain(chars).collect();
    graph.node_by_key(&lowered).map(|_| lowered)
}

fn is_type_word(surface: &str) -> bool {
    TYPE_WORDS.contains(&dict_key(surface).as_str())
}

/// Resolve a term via the dictionary or, failing that, the classifier.
fn resolve_term(
    surface: &str,
    position: usize,
    dict: &RoleDictionary,
    model: &dyn RoleModel,
    graph: &PropertyGraph,
) -> SchemaTerm {
    if let Some(entry) = dict.get(surface) {
        return SchemaTerm {
            surface: surface.to_string(),
            role: entry.role,
            graph_name: entry.graph_name.clone(),
            confidence: 1.0,
            source: TermSource::Dictionary,
            position,
        };
    }
    let graph_name = to_graph_name(surface);
    let p = model.relationship_probability(&role_features(surface, &graph_name, graph));
    let (role, confidence) = if p > 0.5 { (Role::Relationship, p) } else { (Role::Property, 1.0 - p) };
    SchemaTerm { surface: surface.to_string(), role, graph_name, confidence, source: TermSource::Classifier, position }
}

/// Whether a joined surface names something known (dictionary or KB schema).
fn known_compound(surface: &str, dict: &RoleDictionary, graph: &PropertyGraph) -> bool {
    if dict.contains(surface) {
        return true;
    }
    let name = to_graph_name(surface);
    graph.has_property_name(&name) || graph.has_relationship_label(&name)
}

pub fn construct(
    keywords: &[TaggedToken],
    dict: &RoleDictionary,
    model: &dyn RoleModel,
    graph: &PropertyGraph,
) -> Result<ConstructionResult, ConstructionError> {
    if !keywords.iter().any(|k| k.tag == Tag::Np) {
        return Err(ConstructionError::NoEntity);
    }
    let mut result = ConstructionResult::default();
    // Mark keywords absorbed into the following entity.
    let mut absorbed = vec![false; keywords.len()];
    let mut entity_surface: HashMap<usize, String> = HashMap::new();
    for (i, kw) in keywords.iter().enumerate() {
        if kw.tag != Tag::Np {
            continue;
        }
        let mut surface = kw.surface().to_string();
        let mut j = i;
        while j > 0 && keywords[j - 1].tag != Tag::Np && !absorbed[j - 1] && contiguous(&keywords[j - 1], &keywords[j]) {
            let prev = &keywords[j - 1];
            let compound = format!("{}_{}", prev.surface(), surface);
            if let Some(key) = kb_key(graph, &compound) {
                surface = key;
            } else if is_type_word(prev.surface()) {
                result.type_words.push(prev.surface().to_string());
            } else {
                break;
            }
            absorbed[j - 1] = true;
            j -= 1;
        }
        entity_surface.insert(i, surface);
    }

    let mut i = 0;
    while i < keywords.len() {
        let kw = &keywords[i];
        if absorbed[i] {
            i += 1;
            continue;
        }
        if let Some(surface) = entity_surface.get(&i) {
            result.entities.push(EntityMention { surface: surface.clone(), key: surface.clone() });
            i += 1;
            continue;
        }
        // run of contiguous schema keywords starting at i
        let mut end = i + 1;
        while end < keywords.len()
            && !absorbed[end]
            && !entity_surface.contains_key(&end)
            && contiguous(&keywords[end - 1], &keywords[end])
        {
            end += 1;
        }
        let run = &keywords[i..end];
        let mut len = run.len();
        while len > 1 {
            let joined = run[..len].iter().map(TaggedToken::surface).collect::<Vec<_>>().join("_");
            if known_compound(&joined, dict, graph) {
                break;
            }
            len -= 1;
        }
        let joined = run[..len].iter().map(TaggedToken::surface).collect::<Vec<_>>().join("_");
        let term = resolve_term(&joined, kw.token.span.0, dict, model, graph);
        match term.role {
            Role::Property => result.properties.push(term),
            Role::Relationship => result.relationships.push(term),
        }
        i += len;
    }
    Ok(result)
}
