//! Template selection and candidate query enumeration.
//!
//! A template is chosen from the shape of the construction result (number of
//! entities, properties and relationships) and the question form. Each template
//! yields an ordered list of candidates that differ in how a schema term is
//! realized: as a node property or as a relationship to another node.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::classifier::AnswerType;
use crate::cypher::{
    render, BoolExpr, CompareOp, Hop, HopDirection, Literal, Operand, PathPattern, QueryAst, ReturnItem,
    StartBinding,
};
use crate::engine::{Cell, ResultTable};
use crate::entity::{ConstructionResult, EntityMention, Role, SchemaTerm, TermSource};
use crate::graph::{PropertyGraph, DEFAULT_INDEX};

/// Question words that ask for the subject of a relation ("Nước nào có thủ đô là Bangkok?").
pub const INVERSE_QUESTION_WORDS: &[&str] =
    &["nước_nào", "thành_phố_nào", "tỉnh_nào", "người_nào", "quốc_gia_nào", "tác_phẩm_nào"];

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("no template for {answer_type} with {entities} entities, {properties} properties, {relationships} relationships")]
    NoTemplate { answer_type: AnswerType, entities: usize, properties: usize, relationships: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionForm {
    /// The entity is the subject: "thủ đô của Thái Lan là gì?"
    Direct,
    /// The entity is the object and the question asks for the subject.
    Inverse,
}

impl QuestionForm {
    pub fn from_question_word(qw: Option<&str>) -> Self {
        match qw {
            Some(w) if INVERSE_QUESTION_WORDS.contains(&w.to_lowercase().as_str()) => QuestionForm::Inverse,
            _ => QuestionForm::Direct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TemplateId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "YN")]
    Yn,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::T1 => "T1",
            TemplateId::T2 => "T2",
            TemplateId::T3 => "T3",
            TemplateId::T4 => "T4",
            TemplateId::T5 => "T5",
            TemplateId::T6 => "T6",
            TemplateId::Inv => "INV",
            TemplateId::Yn => "YN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Abstract of the entity.
    Definition,
    /// Terms read as node properties.
    Property,
    /// Terms followed as relationships.
    Edge,
    /// Two relationships followed in a chain.
    Chain,
    /// Inverse lookup scanning a property for the entity name.
    Scan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub template: TemplateId,
    pub variant: Variant,
    /// Slot name -> filled value, e.g. `ENTITY_KEY` -> `FPT`.
    pub substitution: BTreeMap<String, String>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateQuery {
    #[serde(skip)]
    pub ast: QueryAst,
    pub text: String,
    pub provenance: Provenance,
}

/// Static description of a template, exported for documentation.
#[derive(Debug, Clone, Serialize)]
pub struct TemplateInfo {
    pub id: TemplateId,
    pub pattern: &'static str,
    pub shape: &'static str,
    pub skeletons: Vec<&'static str>,
    pub slots: Vec<&'static str>,
}

pub fn catalog() -> Vec<TemplateInfo> {
    vec![
        TemplateInfo {
            id: TemplateId::T1,
            pattern: "E là [ai|gì|ở đâu]?",
            shape: "1 entity, no properties, no relationships",
            skeletons: vec!["START n = node:INDEX(key=ENTITY_KEY) RETURN n.abstract"],
            slots: vec!["ENTITY_KEY"],
        },
        TemplateInfo {
            id: TemplateId::T2,
            pattern: "p của E [bằng bao nhiêu|là gì]?",
            shape: "1 entity, >= 1 property, no relationships",
            skeletons: vec![
                "START n = node:INDEX(key=ENTITY_KEY) RETURN n.PROPERTY_NAME, ...",
                "START n = node:INDEX(key=ENTITY_KEY) MATCH (n)-[:PROPERTY_NAME]->(m) RETURN DISTINCT m",
            ],
            slots: vec!["ENTITY_KEY", "PROPERTY_NAME"],
        },
        TemplateInfo {
            id: TemplateId::T3,
            pattern: "r của E là [gì|ai]?",
            shape: "1 entity, no properties, 1 relationship",
            skeletons: vec![
                "START x = node:INDEX(key=ENTITY_KEY) RETURN DISTINCT x.RELATIONSHIP_LABEL",
                "START x = node:INDEX(key=ENTITY_KEY) MATCH (x)-[:RELATIONSHIP_LABEL]->(m) RETURN DISTINCT m",
            ],
            slots: vec!["ENTITY_KEY", "RELATIONSHIP_LABEL"],
        },
        TemplateInfo {
            id: TemplateId::T4,
            pattern: "p của r của E là gì?",
            shape: "1 entity, 2 terms, at least one relationship",
            skeletons: vec![
                "START x = node:INDEX(key=ENTITY_KEY) MATCH (x)-[:RELATIONSHIP_LABEL]->(m) RETURN DISTINCT m.PROPERTY_NAME",
                "START x = node:INDEX(key=ENTITY_KEY) MATCH (x)-[:RELATIONSHIP_LABEL]->(m)-[:PROPERTY_NAME]->(k) RETURN DISTINCT k",
                "START x = node:INDEX(key=ENTITY_KEY) RETURN DISTINCT x.RELATIONSHIP_LABEL",
            ],
            slots: vec!["ENTITY_KEY", "RELATIONSHIP_LABEL", "PROPERTY_NAME"],
        },
        TemplateInfo {
            id: TemplateId::T5,
            pattern: "E1 và E2 có r là gì?",
            shape: ">= 2 entities, no properties, 1 relationship",
            skeletons: vec![
                "START x1 = node:INDEX(key=ENTITY_KEY), x2 = ... RETURN DISTINCT x1.RELATIONSHIP_LABEL, x2.RELATIONSHIP_LABEL",
                "START x1 = node:INDEX(key=ENTITY_KEY), x2 = ... MATCH (x1)-[:RELATIONSHIP_LABEL]->(m1), (x2)-[:RELATIONSHIP_LABEL]->(m2) RETURN DISTINCT m1, m2",
            ],
            slots: vec!["ENTITY_KEY", "RELATIONSHIP_LABEL"],
        },
        TemplateInfo {
            id: TemplateId::T6,
            pattern: "p1 và p2 của E1 và E2 bằng bao nhiêu?",
            shape: ">= 2 entities, >= 1 property, no relationships",
            skeletons: vec!["START n1 = node:INDEX(key=ENTITY_KEY), n2 = ... RETURN n1.PROPERTY_NAME, ..., n2.PROPERTY_NAME, ..."],
            slots: vec!["ENTITY_KEY", "PROPERTY_NAME"],
        },
        TemplateInfo {
            id: TemplateId::Inv,
            pattern: "[Nước|Thành phố] nào có r là E? / E là r của nước nào?",
            shape: "1 entity, 1 term, inverse question word",
            skeletons: vec![
                "MATCH (n)-[:RELATIONSHIP_LABEL]->(m) WHERE m.key = ENTITY_KEY RETURN n",
                "MATCH (n) WHERE n.RELATIONSHIP_LABEL = ENTITY_KEY RETURN n",
            ],
            slots: vec!["ENTITY_KEY", "RELATIONSHIP_LABEL"],
        },
        TemplateInfo {
            id: TemplateId::Yn,
            pattern: "E1 có phải là r của E2 không?",
            shape: "YESNO, 2 entities, 1 term",
            skeletons: vec![
                "START x1 = node:INDEX(key=ENTITY_KEY), x2 = node:INDEX(key=ENTITY_KEY) MATCH (x1)-[:RELATIONSHIP_LABEL]-(x2) RETURN x1",
            ],
            slots: vec!["ENTITY_KEY", "RELATIONSHIP_LABEL"],
        },
    ]
}

/// Builds candidates against a named key index.
#[derive(Debug, Clone)]
pub struct QueryBuilder {
    pub index: String,
}

impl Default for QueryBuilder {
    fn default() -> Self {
        Self { index: DEFAULT_INDEX.to_string() }
    }
}

struct Draft {
    ast: QueryAst,
    variant: Variant,
    substitution: BTreeMap<String, String>,
}

fn empty_ast() -> QueryAst {
    QueryAst {
        start: Vec::new(),
        matches: Vec::new(),
        filter: None,
        distinct: false,
        returns: Vec::new(),
        sort: None,
        limit: None,
    }
}

fn hop(origin: &str, label: &str, target: &str) -> PathPattern {
    PathPattern {
        origin: origin.to_string(),
        hops: vec![Hop { label: label.to_string(), direction: HopDirection::Right, target: target.to_string() }],
    }
}

fn subst(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

impl QueryBuilder {
    pub fn new(index: &str) -> Self {
        Self { index: index.to_string() }
    }

    fn start(&self, variable: &str, entity: &EntityMention) -> StartBinding {
        StartBinding {
            variable: variable.to_string(),
            index: self.index.clone(),
            key_field: "key".to_string(),
            key_value: entity.key.clone(),
        }
    }

    fn seeded(&self, variable: &str, entity: &EntityMention) -> QueryAst {
        QueryAst { start: vec![self.start(variable, entity)], ..empty_ast() }
    }

    pub fn build_candidates(
        &self,
        answer_type: AnswerType,
        form: QuestionForm,
        c: &ConstructionResult,
    ) -> Result<Vec<CandidateQuery>, BuildError> {
        self.build(answer_type, form, c, None)
    }

    /// Like [`build_candidates`](Self::build_candidates); with a `schema`, a term
    /// the graph knows only as a relationship label puts its edge variant first.
    pub fn build(
        &self,
        answer_type: AnswerType,
        form: QuestionForm,
        c: &ConstructionResult,
        schema: Option<&PropertyGraph>,
    ) -> Result<Vec<CandidateQuery>, BuildError> {
        let no_template = || BuildError::NoTemplate {
            answer_type,
            entities: c.entities.len(),
            properties: c.properties.len(),
            relationships: c.relationships.len(),
        };
        let terms = c.terms();
        let (template, mut drafts) = match (c.entities.as_slice(), form, terms.len()) {
            ([], _, _) => return Err(no_template()),
            ([a, b], _, 1) if answer_type == AnswerType::YESNO => (TemplateId::Yn, self.related(a, b, terms[0])),
            ([e], QuestionForm::Inverse, 1) => (TemplateId::Inv, self.inverse(e, terms[0])),
            ([e], _, 0) => (TemplateId::T1, self.definition(e)),
            ([e], _, _) if c.relationships.is_empty() => (TemplateId::T2, self.properties(e, &c.properties)),
            ([e], _, 1) => (TemplateId::T3, self.relationship(e, terms[0])),
            ([e], _, 2) => (TemplateId::T4, self.chained(e, terms[0], terms[1])),
            (es, QuestionForm::Direct, 1) if c.relationships.len() == 1 => {
                (TemplateId::T5, self.shared_relationship(es, terms[0]))
            }
            (es, QuestionForm::Direct, _) if c.relationships.is_empty() => {
                (TemplateId::T6, self.comparative(es, &c.properties))
            }
            _ => return Err(no_template()),
        };
        if let (Some(g), Some(term)) = (schema, terms.first()) {
            reorder(template, &mut drafts, &term.graph_name, g);
        }
        Ok(drafts
            .into_iter()
            .enumerate()
            .map(|(rank, d)| CandidateQuery {
                text: render(&d.ast),
                ast: d.ast,
                provenance: Provenance { template, variant: d.variant, substitution: d.substitution, rank },
            })
            .collect())
    }

    fn definition(&self, e: &EntityMention) -> Vec<Draft> {
        let mut ast = self.seeded("n", e);
        ast.returns = vec![ReturnItem::property("n", "abstract")];
        vec![Draft { ast, variant: Variant::Definition, substitution: subst(&[("ENTITY_KEY", &e.key)]) }]
    }

    fn properties(&self, e: &EntityMention, props: &[SchemaTerm]) -> Vec<Draft> {
        let names: Vec<&str> = props.iter().map(|p| p.graph_name.as_str()).collect();
        let mut ast = self.seeded("n", e);
        ast.returns = names.iter().map(|p| ReturnItem::property("n", p)).collect();
        let joined = names.join(",");
        let mut drafts = vec![Draft {
            ast,
            variant: Variant::Property,
            substitution: subst(&[("ENTITY_KEY", &e.key), ("PROPERTY_NAME", &joined)]),
        }];
        // a single guessed property may really be a link
        if let [p] = props {
            if p.source == TermSource::Classifier {
                let mut edge = self.seeded("n", e);
                edge.matches = vec![hop("n", &p.graph_name, "m")];
                edge.distinct = true;
                edge.returns = vec![ReturnItem::node("m")];
                drafts.push(Draft {
                    ast: edge,
                    variant: Variant::Edge,
                    substitution: subst(&[("ENTITY_KEY", &e.key), ("RELATIONSHIP_LABEL", &p.graph_name)]),
                });
            }
        }
        drafts
    }

    fn property_variant(&self, e: &EntityMention, r: &str) -> Draft {
        let mut ast = self.seeded("x", e);
        ast.distinct = true;
        ast.returns = vec![ReturnItem::property("x", r)];
        Draft { ast, variant: Variant::Property, substitution: subst(&[("ENTITY_KEY", &e.key), ("RELATIONSHIP_LABEL", r)]) }
    }

    fn relationship(&self, e: &EntityMention, r: &SchemaTerm) -> Vec<Draft> {
        let mut edge = self.seeded("x", e);
        edge.matches = vec![hop("x", &r.graph_name, "m")];
        edge.distinct = true;
        edge.returns = vec![ReturnItem::node("m")];
        vec![
            self.property_variant(e, &r.graph_name),
            Draft {
                ast: edge,
                variant: Variant::Edge,
                substitution: subst(&[("ENTITY_KEY", &e.key), ("RELATIONSHIP_LABEL", &r.graph_name)]),
            },
        ]
    }

    /// `outer của inner của E`: follow `inner`, then read or follow `outer`.
    fn chained(&self, e: &EntityMention, outer: &SchemaTerm, inner: &SchemaTerm) -> Vec<Draft> {
        let s = subst(&[
            ("ENTITY_KEY", &e.key),
            ("RELATIONSHIP_LABEL", &inner.graph_name),
            ("PROPERTY_NAME", &outer.graph_name),
        ]);
        let mut read = self.seeded("x", e);
        read.matches = vec![hop("x", &inner.graph_name, "m")];
        read.distinct = true;
        read.returns = vec![ReturnItem::property("m", &outer.graph_name)];
        let mut chain = self.seeded("x", e);
        chain.matches = vec![PathPattern {
            origin: "x".into(),
            hops: vec![
                Hop { label: inner.graph_name.clone(), direction: HopDirection::Right, target: "m".into() },
                Hop { label: outer.graph_name.clone(), direction: HopDirection::Right, target: "k".into() },
            ],
        }];
        chain.distinct = true;
        chain.returns = vec![ReturnItem::node("k")];
        let read = Draft { ast: read, variant: Variant::Property, substitution: s.clone() };
        let chain = Draft { ast: chain, variant: Variant::Chain, substitution: s };
        let fallback = self.property_variant(e, &inner.graph_name);
        match outer.role {
            Role::Property => vec![read, chain, fallback],
            Role::Relationship => vec![chain, read, fallback],
        }
    }

    fn multi_start(&self, prefix: &str, es: &[EntityMention]) -> (QueryAst, Vec<String>) {
        let vars: Vec<String> = (1..=es.len()).map(|i| format!("{prefix}{i}")).collect();
        let ast = QueryAst { start: es.iter().zip(&vars).map(|(e, v)| self.start(v, e)).collect(), ..empty_ast() };
        (ast, vars)
    }

    fn shared_relationship(&self, es: &[EntityMention], r: &SchemaTerm) -> Vec<Draft> {
        let keys = es.iter().map(|e| e.key.as_str()).collect::<Vec<_>>().join(",");
        let s = subst(&[("ENTITY_KEY", &keys), ("RELATIONSHIP_LABEL", &r.graph_name)]);
        let (mut prop, vars) = self.multi_start("x", es);
        prop.distinct = true;
        prop.returns = vars.iter().map(|v| ReturnItem::property(v, &r.graph_name)).collect();
        let (mut edge, _) = self.multi_start("x", es);
        edge.distinct = true;
        for (i, v) in vars.iter().enumerate() {
            let target = format!("m{}", i + 1);
            edge.matches.push(hop(v, &r.graph_name, &target));
            edge.returns.push(ReturnItem::node(&target));
        }
        vec![
            Draft { ast: prop, variant: Variant::Property, substitution: s.clone() },
            Draft { ast: edge, variant: Variant::Edge, substitution: s },
        ]
    }

    fn comparative(&self, es: &[EntityMention], props: &[SchemaTerm]) -> Vec<Draft> {
        let keys = es.iter().map(|e| e.key.as_str()).collect::<Vec<_>>().join(",");
        let names = props.iter().map(|p| p.graph_name.as_str()).collect::<Vec<_>>().join(",");
        let (mut ast, vars) = self.multi_start("n", es);
        for v in &vars {
            for p in props {
                ast.returns.push(ReturnItem::property(v, &p.graph_name));
            }
        }
        vec![Draft { ast, variant: Variant::Property, substitution: subst(&[("ENTITY_KEY", &keys), ("PROPERTY_NAME", &names)]) }]
    }

    /// Whether two entities are linked by `r` in either direction.
    fn related(&self, a: &EntityMention, b: &EntityMention, r: &SchemaTerm) -> Vec<Draft> {
        let (mut ast, vars) = self.multi_start("x", &[a.clone(), b.clone()]);
        ast.matches = vec![PathPattern {
            origin: vars[0].clone(),
            hops: vec![Hop { label: r.graph_name.clone(), direction: HopDirection::Either, target: vars[1].clone() }],
        }];
        ast.returns = vec![ReturnItem::node(&vars[0])];
        let keys = format!("{},{}", a.key, b.key);
        vec![Draft {
            ast,
            variant: Variant::Edge,
            substitution: subst(&[("ENTITY_KEY", &keys), ("RELATIONSHIP_LABEL", &r.graph_name)]),
        }]
    }

    fn inverse(&self, e: &EntityMention, r: &SchemaTerm) -> Vec<Draft> {
        let s = subst(&[("ENTITY_KEY", &e.key), ("RELATIONSHIP_LABEL", &r.graph_name)]);
        let key = || Operand::Literal(Literal::Text(e.key.clone()));
        let mut edge = empty_ast();
        edge.matches = vec![hop("n", &r.graph_name, "m")];
        edge.filter = Some(BoolExpr::Compare {
            left: Operand::Property { variable: "m".into(), property: "key".into() },
            op: CompareOp::Eq,
            right: key(),
        });
        edge.returns = vec![ReturnItem::node("n")];
        let mut scan = empty_ast();
        scan.matches = vec![PathPattern { origin: "n".into(), hops: Vec::new() }];
        scan.filter = Some(BoolExpr::Compare {
            left: Operand::Property { variable: "n".into(), property: r.graph_name.clone() },
            op: CompareOp::Eq,
            right: key(),
        });
        scan.returns = vec![ReturnItem::node("n")];
        vec![
            Draft { ast: edge, variant: Variant::Edge, substitution: s.clone() },
            Draft { ast: scan, variant: Variant::Scan, substitution: s },
        ]
    }
}

fn reorder(template: TemplateId, drafts: &mut [Draft], name: &str, g: &PropertyGraph) {
    let link_only = g.has_relationship_label(name) && !g.has_property_name(name);
    let property_only = g.has_property_name(name) && !g.has_relationship_label(name);
    let rank = |v: Variant| match (template, v) {
        (TemplateId::T4, Variant::Chain) if link_only => 0,
        (TemplateId::T4, Variant::Property) if property_only => 0,
        (TemplateId::T4, Variant::Chain | Variant::Property) => 1,
        (TemplateId::T4, _) => 2,
        (TemplateId::T2 | TemplateId::T3 | TemplateId::T5, Variant::Edge) if link_only => 0,
        _ => 1,
    };
    drafts.sort_by_key(|d| rank(d.variant));
}

pub fn build_candidates(
    answer_type: AnswerType,
    form: QuestionForm,
    construction: &ConstructionResult,
) -> Result<Vec<CandidateQuery>, BuildError> {
    QueryBuilder::default().build_candidates(answer_type, form, construction)
}

/// Short answers from a result table, column by column so that multi-entity
/// results stay grouped per entity. Node keys read with spaces; duplicates and
/// nulls are dropped. YESNO questions answer whether anything was found.
pub fn answer_from_result(table: &ResultTable, answer_type: AnswerType) -> Vec<String> {
    if answer_type == AnswerType::YESNO {
        return vec![if table.has_answers() { "yes" } else { "no" }.to_string()];
    }
    let mut out: Vec<String> = Vec::new();
    for col in 0..table.columns.len() {
        for row in &table.rows {
            let text = match &row[col] {
                Cell::Null => continue,
                Cell::Node { key, .. } => key.replace('_', " "),
                cell => cell.display().unwrap_or_default(),
            };
            if !out.contains(&text) {
                out.push(text);
            }
        }
    }
    out
}
