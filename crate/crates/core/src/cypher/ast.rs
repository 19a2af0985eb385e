use serde::{Deserialize, Serialize};

/// Syntactic tree of a read-only query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAst {
    pub start: Vec<StartBinding>,
    pub matches: Vec<PathPattern>,
    pub filter: Option<BoolExpr>,
    pub distinct: bool,
    pub returns: Vec<ReturnItem>,
    pub sort: Option<SortKey>,
    pub limit: Option<u64>,
}

/// `var = node:Index(field="value")`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartBinding {
    pub variable: String,
    pub index: String,
    pub key_field: String,
    pub key_value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HopDirection {
    /// `-[:r]->`
    Right,
    /// `<-[:r]-`
    Left,
    /// `-[:r]-`
    Either,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub label: String,
    pub direction: HopDirection,
    pub target: String,
}

/// `(a)-[:r]->(b)...`; a pattern without hops binds a single node variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPattern {
    pub origin: String,
    pub hops: Vec<Hop>,
}

impl PathPattern {
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.origin.as_str()).chain(self.hops.iter().map(|h| h.target.as_str()))
    }

    /// Each hop as `(source, label, target)` with arrows normalized left to right.
    pub fn edges(&self) -> Vec<(&str, &str, &str, HopDirection)> {
        let mut prev = self.origin.as_str();
        self.hops
            .iter()
            .map(|h| {
                let edge = (prev, h.label.as_str(), h.target.as_str(), h.direction);
                prev = h.target.as_str();
                edge
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnItem {
    pub variable: String,
    pub property: Option<String>,
}

impl ReturnItem {
    pub fn node(variable: &str) -> Self {
        Self { variable: variable.to_string(), property: None }
    }

    pub fn property(variable: &str, property: &str) -> Self {
        Self { variable: variable.to_string(), property: Some(property.to_string()) }
    }

    pub fn column_name(&self) -> String {
        match &self.property {
            Some(p) => format!("{}.{}", self.variable, p),
            None => self.variable.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortKey {
    pub property: String,
    pub ascending: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Text(String),
    Integer(i64),
    Real(f64),
    Boolean(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    Property { variable: String, property: String },
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoolExpr {
    Compare { left: Operand, op: CompareOp, right: Operand },
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn and(self, other: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(self), Box::new(other))
    }

    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            BoolExpr::Compare { left, right, .. } => vec![left, right],
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                let mut v = a.operands();
                v.extend(b.operands());
                v
            }
        }
    }
}

impl QueryAst {
    /// Variables in order of first binding: START bindings, then MATCH patterns left to right.
    pub fn bound_variables(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        let mut push = |v: &str| {
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_string());
            }
        };
        for b in &self.start {
            push(&b.variable);
        }
        for p in &self.matches {
            for v in p.variables() {
                push(v);
            }
        }
        vars
    }

    /// Variables referenced by RETURN items, deduplicated in order.
    pub fn returned_variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = Vec::new();
        for item in &self.returns {
            if !vars.contains(&item.variable.as_str()) {
                vars.push(&item.variable);
            }
        }
        vars
    }
}
