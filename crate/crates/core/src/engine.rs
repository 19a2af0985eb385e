//! Query evaluation over a [`PropertyGraph`].
//!
//! Bindings are found by depth-first extension over the variables in order of
//! first appearance. A variable adjacent to an already bound one draws its
//! candidates from that node's neighbors; otherwise it ranges over every node.
//! Distinct variables may bind the same node.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cypher::{BoolExpr, CompareOp, HopDirection, Literal, Operand, QueryAst};
use crate::graph::{Direction, NodeId, PropertyGraph, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("cannot compare {left} {op} {right} in `{expr}`")]
    TypeMismatch { expr: String, left: String, op: &'static str, right: String },
    #[error("all {} candidate queries failed: {}", .0.len(), .0.iter().map(|(i, e)| format!("#{i}: {e}")).collect::<Vec<_>>().join("; "))]
    AllCandidatesFailed(Vec<(usize, EvalError)>),
    #[error("no candidate queries supplied")]
    NoCandidates,
}

/// One projected cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Null,
    Node { id: NodeId, key: String },
    Value(Value),
}

impl Cell {
    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }

    pub fn display(&self) -> Option<String> {
        match self {
            Cell::Null => None,
            Cell::Node { key, .. } => Some(key.clone()),
            Cell::Value(v) => Some(v.to_string()),
        }
    }

    fn identity(&self) -> CellKey {
        match self {
            Cell::Null => CellKey::Null,
            Cell::Node { id, .. } => CellKey::Node(*id),
            Cell::Value(Value::Boolean(b)) => CellKey::Bool(*b),
            Cell::Value(Value::Integer(i)) => CellKey::Int(*i),
            Cell::Value(Value::Real(x)) => CellKey::Real(x.to_bits()),
            Cell::Value(Value::Text(s)) => CellKey::Text(s.clone()),
            Cell::Value(Value::List(items)) => CellKey::Text(items.join("\u{1f}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum CellKey {
    Null,
    Node(NodeId),
    Bool(bool),
    Int(i64),
    Real(u64),
    Text(String),
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Null => s.serialize_none(),
            Cell::Node { key, .. } => s.serialize_str(key),
            Cell::Value(v) => v.serialize(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Node,
    Property,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    pub rows: Vec<Vec<Cell>>,
}

impl Serialize for ResultTable {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ResultTable", 2)?;
        st.serialize_field("columns", &self.columns)?;
        st.serialize_field("rows", &self.rows)?;
        st.end()
    }
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// At least one row carries a non-null cell.
    pub fn has_answers(&self) -> bool {
        self.rows.iter().any(|row| row.iter().any(|c| !c.is_null()))
    }
}

/// Variable assignment, indexed by the query's variable order.
pub type Binding = Vec<NodeId>;

struct Plan<'a> {
    vars: Vec<String>,
    /// (from, label, to, direction) as variable indices
    edges: Vec<(usize, &'a str, usize, HopDirection)>,
    seeds: Vec<Option<Vec<NodeId>>>,
}

impl<'a> Plan<'a> {
    fn new(ast: &'a QueryAst, graph: &PropertyGraph) -> Self {
        let vars = ast.bound_variables();
        let pos = |v: &str| vars.iter().position(|x| x == v).expect("validated ast");
        let edges = ast
            .matches
            .iter()
            .flat_map(|p| p.edges())
            .map(|(a, label, b, dir)| (pos(a), label, pos(b), dir))
            .collect();
        let mut seeds = vec![None; vars.len()];
        for b in &ast.start {
            let found: Vec<NodeId> = graph.index_lookup(&b.index, &b.key_value).into_iter().collect();
            seeds[pos(&b.variable)] = Some(found);
        }
        Plan { vars, edges, seeds }
    }

    fn var(&self, name: &str) -> usize {
        self.vars.iter().position(|x| x == name).expect("validated ast")
    }
}

fn edge_holds(graph: &PropertyGraph, from: NodeId, label: &str, to: NodeId, dir: HopDirection) -> bool {
    match dir {
        HopDirection::Right => graph.has_edge(from, label, to),
        HopDirection::Left => graph.has_edge(to, label, from),
        HopDirection::Either => graph.has_edge(from, label, to) || graph.has_edge(to, label, from),
    }
}

/// All assignments satisfying START seeds and MATCH patterns, sorted by NodeId tuple.
pub fn match_bindings(ast: &QueryAst, graph: &PropertyGraph) -> Vec<Binding> {
    let plan = Plan::new(ast, graph);
    let mut out = Vec::new();
    if plan.vars.is_empty() {
        return out;
    }
    let mut current: Vec<Option<NodeId>> = vec![None; plan.vars.len()];
    extend(&plan, graph, 0, &mut current, &mut out);
    out.sort();
    out
}

fn candidates(plan: &Plan, graph: &PropertyGraph, var: usize, current: &[Option<NodeId>]) -> Vec<NodeId> {
    if let Some(seed) = &plan.seeds[var] {
        return seed.clone();
    }
    // Pick the first edge tying `var` to a bound variable.
    for &(a, label, b, dir) in &plan.edges {
        let (other, direction) = if b == var && a != var {
            let d = match dir {
                HopDirection::Right => Direction::Out,
                HopDirection::Left => Direction::In,
                HopDirection::Either => Direction::Both,
            };
            (a, d)
        } else if a == var && b != var {
            let d = match dir {
                HopDirection::Right => Direction::In,
                HopDirection::Left => Direction::Out,
                HopDirection::Either => Direction::Both,
            };
            (b, d)
        } else {
            continue;
        };
        if let Some(node) = current[other] {
            let mut ids: Vec<NodeId> = graph
                .neighbors(node, Some(label), direction)
                .expect("bound node exists")
                .into_iter()
                .map(|(_, n)| n)
                .collect();
            ids.sort();
            ids.dedup();
            return ids;
        }
    }
    graph.node_ids().collect()
}

fn extend(
    plan: &Plan,
    graph: &PropertyGraph,
    var: usize,
    current: &mut Vec<Option<NodeId>>,
    out: &mut Vec<Binding>,
) {
    if var == plan.vars.len() {
        out.push(current.iter().map(|n| n.expect("all bound")).collect());
        return;
    }
    for node in candidates(plan, graph, var, current) {
        current[var] = Some(node);
        let consistent = plan.edges.iter().all(|&(a, label, b, dir)| {
            // only check edges whose endpoints are both bound and that involve `var`
            if (a != var && b != var) || a > var || b > var {
                return true;
            }
            edge_holds(graph, current[a].unwrap(), label, current[b].unwrap(), dir)
        });
        if consistent {
            extend(plan, graph, var + 1, current, out);
        }
    }
    current[var] = None;
}

/// Value of `var.property`; `key` falls back to the node key when no such property exists.
fn property_value<'g>(graph: &'g PropertyGraph, node: NodeId, property: &str) -> Option<PropValue<'g>> {
    let n = graph.node(node)?;
    match n.properties.get(property) {
        Some(v) => Some(PropValue::Stored(v)),
        None if property == "key" => Some(PropValue::Key(&n.key)),
        None => None,
    }
}

enum PropValue<'g> {
    Stored(&'g Value),
    Key(&'g str),
}

#[derive(Debug, Clone, PartialEq)]
enum Scalar {
    Text(String),
    Int(i64),
    Real(f64),
    Bool(bool),
    TextList(Vec<String>),
}

impl Scalar {
    fn describe(&self) -> String {
        match self {
            Scalar::Text(s) => format!("text {s:?}"),
            Scalar::Int(i) => format!("integer {i}"),
            Scalar::Real(x) => format!("real {x}"),
            Scalar::Bool(b) => format!("boolean {b}"),
            Scalar::TextList(_) => "list".to_string(),
        }
    }
}

fn operand_value(op: &Operand, plan: &Plan, binding: &[NodeId], graph: &PropertyGraph) -> Option<Scalar> {
    match op {
        Operand::Literal(Literal::Text(s)) => Some(Scalar::Text(s.clone())),
        Operand::Literal(Literal::Integer(i)) => Some(Scalar::Int(*i)),
        Operand::Literal(Literal::Real(x)) => Some(Scalar::Real(*x)),
        Operand::Literal(Literal::Boolean(b)) => Some(Scalar::Bool(*b)),
        Operand::Property { variable, property } => {
            let node = binding[plan.var(variable)];
            Some(match property_value(graph, node, property)? {
                PropValue::Key(k) => Scalar::Text(k.to_string()),
                PropValue::Stored(Value::Text(s)) => Scalar::Text(s.clone()),
                PropValue::Stored(Value::Integer(i)) => Scalar::Int(*i),
                PropValue::Stored(Value::Real(x)) => Scalar::Real(*x),
                PropValue::Stored(Value::Boolean(b)) => Scalar::Bool(*b),
                PropValue::Stored(Value::List(items)) => Scalar::TextList(items.clone()),
            })
        }
    }
}

fn scalar_cmp(left: &Scalar, right: &Scalar) -> Option<Ordering> {
    match (left, right) {
        (Scalar::Text(a), Scalar::Text(b)) => Some(a.cmp(b)),
        (Scalar::Int(a), Scalar::Int(b)) => Some(a.cmp(b)),
        (Scalar::Int(a), Scalar::Real(b)) => (*a as f64).partial_cmp(b),
        (Scalar::Real(a), Scalar::Int(b)) => a.partial_cmp(&(*b as f64)),
        (Scalar::Real(a), Scalar::Real(b)) => a.partial_cmp(b),
        (Scalar::Bool(a), Scalar::Bool(b)) => Some(a.cmp(b)),
        _ => None,
    }
}

/// Compare two present values. Equality across incompatible types is false;
/// ordering across incompatible types (or on booleans and lists) is an error.
fn compare(left: &Scalar, op: CompareOp, right: &Scalar) -> Result<bool, ()> {
    let ordering_op = !matches!(op, CompareOp::Eq | CompareOp::Ne);
    if let (Scalar::TextList(items), other) | (other, Scalar::TextList(items)) = (left, right) {
        if ordering_op {
            return Err(());
        }
        let any_eq = match other {
            Scalar::Text(s) => items.iter().any(|i| i == s),
            Scalar::TextList(b) => items == b,
            _ => false,
        };
        return Ok(if op == CompareOp::Eq { any_eq } else { !any_eq });
    }
    if ordering_op && (matches!(left, Scalar::Bool(_)) || matches!(right, Scalar::Bool(_))) {
        return Err(());
    }
    let ord = scalar_cmp(left, right);
    Ok(match (op, ord) {
        (CompareOp::Eq, o) => o == Some(Ordering::Equal),
        (CompareOp::Ne, o) => o != Some(Ordering::Equal),
        (_, None) => return Err(()),
        (CompareOp::Lt, Some(o)) => o == Ordering::Less,
        (CompareOp::Gt, Some(o)) => o == Ordering::Greater,
        (CompareOp::Le, Some(o)) => o != Ordering::Greater,
        (CompareOp::Ge, Some(o)) => o != Ordering::Less,
    })
}

fn eval_filter(expr: &BoolExpr, plan: &Plan, binding: &[NodeId], graph: &PropertyGraph) -> Result<bool, EvalError> {
    match expr {
        BoolExpr::And(a, b) => Ok(eval_filter(a, plan, binding, graph)? && eval_filter(b, plan, binding, graph)?),
        BoolExpr::Or(a, b) => Ok(eval_filter(a, plan, binding, graph)? || eval_filter(b, plan, binding, graph)?),
        BoolExpr::Compare { left, op, right } => {
            let (Some(l), Some(r)) = (
                operand_value(left, plan, binding, graph),
                operand_value(right, plan, binding, graph),
            ) else {
                // comparisons against absent properties are false
                return Ok(false);
            };
            compare(&l, *op, &r).map_err(|()| EvalError::TypeMismatch {
                expr: describe_compare(left, *op, right),
                left: l.describe(),
                op: op.symbol(),
                right: r.describe(),
            })
        }
    }
}

fn describe_compare(left: &Operand, op: CompareOp, right: &Operand) -> String {
    let side = |o: &Operand| match o {
        Operand::Property { variable, property } => format!("{variable}.{property}"),
        Operand::Literal(Literal::Text(s)) => format!("{s:?}"),
        Operand::Literal(Literal::Integer(i)) => i.to_string(),
        Operand::Literal(Literal::Real(x)) => format!("{x:?}"),
        Operand::Literal(Literal::Boolean(b)) => b.to_string(),
    };
    format!("{} {} {}", side(left), op.symbol(), side(right))
}

/// Evaluate a validated query.
pub fn execute(ast: &QueryAst, graph: &PropertyGraph) -> Result<ResultTable, EvalError> {
    let plan = Plan::new(ast, graph);
    let columns = ast.returns.iter().map(|r| r.column_name()).collect();
    let kinds = ast
        .returns
        .iter()
        .map(|r| if r.property.is_some() { ColumnKind::Property } else { ColumnKind::Node })
        .collect();

    let mut bindings = match_bindings(ast, graph);
    if let Some(filter) = &ast.filter {
        let mut kept = Vec::with_capacity(bindings.len());
        for b in bindings {
            if eval_filter(filter, &plan, &b, graph)? {
                kept.push(b);
            }
        }
        bindings = kept;
    }

    let sort_var = ast.sort.as_ref().map(|_| plan.var(ast.returned_variables()[0]));
    let mut rows: Vec<(Vec<Cell>, Option<Cell>)> = Vec::new();
    for binding in &bindings {
        let sort_cell = match (&ast.sort, sort_var) {
            (Some(sort), Some(v)) => Some(match property_value(graph, binding[v], &sort.property) {
                Some(PropValue::Stored(val)) => Cell::Value(val.clone()),
                Some(PropValue::Key(k)) => Cell::Value(Value::Text(k.to_string())),
                None => Cell::Null,
            }),
            _ => None,
        };
        for row in project(ast, &plan, binding, graph) {
            rows.push((row, sort_cell.clone()));
        }
    }

    if ast.distinct {
        let mut seen = HashSet::new();
        rows.retain(|(row, _)| seen.insert(row.iter().map(Cell::identity).collect::<Vec<_>>()));
    }
    if let Some(sort) = &ast.sort {
        rows.sort_by(|(_, a), (_, b)| {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            match (a.is_null(), b.is_null()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
                (false, false) => {
                    let ord = sort_order(a, b);
                    if sort.ascending { ord } else { ord.reverse() }
                }
            }
        });
    }
    if let Some(limit) = ast.limit {
        rows.truncate(limit as usize);
    }
    Ok(ResultTable { columns, kinds, rows: rows.into_iter().map(|(r, _)| r).collect() })
}

/// Total order for sorting: numbers before booleans before text.
fn sort_order(a: &Cell, b: &Cell) -> Ordering {
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Integer(_) | Value::Real(_) => 0,
            Value::Boolean(_) => 1,
            Value::Text(_) | Value::List(_) => 2,
        }
    }
    match (a, b) {
        (Cell::Value(x), Cell::Value(y)) => match (x, y) {
            (Value::Integer(i), Value::Integer(j)) => i.cmp(j),
            (Value::Integer(i), Value::Real(r)) => (*i as f64).total_cmp(r),
            (Value::Real(r), Value::Integer(i)) => r.total_cmp(&(*i as f64)),
            (Value::Real(r), Value::Real(s)) => r.total_cmp(s),
            (Value::Boolean(p), Value::Boolean(q)) => p.cmp(q),
            _ if rank(x) != rank(y) => rank(x).cmp(&rank(y)),
            _ => x.to_string().cmp(&y.to_string()),
        },
        _ => Ordering::Equal,
    }
}

/// Project one binding; list-valued properties fan out into one row per element.
fn project(ast: &QueryAst, plan: &Plan, binding: &[NodeId], graph: &PropertyGraph) -> Vec<Vec<Cell>> {
    let mut rows: Vec<Vec<Cell>> = vec![Vec::with_capacity(ast.returns.len())];
    for item in &ast.returns {
        let node = binding[plan.var(&item.variable)];
        let options: Vec<Cell> = match &item.property {
            None => vec![Cell::Node { id: node, key: graph.node(node).expect("bound").key.clone() }],
            Some(p) => match property_value(graph, node, p) {
                None => vec![Cell::Null],
                Some(PropValue::Key(k)) => vec![Cell::Value(Value::Text(k.to_string()))],
                Some(PropValue::Stored(Value::List(items))) => {
                    items.iter().map(|s| Cell::Value(Value::Text(s.clone()))).collect()
                }
                Some(PropValue::Stored(v)) => vec![Cell::Value(v.clone())],
            },
        };
        rows = rows
            .into_iter()
            .flat_map(|row| {
                options.iter().map(move |cell| {
                    let mut r = row.clone();
                    r.push(cell.clone());
                    r
                })
            })
            .collect();
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecuteAllOutcome {
    pub table: ResultTable,
    /// Index of the first candidate with answers; `None` when none produced any.
    pub winner: Option<usize>,
    pub failures: Vec<(usize, String)>,
}

/// Run candidates in order and keep the first whose table has a non-null cell.
pub fn execute_all(candidates: &[QueryAst], graph: &PropertyGraph) -> Result<ExecuteAllOutcome, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::NoCandidates);
    }
    let mut errors = Vec::new();
    let mut first_ok: Option<ResultTable> = None;
    for (i, ast) in candidates.iter().enumerate() {
        match execute(ast, graph) {
            Ok(table) if table.has_answers() => {
                return Ok(ExecuteAllOutcome {
                    table,
                    winner: Some(i),
                    failures: errors.iter().map(|(i, e): &(usize, EvalError)| (*i, e.to_string())).collect(),
                });
            }
            Ok(table) => {
                first_ok.get_or_insert(table);
            }
            Err(e) => errors.push((i, e)),
        }
    }
    match first_ok {
        Some(table) => Ok(ExecuteAllOutcome {
            table: ResultTable { rows: Vec::new(), ..table },
            winner: None,
            failures: errors.iter().map(|(i, e)| (*i, e.to_string())).collect(),
        }),
        None => Err(EvalError::AllCandidatesFailed(errors)),
    }
}
