//! Random generators and brute-force oracles shared by the property suites
//! and the acceptance target.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use kgqa::classifier::{AnswerType, FeatureVector, MaxentModel, TrainConfig};
use kgqa::cypher::{
    is_identifier, parse, render, BoolExpr, CompareOp, Hop, HopDirection, Literal, Operand, PathPattern, QueryAst,
    QueryError, ReturnItem, SortKey, StartBinding,
};
use kgqa::engine::{execute, Cell};
use kgqa::graph::{Properties, PropertyGraph, Value};
use kgqa::nlp::{segment_scored, Lexicon, SegmentConfig, Tag};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- parser

const IDENT_POOL: &[&str] = &[
    "a", "b", "x", "n", "m1", "k_2", "dânSố", "thànhViênChủChốt", "diệnTích", "_tmp", "Hà_Nội", "ngườiSángLập", "r",
    "key", "abstract",
];

fn ident(rng: &mut StdRng) -> String {
    if rng.gen_bool(0.8) {
        IDENT_POOL.choose(rng).unwrap().to_string()
    } else {
        let len = rng.gen_range(1..8);
        let alphabet: Vec<char> = "abcxyzđăâêôơưáàảãạ_Ố9".chars().collect();
        let mut s: String = String::new();
        while s.chars().count() < len {
            let c = *alphabet.choose(rng).unwrap();
            if s.is_empty() && c.is_ascii_digit() {
                continue;
            }
            s.push(c);
        }
        if is_identifier(&s) {
            s
        } else {
            "v".to_string()
        }
    }
}

fn text(rng: &mut StdRng) -> String {
    let alphabet: Vec<char> = "aZ _.\"\\'()[]Hà Nội-:,ơ€😀\t".chars().collect();
    let len = rng.gen_range(0..10);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn literal(rng: &mut StdRng) -> Literal {
    match rng.gen_range(0..4) {
        0 => Literal::Text(text(rng)),
        1 => Literal::Integer(rng.gen_range(-1_000_000_000_000i64..1_000_000_000_000)),
        2 => {
            let x: f64 = match rng.gen_range(0..3) {
                0 => rng.gen_range(-1e6..1e6),
                1 => rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-300..300)),
                _ => rng.gen_range(0..100) as f64,
            };
            Literal::Real(x)
        }
        _ => Literal::Boolean(rng.gen()),
    }
}

fn operand(rng: &mut StdRng, vars: &[String]) -> Operand {
    if rng.gen_bool(0.6) {
        Operand::Property { variable: vars.choose(rng).unwrap().clone(), property: ident(rng) }
    } else {
        Operand::Literal(literal(rng))
    }
}

const OPS: [CompareOp; 6] = [CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Gt, CompareOp::Le, CompareOp::Ge];

fn bool_expr(rng: &mut StdRng, vars: &[String], depth: usize) -> BoolExpr {
    if depth == 0 || rng.gen_bool(0.5) {
        BoolExpr::Compare { left: operand(rng, vars), op: *OPS.choose(rng).unwrap(), right: operand(rng, vars) }
    } else {
        let (l, r) = (bool_expr(rng, vars, depth - 1), bool_expr(rng, vars, depth - 1));
        if rng.gen() {
            l.and(r)
        } else {
            l.or(r)
        }
    }
}

/// A random query that passes validation.
pub fn random_ast(rng: &mut StdRng) -> QueryAst {
    loop {
        let mut ast = QueryAst {
            start: Vec::new(),
            matches: Vec::new(),
            filter: None,
            distinct: rng.gen(),
            returns: Vec::new(),
            sort: None,
            limit: rng.gen_bool(0.3).then(|| rng.gen_range(1..10_000)),
        };
        let mut used: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(0..3) {
            let v = ident(rng);
            if used.contains(&v) {
                continue;
            }
            used.push(v.clone());
            ast.start.push(StartBinding { variable: v, index: ident(rng), key_field: ident(rng), key_value: text(rng) });
        }
        for _ in 0..rng.gen_range(0..3) {
            let hops = (0..rng.gen_range(0..4))
                .map(|_| Hop {
                    label: ident(rng),
                    direction: *[HopDirection::Right, HopDirection::Left, HopDirection::Either].choose(rng).unwrap(),
                    target: ident(rng),
                })
                .collect();
            ast.matches.push(PathPattern { origin: ident(rng), hops });
        }
        let vars = ast.bound_variables();
        if vars.is_empty() {
            continue;
        }
        if rng.gen_bool(0.5) {
            ast.filter = Some(bool_expr(rng, &vars, 3));
        }
        for _ in 0..rng.gen_range(1..4) {
            let v = vars.choose(rng).unwrap();
            ast.returns.push(if rng.gen() { ReturnItem::node(v) } else { ReturnItem::property(v, &ident(rng)) });
        }
        if ast.returned_variables().len() == 1 && rng.gen_bool(0.4) {
            ast.sort = Some(SortKey { property: ident(rng), ascending: rng.gen() });
        }
        return ast;
    }
}

/// parse(render(a)) == a over `trials` random queries; returns the failures.
pub fn roundtrip_failures(rng: &mut StdRng, trials: usize) -> Vec<String> {
    let mut failures = Vec::new();
    for _ in 0..trials {
        let ast = random_ast(rng);
        let text = render(&ast);
        match parse(&text) {
            Ok(back) if back == ast => {}
            Ok(back) => failures.push(format!("{text}\n  reparsed as {}", render(&back))),
            Err(e) => failures.push(format!("{text}\n  {e}")),
        }
    }
    failures
}

/// Byte ranges of corruptible tokens outside string literals: brackets, colons
/// and clause keywords.
fn corruption_sites(text: &str) -> Vec<(usize, usize)> {
    let mut sites = Vec::new();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut in_string = false;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if in_string {
            match c {
                '\\' => i += 1,
                '"' => in_string = false,
                _ => {}
            }
            i += 1;
            continue;
        }
        match c {
            '"' => in_string = true,
            '(' | ')' | '[' | ']' | ':' => sites.push((pos, pos + 1)),
            c if c.is_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].1.is_alphanumeric() || bytes[i].1 == '_' || ('\u{300}'..='\u{36f}').contains(&bytes[i].1)) {
                    i += 1;
                }
                let end = bytes.get(i).map_or(text.len(), |b| b.0);
                if ["START", "MATCH", "WHERE", "RETURN"].contains(&&text[pos..end]) {
                    sites.push((pos, end));
                }
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    sites
}

/// Delete, duplicate or swap one structural token.
pub fn corrupt(text: &str, rng: &mut StdRng) -> Option<String> {
    let sites = corruption_sites(text);
    let &(s, e) = sites.choose(rng)?;
    let token = &text[s..e];
    let replacement = match rng.gen_range(0..3) {
        0 => String::new(),
        1 => format!("{token}{token}"),
        _ => {
            let swaps = ["(", ")", "[", "]", ":"];
            let other = swaps.iter().filter(|t| **t != token).collect::<Vec<_>>();
            if token.len() == 1 {
                other.choose(rng).unwrap().to_string()
            } else {
                String::new()
            }
        }
    };
    Some(format!("{}{}{}", &text[..s], replacement, &text[e..]))
}

/// One-token corruptions of valid queries must fail with a syntax error.
pub fn corruption_failures(rng: &mut StdRng, cases: usize) -> Vec<String> {
    let mut failures = Vec::new();
    let mut done = 0;
    while done < cases {
        let text = render(&random_ast(rng));
        let Some(bad) = corrupt(&text, rng) else { continue };
        done += 1;
        match parse(&bad) {
            Err(QueryError::Syntax { .. }) => {}
            other => failures.push(format!("{bad}\n  from {text}\n  gave {other:?}")),
        }
    }
    failures
}

// ---------------------------------------------------------------- engine

/// Plain copy of a random graph for brute-force evaluation.
#[derive(Debug, Clone)]
pub struct OracleGraph {
    pub keys: Vec<String>,
    pub props: Vec<BTreeMap<String, Value>>,
    pub edges: HashSet<(usize, String, usize)>,
    /// index name -> key -> nodes
    pub indexes: BTreeMap<String, BTreeMap<String, BTreeSet<usize>>>,
}

const LABELS: &[&str] = &["a", "b", "c"];
const NAMES: &[&str] = &["An", "Bình", "Chi", "Dũng"];

pub fn random_graph(rng: &mut StdRng, n: usize) -> (PropertyGraph, OracleGraph) {
    let mut g = PropertyGraph::new();
    let mut og = OracleGraph { keys: Vec::new(), props: Vec::new(), edges: HashSet::new(), indexes: BTreeMap::new() };
    let default = g.default_index().to_string();
    for i in 0..n {
        let key = format!("n{i}");
        let mut props = Properties::new();
        if rng.gen_bool(0.8) {
            props.insert("age".into(), Value::Integer(rng.gen_range(0..6)));
        }
        if rng.gen_bool(0.8) {
            props.insert("name".into(), Value::Text(NAMES.choose(rng).unwrap().to_string()));
        }
        if rng.gen_bool(0.3) {
            let k = rng.gen_range(1..3);
            props.insert("tags".into(), Value::List((0..k).map(|_| NAMES.choose(rng).unwrap().to_string()).collect()));
        }
        g.create_node(&key, props.clone()).unwrap();
        og.indexes.entry(default.clone()).or_default().entry(key.clone()).or_default().insert(i);
        og.keys.push(key);
        og.props.push(props);
    }
    // a secondary index whose keys may point at several nodes
    for i in 0..n {
        if rng.gen_bool(0.5) {
            let name = NAMES.choose(rng).unwrap();
            g.index_insert("people", name, kgqa::graph::NodeId(i as u32)).unwrap();
            og.indexes.entry("people".into()).or_default().entry(name.to_string()).or_default().insert(i);
        }
    }
    let m = rng.gen_range(0..=n * 2);
    for _ in 0..m {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let label = LABELS.choose(rng).unwrap();
        g.create_relationship(kgqa::graph::NodeId(u as u32), label, kgqa::graph::NodeId(v as u32), Properties::new())
            .unwrap();
        og.edges.insert((u, label.to_string(), v));
    }
    (g, og)
}

const VARS: &[&str] = &["p", "q", "r", "s"];

fn oracle_compare(rng: &mut StdRng, vars: &[String]) -> BoolExpr {
    let v = vars.choose(rng).unwrap().clone();
    let prop = |p: &str| Operand::Property { variable: v.clone(), property: p.to_string() };
    match rng.gen_range(0..4) {
        0 => BoolExpr::Compare {
            left: prop("age"),
            op: *OPS.choose(rng).unwrap(),
            right: Operand::Literal(Literal::Integer(rng.gen_range(0..6))),
        },
        1 => BoolExpr::Compare {
            left: prop("name"),
            op: *OPS.choose(rng).unwrap(),
            right: Operand::Literal(Literal::Text(NAMES.choose(rng).unwrap().to_string())),
        },
        2 => BoolExpr::Compare {
            left: prop("tags"),
            op: *[CompareOp::Eq, CompareOp::Ne].choose(rng).unwrap(),
            right: Operand::Literal(Literal::Text(NAMES.choose(rng).unwrap().to_string())),
        },
        _ => {
            let w = vars.choose(rng).unwrap().clone();
            BoolExpr::Compare {
                left: prop("age"),
                op: *OPS.choose(rng).unwrap(),
                right: Operand::Property { variable: w, property: "age".into() },
            }
        }
    }
}

/// A valid query over the random-graph vocabulary with at most `max_hops` hops
/// and at most `max_vars` distinct variables.
pub fn random_oracle_query(rng: &mut StdRng, og: &OracleGraph, max_hops: usize, max_vars: usize) -> QueryAst {
    let pool = &VARS[..max_vars];
    let pick = |rng: &mut StdRng| pool.choose(rng).unwrap().to_string();
    let mut ast = QueryAst {
        start: Vec::new(),
        matches: Vec::new(),
        filter: None,
        distinct: rng.gen(),
        returns: Vec::new(),
        sort: None,
        limit: rng.gen_bool(0.2).then(|| rng.gen_range(1..6)),
    };
    let mut hops_left = rng.gen_range(0..=max_hops);
    for _ in 0..rng.gen_range(1..=2) {
        let n = rng.gen_range(0..=hops_left);
        hops_left -= n;
        let hops = (0..n)
            .map(|_| Hop {
                label: LABELS.choose(rng).unwrap().to_string(),
                direction: *[HopDirection::Right, HopDirection::Left, HopDirection::Either].choose(rng).unwrap(),
                target: pick(rng),
            })
            .collect();
        ast.matches.push(PathPattern { origin: pick(rng), hops });
    }
    let vars = ast.bound_variables();
    for v in vars.iter() {
        if rng.gen_bool(0.3) {
            let (index, key) = if rng.gen_bool(0.7) {
                let i = rng.gen_range(0..og.keys.len() + 1);
                ("DBPediaIndex".to_string(), og.keys.get(i).cloned().unwrap_or_else(|| "missing".into()))
            } else {
                ("people".to_string(), NAMES.choose(rng).unwrap().to_string())
            };
            ast.start.push(StartBinding { variable: v.clone(), index, key_field: "key".into(), key_value: key });
        }
    }
    if rng.gen_bool(0.5) {
        let mut e = oracle_compare(rng, &vars);
        if rng.gen_bool(0.4) {
            let other = oracle_compare(rng, &vars);
            e = if rng.gen() { e.and(other) } else { e.or(other) };
        }
        ast.filter = Some(e);
    }
    let sorted = rng.gen_bool(0.3);
    let ret_vars: Vec<String> = if sorted { vec![vars.choose(rng).unwrap().clone()] } else { vars.clone() };
    for _ in 0..rng.gen_range(1..=3) {
        let v = ret_vars.choose(rng).unwrap();
        let item = match rng.gen_range(0..5) {
            0 | 1 => ReturnItem::node(v),
            2 => ReturnItem::property(v, "age"),
            3 => ReturnItem::property(v, "name"),
            _ => ReturnItem::property(v, if rng.gen() { "tags" } else { "key" }),
        };
        ast.returns.push(item);
    }
    if sorted {
        let property = if rng.gen() { "age" } else { "name" };
        ast.sort = Some(SortKey { property: property.into(), ascending: rng.gen() });
    }
    kgqa::cypher::validate(&ast).expect("generator builds valid queries");
    ast
}

/// Engine-independent cell.
#[derive(Debug, Clone, PartialEq)]
pub enum OCell {
    Null,
    Node(String),
    Int(i64),
    Text(String),
}

fn oracle_prop(og: &OracleGraph, node: usize, p: &str) -> Option<Value> {
    match og.props[node].get(p) {
        Some(v) => Some(v.clone()),
        None if p == "key" => Some(Value::Text(og.keys[node].clone())),
        None => None,
    }
}

fn oracle_operand(og: &OracleGraph, vars: &[String], row: &[usize], o: &Operand) -> Option<Value> {
    match o {
        Operand::Literal(Literal::Integer(i)) => Some(Value::Integer(*i)),
        Operand::Literal(Literal::Text(s)) => Some(Value::Text(s.clone())),
        Operand::Literal(_) => unreachable!("generator uses int and text literals"),
        Operand::Property { variable, property } => {
            let i = vars.iter().position(|v| v == variable).unwrap();
            oracle_prop(og, row[i], property)
        }
    }
}

fn oracle_filter(og: &OracleGraph, vars: &[String], row: &[usize], e: &BoolExpr) -> bool {
    match e {
        BoolExpr::And(a, b) => oracle_filter(og, vars, row, a) && oracle_filter(og, vars, row, b),
        BoolExpr::Or(a, b) => oracle_filter(og, vars, row, a) || oracle_filter(og, vars, row, b),
        BoolExpr::Compare { left, op, right } => {
            let (Some(l), Some(r)) = (oracle_operand(og, vars, row, left), oracle_operand(og, vars, row, right)) else {
                return false;
            };
            if let Value::List(items) = &l {
                let Value::Text(s) = &r else { unreachable!() };
                let hit = items.contains(s);
                return if *op == CompareOp::Eq { hit } else { !hit };
            }
            let ord = match (&l, &r) {
                (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
                (Value::Text(a), Value::Text(b)) => a.cmp(b),
                _ => unreachable!("generator compares like types"),
            };
            match op {
                CompareOp::Eq => ord == Ordering::Equal,
                CompareOp::Ne => ord != Ordering::Equal,
                CompareOp::Lt => ord == Ordering::Less,
                CompareOp::Gt => ord == Ordering::Greater,
                CompareOp::Le => ord != Ordering::Greater,
                CompareOp::Ge => ord != Ordering::Less,
            }
        }
    }
}

/// Enumerate every assignment of nodes to variables and keep the consistent ones.
pub fn oracle_execute(ast: &QueryAst, og: &OracleGraph) -> Vec<Vec<OCell>> {
    let vars = ast.bound_variables();
    let n = og.keys.len();
    let k = vars.len();
    let var = |name: &str| vars.iter().position(|v| v == name).unwrap();
    let mut rows: Vec<(Vec<OCell>, Option<Value>)> = Vec::new();
    let total = n.pow(k as u32);
    for code in 0..total {
        // odometer with the first variable most significant gives lexicographic order
        let mut assignment = vec![0; k];
        let mut c = code;
        for slot in assignment.iter_mut().rev() {
            *slot = c % n;
            c /= n;
        }
        let seeded = ast.start.iter().all(|b| {
            let index = if b.index == "DBPedia" { "DBPediaIndex" } else { b.index.as_str() };
            og.indexes
                .get(index)
                .and_then(|m| m.get(&b.key_value))
                .is_some_and(|set| set.contains(&assignment[var(&b.variable)]))
        });
        if !seeded {
            continue;
        }
        let edges_ok = ast.matches.iter().all(|p| {
            p.edges().iter().all(|&(a, label, b, dir)| {
                let (u, v) = (assignment[var(a)], assignment[var(b)]);
                let fwd = og.edges.contains(&(u, label.to_string(), v));
                let back = og.edges.contains(&(v, label.to_string(), u));
                match dir {
                    HopDirection::Right => fwd,
                    HopDirection::Left => back,
                    HopDirection::Either => fwd || back,
                }
            })
        });
        if !edges_ok {
            continue;
        }
        if let Some(f) = &ast.filter {
            if !oracle_filter(og, &vars, &assignment, f) {
                continue;
            }
        }
        let sort_value = ast.sort.as_ref().map(|s| {
            let v = var(&ast.returns[0].variable);
            oracle_prop(og, assignment[v], &s.property)
        });
        let mut projected: Vec<Vec<OCell>> = vec![Vec::new()];
        for item in &ast.returns {
            let node = assignment[var(&item.variable)];
            let options: Vec<OCell> = match &item.property {
                None => vec![OCell::Node(og.keys[node].clone())],
                Some(p) => match oracle_prop(og, node, p) {
                    None => vec![OCell::Null],
                    Some(Value::Integer(i)) => vec![OCell::Int(i)],
                    Some(Value::Text(s)) => vec![OCell::Text(s)],
                    Some(Value::List(items)) => items.into_iter().map(OCell::Text).collect(),
                    Some(other) => panic!("unexpected value {other:?}"),
                },
            };
            projected = projected
                .into_iter()
                .flat_map(|row| {
                    options.iter().map(move |o| {
                        let mut r = row.clone();
                        r.push(o.clone());
                        r
                    })
                })
                .collect();
        }
        for row in projected {
            rows.push((row, sort_value.clone().flatten()));
        }
    }
    if ast.distinct {
        let mut kept: Vec<(Vec<OCell>, Option<Value>)> = Vec::new();
        for r in rows {
            if !kept.iter().any(|k| k.0 == r.0) {
                kept.push(r);
            }
        }
        rows = kept;
    }
    if let Some(sort) = &ast.sort {
        rows.sort_by(|(_, a), (_, b)| match (a, b) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(x), Some(y)) => {
                let o = match (x, y) {
                    (Value::Integer(i), Value::Integer(j)) => i.cmp(j),
                    (Value::Text(s), Value::Text(t)) => s.cmp(t),
                    _ => unreachable!(),
                };
                if sort.ascending {
                    o
                } else {
                    o.reverse()
                }
            }
        });
    }
    if let Some(limit) = ast.limit {
        rows.truncate(limit as usize);
    }
    rows.into_iter().map(|(r, _)| r).collect()
}

pub fn engine_rows(ast: &QueryAst, g: &PropertyGraph) -> Vec<Vec<OCell>> {
    let table = execute(ast, g).expect("generated queries evaluate");
    table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| match c {
                    Cell::Null => OCell::Null,
                    Cell::Node { key, .. } => OCell::Node(key.clone()),
                    Cell::Value(Value::Integer(i)) => OCell::Int(*i),
                    Cell::Value(Value::Text(s)) => OCell::Text(s.clone()),
                    Cell::Value(other) => panic!("unexpected cell {other:?}"),
                })
                .collect()
        })
        .collect()
}

/// Engine vs oracle on `trials` random (graph <= 30 nodes, <= 3 hops) cases.
pub fn engine_oracle_mismatches(rng: &mut StdRng, trials: usize) -> Vec<String> {
    let mut mismatches = Vec::new();
    for _ in 0..trials {
        // keep n^vars small enough for exhaustive enumeration
        let max_vars = rng.gen_range(1..=4);
        let cap = match max_vars {
            1 | 2 => 30,
            3 => 20,
            _ => 10,
        };
        let n = rng.gen_range(1..=cap);
        let (g, og) = random_graph(rng, n);
        let ast = random_oracle_query(rng, &og, 3, max_vars);
        let (got, want) = (engine_rows(&ast, &g), oracle_execute(&ast, &og));
        if got != want {
            mismatches.push(format!("{}\n  engine {got:?}\n  oracle {want:?}", render(&ast)));
        }
    }
    mismatches
}

// ---------------------------------------------------------------- segmentation

const SYLLABLES: &[&str] = &["ba", "cá", "đi", "hà", "nội", "to"];

pub fn random_lexicon(rng: &mut StdRng) -> Lexicon {
    let mut lex = Lexicon::new();
    for _ in 0..rng.gen_range(1..15) {
        let len = rng.gen_range(1..=4);
        let word: Vec<&str> = (0..len).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        // quantized so that ties between paths actually occur
        let freq = -(rng.gen_range(1..20) as f64) / 2.0;
        let _ = lex.insert(&word.join(" "), vec![Tag::N], freq);
    }
    lex
}

pub fn random_sentence(rng: &mut StdRng, max: usize) -> Vec<&'static str> {
    (0..rng.gen_range(1..=max)).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// Maximum path score over every split of `syllables` into lexicon words and
/// unknown single syllables.
pub fn exhaustive_best(syllables: &[&str], lex: &Lexicon, penalty: f64) -> f64 {
    let n = syllables.len();
    let mut best = f64::NEG_INFINITY;
    // bit i set = boundary after syllable i
    for mask in 0u32..(1 << (n - 1)) {
        let mut score = 0.0;
        let mut start = 0;
        let mut ok = true;
        for i in 0..n {
            if i == n - 1 || mask & (1 << i) != 0 {
                let piece = &syllables[start..=i];
                match lex.get_syllables(piece) {
                    Some(e) => score += e.log_freq,
                    None if piece.len() == 1 => score += penalty,
                    None => {
                        ok = false;
                        break;
                    }
                }
                start = i + 1;
            }
        }
        if ok && score > best {
            best = score;
        }
    }
    best
}

/// Lattice score vs exhaustive maximum, plus tiling of the returned tokens.
pub fn segmentation_failures(rng: &mut StdRng, trials: usize) -> Vec<String> {
    let cfg = SegmentConfig::default();
    let mut failures = Vec::new();
    for _ in 0..trials {
        let lex = random_lexicon(rng);
        let sentence = random_sentence(rng, 12);
        let text = sentence.join(" ");
        let (tokens, score) = segment_scored(&text, &lex, &cfg);
        let best = exhaustive_best(&sentence, &lex, cfg.unknown_penalty);
        if (score - best).abs() > 1e-9 {
            failures.push(format!("{text}: lattice {score} vs exhaustive {best}"));
        }
        // tokens tile the input exactly and their own scores add up
        let mut at = 0;
        let mut recomputed = 0.0;
        for t in &tokens {
            if t.span.0 != at {
                failures.push(format!("{text}: gap before {t:?}"));
            }
            let piece = &sentence[t.span.0..t.span.1];
            if t.surface != piece.join("_") {
                failures.push(format!("{text}: surface {} vs {piece:?}", t.surface));
            }
            recomputed += lex.get_syllables(piece).map_or(cfg.unknown_penalty, |e| e.log_freq);
            at = t.span.1;
        }
        if at != sentence.len() || (recomputed - score).abs() > 1e-9 {
            failures.push(format!("{text}: tiling {at}/{} score {recomputed} vs {score}", sentence.len()));
        }
    }
    failures
}

// ---------------------------------------------------------------- classifier

pub fn random_examples(rng: &mut StdRng, labels: &[AnswerType], n: usize) -> Vec<(FeatureVector, AnswerType)> {
    (0..n)
        .map(|_| {
            let mut f = FeatureVector::new();
            for _ in 0..rng.gen_range(1..5) {
                f.add(format!("f{}", rng.gen_range(0..8)), rng.gen_range(-2.0..2.0));
            }
            (f, *labels.choose(rng).unwrap())
        })
        .collect()
}

pub fn random_model(rng: &mut StdRng, labels: &[AnswerType]) -> MaxentModel {
    let config = TrainConfig { l2: rng.gen_range(0.0..0.1), ..TrainConfig::default() };
    let mut m = MaxentModel::zeros(labels.to_vec(), config);
    for j in 0..8 {
        if rng.gen_bool(0.7) {
            m.weights.insert(format!("f{j}"), (0..labels.len()).map(|_| rng.gen_range(-1.5..1.5)).collect());
        }
    }
    m.bias = (0..labels.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    m
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-4)
}

/// Largest relative gap between the analytic gradient and central differences
/// over `draws` random models and datasets.
pub fn worst_gradient_error(rng: &mut StdRng, draws: usize) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let k = rng.gen_range(2..=AnswerType::ALL.len());
        let labels: Vec<AnswerType> = AnswerType::ALL[..k].to_vec();
        let model = random_model(rng, &labels);
        let size = rng.gen_range(1..12);
        let data = random_examples(rng, &labels, size);
        let (gw, gb) = model.gradient(&data);
        for (id, g) in &gw {
            for j in 0..k {
                let shifted = |delta: f64| {
                    let mut m = model.clone();
                    m.weights.entry(id.clone()).or_insert_with(|| vec![0.0; k])[j] += delta;
                    m.loss(&data)
                };
                let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
                worst = worst.max(relative_error(g[j], numeric));
            }
        }
        for j in 0..k {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                m.bias[j] += delta;
                m.loss(&data)
            };
            let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
            worst = worst.max(relative_error(gb[j], numeric));
        }
    }
    worst
}

/// Largest |sum(p) - 1| and smallest p over random models and inputs.
pub fn simplex_error(rng: &mut StdRng, draws: usize) -> (f64, f64) {
    let (mut worst_sum, mut min_p) = (0.0f64, 1.0f64);
    for _ in 0..draws {
        let labels = AnswerType::ALL.to_vec();
        let mut model = random_model(rng, &labels);
        // include extreme scores
        if rng.gen_bool(0.2) {
            model.bias[0] = 700.0;
        }
        let (x, _) = random_examples(rng, &labels, 1).remove(0);
        let p = model.predict_proba(&x);
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        min_p = min_p.min(p.iter().copied().fold(f64::INFINITY, f64::min));
    }
    (worst_sum, min_p)
}
