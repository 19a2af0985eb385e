mod common;

use kgqa::graph::{Direction, NodeId, PropertyGraph};
use kgqa::triples::load_triples_str;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn check_invariants(g: &PropertyGraph, og: &common::OracleGraph) {
    assert_eq!(g.len(), og.keys.len());
    for (i, key) in og.keys.iter().enumerate() {
        let id = NodeId(i as u32);
        assert_eq!(g.node_by_key(key), Some(id));
        assert_eq!(&g.node(id).unwrap().key, key);
    }
    let stats = g.stats();
    assert_eq!(stats.relationships, g.relationships().len());
    for rel in g.relationships() {
        let out = g.neighbors(rel.start, Some(&rel.label), Direction::Out).unwrap();
        assert!(out.contains(&(rel.id, rel.end)));
        let inc = g.neighbors(rel.end, Some(&rel.label), Direction::In).unwrap();
        assert!(inc.contains(&(rel.id, rel.start)));
        assert!(g.has_edge(rel.start, &rel.label, rel.end));
        assert!(og.edges.contains(&(rel.start.index(), rel.label.clone(), rel.end.index())));
    }
    for id in g.node_ids() {
        let both = g.neighbors(id, None, Direction::Both).unwrap();
        let out = g.neighbors(id, None, Direction::Out).unwrap();
        let inc = g.neighbors(id, None, Direction::In).unwrap();
        let loops = out.iter().filter(|(_, n)| *n == id).count();
        assert_eq!(both.len(), out.len() + inc.len() - loops);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_and_index_invariants(seed in any::<u64>(), n in 1usize..30) {
        let (g, og) = common::random_graph(&mut StdRng::seed_from_u64(seed), n);
        check_invariants(&g, &og);
    }

    #[test]
    fn snapshot_round_trips(seed in any::<u64>(), n in 1usize..20) {
        let (g, _) = common::random_graph(&mut StdRng::seed_from_u64(seed), n);
        let back: PropertyGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back.stats(), g.stats());
        prop_assert_eq!(back.edge_list(), g.edge_list());
        prop_assert_eq!(back.nodes(), g.nodes());
    }

    #[test]
    fn loader_is_insensitive_to_unicode_form(name in "[a-zA-Z]{1,6}") {
        let composed = format!("Hà_{name}\tdânSố\t\"12\"^^int\nHà_{name}\tthủĐô\tNội_{name}\n");
        let decomposed = composed.replace('à', "a\u{300}").replace('ố', "o\u{302}\u{301}").replace('ộ', "o\u{323}\u{302}");
        let (mut a, mut b) = (PropertyGraph::new(), PropertyGraph::new());
        load_triples_str(&mut a, &composed);
        load_triples_str(&mut b, &decomposed);
        prop_assert_eq!(a.nodes(), b.nodes());
        prop_assert_eq!(a.edge_list(), b.edge_list());
    }
}

#[test]
fn repeated_literals_accumulate() {
    let mut g = PropertyGraph::new();
    let report = load_triples_str(&mut g, "A\tp\t\"x\"\nA\tp\t\"y\"\nA\tp\t\"z\"\nbroken line\n");
    assert_eq!(report.skipped, 1);
    assert_eq!(g.stats().properties, 3);
    let node = g.node(g.node_by_key("A").unwrap()).unwrap();
    assert_eq!(node.properties["p"], kgqa::graph::Value::List(vec!["x".into(), "y".into(), "z".into()]));
}
