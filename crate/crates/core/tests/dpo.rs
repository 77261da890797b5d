mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use gragra_core::attr::{AttrTerm, Sort};
use gragra_core::construct::{pushout, pushout_complement};
use gragra_core::graph::{Elem, TypeGraph, TypedGraph};
use gragra_core::rewrite::{
    apply_rule, check_gluing, derive, find_matches, parallel_independent, run_grammar, MatchPolicy,
    RunConfig,
};
use gragra_core::rule::{Grammar, Rule, SpanBuilder};
use gragra_core::search::is_isomorphic;
use gragra_core::{fixture, GluingViolation};
use proptest::prelude::*;

fn random_setup(seed: u64) -> (Arc<TypeGraph>, Rule, TypedGraph) {
    let mut r = common::rng(seed);
    let types = Arc::new(common::type_graph(&mut r, 2, 3));
    let rule = common::rule(&mut r, &types, "r", 6);
    let host = common::host_graph(&mut r, &types, 6, 8);
    (types, rule, host)
}

fn valid_matches(rule: &Rule, host: &TypedGraph) -> Vec<gragra_core::Match> {
    find_matches(rule, host, MatchPolicy::Injective)
        .unwrap()
        .into_iter()
        .filter(|m| check_gluing(rule, m, host).is_ok())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn element_count_law(seed in any::<u64>()) {
        let (_, rule, host) = random_setup(seed);
        let del = rule.deleted();
        let cre = rule.created();
        let count = |s: &BTreeSet<Elem>, nodes: bool| s.iter().filter(|e| matches!(e, Elem::Node(_)) == nodes).count();
        for m in valid_matches(&rule, &host) {
            let h = apply_rule(&rule, &m, &host).unwrap();
            prop_assert_eq!(h.node_count(), host.node_count() - count(&del, true) + count(&cre, true));
            prop_assert_eq!(h.edge_count(), host.edge_count() - count(&del, false) + count(&cre, false));
        }
    }

    #[test]
    fn pushout_square_commutes_without_junk(seed in any::<u64>()) {
        let (_, rule, host) = random_setup(seed);
        for m in valid_matches(&rule, &host) {
            let d = derive(&rule, &m, &host).unwrap();
            // K → D → H equals K → R → H
            for (k, x) in &rule.right.nodes {
                let via_d = d.context_into_result.nodes[&m.morphism.nodes[&rule.left.nodes[k]]];
                prop_assert_eq!(via_d, d.comatch.nodes[x]);
            }
            for (k, x) in &rule.right.edges {
                let via_d = d.context_into_result.edges[&m.morphism.edges[&rule.left.edges[k]]];
                prop_assert_eq!(via_d, d.comatch.edges[x]);
            }
            let image: BTreeSet<Elem> = d.context_into_result.image().union(&d.comatch.image()).copied().collect();
            let all: BTreeSet<Elem> = d.result.node_ids().map(Elem::Node).chain(d.result.edge_ids().map(Elem::Edge)).collect();
            prop_assert_eq!(image, all);
            d.context_into_result.check(&d.context, &d.result).unwrap();
            d.comatch.check(&rule.rhs, &d.result).unwrap();
        }
    }

    #[test]
    fn left_square_is_reversible(seed in any::<u64>()) {
        let (_, rule, host) = random_setup(seed);
        for m in valid_matches(&rule, &host) {
            let pc = pushout_complement(&rule.left, &rule.lhs, &m.morphism, &host).unwrap();
            let po = pushout(&pc.from_interface, &pc.graph, &rule.left, &rule.lhs).unwrap();
            let mut rebuilt = po.graph;
            for (p, x) in &po.from_right.nodes {
                for (a, t) in &rule.lhs.node(*p).unwrap().attrs {
                    let v = t.substitute(&m.binding);
                    rebuilt.set_attr(*x, a, v).unwrap();
                }
            }
            prop_assert!(is_isomorphic(&rebuilt, &host).is_some());
        }
    }

    #[test]
    fn disjoint_matches_commute(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 3));
        let r1 = common::rule(&mut r, &types, "r1", 5);
        let r2 = common::rule(&mut r, &types, "r2", 5);
        let host = common::host_graph(&mut r, &types, 6, 8);
        for m1 in valid_matches(&r1, &host) {
            for m2 in valid_matches(&r2, &host) {
                let (i1, i2) = (m1.morphism.image(), m2.morphism.image());
                let touched = |rule: &Rule, m: &gragra_core::Match| -> BTreeSet<Elem> {
                    rule.deleted().iter().map(|x| match x {
                        Elem::Node(n) => Elem::Node(m.morphism.nodes[n]),
                        Elem::Edge(e) => Elem::Edge(m.morphism.edges[e]),
                    }).collect()
                };
                let writes = |rule: &Rule, m: &gragra_core::Match| -> BTreeSet<Elem> {
                    rule.interface.node_ids()
                        .filter(|k| !rule.written_attrs(*k).is_empty())
                        .map(|k| Elem::Node(m.morphism.nodes[&rule.left.nodes[&k]]))
                        .collect()
                };
                let shared: BTreeSet<Elem> = i1.intersection(&i2).copied().collect();
                let clash = shared.iter().any(|x| {
                    touched(&r1, &m1).contains(x) || touched(&r2, &m2).contains(x)
                        || writes(&r1, &m1).contains(x) || writes(&r2, &m2).contains(x)
                });
                if !clash {
                    prop_assert!(parallel_independent(&r1, &m1, &r2, &m2, &host).unwrap());
                }
            }
        }
    }
}

fn node_edge_types() -> Arc<TypeGraph> {
    let mut t = TypeGraph::new();
    t.add_node_type("A", [("x".to_string(), Sort::Int)])
        .unwrap();
    t.add_edge_type("E", "A", "A").unwrap();
    Arc::new(t)
}

#[test]
fn dangling_edge_blocks_deletion() {
    let t = node_edge_types();
    let mut b = SpanBuilder::new(t.clone());
    b.lhs
        .add_labeled_node("a", "A", [("x".into(), AttrTerm::var("v"))])
        .unwrap();
    let rule = b.build("drop").unwrap();
    let mut g = TypedGraph::new(t);
    let a = g.add_node("A", [("x".into(), AttrTerm::int(1))]).unwrap();
    let c = g.add_node("A", [("x".into(), AttrTerm::int(2))]).unwrap();
    g.add_edge("E", c, a).unwrap();
    let ms = find_matches(&rule, &g, MatchPolicy::Injective).unwrap();
    let at_a = ms
        .iter()
        .find(|m| m.morphism.nodes.values().any(|n| *n == a))
        .unwrap();
    assert!(matches!(
        check_gluing(&rule, at_a, &g),
        Err(GluingViolation::DanglingEdge { .. })
    ));
    assert!(apply_rule(&rule, at_a, &g).is_err());
}

#[test]
fn identification_of_deleted_and_preserved_is_rejected() {
    let t = node_edge_types();
    let mut b = SpanBuilder::new(t.clone());
    b.lhs
        .add_labeled_node("keep", "A", [("x".into(), AttrTerm::var("v"))])
        .unwrap();
    b.lhs
        .add_labeled_node("gone", "A", [("x".into(), AttrTerm::var("w"))])
        .unwrap();
    b.rhs
        .add_labeled_node("keep", "A", [("x".into(), AttrTerm::var("v"))])
        .unwrap();
    let rule = b.build("merge").unwrap();
    let mut g = TypedGraph::new(t);
    g.add_node("A", [("x".into(), AttrTerm::int(1))]).unwrap();
    let ms = find_matches(&rule, &g, MatchPolicy::NonInjective).unwrap();
    assert_eq!(ms.len(), 1);
    assert!(matches!(
        check_gluing(&rule, &ms[0], &g),
        Err(GluingViolation::IdentificationClash { .. })
    ));
    assert!(find_matches(&rule, &g, MatchPolicy::Injective)
        .unwrap()
        .is_empty());
}

#[test]
fn identity_rule_leaves_graph_unchanged() {
    let (_, rule, host) = random_setup(11);
    let id = Rule::identity("id", &rule.lhs);
    for m in valid_matches(&id, &host) {
        assert!(is_isomorphic(&apply_rule(&id, &m, &host).unwrap(), &host).is_some());
    }
}

#[test]
fn seeded_runs_are_reproducible() {
    let (d, _) = fixture::client_server();
    for seed in 0..5 {
        let a = run_grammar(&d.base, RunConfig::new(seed, 100)).unwrap();
        let b = run_grammar(&d.base, RunConfig::new(seed, 100)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}

#[test]
fn fixture_runs_to_completion() {
    let (d, _) = fixture::client_server();
    for seed in 0..5 {
        let t = run_grammar(&d.base, RunConfig::new(seed, 100)).unwrap();
        assert_eq!(t.steps.len(), 12);
        assert_eq!(
            t.status,
            gragra_core::rewrite::TerminalStatus::StoppedNoMatch
        );
        assert_eq!(t.final_graph.node_count(), 6);
    }
    let zero = run_grammar(&d.base, RunConfig::new(1, 0)).unwrap();
    assert!(zero.steps.is_empty());
    assert_eq!(
        zero.status,
        gragra_core::rewrite::TerminalStatus::StoppedStepLimit
    );
}

#[test]
fn send_get_moves_message_to_request_stage() {
    let (d, _) = fixture::client_server();
    let rule = d.base.rule("SendGET").unwrap();
    let ms = valid_matches(rule, &d.base.initial);
    assert_eq!(ms.len(), 2);
    let h = apply_rule(rule, &ms[0], &d.base.initial).unwrap();
    assert_eq!(h.node_count(), d.base.initial.node_count());
    assert_eq!(h.edge_count(), d.base.initial.edge_count());
    let req = h
        .nodes()
        .filter(|(_, n)| n.attrs.get("type") == Some(&AttrTerm::str("GET_REQ")))
        .count();
    assert_eq!(req, 1);
}

#[test]
fn grammar_rejects_foreign_types() {
    let (d, _) = fixture::client_server();
    let other = node_edge_types();
    let g = Grammar::new(other.clone(), TypedGraph::new(other), d.base.rules.clone());
    assert!(g.is_err());
}
