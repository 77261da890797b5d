mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::Interference;
use gragra_core::attr::AttrTerm;
use gragra_core::cpa::{
    analyze_conflicts, analyze_dependencies, analyze_pair, enumerate_overlaps, CriticalKind, Mode,
    Witness, DEFAULT_OVERLAP_BOUND,
};
use gragra_core::fixture;
use gragra_core::graph::{EdgeId, Elem, NodeId, TypedGraph};
use gragra_core::rewrite::{check_gluing, find_matches, parallel_independent, MatchPolicy};
use gragra_core::rule::{Grammar, Rule};
use proptest::prelude::*;

type Pairing = (Vec<(NodeId, NodeId)>, Vec<(EdgeId, EdgeId)>);

fn clash(a: &AttrTerm, b: &AttrTerm) -> bool {
    matches!((a, b), (AttrTerm::Lit(x), AttrTerm::Lit(y)) if x != y)
}

/// Every assignment of each element of `a` to nothing or to an element of
/// `b`, kept when it is a nonempty partial isomorphism.
fn brute_force_pairings(a: &TypedGraph, b: &TypedGraph) -> BTreeSet<Pairing> {
    let an: Vec<NodeId> = a.node_ids().collect();
    let bn: Vec<NodeId> = b.node_ids().collect();
    let ae: Vec<EdgeId> = a.edge_ids().collect();
    let be: Vec<EdgeId> = b.edge_ids().collect();
    let mut out = BTreeSet::new();
    let node_total = (bn.len() + 1).pow(an.len() as u32);
    for code in 0..node_total {
        let mut c = code;
        let mut nodes = Vec::new();
        for x in &an {
            let k = c % (bn.len() + 1);
            c /= bn.len() + 1;
            if k > 0 {
                nodes.push((*x, bn[k - 1]));
            }
        }
        if nodes.is_empty() {
            continue;
        }
        let targets: BTreeSet<NodeId> = nodes.iter().map(|p| p.1).collect();
        if targets.len() != nodes.len() {
            continue;
        }
        let ok = nodes.iter().all(|(x, y)| {
            let (nx, ny) = (a.node(*x).unwrap(), b.node(*y).unwrap());
            nx.ty == ny.ty
                && nx
                    .attrs
                    .iter()
                    .all(|(k, t)| ny.attrs.get(k).is_none_or(|u| !clash(t, u)))
        });
        if !ok {
            continue;
        }
        let node_of = |x: NodeId| nodes.iter().find(|p| p.0 == x).map(|p| p.1);
        let edge_total = (be.len() + 1).pow(ae.len() as u32);
        for ecode in 0..edge_total {
            let mut c = ecode;
            let mut edges = Vec::new();
            for x in &ae {
                let k = c % (be.len() + 1);
                c /= be.len() + 1;
                if k > 0 {
                    edges.push((*x, be[k - 1]));
                }
            }
            let targets: BTreeSet<EdgeId> = edges.iter().map(|p| p.1).collect();
            if targets.len() != edges.len() {
                continue;
            }
            let consistent = edges.iter().all(|(x, y)| {
                let (ex, ey) = (a.edge(*x).unwrap(), b.edge(*y).unwrap());
                ex.ty == ey.ty
                    && node_of(ex.source) == Some(ey.source)
                    && node_of(ex.target) == Some(ey.target)
            });
            if consistent {
                out.insert((nodes.clone(), edges));
            }
        }
    }
    out
}

fn valid_count(rule: &Rule, host: &TypedGraph) -> usize {
    find_matches(rule, host, MatchPolicy::Injective)
        .unwrap()
        .iter()
        .filter(|m| check_gluing(rule, m, host).is_ok())
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn overlaps_agree_with_brute_force(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 3));
        let a = common::host_graph(&mut r, &types, 4, 3);
        let b = common::host_graph(&mut r, &types, 4, 3);
        let set = enumerate_overlaps(&a, &b).unwrap();
        let found: BTreeSet<Pairing> = set
            .overlaps
            .iter()
            .map(|o| (
                o.pairing.nodes.iter().map(|(x, y)| (*x, *y)).collect(),
                o.pairing.edges.iter().map(|(x, y)| (*x, *y)).collect(),
            ))
            .collect();
        prop_assert_eq!(found.len(), set.overlaps.len());
        prop_assert_eq!(found, brute_force_pairings(&a, &b));
        for o in &set.overlaps {
            let pn = o.pairing.nodes.len();
            let pe = o.pairing.edges.len();
            prop_assert_eq!(o.glue.node_count(), a.node_count() + b.node_count() - pn);
            prop_assert_eq!(o.glue.edge_count(), a.edge_count() + b.edge_count() - pe);
            o.m1.check(&a, &o.glue).unwrap();
            o.m2.check(&b, &o.glue).unwrap();
            for (x, y) in &o.pairing.nodes {
                prop_assert_eq!(o.m1.nodes[x], o.m2.nodes[y]);
            }
            let image: BTreeSet<Elem> = o.m1.image().union(&o.m2.image()).copied().collect();
            prop_assert_eq!(image.len(), o.glue.node_count() + o.glue.edge_count());
        }
    }

    #[test]
    fn delete_delete_is_symmetric(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 2));
        let r1 = common::rule(&mut r, &types, "r1", 4);
        let r2 = common::rule(&mut r, &types, "r2", 4);
        let has_delete_delete = |a: &Rule, b: &Rule| {
            let cell = analyze_pair(a, b, Mode::Conflicts, DEFAULT_OVERLAP_BOUND).unwrap();
            let b_deleted = b.deleted();
            cell.critical.iter().any(|cp| {
                let deleted_by_b: BTreeSet<Elem> = b_deleted.iter().map(|x| cp.overlap.m2.elem(*x).unwrap()).collect();
                cp.verdicts.iter().any(|v| v.kind == CriticalKind::DeleteUse && v.witnesses.iter().any(|w| match w {
                    Witness::Node(n) => deleted_by_b.contains(&Elem::Node(*n)),
                    Witness::Edge(e) => deleted_by_b.contains(&Elem::Edge(*e)),
                    Witness::Attribute { .. } => false,
                }))
            })
        };
        prop_assert_eq!(has_delete_delete(&r1, &r2), has_delete_delete(&r2, &r1));
    }

    #[test]
    fn totals_ignore_rule_names(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 2));
        let rules: Vec<Rule> = (0..3).map(|i| common::rule(&mut r, &types, &format!("r{i}"), 4)).collect();
        let renamed: Vec<Rule> = rules.iter().map(|x| {
            let mut y = x.clone();
            y.name = format!("renamed_{}", x.name);
            y.base_name = y.name.clone();
            y
        }).collect();
        let g = Grammar::new(types.clone(), TypedGraph::new(types.clone()), rules).unwrap();
        let h = Grammar::new(types.clone(), TypedGraph::new(types), renamed).unwrap();
        for mode in [Mode::Conflicts, Mode::Dependencies] {
            let (a, b) = match mode {
                Mode::Conflicts => (analyze_conflicts(&g).unwrap(), analyze_conflicts(&h).unwrap()),
                Mode::Dependencies => (analyze_dependencies(&g).unwrap(), analyze_dependencies(&h).unwrap()),
            };
            prop_assert_eq!(a.total(), b.total());
            prop_assert_eq!(a.matrix, b.matrix);
        }
    }

    #[test]
    fn zero_cells_have_no_interference(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 2));
        let rules: Vec<Rule> = (0..2).map(|i| common::rule(&mut r, &types, &format!("r{i}"), 4)).collect();
        let host = common::host_graph(&mut r, &types, 5, 6);
        let g = Grammar::new(types.clone(), TypedGraph::new(types), rules.clone()).unwrap();
        let report = analyze_conflicts(&g).unwrap();
        for (i, j, how) in common::interfering_pairs(&rules, &host) {
            let forward = report.matrix[i][j];
            let backward = report.matrix[j][i];
            match how {
                Interference::Disables => prop_assert!(forward > 0, "{} disables {}", rules[i].name, rules[j].name),
                Interference::Diverges => prop_assert!(forward + backward > 0),
            }
        }
    }
}

#[test]
fn oracle_matches_parallel_independence() {
    let mut checked = 0;
    for seed in 0..60u64 {
        let mut r = common::rng(seed);
        let types = Arc::new(common::type_graph(&mut r, 2, 2));
        let rules: Vec<Rule> = (0..2)
            .map(|i| common::rule(&mut r, &types, &format!("r{i}"), 4))
            .collect();
        let host = common::host_graph(&mut r, &types, 5, 6);
        let bad: BTreeSet<(usize, usize)> = common::interfering_pairs(&rules, &host)
            .iter()
            .map(|(i, j, _)| (*i, *j))
            .collect();
        for (i, r1) in rules.iter().enumerate() {
            for (j, r2) in rules.iter().enumerate() {
                if valid_count(r1, &host) == 0 || valid_count(r2, &host) == 0 {
                    continue;
                }
                let m1s = find_matches(r1, &host, MatchPolicy::Injective).unwrap();
                let m2s = find_matches(r2, &host, MatchPolicy::Injective).unwrap();
                let mut any_dependent = false;
                for m1 in m1s.iter().filter(|m| check_gluing(r1, m, &host).is_ok()) {
                    for m2 in m2s.iter().filter(|m| check_gluing(r2, m, &host).is_ok()) {
                        if i == j && m1.morphism == m2.morphism {
                            continue;
                        }
                        checked += 1;
                        any_dependent |= !parallel_independent(r1, m1, r2, m2, &host).unwrap();
                    }
                }
                assert_eq!(
                    any_dependent,
                    bad.contains(&(i, j)) || bad.contains(&(j, i)),
                    "seed {seed}"
                );
            }
        }
    }
    assert!(checked > 50);
}

#[test]
fn fixture_conflicts_follow_the_attribute_write() {
    let (d, _) = fixture::client_server();
    let c = analyze_conflicts(&d.base).unwrap();
    assert!(c.count("ExecuteSET", "ExecuteGET").unwrap() > 0);
    for (r1, r2, _) in c.nonzero() {
        assert_eq!(r1, "ExecuteSET", "({r1}, {r2})");
    }
    let cell = c.cell("ExecuteSET", "ExecuteGET").unwrap();
    for cp in &cell.critical {
        assert!(cp
            .verdicts
            .iter()
            .all(|v| v.kind == CriticalKind::AttributeWriteRead));
    }
    assert!(!c.truncated());
}

#[test]
fn fixture_dependencies_follow_the_chains() {
    let (d, _) = fixture::client_server();
    let dep = analyze_dependencies(&d.base).unwrap();
    for (a, b) in [
        ("SendGET", "ExecuteGET"),
        ("ExecuteGET", "ReceiveGET"),
        ("SendSET", "ExecuteSET"),
        ("ExecuteSET", "ReceiveSET"),
    ] {
        assert!(dep.count(a, b).unwrap() > 0, "{a} -> {b}");
    }
    for (a, b) in [("SendGET", "ExecuteSET"), ("SendSET", "ExecuteGET")] {
        assert_eq!(dep.count(a, b), Some(0), "{a} -> {b}");
    }
    // the only other cell comes from the value written by ExecuteSET
    let extra: Vec<_> = dep
        .nonzero()
        .into_iter()
        .filter(|(a, b, _)| {
            ![
                ("SendGET", "ExecuteGET"),
                ("ExecuteGET", "ReceiveGET"),
                ("SendSET", "ExecuteSET"),
                ("ExecuteSET", "ReceiveSET"),
            ]
            .contains(&(*a, *b))
        })
        .map(|(a, b, _)| (a.to_string(), b.to_string()))
        .collect();
    assert_eq!(
        extra,
        vec![("ExecuteSET".to_string(), "ExecuteGET".to_string())]
    );
    let cell = dep.cell("ExecuteSET", "ExecuteGET").unwrap();
    for cp in &cell.critical {
        assert!(cp
            .verdicts
            .iter()
            .all(|v| v.kind == CriticalKind::AttributeWriteRead));
    }
}

#[test]
fn path_overlaps_with_itself_seven_ways() {
    let mut t = gragra_core::TypeGraph::new();
    t.add_node_type("N", []).unwrap();
    t.add_edge_type("E", "N", "N").unwrap();
    let t = Arc::new(t);
    let mut path = TypedGraph::new(t);
    let a = path.add_node("N", []).unwrap();
    let b = path.add_node("N", []).unwrap();
    path.add_edge("E", a, b).unwrap();
    let set = enumerate_overlaps(&path, &path).unwrap();
    assert_eq!(set.overlaps.len(), 7);
    assert_eq!(brute_force_pairings(&path, &path).len(), 7);
}
