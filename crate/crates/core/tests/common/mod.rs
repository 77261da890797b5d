//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use gragra_core::attr::{AttrTerm, Sort, Value};
use gragra_core::graph::{NodeId, TypeGraph, TypedGraph};
use gragra_core::rule::{Rule, SpanBuilder};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SORTS: [Sort; 3] = [Sort::Int, Sort::String, Sort::Bool];

/// Up to `max_nodes` node types with up to two attributes each and up to
/// `max_edges` edge types between them.
pub fn type_graph(r: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> TypeGraph {
    let mut t = TypeGraph::new();
    let n = r.random_range(1..=max_nodes.max(1));
    for i in 0..n {
        let attrs: Vec<(String, Sort)> = (0..r.random_range(0..=2))
            .map(|j| (format!("a{j}"), *SORTS.choose(r).unwrap()))
            .collect();
        t.add_node_type(format!("N{i}"), attrs).unwrap();
    }
    if n > 0 {
        for i in 0..r.random_range(0..=max_edges) {
            let s = format!("N{}", r.random_range(0..n));
            let d = format!("N{}", r.random_range(0..n));
            t.add_edge_type(format!("E{i}"), &s, &d).unwrap();
        }
    }
    t
}

pub fn literal(r: &mut ChaCha8Rng, sort: Sort) -> AttrTerm {
    match sort {
        Sort::Int => AttrTerm::int(r.random_range(0..3)),
        Sort::String => AttrTerm::str(["a", "b", "c"].choose(r).unwrap().to_string()),
        Sort::Bool => AttrTerm::Lit(Value::Bool(r.random_bool(0.5))),
    }
}

fn sorts_of(t: &TypeGraph, ty: &str) -> Vec<(String, Sort)> {
    t.node_type(ty)
        .unwrap()
        .attrs
        .iter()
        .map(|a| (a.name.clone(), a.sort))
        .collect()
}

/// A random host graph with up to `max_nodes` nodes and literal attributes.
pub fn host_graph(
    r: &mut ChaCha8Rng,
    types: &Arc<TypeGraph>,
    max_nodes: usize,
    max_edges: usize,
) -> TypedGraph {
    let mut g = TypedGraph::new(types.clone());
    let names: Vec<String> = types.node_types().map(|n| n.name.clone()).collect();
    if names.is_empty() {
        return g;
    }
    for _ in 0..r.random_range(0..=max_nodes) {
        let ty = names.choose(r).unwrap().clone();
        let attrs: Vec<(String, AttrTerm)> = sorts_of(types, &ty)
            .into_iter()
            .map(|(a, s)| (a, literal(r, s)))
            .collect();
        g.add_node(&ty, attrs).unwrap();
    }
    add_random_edges(r, &mut g, max_edges, |_| None);
    g
}

fn nodes_of(g: &TypedGraph, ty: &str) -> Vec<NodeId> {
    g.nodes()
        .filter(|(_, n)| n.ty == ty)
        .map(|(id, _)| id)
        .collect()
}

/// Adds up to `max` edges of random types between existing nodes. `label`
/// names the edge given its index, or leaves it unlabeled.
fn add_random_edges(
    r: &mut ChaCha8Rng,
    g: &mut TypedGraph,
    max: usize,
    label: impl Fn(usize) -> Option<String>,
) {
    let edge_types: Vec<(String, String, String)> = g
        .types()
        .edge_types()
        .map(|e| (e.name.clone(), e.source.clone(), e.target.clone()))
        .collect();
    if edge_types.is_empty() {
        return;
    }
    let mut made = 0;
    for _ in 0..r.random_range(0..=max) {
        let (ty, s, t) = edge_types.choose(r).unwrap();
        let (ss, ts) = (nodes_of(g, s), nodes_of(g, t));
        let (Some(&a), Some(&b)) = (ss.choose(r), ts.choose(r)) else {
            continue;
        };
        match label(made) {
            Some(l) => g.add_labeled_edge(l, ty, a, b).unwrap(),
            None => g.add_edge(ty, a, b).unwrap(),
        };
        made += 1;
    }
}

/// A random well-formed rule with at most `max` elements per side.
///
/// Interface nodes carry variables on the left and either the same variable
/// or a fresh literal on the right; deleted and created nodes carry literals
/// or variables bound on the left.
pub fn rule(r: &mut ChaCha8Rng, types: &Arc<TypeGraph>, name: &str, max: usize) -> Rule {
    let names: Vec<String> = types.node_types().map(|n| n.name.clone()).collect();
    let mut b = SpanBuilder::new(types.clone());
    if names.is_empty() {
        return b.build(name).unwrap();
    }
    let budget = max.min(6);
    let kept = r.random_range(0..=budget.min(3));
    let deleted = r.random_range(0..=(budget - kept).min(2));
    let created = r.random_range(0..=(budget - kept).min(2));
    let mut bound: Vec<(String, Sort)> = Vec::new();
    for i in 0..kept {
        let ty = names.choose(r).unwrap().clone();
        let label = format!("k{i}");
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (a, s) in sorts_of(types, &ty) {
            let v = format!("{label}_{a}");
            left.push((a.clone(), AttrTerm::var(&v)));
            bound.push((v.clone(), s));
            let rt = if r.random_bool(0.7) {
                AttrTerm::var(&v)
            } else {
                literal(r, s)
            };
            right.push((a, rt));
        }
        b.lhs.add_labeled_node(&label, &ty, left).unwrap();
        b.rhs.add_labeled_node(&label, &ty, right).unwrap();
    }
    for i in 0..deleted {
        let ty = names.choose(r).unwrap().clone();
        let label = format!("d{i}");
        let attrs: Vec<(String, AttrTerm)> = sorts_of(types, &ty)
            .into_iter()
            .map(|(a, s)| {
                if r.random_bool(0.5) {
                    (a, literal(r, s))
                } else {
                    let v = format!("{label}_{a}");
                    bound.push((v.clone(), s));
                    (a, AttrTerm::var(v))
                }
            })
            .collect();
        b.lhs.add_labeled_node(&label, &ty, attrs).unwrap();
    }
    for i in 0..created {
        let ty = names.choose(r).unwrap().clone();
        let attrs: Vec<(String, AttrTerm)> = sorts_of(types, &ty)
            .into_iter()
            .map(|(a, s)| {
                let same: Vec<&String> = bound
                    .iter()
                    .filter(|(_, bs)| *bs == s)
                    .map(|(v, _)| v)
                    .collect();
                match same.choose(r) {
                    Some(v) if r.random_bool(0.5) => (a, AttrTerm::var(v.as_str())),
                    _ => (a, literal(r, s)),
                }
            })
            .collect();
        b.rhs.add_labeled_node(format!("c{i}"), &ty, attrs).unwrap();
    }
    // preserved edges between interface nodes, then side-specific edges
    let edge_room = |g: &TypedGraph| budget.saturating_sub(g.node_count() + g.edge_count());
    let kept_edges = r.random_range(0..=edge_room(&b.lhs).min(edge_room(&b.rhs)).min(2));
    let interface: Vec<NodeId> = b.lhs.node_ids().take(kept).collect();
    let edge_types: Vec<(String, String, String)> = types
        .edge_types()
        .map(|e| (e.name.clone(), e.source.clone(), e.target.clone()))
        .collect();
    let mut made = 0;
    for _ in 0..kept_edges {
        let Some((ty, s, t)) = edge_types.choose(r) else {
            break;
        };
        let ss: Vec<NodeId> = interface
            .iter()
            .copied()
            .filter(|n| &b.lhs.node(*n).unwrap().ty == s)
            .collect();
        let ts: Vec<NodeId> = interface
            .iter()
            .copied()
            .filter(|n| &b.lhs.node(*n).unwrap().ty == t)
            .collect();
        let (Some(&a), Some(&c)) = (ss.choose(r), ts.choose(r)) else {
            continue;
        };
        let label = format!("ke{made}");
        let (la, lc) = (
            b.lhs.node(a).unwrap().label.clone().unwrap(),
            b.lhs.node(c).unwrap().label.clone().unwrap(),
        );
        b.lhs.add_labeled_edge(&label, ty, a, c).unwrap();
        let (ra, rc) = (
            b.rhs.find_node_by_label(&la).unwrap(),
            b.rhs.find_node_by_label(&lc).unwrap(),
        );
        b.rhs.add_labeled_edge(&label, ty, ra, rc).unwrap();
        made += 1;
    }
    let room = edge_room(&b.lhs).min(2);
    add_random_edges(r, &mut b.lhs, room, |i| Some(format!("de{i}")));
    let room = edge_room(&b.rhs).min(2);
    add_random_edges(r, &mut b.rhs, room, |i| Some(format!("ce{i}")));
    b.build(name).unwrap()
}

/// Hosts over the client-server types: a few clients, servers and data
/// nodes, plus messages that mostly carry their three edges.
pub fn message_host(r: &mut ChaCha8Rng, types: &Arc<TypeGraph>, max_nodes: usize) -> TypedGraph {
    const KINDS: [&str; 6] = ["GET", "GET_REQ", "GET_RESP", "SET", "SET_REQ", "SET_RESP"];
    let mut g = TypedGraph::new(types.clone());
    let total = r.random_range(3..=max_nodes.max(3));
    let clients: Vec<NodeId> = (0..r.random_range(1..=2))
        .map(|i| {
            g.add_node("Client", [("id".into(), AttrTerm::int(i))])
                .unwrap()
        })
        .collect();
    let servers: Vec<NodeId> = (0..1)
        .map(|i| {
            g.add_node("Server", [("id".into(), AttrTerm::int(i))])
                .unwrap()
        })
        .collect();
    let mut data = Vec::new();
    while g.node_count() < total && (data.is_empty() || (data.len() < 2 && r.random_bool(0.3))) {
        let name = ["x", "y"][data.len()];
        let d = g
            .add_node(
                "Data",
                [
                    ("name".into(), AttrTerm::str(name)),
                    ("value".into(), AttrTerm::int(r.random_range(0..2))),
                ],
            )
            .unwrap();
        if r.random_bool(0.8) {
            g.add_edge("stores", *servers.choose(r).unwrap(), d)
                .unwrap();
        }
        data.push(d);
    }
    while g.node_count() < total {
        let d = *data.choose(r).unwrap();
        let name = g.node(d).unwrap().attrs["name"].clone();
        let m = g
            .add_node(
                "Message",
                [
                    ("type".into(), AttrTerm::str(*KINDS.choose(r).unwrap())),
                    (
                        "name".into(),
                        if r.random_bool(0.9) {
                            name
                        } else {
                            AttrTerm::str("z")
                        },
                    ),
                    ("value".into(), AttrTerm::int(r.random_range(0..2))),
                ],
            )
            .unwrap();
        if r.random_bool(0.95) {
            g.add_edge("from", m, *clients.choose(r).unwrap()).unwrap();
        }
        if r.random_bool(0.95) {
            g.add_edge("to", m, *servers.choose(r).unwrap()).unwrap();
        }
        if r.random_bool(0.95) {
            g.add_edge("about", m, d).unwrap();
        }
        if r.random_bool(0.05) {
            g.add_edge("from", m, *clients.choose(r).unwrap()).unwrap();
        }
    }
    g
}

/// How a pair of applications failed to be parallel independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interference {
    /// The second match does not survive the first application.
    Disables,
    /// Both survive but one order is blocked later or the results differ.
    Diverges,
}

/// Applies both orders of every co-matched pair of valid applications on
/// `host` and reports `(first rule, second rule, how)` for each pair that
/// is not parallel independent. Identical applications are skipped.
pub fn interfering_pairs(
    rules: &[gragra_core::Rule],
    host: &TypedGraph,
) -> Vec<(usize, usize, Interference)> {
    use gragra_core::rewrite::{
        apply_rule, check_gluing, derive, find_matches, track_match, MatchPolicy,
    };
    use gragra_core::search::is_isomorphic;

    let valid: Vec<Vec<gragra_core::Match>> = rules
        .iter()
        .map(|r| {
            find_matches(r, host, MatchPolicy::Injective)
                .unwrap()
                .into_iter()
                .filter(|m| check_gluing(r, m, host).is_ok())
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for (i, r1) in rules.iter().enumerate() {
        for (j, r2) in rules.iter().enumerate() {
            for m1 in &valid[i] {
                let d1 = derive(r1, m1, host).unwrap();
                for m2 in &valid[j] {
                    if i == j && m1.morphism == m2.morphism {
                        continue;
                    }
                    let Some(t2) = track_match(r2, m2, &d1) else {
                        out.push((i, j, Interference::Disables));
                        continue;
                    };
                    // the reverse direction is reported when (j, i) is visited
                    let d2 = derive(r2, m2, host).unwrap();
                    let Some(t1) = track_match(r1, m1, &d2) else {
                        continue;
                    };
                    let second = |r: &gragra_core::Rule, m: &gragra_core::Match, g: &TypedGraph| {
                        check_gluing(r, m, g)
                            .ok()
                            .map(|_| apply_rule(r, m, g).unwrap())
                    };
                    match (second(r2, &t2, &d1.result), second(r1, &t1, &d2.result)) {
                        (Some(h12), Some(h21)) if is_isomorphic(&h12, &h21).is_some() => {}
                        _ => out.push((i, j, Interference::Diverges)),
                    }
                }
            }
        }
    }
    out
}

/// Tallies names by their shape in the encoded vocabulary.
pub fn tally<'a>(names: impl Iterator<Item = &'a str>) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for n in names {
        let parts: Vec<&str> = n.split(':').collect();
        let class = match parts.as_slice() {
            ["$rule"] => "identity",
            [s, _] if ["L", "K", "R"].contains(s) => "copy",
            [s, "edge", _] if ["L", "K", "R"].contains(s) => "edge-node",
            [s, "edge", _, "src" | "tgt"] if ["L", "K", "R"].contains(s) => "incidence",
            ["span-l" | "span-r", ..] => "span",
            ["rule", ..] => "identity-link",
            [_] => "base",
            _ => "unknown",
        };
        *out.entry(class).or_insert(0) += 1;
    }
    out
}

pub fn get(t: &BTreeMap<&str, usize>, k: &str) -> usize {
    t.get(k).copied().unwrap_or(0)
}

/// Checks that matches of each encoded advice into the encoded base are in
/// bijection with advice matches, and that applying one and decoding gives
/// the rule the advice itself produces. Returns the number of pairs checked.
pub fn advice_correspondence(d: &gragra_core::Aogg) -> Result<usize, String> {
    use gragra_core::aogg::{apply_advice, find_advice_matches};
    use gragra_core::encoding::{decode_rule, encode_aogg, encoded_advice_name};
    use gragra_core::rewrite::{check_gluing, derive, find_matches, MatchPolicy};
    use gragra_core::rule::rules_isomorphic;

    let types = d.woven_types().map_err(|e| e.to_string())?;
    let (encoded, trace) = encode_aogg(d).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for aspect in &d.aspects {
        for advice in &aspect.advices {
            let advice = advice.widened(types.clone()).map_err(|e| e.to_string())?;
            let mut expected: Vec<Rule> = Vec::new();
            for rule in &d.base.rules {
                let rule = rule.widened(types.clone()).map_err(|e| e.to_string())?;
                for m in find_advice_matches(&advice, &rule).map_err(|e| e.to_string())? {
                    expected.push(apply_advice(&advice, &m, &rule).map_err(|e| e.to_string())?);
                }
            }
            let name = encoded_advice_name(&aspect.name, &advice.name);
            let enc = encoded.rule(&name).ok_or(format!("{name} missing"))?;
            let matches: Vec<_> = find_matches(enc, &encoded.initial, MatchPolicy::Injective)
                .map_err(|e| e.to_string())?
                .into_iter()
                .filter(|m| check_gluing(enc, m, &encoded.initial).is_ok())
                .collect();
            if matches.len() != expected.len() {
                return Err(format!(
                    "{name}: {} encoded matches, {} advice matches",
                    matches.len(),
                    expected.len()
                ));
            }
            let identity = enc
                .lhs
                .nodes()
                .find(|(_, n)| n.ty == "$rule")
                .ok_or("no identity node")?
                .0;
            let mut remaining = expected;
            for m in &matches {
                let host_identity = m.morphism.nodes[&identity];
                let owner = d
                    .base
                    .rules
                    .iter()
                    .find(|r| trace.rule(&r.name).map(|e| e.identity) == Some(host_identity))
                    .ok_or("match outside any rule encoding")?;
                let step = derive(enc, m, &encoded.initial).map_err(|e| e.to_string())?;
                let back = decode_rule(
                    &step.result,
                    step.context_into_result.nodes[&host_identity],
                    types.clone(),
                    owner.name.clone(),
                )
                .map_err(|e| e.to_string())?;
                let pos = remaining
                    .iter()
                    .position(|r| rules_isomorphic(r, &back))
                    .ok_or(format!(
                        "{name} on {}: decoded rule has no counterpart",
                        owner.name
                    ))?;
                remaining.remove(pos);
                checked += 1;
            }
        }
    }
    Ok(checked)
}
