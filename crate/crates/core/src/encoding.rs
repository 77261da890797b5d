//! Encoding of rules, grammars and aspect-oriented grammars as single typed
//! graphs, so that weaving becomes first-order rewriting.
//!
//! Naming scheme over a base type graph `T`:
//!
//! | encoded type            | kind | meaning                                  |
//! |-------------------------|------|------------------------------------------|
//! | `S:N`                   | node | copy of node type `N` in slot `S`         |
//! | `S:edge:E`              | node | edge type `E` as a node, slot `S`         |
//! | `S:edge:E:src` / `:tgt` | edge | from `S:edge:E` to its endpoint copies    |
//! | `span-l:X` / `span-r:X` | edge | from the `K` copy to the `L` / `R` copy   |
//! | `$rule`                 | node | rule identity                            |
//! | `rule:S:X`              | edge | from every `S:X` node to `$rule`          |
//!
//! `S` ranges over `L`, `K`, `R` and `X` over `N` and `edge:E`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::aogg::{Advice, Aogg, AoggError, Component, RuleMorphism};
use crate::error::GraphError;
use crate::graph::{EdgeId, Elem, GraphMorphism, NodeId, TypeGraph, TypedGraph};
use crate::rule::{validate_rule, Grammar, GrammarError, Rule, RuleViolation};

/// Whether edge-encoding nodes are linked to the rule-identity node.
pub const IDENTITY_LINKS_EDGE_NODES: bool = true;

pub const IDENTITY_TYPE: &str = "$rule";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("type name `{0}` uses a character reserved by the encoding")]
    ReservedName(String),
    #[error("malformed encoding at {element}: {detail}")]
    MalformedEncoding { element: String, detail: String },
    #[error("encoded advice `{advice}` is ill-formed: {violations:?}")]
    IllFormedResult {
        advice: String,
        violations: Vec<RuleViolation>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Aogg(#[from] AoggError),
}

fn malformed(element: impl Into<String>, detail: impl Into<String>) -> EncodingError {
    EncodingError::MalformedEncoding {
        element: element.into(),
        detail: detail.into(),
    }
}

pub fn node_copy(slot: Component, node_type: &str) -> String {
    format!("{slot}:{node_type}")
}

pub fn edge_node(slot: Component, edge_type: &str) -> String {
    format!("{slot}:edge:{edge_type}")
}

pub fn source_edge(slot: Component, edge_type: &str) -> String {
    format!("{slot}:edge:{edge_type}:src")
}

pub fn target_edge(slot: Component, edge_type: &str) -> String {
    format!("{slot}:edge:{edge_type}:tgt")
}

fn key(elem_type: ElemType<'_>) -> String {
    match elem_type {
        ElemType::Node(n) => n.to_string(),
        ElemType::Edge(e) => format!("edge:{e}"),
    }
}

#[derive(Clone, Copy)]
enum ElemType<'a> {
    Node(&'a str),
    Edge(&'a str),
}

fn span_type(side: Component, x: ElemType<'_>) -> String {
    let prefix = if side == Component::L {
        "span-l"
    } else {
        "span-r"
    };
    format!("{prefix}:{}", key(x))
}

fn identity_edge_type(slot: Component, x: ElemType<'_>) -> String {
    format!("rule:{slot}:{}", key(x))
}

fn check_name(name: &str) -> Result<(), EncodingError> {
    if name.contains(':') || name.contains('$') {
        Err(EncodingError::ReservedName(name.to_string()))
    } else {
        Ok(())
    }
}

/// `T + R(T)` together with `T` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTypeGraph {
    pub base: Arc<TypeGraph>,
    pub combined: Arc<TypeGraph>,
}

impl EncodedTypeGraph {
    /// Number of node and edge types of the `R(T)` component alone.
    pub fn encoding_counts(&self) -> (usize, usize) {
        (
            self.combined.node_type_count() - self.base.node_type_count(),
            self.combined.edge_type_count() - self.base.edge_type_count(),
        )
    }
}

pub fn encode_type_graph(base: &Arc<TypeGraph>) -> Result<EncodedTypeGraph, EncodingError> {
    for n in base.node_types() {
        check_name(&n.name)?;
    }
    for e in base.edge_types() {
        check_name(&e.name)?;
    }
    let mut t = base.as_ref().clone();
    for slot in Component::ALL {
        for n in base.node_types() {
            t.add_node_type(
                node_copy(slot, &n.name),
                n.attrs.iter().map(|a| (a.name.clone(), a.sort)),
            )?;
        }
        for e in base.edge_types() {
            t.add_node_type(edge_node(slot, &e.name), [])?;
        }
        for e in base.edge_types() {
            let en = edge_node(slot, &e.name);
            t.add_edge_type(source_edge(slot, &e.name), &en, node_copy(slot, &e.source))?;
            t.add_edge_type(target_edge(slot, &e.name), &en, node_copy(slot, &e.target))?;
        }
    }
    let elem_types: Vec<ElemType<'_>> = base
        .node_types()
        .map(|n| ElemType::Node(&n.name))
        .chain(base.edge_types().map(|e| ElemType::Edge(&e.name)))
        .collect();
    let copy = |slot: Component, x: ElemType<'_>| match x {
        ElemType::Node(n) => node_copy(slot, n),
        ElemType::Edge(e) => edge_node(slot, e),
    };
    for &x in &elem_types {
        for side in [Component::L, Component::R] {
            t.add_edge_type(span_type(side, x), copy(Component::K, x), copy(side, x))?;
        }
    }
    t.add_node_type(IDENTITY_TYPE, [])?;
    for slot in Component::ALL {
        for &x in &elem_types {
            if matches!(x, ElemType::Edge(_)) && !IDENTITY_LINKS_EDGE_NODES {
                continue;
            }
            t.add_edge_type(identity_edge_type(slot, x), copy(slot, x), IDENTITY_TYPE)?;
        }
    }
    Ok(EncodedTypeGraph {
        base: base.clone(),
        combined: Arc::new(t),
    })
}

/// Role of a node inside one rule encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EncNode {
    Node(Component, NodeId),
    EdgeNode(Component, EdgeId),
    Identity,
}

/// Role of an edge inside one rule encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EncEdge {
    Source(Component, EdgeId),
    Target(Component, EdgeId),
    /// From the `K` copy of an interface element to the copy of its image.
    SpanL(Elem),
    SpanR(Elem),
    ToIdentity(EncNode),
}

/// One rule encoded inside some host graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleEncoding {
    pub identity: NodeId,
    pub nodes: BTreeMap<EncNode, NodeId>,
    pub edges: BTreeMap<EncEdge, EdgeId>,
}

impl RuleEncoding {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

fn append_rule(host: &mut TypedGraph, rule: &Rule) -> Result<RuleEncoding, EncodingError> {
    let mut enc = RuleEncoding {
        identity: NodeId(0),
        nodes: BTreeMap::new(),
        edges: BTreeMap::new(),
    };
    for slot in Component::ALL {
        let g = slot.of(rule);
        for (id, n) in g.nodes() {
            let new = host.add_node(&node_copy(slot, &n.ty), n.attrs.clone())?;
            enc.nodes.insert(EncNode::Node(slot, id), new);
        }
        for (id, e) in g.edges() {
            let new = host.add_node(&edge_node(slot, &e.ty), [])?;
            enc.nodes.insert(EncNode::EdgeNode(slot, id), new);
            let s = enc.nodes[&EncNode::Node(slot, e.source)];
            let t = enc.nodes[&EncNode::Node(slot, e.target)];
            let se = host.add_edge(&source_edge(slot, &e.ty), new, s)?;
            let te = host.add_edge(&target_edge(slot, &e.ty), new, t)?;
            enc.edges.insert(EncEdge::Source(slot, id), se);
            enc.edges.insert(EncEdge::Target(slot, id), te);
        }
    }
    for (side, leg) in [(Component::L, &rule.left), (Component::R, &rule.right)] {
        let target_graph = side.of(rule);
        for (k, n) in rule.interface.nodes() {
            let img = leg
                .node(k)
                .ok_or_else(|| malformed(format!("K node {}", k.0), "span is not total"))?;
            let ty = span_type(side, ElemType::Node(&n.ty));
            let id = host.add_edge(
                &ty,
                enc.nodes[&EncNode::Node(Component::K, k)],
                enc.nodes[&EncNode::Node(side, img)],
            )?;
            let role = if side == Component::L {
                EncEdge::SpanL(Elem::Node(k))
            } else {
                EncEdge::SpanR(Elem::Node(k))
            };
            enc.edges.insert(role, id);
        }
        for (k, e) in rule.interface.edges() {
            let img = leg
                .edge(k)
                .ok_or_else(|| malformed(format!("K edge {}", k.0), "span is not total"))?;
            debug_assert!(target_graph.edge(img).is_some());
            let ty = span_type(side, ElemType::Edge(&e.ty));
            let id = host.add_edge(
                &ty,
                enc.nodes[&EncNode::EdgeNode(Component::K, k)],
                enc.nodes[&EncNode::EdgeNode(side, img)],
            )?;
            let role = if side == Component::L {
                EncEdge::SpanL(Elem::Edge(k))
            } else {
                EncEdge::SpanR(Elem::Edge(k))
            };
            enc.edges.insert(role, id);
        }
    }
    let identity = host.add_node(IDENTITY_TYPE, [])?;
    let members: Vec<(EncNode, NodeId)> = enc.nodes.iter().map(|(r, id)| (*r, *id)).collect();
    for (role, id) in members {
        let ty = match role {
            EncNode::Node(slot, n) => {
                identity_edge_type(slot, ElemType::Node(&slot.of(rule).node(n).unwrap().ty))
            }
            EncNode::EdgeNode(slot, e) => {
                if !IDENTITY_LINKS_EDGE_NODES {
                    continue;
                }
                identity_edge_type(slot, ElemType::Edge(&slot.of(rule).edge(e).unwrap().ty))
            }
            EncNode::Identity => unreachable!(),
        };
        let edge = host.add_edge(&ty, id, identity)?;
        enc.edges.insert(EncEdge::ToIdentity(role), edge);
    }
    enc.nodes.insert(EncNode::Identity, identity);
    enc.identity = identity;
    Ok(enc)
}

fn ensure_base(rule: &Rule, e: &EncodedTypeGraph) -> Result<(), EncodingError> {
    if rule.types().as_ref() != e.base.as_ref() {
        return Err(GraphError::TypeGraphMismatch.into());
    }
    Ok(())
}

/// Encodes one rule into a fresh graph typed over `e.combined`.
pub fn encode_rule(
    rule: &Rule,
    e: &EncodedTypeGraph,
) -> Result<(TypedGraph, RuleEncoding), EncodingError> {
    ensure_base(rule, e)?;
    let mut g = TypedGraph::new(e.combined.clone());
    let enc = append_rule(&mut g, rule)?;
    Ok((g, enc))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NodeOrigin {
    Initial(NodeId),
    Rule { rule: String, role: EncNode },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum EdgeOrigin {
    Initial(EdgeId),
    Rule { rule: String, role: EncEdge },
}

/// Provenance of every element of an encoded graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodingTrace {
    pub nodes: BTreeMap<NodeId, NodeOrigin>,
    pub edges: BTreeMap<EdgeId, EdgeOrigin>,
    /// Rule name to its encoding, in rule order.
    pub rules: Vec<(String, RuleEncoding)>,
}

impl EncodingTrace {
    fn record(&mut self, name: &str, enc: RuleEncoding) {
        for (role, id) in &enc.nodes {
            self.nodes.insert(
                *id,
                NodeOrigin::Rule {
                    rule: name.to_string(),
                    role: *role,
                },
            );
        }
        for (role, id) in &enc.edges {
            self.edges.insert(
                *id,
                EdgeOrigin::Rule {
                    rule: name.to_string(),
                    role: *role,
                },
            );
        }
        self.rules.push((name.to_string(), enc));
    }

    pub fn rule(&self, name: &str) -> Option<&RuleEncoding> {
        self.rules.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    /// Human-readable origin of an encoded node.
    pub fn describe_node(&self, id: NodeId) -> String {
        match self.nodes.get(&id) {
            None => format!("n{}", id.0),
            Some(NodeOrigin::Initial(n)) => format!("G0.n{}", n.0),
            Some(NodeOrigin::Rule { rule, role }) => match role {
                EncNode::Node(s, n) => format!("{rule}.{s}.n{}", n.0),
                EncNode::EdgeNode(s, e) => format!("{rule}.{s}.e{}", e.0),
                EncNode::Identity => format!("{rule}.$"),
            },
        }
    }
}

/// Disjoint union of the encodings of all rules, in rule order.
pub fn encode_rule_set(
    rules: &[Rule],
    e: &EncodedTypeGraph,
) -> Result<(TypedGraph, EncodingTrace), EncodingError> {
    let mut g = TypedGraph::new(e.combined.clone());
    let mut trace = EncodingTrace::default();
    for r in rules {
        ensure_base(r, e)?;
        let enc = append_rule(&mut g, r)?;
        trace.record(&r.name, enc);
    }
    Ok((g, trace))
}

/// `G₀ + Υ(G)`: the initial graph followed by the encoded rule set.
pub fn encode_grammar(
    g: &Grammar,
) -> Result<(TypedGraph, EncodingTrace, EncodedTypeGraph), EncodingError> {
    let e = encode_type_graph(&g.types)?;
    let mut host = TypedGraph::new(e.combined.clone());
    let mut trace = EncodingTrace::default();
    let mut node_map = BTreeMap::new();
    for (id, n) in g.initial.nodes() {
        let new = host.add_node(&n.ty, n.attrs.clone())?;
        host.set_node_label(new, n.label.clone());
        node_map.insert(id, new);
        trace.nodes.insert(new, NodeOrigin::Initial(id));
    }
    for (id, ed) in g.initial.edges() {
        let new = host.add_edge(&ed.ty, node_map[&ed.source], node_map[&ed.target])?;
        host.set_edge_label(new, ed.label.clone());
        trace.edges.insert(new, EdgeOrigin::Initial(id));
    }
    for r in &g.rules {
        let enc = append_rule(&mut host, r)?;
        trace.record(&r.name, enc);
    }
    Ok((host, trace, e))
}

fn encode_rule_morphism(
    m: &RuleMorphism,
    src: &RuleEncoding,
    tgt: &RuleEncoding,
) -> Result<GraphMorphism, EncodingError> {
    let missing = |what: String| malformed(what, "rule morphism is not total");
    let map_node = |role: EncNode| -> Result<EncNode, EncodingError> {
        Ok(match role {
            EncNode::Node(s, n) => EncNode::Node(
                s,
                m.component(s)
                    .node(n)
                    .ok_or_else(|| missing(format!("{s} node {}", n.0)))?,
            ),
            EncNode::EdgeNode(s, e) => EncNode::EdgeNode(
                s,
                m.component(s)
                    .edge(e)
                    .ok_or_else(|| missing(format!("{s} edge {}", e.0)))?,
            ),
            EncNode::Identity => EncNode::Identity,
        })
    };
    let map_k = |x: Elem| -> Result<Elem, EncodingError> {
        m.interface
            .elem(x)
            .ok_or_else(|| missing(format!("K {x:?}")))
    };
    let mut out = GraphMorphism::empty();
    for (role, id) in &src.nodes {
        out.nodes.insert(*id, tgt.nodes[&map_node(*role)?]);
    }
    for (role, id) in &src.edges {
        let image = match *role {
            EncEdge::Source(s, e) => match map_node(EncNode::EdgeNode(s, e))? {
                EncNode::EdgeNode(s, e) => EncEdge::Source(s, e),
                _ => unreachable!(),
            },
            EncEdge::Target(s, e) => match map_node(EncNode::EdgeNode(s, e))? {
                EncNode::EdgeNode(s, e) => EncEdge::Target(s, e),
                _ => unreachable!(),
            },
            EncEdge::SpanL(x) => EncEdge::SpanL(map_k(x)?),
            EncEdge::SpanR(x) => EncEdge::SpanR(map_k(x)?),
            EncEdge::ToIdentity(n) => EncEdge::ToIdentity(map_node(n)?),
        };
        out.edges.insert(*id, tgt.edges[&image]);
    }
    Ok(out)
}

/// The span `S(pointcut) ← S(interface) → S(effect)` as a first-order rule
/// over `e.combined`. Encoded advices are symbolic.
pub fn encode_advice(advice: &Advice, e: &EncodedTypeGraph) -> Result<Rule, EncodingError> {
    let (lhs, enc_p) = encode_rule(&advice.pointcut, e)?;
    let (interface, enc_i) = encode_rule(&advice.interface, e)?;
    let (rhs, enc_e) = encode_rule(&advice.effect, e)?;
    let left = encode_rule_morphism(&advice.to_pointcut, &enc_i, &enc_p)?;
    let right = encode_rule_morphism(&advice.to_effect, &enc_i, &enc_e)?;
    let mut rule = Rule::new(advice.name.clone(), lhs, interface, rhs, left, right);
    rule.symbolic = true;
    validate_rule(&rule).map_err(|violations| EncodingError::IllFormedResult {
        advice: advice.name.clone(),
        violations,
    })?;
    Ok(rule)
}

/// Name of the encoded rule for an advice of an aspect.
pub fn encoded_advice_name(aspect: &str, advice: &str) -> String {
    format!("{aspect}/{advice}")
}

/// Extended type and initial graph with the original base rules, encoded,
/// and every advice of every aspect as a first-order rule over it.
pub fn encode_aogg(d: &Aogg) -> Result<(Grammar, EncodingTrace), EncodingError> {
    let types = d.woven_types()?;
    let mut initial = d.base.initial.widened(types.clone())?;
    for a in &d.aspects {
        initial = a.init_extension.apply(&initial, types.clone())?.0;
    }
    let rules = d
        .base
        .rules
        .iter()
        .map(|r| r.widened(types.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let extended = Grammar::new(types.clone(), initial, rules)?;
    let (host, trace, e) = encode_grammar(&extended)?;
    let mut advices = Vec::new();
    for a in &d.aspects {
        for adv in &a.advices {
            let mut r = encode_advice(&adv.widened(types.clone())?, &e)?;
            r.name = encoded_advice_name(&a.name, &adv.name);
            r.base_name = r.name.clone();
            advices.push(r);
        }
    }
    Ok((Grammar::new(e.combined.clone(), host, advices)?, trace))
}

fn parse_slot(s: &str) -> Option<Component> {
    match s {
        "L" => Some(Component::L),
        "K" => Some(Component::K),
        "R" => Some(Component::R),
        _ => None,
    }
}

enum Decoded {
    Node(Component, String),
    EdgeNode(Component, String),
}

fn classify(ty: &str) -> Option<Decoded> {
    let (slot, rest) = ty.split_once(':')?;
    let slot = parse_slot(slot)?;
    match rest.strip_prefix("edge:") {
        Some(e) if !e.contains(':') => Some(Decoded::EdgeNode(slot, e.to_string())),
        Some(_) => None,
        None if !rest.contains(':') => Some(Decoded::Node(slot, rest.to_string())),
        None => None,
    }
}

/// Reconstructs the rule whose encoding hangs off `identity` in `enc`.
pub fn decode_rule(
    enc: &TypedGraph,
    identity: NodeId,
    base: Arc<TypeGraph>,
    name: impl Into<String>,
) -> Result<Rule, EncodingError> {
    let at = |id: NodeId| format!("node {}", id.0);
    match enc.node(identity) {
        Some(n) if n.ty == IDENTITY_TYPE => {}
        _ => return Err(malformed(at(identity), "not a rule-identity node")),
    }
    let mut members: Vec<NodeId> = enc
        .incident_edges(identity)
        .filter_map(|e| enc.edge(e))
        .filter(|e| e.target == identity && e.ty.starts_with("rule:"))
        .map(|e| e.source)
        .collect();
    if !IDENTITY_LINKS_EDGE_NODES {
        let attached: Vec<NodeId> = enc
            .edges()
            .filter(|(_, e)| e.ty.ends_with(":src") && members.contains(&e.target))
            .map(|(_, e)| e.source)
            .collect();
        members.extend(attached);
    }
    members.sort();
    members.dedup();

    let mut graphs = [
        TypedGraph::new(base.clone()),
        TypedGraph::new(base.clone()),
        TypedGraph::new(base.clone()),
    ];
    let idx = |s: Component| s as usize;
    let mut node_of: BTreeMap<NodeId, (Component, NodeId)> = BTreeMap::new();
    let mut edge_nodes = Vec::new();
    for &id in &members {
        let n = enc.node(id).unwrap();
        match classify(&n.ty) {
            Some(Decoded::Node(slot, ty)) => {
                let new = graphs[idx(slot)].add_node(&ty, n.attrs.clone())?;
                node_of.insert(id, (slot, new));
            }
            Some(Decoded::EdgeNode(slot, ty)) => edge_nodes.push((id, slot, ty)),
            None => return Err(malformed(at(id), format!("unexpected type `{}`", n.ty))),
        }
    }
    let mut edge_of: BTreeMap<NodeId, (Component, EdgeId)> = BTreeMap::new();
    for (id, slot, ty) in edge_nodes {
        let end = |suffix: &str| -> Result<NodeId, EncodingError> {
            let wanted = format!("{}:{suffix}", edge_node(slot, &ty));
            let mut found = enc
                .incident_edges(id)
                .filter_map(|e| enc.edge(e))
                .filter(|e| e.source == id && e.ty == wanted);
            let first = found
                .next()
                .ok_or_else(|| malformed(at(id), format!("missing {suffix} edge")))?;
            if found.next().is_some() {
                return Err(malformed(at(id), format!("several {suffix} edges")));
            }
            match node_of.get(&first.target) {
                Some((s, n)) if *s == slot => Ok(*n),
                _ => Err(malformed(
                    at(id),
                    format!("{suffix} edge leaves the rule's {slot} copy"),
                )),
            }
        };
        let (s, t) = (end("src")?, end("tgt")?);
        let new = graphs[idx(slot)].add_edge(&ty, s, t)?;
        edge_of.insert(id, (slot, new));
    }
    let mut legs = [GraphMorphism::empty(), GraphMorphism::empty()];
    for (&id, &(slot, k)) in node_of.iter().filter(|(_, (s, _))| *s == Component::K) {
        for (i, side) in [(0, Component::L), (1, Component::R)] {
            let img = span_image(enc, id, side, &node_of)?;
            legs[i].nodes.insert(k, img);
        }
        debug_assert_eq!(slot, Component::K);
    }
    for (&id, &(_, k)) in edge_of.iter().filter(|(_, (s, _))| *s == Component::K) {
        for (i, side) in [(0, Component::L), (1, Component::R)] {
            let img = span_image(enc, id, side, &edge_of)?;
            legs[i].edges.insert(k, img);
        }
    }
    let [lhs, interface, rhs] = graphs;
    let [left, right] = legs;
    let rule = Rule::new(name, lhs, interface, rhs, left, right);
    validate_rule(&rule).map_err(|v| malformed("rule", format!("{v:?}")))?;
    Ok(rule)
}

fn span_image<T: Copy>(
    enc: &TypedGraph,
    from: NodeId,
    side: Component,
    decoded: &BTreeMap<NodeId, (Component, T)>,
) -> Result<T, EncodingError> {
    let prefix = if side == Component::L {
        "span-l:"
    } else {
        "span-r:"
    };
    let mut found = enc
        .incident_edges(from)
        .filter_map(|e| enc.edge(e))
        .filter(|e| e.source == from && e.ty.starts_with(prefix));
    let at = format!("node {}", from.0);
    let edge = found
        .next()
        .ok_or_else(|| malformed(&at, format!("interface element lacks its {prefix} edge")))?;
    if found.next().is_some() {
        return Err(malformed(&at, format!("several {prefix} edges")));
    }
    match decoded.get(&edge.target) {
        Some((s, x)) if *s == side => Ok(*x),
        _ => Err(malformed(
            &at,
            format!("{prefix} edge does not reach the {side} copy"),
        )),
    }
}

/// Expected sizes of `S(r)`: `(nodes, edges)`.
pub fn rule_encoding_size(rule: &Rule) -> (usize, usize) {
    let (a, b) = (rule.lhs.node_count(), rule.lhs.edge_count());
    let (c, d) = (rule.interface.node_count(), rule.interface.edge_count());
    let (e, f) = (rule.rhs.node_count(), rule.rhs.edge_count());
    let linked = if IDENTITY_LINKS_EDGE_NODES {
        a + b + c + d + e + f
    } else {
        a + c + e
    };
    (
        a + b + c + d + e + f + 1,
        2 * (b + d + f) + 2 * (c + d) + linked,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attr::{AttrTerm, Sort};
    use crate::rule::{rules_isomorphic, SpanBuilder};

    fn loop_types() -> Arc<TypeGraph> {
        let mut t = TypeGraph::new();
        t.add_node_type("N", [("x".to_string(), Sort::Int)])
            .unwrap();
        t.add_edge_type("E", "N", "N").unwrap();
        Arc::new(t)
    }

    #[test]
    fn empty_type_graph() {
        let e = encode_type_graph(&Arc::new(TypeGraph::new())).unwrap();
        assert_eq!(e.encoding_counts(), (1, 0));
    }

    #[test]
    fn one_node_one_loop() {
        let e = encode_type_graph(&loop_types()).unwrap();
        // 3 node copies, 3 edge nodes, $rule
        // 6 src/tgt, 4 span, 6 identity
        assert_eq!(e.encoding_counts(), (7, 16));
        let en = e.combined.edge_type("L:edge:E:src").unwrap();
        assert_eq!(
            (en.source.as_str(), en.target.as_str()),
            ("L:edge:E", "L:N")
        );
        let sp = e.combined.edge_type("span-r:edge:E").unwrap();
        assert_eq!(
            (sp.source.as_str(), sp.target.as_str()),
            ("K:edge:E", "R:edge:E")
        );
    }

    #[test]
    fn reserved_names() {
        let mut t = TypeGraph::new();
        t.add_node_type("a:b", []).unwrap();
        assert_eq!(
            encode_type_graph(&Arc::new(t)),
            Err(EncodingError::ReservedName("a:b".into()))
        );
    }

    #[test]
    fn identity_rule_on_one_node() {
        let t = loop_types();
        let mut g = TypedGraph::new(t.clone());
        g.add_node("N", [("x".into(), AttrTerm::var("x"))]).unwrap();
        let r = Rule::identity("id", &g);
        let e = encode_type_graph(&t).unwrap();
        let (enc, info) = encode_rule(&r, &e).unwrap();
        assert_eq!(enc.node_count(), 4);
        let spans = enc
            .edges()
            .filter(|(_, e)| e.ty.starts_with("span"))
            .count();
        let ids = enc
            .edges()
            .filter(|(_, e)| e.ty.starts_with("rule:"))
            .count();
        assert_eq!((spans, ids), (2, 3));
        let back = decode_rule(&enc, info.identity, t, "id").unwrap();
        assert!(rules_isomorphic(&back, &r));
    }

    #[test]
    fn round_trip_with_edges() {
        let t = loop_types();
        let mut b = SpanBuilder::new(t.clone());
        let a = b
            .lhs
            .add_labeled_node("a", "N", [("x".into(), AttrTerm::var("v"))])
            .unwrap();
        let c = b
            .lhs
            .add_labeled_node("c", "N", [("x".into(), AttrTerm::int(1))])
            .unwrap();
        b.lhs.add_labeled_edge("e", "E", a, c).unwrap();
        b.lhs.add_labeled_edge("f", "E", c, c).unwrap();
        let a2 = b
            .rhs
            .add_labeled_node("a", "N", [("x".into(), AttrTerm::var("v"))])
            .unwrap();
        let c2 = b
            .rhs
            .add_labeled_node("c", "N", [("x".into(), AttrTerm::int(2))])
            .unwrap();
        b.rhs.add_labeled_edge("e", "E", a2, c2).unwrap();
        b.rhs.add_labeled_edge("g", "E", c2, a2).unwrap();
        let r = b.build("r").unwrap();
        let e = encode_type_graph(&t).unwrap();
        let (enc, info) = encode_rule(&r, &e).unwrap();
        assert_eq!((enc.node_count(), enc.edge_count()), rule_encoding_size(&r));
        let back = decode_rule(&enc, info.identity, t, "r").unwrap();
        assert!(rules_isomorphic(&back, &r));
    }

    #[test]
    fn missing_span_edge_is_malformed() {
        let t = loop_types();
        let mut g = TypedGraph::new(t.clone());
        g.add_node("N", [("x".into(), AttrTerm::var("x"))]).unwrap();
        let r = Rule::identity("id", &g);
        let e = encode_type_graph(&t).unwrap();
        let (mut enc, info) = encode_rule(&r, &e).unwrap();
        let span = info.edges[&EncEdge::SpanL(Elem::Node(NodeId(0)))];
        enc.remove_edge(span).unwrap();
        let err = decode_rule(&enc, info.identity, t, "id").unwrap_err();
        assert!(
            matches!(err, EncodingError::MalformedEncoding { .. }),
            "{err}"
        );
    }
}
