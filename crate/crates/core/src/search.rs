//! Backtracking search for graph homomorphisms and isomorphisms.
//!
//! Pattern nodes are visited in a connectivity-first order (ties broken by
//! ascending identifier) and host candidates in ascending identifier order,
//! so every enumeration is reproducible. Edges are assigned once all nodes
//! are placed, with an early feasibility check on edge multiplicities.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use crate::attr::AlphaMap;
use crate::error::GraphError;
use crate::graph::{ensure_same_types, EdgeId, GraphMorphism, NodeId, TypedGraph};

/// Extra constraints for [`for_each_homomorphism`].
#[derive(Default, Clone, Copy)]
pub struct SearchOptions<'a> {
    pub injective: bool,
    /// Pre-filter on candidate node pairs (pattern, host).
    pub node_ok: Option<&'a dyn Fn(NodeId, NodeId) -> bool>,
    /// Partial assignment every result must extend.
    pub fixed: Option<&'a GraphMorphism>,
}

impl<'a> SearchOptions<'a> {
    pub fn injective(injective: bool) -> Self {
        SearchOptions {
            injective,
            ..Default::default()
        }
    }
}

type EdgeKey<'g> = (NodeId, NodeId, &'g str);

struct Search<'g, 'o, F> {
    pattern: &'g TypedGraph,
    host: &'g TypedGraph,
    opts: SearchOptions<'o>,
    order: Vec<NodeId>,
    /// For each position in `order`, pattern edges that become checkable there.
    checks: Vec<Vec<EdgeKey<'g>>>,
    multiplicity: HashMap<EdgeKey<'g>, usize>,
    host_by_type: BTreeMap<&'g str, Vec<NodeId>>,
    host_edges: HashMap<EdgeKey<'g>, Vec<EdgeId>>,
    pattern_edges: Vec<EdgeId>,
    nodes: BTreeMap<NodeId, NodeId>,
    used_nodes: BTreeSet<NodeId>,
    edges: BTreeMap<EdgeId, EdgeId>,
    used_edges: BTreeSet<EdgeId>,
    visit: F,
}

impl<'g, 'o, F> Search<'g, 'o, F>
where
    F: FnMut(&GraphMorphism) -> ControlFlow<()>,
{
    fn new(
        pattern: &'g TypedGraph,
        host: &'g TypedGraph,
        opts: SearchOptions<'o>,
        visit: F,
    ) -> Self {
        let order = node_order(pattern, opts.fixed);
        let position: HashMap<NodeId, usize> =
            order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut checks: Vec<Vec<EdgeKey>> = vec![Vec::new(); order.len()];
        let mut multiplicity: HashMap<EdgeKey, usize> = HashMap::new();
        for (_, e) in pattern.edges() {
            let key = (e.source, e.target, e.ty.as_str());
            let count = multiplicity.entry(key).or_insert(0);
            *count += 1;
            if *count == 1 {
                let at = position[&e.source].max(position[&e.target]);
                checks[at].push(key);
            }
        }
        let mut host_by_type: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
        for (id, n) in host.nodes() {
            host_by_type.entry(n.ty.as_str()).or_default().push(id);
        }
        let mut host_edges: HashMap<EdgeKey, Vec<EdgeId>> = HashMap::new();
        for (id, e) in host.edges() {
            host_edges
                .entry((e.source, e.target, e.ty.as_str()))
                .or_default()
                .push(id);
        }
        Search {
            pattern,
            host,
            opts,
            order,
            checks,
            multiplicity,
            host_by_type,
            host_edges,
            pattern_edges: pattern.edge_ids().collect(),
            nodes: BTreeMap::new(),
            used_nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
            used_edges: BTreeSet::new(),
            visit,
        }
    }

    fn node_step(&mut self, depth: usize) -> ControlFlow<()> {
        if depth == self.order.len() {
            return self.edge_step(0);
        }
        let p = self.order[depth];
        let ty = self.pattern.node(p).unwrap().ty.as_str();
        let candidates: Vec<NodeId> = match self.opts.fixed.and_then(|f| f.node(p)) {
            Some(h) => match self.host.node(h) {
                Some(n) if n.ty == ty => vec![h],
                _ => Vec::new(),
            },
            None => self.host_by_type.get(ty).cloned().unwrap_or_default(),
        };
        for h in candidates {
            if self.opts.injective && self.used_nodes.contains(&h) {
                continue;
            }
            if let Some(ok) = self.opts.node_ok {
                if !ok(p, h) {
                    continue;
                }
            }
            self.nodes.insert(p, h);
            if self.edges_feasible(depth) {
                if self.opts.injective {
                    self.used_nodes.insert(h);
                }
                let flow = self.node_step(depth + 1);
                self.used_nodes.remove(&h);
                if flow.is_break() {
                    self.nodes.remove(&p);
                    return flow;
                }
            }
            self.nodes.remove(&p);
        }
        ControlFlow::Continue(())
    }

    fn edges_feasible(&self, depth: usize) -> bool {
        self.checks[depth].iter().all(|key| {
            let (s, t, ty) = *key;
            let hk = (self.nodes[&s], self.nodes[&t], ty);
            let available = self.host_edges.get(&hk).map_or(0, Vec::len);
            if self.opts.injective {
                available >= self.multiplicity[key]
            } else {
                available >= 1
            }
        })
    }

    fn edge_step(&mut self, i: usize) -> ControlFlow<()> {
        if i == self.pattern_edges.len() {
            let m = GraphMorphism {
                nodes: self.nodes.clone(),
                edges: self.edges.clone(),
            };
            return (self.visit)(&m);
        }
        let pe = self.pattern_edges[i];
        let e = self.pattern.edge(pe).unwrap();
        let key = (self.nodes[&e.source], self.nodes[&e.target], e.ty.as_str());
        let candidates = self.host_edges.get(&key).cloned().unwrap_or_default();
        let fixed = self.opts.fixed.and_then(|f| f.edge(pe));
        for h in candidates {
            if fixed.is_some_and(|f| f != h) {
                continue;
            }
            if self.opts.injective && self.used_edges.contains(&h) {
                continue;
            }
            self.edges.insert(pe, h);
            if self.opts.injective {
                self.used_edges.insert(h);
            }
            let flow = self.edge_step(i + 1);
            self.used_edges.remove(&h);
            self.edges.remove(&pe);
            flow?;
        }
        ControlFlow::Continue(())
    }
}

/// Connectivity-first ordering: fixed nodes first, then repeatedly the node
/// with the most edges into the already-ordered prefix.
fn node_order(pattern: &TypedGraph, fixed: Option<&GraphMorphism>) -> Vec<NodeId> {
    let all: Vec<NodeId> = pattern.node_ids().collect();
    let mut order: Vec<NodeId> = all
        .iter()
        .copied()
        .filter(|n| fixed.is_some_and(|f| f.node(*n).is_some()))
        .collect();
    let mut placed: BTreeSet<NodeId> = order.iter().copied().collect();
    let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (_, e) in pattern.edges() {
        adjacency.entry(e.source).or_default().push(e.target);
        adjacency.entry(e.target).or_default().push(e.source);
    }
    while order.len() < all.len() {
        let next = all
            .iter()
            .copied()
            .filter(|n| !placed.contains(n))
            .max_by_key(|n| {
                let links = adjacency
                    .get(n)
                    .map_or(0, |v| v.iter().filter(|m| placed.contains(m)).count());
                // prefer more links; on ties the smaller identifier
                (links, std::cmp::Reverse(*n))
            })
            .unwrap();
        placed.insert(next);
        order.push(next);
    }
    order
}

/// Visits every homomorphism `pattern → host` satisfying `opts`, in
/// deterministic order, until `visit` breaks.
pub fn for_each_homomorphism(
    pattern: &TypedGraph,
    host: &TypedGraph,
    opts: SearchOptions<'_>,
    visit: impl FnMut(&GraphMorphism) -> ControlFlow<()>,
) -> Result<(), GraphError> {
    ensure_same_types(pattern, host)?;
    let mut search = Search::new(pattern, host, opts, visit);
    let _ = search.node_step(0);
    Ok(())
}

pub fn find_homomorphisms_with(
    pattern: &TypedGraph,
    host: &TypedGraph,
    opts: SearchOptions<'_>,
) -> Result<Vec<GraphMorphism>, GraphError> {
    let mut out = Vec::new();
    for_each_homomorphism(pattern, host, opts, |m| {
        out.push(m.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Every type- and structure-preserving morphism `pattern → host`.
/// Attribute valuations are ignored at this level.
pub fn find_homomorphisms(
    pattern: &TypedGraph,
    host: &TypedGraph,
    injective_only: bool,
) -> Result<Vec<GraphMorphism>, GraphError> {
    find_homomorphisms_with(pattern, host, SearchOptions::injective(injective_only))
}

fn same_shape(a: &TypedGraph, b: &TypedGraph) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let profile = |g: &TypedGraph| {
        let mut v: Vec<(String, usize, usize)> = g
            .nodes()
            .map(|(id, n)| {
                let out = g.edges().filter(|(_, e)| e.source == id).count();
                let inc = g.edges().filter(|(_, e)| e.target == id).count();
                (n.ty.clone(), out, inc)
            })
            .collect();
        v.sort();
        v
    };
    profile(a) == profile(b)
}

/// Bijective type-, structure- and attribute-preserving morphism, if any.
pub fn is_isomorphic(a: &TypedGraph, b: &TypedGraph) -> Option<GraphMorphism> {
    if !crate::graph::same_types(a, b) || !same_shape(a, b) {
        return None;
    }
    let node_ok = |p: NodeId, h: NodeId| a.node(p).unwrap().attrs == b.node(h).unwrap().attrs;
    let opts = SearchOptions {
        injective: true,
        node_ok: Some(&node_ok),
        fixed: None,
    };
    first_match(a, b, opts, |_| true)
}

/// Isomorphism up to a consistent bijective renaming of attribute variables.
pub fn is_isomorphic_modulo_vars(a: &TypedGraph, b: &TypedGraph) -> Option<GraphMorphism> {
    isomorphisms_modulo_vars(a, b, None, AlphaMap::default()).map(|(m, _)| m)
}

/// Searches for an isomorphism extending `fixed` whose attribute terms agree
/// under an extension of `alpha`. Returns the morphism and the final renaming.
pub fn isomorphisms_modulo_vars(
    a: &TypedGraph,
    b: &TypedGraph,
    fixed: Option<&GraphMorphism>,
    alpha: AlphaMap,
) -> Option<(GraphMorphism, AlphaMap)> {
    if !crate::graph::same_types(a, b) || !same_shape(a, b) {
        return None;
    }
    let node_ok = |p: NodeId, h: NodeId| {
        let (pa, hb) = (&a.node(p).unwrap().attrs, &b.node(h).unwrap().attrs);
        pa.iter().all(|(k, t)| {
            let u = &hb[k];
            t.may_match(u) && u.may_match(t)
        })
    };
    let opts = SearchOptions {
        injective: true,
        node_ok: Some(&node_ok),
        fixed,
    };
    let mut found = None;
    let _ = for_each_homomorphism(a, b, opts, |m| {
        let mut trial = alpha.clone();
        let ok = m.nodes.iter().all(|(p, h)| {
            let (pa, hb) = (&a.node(*p).unwrap().attrs, &b.node(*h).unwrap().attrs);
            pa.iter().all(|(k, t)| trial.unify(t, &hb[k]))
        });
        if ok {
            found = Some((m.clone(), trial));
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    found
}

fn first_match(
    a: &TypedGraph,
    b: &TypedGraph,
    opts: SearchOptions<'_>,
    accept: impl Fn(&GraphMorphism) -> bool,
) -> Option<GraphMorphism> {
    let mut found = None;
    let _ = for_each_homomorphism(a, b, opts, |m| {
        if accept(m) {
            found = Some(m.clone());
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    found
}
