//! Pushouts, pushout complements and disjoint unions of typed graphs.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{GluingViolation, GraphError};
use crate::graph::{ensure_same_types, EdgeId, Elem, GraphMorphism, NodeId, TypedGraph};

/// Result of gluing `D` and `R` along `K`.
#[derive(Debug, Clone)]
pub struct Pushout {
    pub graph: TypedGraph,
    /// `R → H`
    pub from_right: GraphMorphism,
    /// `D → H`
    pub from_left: GraphMorphism,
}

/// Result of removing the matched deleted part of a rule from a host graph.
#[derive(Debug, Clone)]
pub struct PushoutComplement {
    pub graph: TypedGraph,
    /// `K → D`
    pub from_interface: GraphMorphism,
    /// `D → G`, an inclusion (identifiers are kept).
    pub into_host: GraphMorphism,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so that D-side elements stay representatives
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Pushout of `f: K → D` and `g: K → R`.
///
/// `H` is the disjoint union of `D` and `R` quotiented by `f(k) ~ g(k)`.
/// Elements of `D` keep their identifiers; elements only reachable from `R`
/// receive fresh identifiers. Glued nodes take their attributes from `D`.
pub fn pushout(
    f: &GraphMorphism,
    d: &TypedGraph,
    g: &GraphMorphism,
    r: &TypedGraph,
) -> Result<Pushout, GraphError> {
    ensure_same_types(d, r)?;
    let d_nodes: Vec<NodeId> = d.node_ids().collect();
    let r_nodes: Vec<NodeId> = r.node_ids().collect();
    let d_edges: Vec<EdgeId> = d.edge_ids().collect();
    let r_edges: Vec<EdgeId> = r.edge_ids().collect();
    let d_ni: BTreeMap<NodeId, usize> = d_nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let r_ni: BTreeMap<NodeId, usize> = r_nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (*n, i + d_nodes.len()))
        .collect();
    let d_ei: BTreeMap<EdgeId, usize> = d_edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let r_ei: BTreeMap<EdgeId, usize> = r_edges
        .iter()
        .enumerate()
        .map(|(i, e)| (*e, i + d_edges.len()))
        .collect();

    let mut nuf = UnionFind::new(d_nodes.len() + r_nodes.len());
    for (k, fd) in &f.nodes {
        let gr = g.node(*k).ok_or(GraphError::NotTotal(Elem::Node(*k)))?;
        let a = *d_ni
            .get(fd)
            .ok_or(GraphError::MissingElement(Elem::Node(*fd)))?;
        let b = *r_ni
            .get(&gr)
            .ok_or(GraphError::MissingElement(Elem::Node(gr)))?;
        nuf.union(a, b);
    }
    let mut euf = UnionFind::new(d_edges.len() + r_edges.len());
    for (k, fd) in &f.edges {
        let gr = g.edge(*k).ok_or(GraphError::NotTotal(Elem::Edge(*k)))?;
        let a = *d_ei
            .get(fd)
            .ok_or(GraphError::MissingElement(Elem::Edge(*fd)))?;
        let b = *r_ei
            .get(&gr)
            .ok_or(GraphError::MissingElement(Elem::Edge(gr)))?;
        euf.union(a, b);
    }

    let mut h = TypedGraph::new(d.types().clone());
    let (mut next_node, mut next_edge) = d.next_ids();
    let mut node_class: BTreeMap<usize, NodeId> = BTreeMap::new();
    let mut from_left = GraphMorphism::empty();
    let mut from_right = GraphMorphism::empty();

    for (i, n) in d_nodes.iter().chain(r_nodes.iter()).enumerate() {
        let root = nuf.find(i);
        let id = match node_class.get(&root) {
            Some(id) => *id,
            None => {
                let (src, id) = if root < d_nodes.len() {
                    (d.node(d_nodes[root]).unwrap(), d_nodes[root])
                } else {
                    let id = NodeId(next_node);
                    next_node += 1;
                    (r.node(r_nodes[root - d_nodes.len()]).unwrap(), id)
                };
                h.insert_node(id, &src.ty, src.attrs.clone(), src.label.clone())?;
                node_class.insert(root, id);
                id
            }
        };
        if i < d_nodes.len() {
            from_left.nodes.insert(*n, id);
        } else {
            from_right.nodes.insert(*n, id);
        }
    }

    let mut edge_class: BTreeMap<usize, EdgeId> = BTreeMap::new();
    for (i, e) in d_edges.iter().chain(r_edges.iter()).enumerate() {
        let root = euf.find(i);
        let id = match edge_class.get(&root) {
            Some(id) => *id,
            None => {
                let (src, map, id) = if root < d_edges.len() {
                    (d.edge(d_edges[root]).unwrap(), &from_left, d_edges[root])
                } else {
                    let id = EdgeId(next_edge);
                    next_edge += 1;
                    (
                        r.edge(r_edges[root - d_edges.len()]).unwrap(),
                        &from_right,
                        id,
                    )
                };
                let (s, t) = (map.nodes[&src.source], map.nodes[&src.target]);
                h.insert_edge(id, &src.ty, s, t, src.label.clone())?;
                edge_class.insert(root, id);
                id
            }
        };
        if i < d_edges.len() {
            from_left.edges.insert(*e, id);
        } else {
            from_right.edges.insert(*e, id);
        }
    }
    h.bump_ids(next_node, next_edge);
    Ok(Pushout {
        graph: h,
        from_right,
        from_left,
    })
}

/// Checks the gluing condition for deleting `L \ l(K)` along `m: L → G`.
pub fn gluing_violation(
    l: &GraphMorphism,
    lhs: &TypedGraph,
    m: &GraphMorphism,
    host: &TypedGraph,
) -> Option<GluingViolation> {
    let kept_nodes = l.node_image();
    let kept_edges = l.edge_image();
    let deleted_nodes: Vec<NodeId> = lhs.node_ids().filter(|n| !kept_nodes.contains(n)).collect();
    let deleted_edges: Vec<EdgeId> = lhs.edge_ids().filter(|e| !kept_edges.contains(e)).collect();

    for &x in &deleted_nodes {
        let image = m.node(x)?;
        if let Some((&other, _)) = m.nodes.iter().find(|(y, img)| **y != x && **img == image) {
            return Some(GluingViolation::IdentificationClash {
                deleted: Elem::Node(x),
                other: Elem::Node(other),
                image: Elem::Node(image),
            });
        }
    }
    for &x in &deleted_edges {
        let image = m.edge(x)?;
        if let Some((&other, _)) = m.edges.iter().find(|(y, img)| **y != x && **img == image) {
            return Some(GluingViolation::IdentificationClash {
                deleted: Elem::Edge(x),
                other: Elem::Edge(other),
                image: Elem::Edge(image),
            });
        }
    }
    let removed_edges: BTreeSet<EdgeId> = deleted_edges.iter().filter_map(|e| m.edge(*e)).collect();
    for &x in &deleted_nodes {
        let image = m.node(x)?;
        let dangling: Vec<EdgeId> = host
            .incident_edges(image)
            .filter(|e| !removed_edges.contains(e))
            .collect();
        if !dangling.is_empty() {
            return Some(GluingViolation::DanglingEdge {
                node: image,
                edges: dangling,
            });
        }
    }
    None
}

/// Pushout complement of `l: K → L` (injective) and `m: L → G`.
pub fn pushout_complement(
    l: &GraphMorphism,
    lhs: &TypedGraph,
    m: &GraphMorphism,
    host: &TypedGraph,
) -> Result<PushoutComplement, GluingViolation> {
    if let Some(v) = gluing_violation(l, lhs, m, host) {
        return Err(v);
    }
    let kept_nodes = l.node_image();
    let kept_edges = l.edge_image();
    let mut d = host.clone();
    for (x, _) in lhs.edges() {
        if !kept_edges.contains(&x) {
            let _ = d.remove_edge(m.edges[&x]);
        }
    }
    for (x, _) in lhs.nodes() {
        if !kept_nodes.contains(&x) {
            d.remove_node(m.nodes[&x])
                .expect("dangling condition checked above");
        }
    }
    let from_interface = l.then(m);
    let into_host = GraphMorphism::identity(&d);
    Ok(PushoutComplement {
        graph: d,
        from_interface,
        into_host,
    })
}

/// Disjoint union with canonical renumbering: `a`'s elements first.
/// Returns the union and the two coproduct injections.
pub fn disjoint_union(
    a: &TypedGraph,
    b: &TypedGraph,
) -> Result<(TypedGraph, GraphMorphism, GraphMorphism), GraphError> {
    ensure_same_types(a, b)?;
    let mut h = TypedGraph::new(a.types().clone());
    let mut inj = [GraphMorphism::empty(), GraphMorphism::empty()];
    let (mut nn, mut ne) = (0u32, 0u32);
    for (side, g) in [a, b].into_iter().enumerate() {
        for (id, n) in g.nodes() {
            let new = NodeId(nn);
            nn += 1;
            h.insert_node(new, &n.ty, n.attrs.clone(), n.label.clone())?;
            inj[side].nodes.insert(id, new);
        }
        for (id, e) in g.edges() {
            let new = EdgeId(ne);
            ne += 1;
            let (s, t) = (inj[side].nodes[&e.source], inj[side].nodes[&e.target]);
            h.insert_edge(new, &e.ty, s, t, e.label.clone())?;
            inj[side].edges.insert(id, new);
        }
    }
    let [ia, ib] = inj;
    Ok((h, ia, ib))
}
