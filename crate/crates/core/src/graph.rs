//! Type graphs, typed attributed graphs and graph morphisms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::attr::{AttrTerm, Sort};
use crate::error::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// A graph element, used wherever nodes and edges are reported together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Elem {
    Node(NodeId),
    Edge(EdgeId),
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Node(n) => n.fmt(f),
            Elem::Edge(e) => e.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrDecl {
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    pub name: String,
    pub attrs: Vec<AttrDecl>,
}

impl NodeType {
    pub fn attr(&self, name: &str) -> Option<&AttrDecl> {
        self.attrs.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeType {
    pub name: String,
    pub source: String,
    pub target: String,
}

/// The allowed node and edge kinds of a specification.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeGraph {
    node_types: IndexMap<String, NodeType>,
    edge_types: IndexMap<String, EdgeType>,
}

impl TypeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node_type(
        &mut self,
        name: impl Into<String>,
        attrs: impl IntoIterator<Item = (String, Sort)>,
    ) -> Result<(), GraphError> {
        let name = name.into();
        if self.node_types.contains_key(&name) {
            return Err(GraphError::DuplicateType(name));
        }
        let mut decls: Vec<AttrDecl> = Vec::new();
        for (attr, sort) in attrs {
            if decls.iter().any(|d| d.name == attr) {
                return Err(GraphError::DuplicateAttr { ty: name, attr });
            }
            decls.push(AttrDecl { name: attr, sort });
        }
        self.node_types
            .insert(name.clone(), NodeType { name, attrs: decls });
        Ok(())
    }

    pub fn add_edge_type(
        &mut self,
        name: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Result<(), GraphError> {
        let name = name.into();
        let (source, target) = (source.into(), target.into());
        if self.edge_types.contains_key(&name) {
            return Err(GraphError::DuplicateType(name));
        }
        for end in [&source, &target] {
            if !self.node_types.contains_key(end) {
                return Err(GraphError::UnknownType(end.clone()));
            }
        }
        self.edge_types.insert(
            name.clone(),
            EdgeType {
                name,
                source,
                target,
            },
        );
        Ok(())
    }

    /// Adds an edge type without checking its endpoints. Used for type-graph
    /// fragments whose edges attach to node types of the graph they extend;
    /// [`TypeGraph::extended_with`] checks the endpoints on merge.
    pub fn add_edge_type_deferred(
        &mut self,
        name: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Result<(), GraphError> {
        let name = name.into();
        if self.edge_types.contains_key(&name) {
            return Err(GraphError::DuplicateType(name));
        }
        let (source, target) = (source.into(), target.into());
        self.edge_types.insert(
            name.clone(),
            EdgeType {
                name,
                source,
                target,
            },
        );
        Ok(())
    }

    pub fn node_type(&self, name: &str) -> Option<&NodeType> {
        self.node_types.get(name)
    }

    pub fn edge_type(&self, name: &str) -> Option<&EdgeType> {
        self.edge_types.get(name)
    }

    pub fn node_types(&self) -> impl Iterator<Item = &NodeType> {
        self.node_types.values()
    }

    pub fn edge_types(&self) -> impl Iterator<Item = &EdgeType> {
        self.edge_types.values()
    }

    pub fn node_type_count(&self) -> usize {
        self.node_types.len()
    }

    pub fn edge_type_count(&self) -> usize {
        self.edge_types.len()
    }

    /// True when every declaration of `self` appears unchanged in `other`.
    pub fn is_included_in(&self, other: &TypeGraph) -> bool {
        self.node_types
            .iter()
            .all(|(k, v)| other.node_types.get(k) == Some(v))
            && self
                .edge_types
                .iter()
                .all(|(k, v)| other.edge_types.get(k) == Some(v))
    }

    /// Adds all declarations of `ext` not already present; identical
    /// redeclarations are accepted, conflicting ones are not.
    pub fn extended_with(&self, ext: &TypeGraph) -> Result<TypeGraph, GraphError> {
        let mut out = self.clone();
        for nt in ext.node_types() {
            match out.node_types.get(&nt.name) {
                Some(existing) if existing == nt => {}
                Some(_) => return Err(GraphError::ConflictingType(nt.name.clone())),
                None => {
                    out.node_types.insert(nt.name.clone(), nt.clone());
                }
            }
        }
        for et in ext.edge_types() {
            match out.edge_types.get(&et.name) {
                Some(existing) if existing == et => {}
                Some(_) => return Err(GraphError::ConflictingType(et.name.clone())),
                None => {
                    if out.node_types.get(&et.source).is_none()
                        || out.node_types.get(&et.target).is_none()
                    {
                        return Err(GraphError::UnknownType(et.name.clone()));
                    }
                    out.edge_types.insert(et.name.clone(), et.clone());
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub ty: String,
    pub attrs: BTreeMap<String, AttrTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub ty: String,
    pub source: NodeId,
    pub target: NodeId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A graph typed over a [`TypeGraph`]. Identifiers are stable for the
/// lifetime of the graph and are never reused after deletion.
#[derive(Debug, Clone, Serialize)]
pub struct TypedGraph {
    #[serde(skip)]
    types: Arc<TypeGraph>,
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeMap<EdgeId, Edge>,
    #[serde(skip)]
    next_node: u32,
    #[serde(skip)]
    next_edge: u32,
}

/// Two graphs are equal when typed over equal type graphs and carrying the
/// same identified elements. Allocation counters do not participate.
impl PartialEq for TypedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && same_types(self, other)
    }
}

impl Eq for TypedGraph {}

pub fn same_types(a: &TypedGraph, b: &TypedGraph) -> bool {
    Arc::ptr_eq(&a.types, &b.types) || a.types == b.types
}

pub(crate) fn ensure_same_types(a: &TypedGraph, b: &TypedGraph) -> Result<(), GraphError> {
    if same_types(a, b) {
        Ok(())
    } else {
        Err(GraphError::TypeGraphMismatch)
    }
}

impl TypedGraph {
    pub fn new(types: Arc<TypeGraph>) -> Self {
        TypedGraph {
            types,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            next_node: 0,
            next_edge: 0,
        }
    }

    pub fn types(&self) -> &Arc<TypeGraph> {
        &self.types
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> + '_ {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().map(|(k, v)| (*k, v))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn contains(&self, elem: Elem) -> bool {
        match elem {
            Elem::Node(n) => self.nodes.contains_key(&n),
            Elem::Edge(e) => self.edges.contains_key(&e),
        }
    }

    pub fn incident_edges(&self, n: NodeId) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .filter(move |(_, e)| e.source == n || e.target == n)
            .map(|(id, _)| *id)
    }

    pub fn find_node_by_label(&self, label: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|(_, n)| n.label.as_deref() == Some(label))
            .map(|(id, _)| *id)
    }

    pub fn find_edge_by_label(&self, label: &str) -> Option<EdgeId> {
        self.edges
            .iter()
            .find(|(_, e)| e.label.as_deref() == Some(label))
            .map(|(id, _)| *id)
    }

    pub fn add_node(
        &mut self,
        ty: &str,
        attrs: impl IntoIterator<Item = (String, AttrTerm)>,
    ) -> Result<NodeId, GraphError> {
        let id = NodeId(self.next_node);
        self.insert_node(id, ty, attrs.into_iter().collect(), None)?;
        Ok(id)
    }

    pub fn add_labeled_node(
        &mut self,
        label: impl Into<String>,
        ty: &str,
        attrs: impl IntoIterator<Item = (String, AttrTerm)>,
    ) -> Result<NodeId, GraphError> {
        let id = NodeId(self.next_node);
        self.insert_node(id, ty, attrs.into_iter().collect(), Some(label.into()))?;
        Ok(id)
    }

    pub fn add_edge(
        &mut self,
        ty: &str,
        source: NodeId,
        target: NodeId,
    ) -> Result<EdgeId, GraphError> {
        let id = EdgeId(self.next_edge);
        self.insert_edge(id, ty, source, target, None)?;
        Ok(id)
    }

    pub fn add_labeled_edge(
        &mut self,
        label: impl Into<String>,
        ty: &str,
        source: NodeId,
        target: NodeId,
    ) -> Result<EdgeId, GraphError> {
        let id = EdgeId(self.next_edge);
        self.insert_edge(id, ty, source, target, Some(label.into()))?;
        Ok(id)
    }

    /// Inserts a node under an explicit identifier, checking typing and
    /// attribute coverage.
    pub fn insert_node(
        &mut self,
        id: NodeId,
        ty: &str,
        attrs: BTreeMap<String, AttrTerm>,
        label: Option<String>,
    ) -> Result<(), GraphError> {
        if self.nodes.contains_key(&id) {
            return Err(GraphError::DuplicateId(Elem::Node(id)));
        }
        let nt = self
            .types
            .node_type(ty)
            .ok_or_else(|| GraphError::UnknownType(ty.to_string()))?;
        for decl in &nt.attrs {
            let term = attrs
                .get(&decl.name)
                .ok_or_else(|| GraphError::MissingAttr {
                    ty: ty.to_string(),
                    attr: decl.name.clone(),
                })?;
            if let Some(sort) = term.known_sort() {
                if sort != decl.sort {
                    return Err(GraphError::SortMismatch {
                        attr: decl.name.clone(),
                        expected: decl.sort,
                        found: sort,
                    });
                }
            }
            if let AttrTerm::Concat(parts) = term {
                if let Some(bad) = parts
                    .iter()
                    .find(|p| p.known_sort().is_some_and(|s| s != Sort::String))
                {
                    return Err(GraphError::SortMismatch {
                        attr: decl.name.clone(),
                        expected: Sort::String,
                        found: bad.known_sort().unwrap(),
                    });
                }
            }
        }
        if let Some(extra) = attrs.keys().find(|a| nt.attr(a).is_none()) {
            return Err(GraphError::UnknownAttr {
                ty: ty.to_string(),
                attr: extra.clone(),
            });
        }
        self.nodes.insert(
            id,
            Node {
                ty: ty.to_string(),
                attrs,
                label,
            },
        );
        self.next_node = self.next_node.max(id.0 + 1);
        Ok(())
    }

    pub fn insert_edge(
        &mut self,
        id: EdgeId,
        ty: &str,
        source: NodeId,
        target: NodeId,
        label: Option<String>,
    ) -> Result<(), GraphError> {
        if self.edges.contains_key(&id) {
            return Err(GraphError::DuplicateId(Elem::Edge(id)));
        }
        let et = self
            .types
            .edge_type(ty)
            .ok_or_else(|| GraphError::UnknownType(ty.to_string()))?;
        for (end, want) in [(source, &et.source), (target, &et.target)] {
            let node = self
                .nodes
                .get(&end)
                .ok_or(GraphError::MissingElement(Elem::Node(end)))?;
            if &node.ty != want {
                return Err(GraphError::EndpointType {
                    edge_type: ty.to_string(),
                    expected: want.clone(),
                    found: node.ty.clone(),
                });
            }
        }
        self.edges.insert(
            id,
            Edge {
                ty: ty.to_string(),
                source,
                target,
                label,
            },
        );
        self.next_edge = self.next_edge.max(id.0 + 1);
        Ok(())
    }

    /// Removes a node; fails if it still has incident edges.
    pub fn remove_node(&mut self, id: NodeId) -> Result<Node, GraphError> {
        if let Some(e) = self.incident_edges(id).next() {
            return Err(GraphError::DanglingRemoval { node: id, edge: e });
        }
        self.nodes
            .remove(&id)
            .ok_or(GraphError::MissingElement(Elem::Node(id)))
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<Edge, GraphError> {
        self.edges
            .remove(&id)
            .ok_or(GraphError::MissingElement(Elem::Edge(id)))
    }

    pub fn set_attr(&mut self, id: NodeId, attr: &str, term: AttrTerm) -> Result<(), GraphError> {
        let node = self
            .nodes
            .get_mut(&id)
            .ok_or(GraphError::MissingElement(Elem::Node(id)))?;
        match node.attrs.get_mut(attr) {
            Some(slot) => {
                *slot = term;
                Ok(())
            }
            None => Err(GraphError::UnknownAttr {
                ty: node.ty.clone(),
                attr: attr.to_string(),
            }),
        }
    }

    pub fn set_node_label(&mut self, id: NodeId, label: Option<String>) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.label = label;
        }
    }

    pub fn set_edge_label(&mut self, id: EdgeId, label: Option<String>) {
        if let Some(e) = self.edges.get_mut(&id) {
            e.label = label;
        }
    }

    /// Re-types the graph over a larger type graph (identity embedding).
    pub fn widened(&self, types: Arc<TypeGraph>) -> Result<TypedGraph, GraphError> {
        if !self.types.is_included_in(&types) {
            return Err(GraphError::NotAnExtension);
        }
        let mut g = self.clone();
        g.types = types;
        Ok(g)
    }

    /// All variables occurring in node attributes.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for n in self.nodes.values() {
            for t in n.attrs.values() {
                t.vars(&mut out);
            }
        }
        out
    }

    pub fn next_ids(&self) -> (u32, u32) {
        (self.next_node, self.next_edge)
    }

    pub(crate) fn bump_ids(&mut self, node: u32, edge: u32) {
        self.next_node = self.next_node.max(node);
        self.next_edge = self.next_edge.max(edge);
    }

    /// Human-readable name for an element: its label or its identifier.
    pub fn describe(&self, elem: Elem) -> String {
        match elem {
            Elem::Node(n) => match self.node(n) {
                Some(node) => format!(
                    "{}:{}",
                    node.label.clone().unwrap_or_else(|| n.to_string()),
                    node.ty
                ),
                None => n.to_string(),
            },
            Elem::Edge(e) => match self.edge(e) {
                Some(edge) => format!(
                    "{}:{}",
                    edge.label.clone().unwrap_or_else(|| e.to_string()),
                    edge.ty
                ),
                None => e.to_string(),
            },
        }
    }
}

/// Identifier mapping between two typed graphs. The graphs themselves are
/// not held; [`GraphMorphism::check`] validates against a concrete pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphMorphism {
    pub nodes: BTreeMap<NodeId, NodeId>,
    pub edges: BTreeMap<EdgeId, EdgeId>,
}

impl GraphMorphism {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn identity(g: &TypedGraph) -> Self {
        GraphMorphism {
            nodes: g.node_ids().map(|n| (n, n)).collect(),
            edges: g.edge_ids().map(|e| (e, e)).collect(),
        }
    }

    pub fn node(&self, n: NodeId) -> Option<NodeId> {
        self.nodes.get(&n).copied()
    }

    pub fn edge(&self, e: EdgeId) -> Option<EdgeId> {
        self.edges.get(&e).copied()
    }

    pub fn elem(&self, x: Elem) -> Option<Elem> {
        match x {
            Elem::Node(n) => self.node(n).map(Elem::Node),
            Elem::Edge(e) => self.edge(e).map(Elem::Edge),
        }
    }

    pub fn is_injective(&self) -> bool {
        let n: BTreeSet<_> = self.nodes.values().collect();
        let e: BTreeSet<_> = self.edges.values().collect();
        n.len() == self.nodes.len() && e.len() == self.edges.len()
    }

    /// `other ∘ self`: first apply `self`, then `other`.
    pub fn then(&self, other: &GraphMorphism) -> GraphMorphism {
        GraphMorphism {
            nodes: self
                .nodes
                .iter()
                .filter_map(|(k, v)| other.node(*v).map(|w| (*k, w)))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter_map(|(k, v)| other.edge(*v).map(|w| (*k, w)))
                .collect(),
        }
    }

    /// Inverse of an injective morphism, as a partial map on the target.
    pub fn inverse(&self) -> GraphMorphism {
        GraphMorphism {
            nodes: self.nodes.iter().map(|(k, v)| (*v, *k)).collect(),
            edges: self.edges.iter().map(|(k, v)| (*v, *k)).collect(),
        }
    }

    pub fn node_image(&self) -> BTreeSet<NodeId> {
        self.nodes.values().copied().collect()
    }

    pub fn edge_image(&self) -> BTreeSet<EdgeId> {
        self.edges.values().copied().collect()
    }

    pub fn image(&self) -> BTreeSet<Elem> {
        self.nodes
            .values()
            .map(|n| Elem::Node(*n))
            .chain(self.edges.values().map(|e| Elem::Edge(*e)))
            .collect()
    }

    /// Verifies totality, type preservation and compatibility with
    /// source/target functions.
    pub fn check(&self, src: &TypedGraph, tgt: &TypedGraph) -> Result<(), GraphError> {
        for (n, node) in src.nodes() {
            let m = self.node(n).ok_or(GraphError::NotTotal(Elem::Node(n)))?;
            let image = tgt
                .node(m)
                .ok_or(GraphError::MissingElement(Elem::Node(m)))?;
            if image.ty != node.ty {
                return Err(GraphError::NotTypePreserving(Elem::Node(n)));
            }
        }
        for (e, edge) in src.edges() {
            let m = self.edge(e).ok_or(GraphError::NotTotal(Elem::Edge(e)))?;
            let image = tgt
                .edge(m)
                .ok_or(GraphError::MissingElement(Elem::Edge(m)))?;
            if image.ty != edge.ty {
                return Err(GraphError::NotTypePreserving(Elem::Edge(e)));
            }
            if self.node(edge.source) != Some(image.source)
                || self.node(edge.target) != Some(image.target)
            {
                return Err(GraphError::NotStructurePreserving(e));
            }
        }
        if self.nodes.len() != src.node_count() || self.edges.len() != src.edge_count() {
            return Err(GraphError::ExtraneousMapping);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn types() -> Arc<TypeGraph> {
        let mut t = TypeGraph::new();
        t.add_node_type("A", [("x".to_string(), Sort::Int)])
            .unwrap();
        t.add_node_type("B", []).unwrap();
        t.add_edge_type("ab", "A", "B").unwrap();
        Arc::new(t)
    }

    #[test]
    fn typing_is_enforced() {
        let mut g = TypedGraph::new(types());
        let a = g.add_node("A", [("x".into(), AttrTerm::int(1))]).unwrap();
        let b = g.add_node("B", []).unwrap();
        assert!(g.add_edge("ab", b, a).is_err());
        assert!(g.add_edge("ab", a, b).is_ok());
        assert!(matches!(
            g.add_node("A", []),
            Err(GraphError::MissingAttr { .. })
        ));
        assert!(matches!(
            g.add_node("A", [("x".into(), AttrTerm::str("no"))]),
            Err(GraphError::SortMismatch { .. })
        ));
        assert!(matches!(
            g.add_node("C", []),
            Err(GraphError::UnknownType(_))
        ));
    }

    #[test]
    fn duplicate_declarations_rejected() {
        let mut t = TypeGraph::new();
        t.add_node_type("A", []).unwrap();
        assert!(t.add_node_type("A", []).is_err());
        assert!(t
            .add_node_type(
                "B",
                [("x".to_string(), Sort::Int), ("x".to_string(), Sort::Bool)]
            )
            .is_err());
        assert!(t.add_edge_type("e", "A", "Z").is_err());
    }

    #[test]
    fn ids_are_not_reused() {
        let mut g = TypedGraph::new(types());
        let b = g.add_node("B", []).unwrap();
        g.remove_node(b).unwrap();
        let c = g.add_node("B", []).unwrap();
        assert_ne!(b, c);
    }

    #[test]
    fn removing_node_with_edges_fails() {
        let mut g = TypedGraph::new(types());
        let a = g.add_node("A", [("x".into(), AttrTerm::int(1))]).unwrap();
        let b = g.add_node("B", []).unwrap();
        g.add_edge("ab", a, b).unwrap();
        assert!(matches!(
            g.remove_node(b),
            Err(GraphError::DanglingRemoval { .. })
        ));
    }

    #[test]
    fn morphism_check_detects_structure_break() {
        let mut g = TypedGraph::new(types());
        let a = g.add_node("A", [("x".into(), AttrTerm::int(1))]).unwrap();
        let b1 = g.add_node("B", []).unwrap();
        let b2 = g.add_node("B", []).unwrap();
        let e1 = g.add_edge("ab", a, b1).unwrap();
        let e2 = g.add_edge("ab", a, b2).unwrap();
        let mut m = GraphMorphism::identity(&g);
        assert!(m.check(&g, &g).is_ok());
        m.edges.insert(e1, e2);
        assert!(matches!(
            m.check(&g, &g),
            Err(GraphError::NotStructurePreserving(_))
        ));
    }
}
