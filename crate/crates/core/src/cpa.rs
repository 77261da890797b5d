//! Critical pair analysis: overlaps of rule pairs, classified as conflicts
//! or dependencies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::aogg::Aogg;
use crate::attr::AttrTerm;
use crate::construct::{gluing_violation, pushout};
use crate::encoding::{encode_aogg, encoded_advice_name, EncodingError};
use crate::error::GraphError;
use crate::graph::{EdgeId, Elem, GraphMorphism, NodeId, TypedGraph};
use crate::rule::{Grammar, Rule};

pub const DEFAULT_OVERLAP_BOUND: usize = 100_000;

/// Overlap bound per rule pair, overridable through `GRAGRA_OVERLAP_BOUND`.
pub fn overlap_bound() -> usize {
    std::env::var("GRAGRA_OVERLAP_BOUND")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_OVERLAP_BOUND)
}

/// A gluing of two graphs along a nonempty partial isomorphism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub glue: TypedGraph,
    /// First graph into the glue.
    pub m1: GraphMorphism,
    /// Second graph into the glue.
    pub m2: GraphMorphism,
    /// The partial isomorphism between the two graphs.
    pub pairing: GraphMorphism,
    /// Glue elements in both images.
    pub shared: BTreeSet<Elem>,
}

#[derive(Debug, Clone, Default)]
pub struct OverlapSet {
    pub overlaps: Vec<Overlap>,
    /// Number of pairings visited.
    pub examined: usize,
    /// Whether enumeration stopped at the bound.
    pub truncated: bool,
}

fn compatible(a: &AttrTerm, b: &AttrTerm) -> bool {
    !matches!((a, b), (AttrTerm::Lit(x), AttrTerm::Lit(y)) if x != y)
}

fn nodes_compatible(a: &TypedGraph, x: NodeId, b: &TypedGraph, y: NodeId) -> bool {
    let (nx, ny) = (a.node(x).unwrap(), b.node(y).unwrap());
    nx.ty == ny.ty
        && nx
            .attrs
            .iter()
            .all(|(k, t)| ny.attrs.get(k).is_none_or(|u| compatible(t, u)))
}

struct Pairings<'a> {
    a: &'a TypedGraph,
    b: &'a TypedGraph,
    a_nodes: Vec<NodeId>,
    a_edges: Vec<EdgeId>,
    node_cands: Vec<Vec<NodeId>>,
    current: GraphMorphism,
    used_nodes: BTreeSet<NodeId>,
    used_edges: BTreeSet<EdgeId>,
    bound: usize,
    examined: usize,
    truncated: bool,
}

impl Pairings<'_> {
    fn nodes(&mut self, i: usize, visit: &mut dyn FnMut(&GraphMorphism)) {
        if self.truncated {
            return;
        }
        if i == self.a_nodes.len() {
            return self.edges(0, visit);
        }
        let x = self.a_nodes[i];
        self.nodes(i + 1, visit);
        for y in self.node_cands[i].clone() {
            if self.used_nodes.contains(&y) {
                continue;
            }
            self.used_nodes.insert(y);
            self.current.nodes.insert(x, y);
            self.nodes(i + 1, visit);
            self.current.nodes.remove(&x);
            self.used_nodes.remove(&y);
        }
    }

    fn edges(&mut self, i: usize, visit: &mut dyn FnMut(&GraphMorphism)) {
        if self.truncated {
            return;
        }
        if i == self.a_edges.len() {
            if self.current.nodes.is_empty() {
                return;
            }
            if self.examined >= self.bound {
                self.truncated = true;
                return;
            }
            self.examined += 1;
            return visit(&self.current);
        }
        let x = self.a_edges[i];
        self.edges(i + 1, visit);
        let ex = self.a.edge(x).unwrap();
        let (Some(s), Some(t)) = (self.current.node(ex.source), self.current.node(ex.target))
        else {
            return;
        };
        let cands: Vec<EdgeId> = self
            .b
            .incident_edges(s)
            .filter(|e| !self.used_edges.contains(e))
            .filter(|e| {
                let ey = self.b.edge(*e).unwrap();
                ey.ty == ex.ty && ey.source == s && ey.target == t
            })
            .collect();
        for y in cands {
            self.used_edges.insert(y);
            self.current.edges.insert(x, y);
            self.edges(i + 1, visit);
            self.current.edges.remove(&x);
            self.used_edges.remove(&y);
        }
    }
}

/// Visits every nonempty partial isomorphism `a ⇀ b`, stopping after
/// `bound` of them. Returns `(examined, truncated)`.
pub fn for_each_pairing(
    a: &TypedGraph,
    b: &TypedGraph,
    bound: usize,
    mut visit: impl FnMut(&GraphMorphism),
) -> (usize, bool) {
    let a_nodes: Vec<NodeId> = a.node_ids().collect();
    let node_cands = a_nodes
        .iter()
        .map(|&x| {
            b.node_ids()
                .filter(|&y| nodes_compatible(a, x, b, y))
                .collect()
        })
        .collect();
    let mut p = Pairings {
        a,
        b,
        a_edges: a.edge_ids().collect(),
        a_nodes,
        node_cands,
        current: GraphMorphism::empty(),
        used_nodes: BTreeSet::new(),
        used_edges: BTreeSet::new(),
        bound,
        examined: 0,
        truncated: false,
    };
    p.nodes(0, &mut visit);
    (p.examined, p.truncated)
}

/// Glues `a` and `b` along `pairing`.
pub fn glue(
    a: &TypedGraph,
    b: &TypedGraph,
    pairing: &GraphMorphism,
) -> Result<Overlap, GraphError> {
    let mut shared_part = TypedGraph::new(a.types().clone());
    for &x in pairing.nodes.keys() {
        let n = a.node(x).unwrap();
        shared_part.insert_node(x, &n.ty, n.attrs.clone(), None)?;
    }
    for &x in pairing.edges.keys() {
        let e = a.edge(x).unwrap();
        shared_part.insert_edge(x, &e.ty, e.source, e.target, None)?;
    }
    let inclusion = GraphMorphism::identity(&shared_part);
    let po = pushout(&inclusion, a, pairing, b)?;
    let mut glue = po.graph;
    // prefer the more specific term on glued nodes
    for (&x, &y) in &pairing.nodes {
        let h = po.from_left.nodes[&x];
        for (k, t) in &b.node(y).unwrap().attrs {
            if !t.is_var() && a.node(x).unwrap().attrs.get(k).is_some_and(|u| u.is_var()) {
                glue.set_attr(h, k, t.clone())?;
            }
        }
    }
    let shared = pairing
        .nodes
        .keys()
        .map(|&x| Elem::Node(po.from_left.nodes[&x]))
        .chain(
            pairing
                .edges
                .keys()
                .map(|&x| Elem::Edge(po.from_left.edges[&x])),
        )
        .collect();
    Ok(Overlap {
        glue,
        m1: po.from_left,
        m2: po.from_right,
        pairing: pairing.clone(),
        shared,
    })
}

/// All overlaps of `a` and `b`, up to `bound` pairings.
pub fn enumerate_overlaps_bounded(
    a: &TypedGraph,
    b: &TypedGraph,
    bound: usize,
) -> Result<OverlapSet, GraphError> {
    let mut out = OverlapSet::default();
    let mut err = None;
    let (examined, truncated) = for_each_pairing(a, b, bound, |p| {
        if err.is_none() {
            match glue(a, b, p) {
                Ok(o) => out.overlaps.push(o),
                Err(e) => err = Some(e),
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    out.examined = examined;
    out.truncated = truncated;
    Ok(out)
}

pub fn enumerate_overlaps(a: &TypedGraph, b: &TypedGraph) -> Result<OverlapSet, GraphError> {
    enumerate_overlaps_bounded(a, b, overlap_bound())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Conflicts,
    Dependencies,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Conflicts => "conflicts",
            Mode::Dependencies => "dependencies",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalKind {
    DeleteUse,
    ProduceUse,
    AttributeWriteRead,
    AttributeWriteWrite,
}

/// A glue element or a glue node attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    Node(NodeId),
    Edge(EdgeId),
    Attribute { node: NodeId, attr: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub kind: CriticalKind,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalPair {
    pub overlap: Overlap,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub rule1: String,
    pub rule2: String,
    pub count: usize,
    pub critical: Vec<CriticalPair>,
    pub examined: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CpaReport {
    pub mode: Mode,
    pub rules: Vec<String>,
    /// `matrix[i][j]` counts critical overlaps of `(rules[i], rules[j])`.
    pub matrix: Vec<Vec<usize>>,
    pub cells: Vec<Cell>,
    /// Owning aspect of each rule, for weaving-level reports.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub owners: BTreeMap<String, String>,
}

impl CpaReport {
    pub fn index(&self, rule: &str) -> Option<usize> {
        self.rules.iter().position(|r| r == rule)
    }

    pub fn count(&self, rule1: &str, rule2: &str) -> Option<usize> {
        Some(self.matrix[self.index(rule1)?][self.index(rule2)?])
    }

    pub fn cell(&self, rule1: &str, rule2: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.rule1 == rule1 && c.rule2 == rule2)
    }

    pub fn total(&self) -> usize {
        self.matrix.iter().flatten().sum()
    }

    /// Pairs with a nonzero count, in matrix order.
    pub fn nonzero(&self) -> Vec<(&str, &str, usize)> {
        self.cells
            .iter()
            .filter(|c| c.count > 0)
            .map(|c| (c.rule1.as_str(), c.rule2.as_str(), c.count))
            .collect()
    }

    pub fn truncated(&self) -> bool {
        self.cells.iter().any(|c| c.truncated)
    }

    /// Plain-text matrix, rows are the first rule of each pair.
    pub fn to_table(&self) -> String {
        let width = self.rules.iter().map(|r| r.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = write!(out, "{:width$}", self.mode.to_string());
        for r in &self.rules {
            let _ = write!(out, " | {:>w$}", r, w = r.len().max(3));
        }
        out.push('\n');
        for (i, r) in self.rules.iter().enumerate() {
            let _ = write!(out, "{r:width$}");
            for (j, c) in self.rules.iter().enumerate() {
                let _ = write!(out, " | {:>w$}", self.matrix[i][j], w = c.len().max(3));
            }
            out.push('\n');
        }
        out
    }
}

fn witness(e: Elem) -> Witness {
    match e {
        Elem::Node(n) => Witness::Node(n),
        Elem::Edge(e) => Witness::Edge(e),
    }
}

fn image(m: &GraphMorphism, x: Elem) -> Elem {
    m.elem(x).expect("overlap morphisms are total")
}

fn is_identity_pairing(p: &GraphMorphism, g: &TypedGraph) -> bool {
    p.nodes.len() == g.node_count()
        && p.edges.len() == g.edge_count()
        && p.nodes.iter().all(|(x, y)| x == y)
        && p.edges.iter().all(|(x, y)| x == y)
}

/// Attribute witnesses: `(glue node, attr)` written by the first rule on a
/// node the second rule reads or writes.
fn attribute_verdicts(
    written: &[(NodeId, String)],
    o: &Overlap,
    r2: &Rule,
    with_write_write: bool,
) -> Vec<Verdict> {
    let m2_inv = o.m2.inverse();
    let mut wr = Vec::new();
    let mut ww = Vec::new();
    for (h, attr) in written {
        let Some(y) = m2_inv.node(*h) else { continue };
        if !r2.lhs.node(y).unwrap().attrs.contains_key(attr) {
            continue;
        }
        let w = Witness::Attribute {
            node: *h,
            attr: attr.clone(),
        };
        if r2.reads_attr(y, attr) {
            wr.push(w.clone());
        }
        if with_write_write && r2.written_attrs(y).contains(attr) {
            ww.push(w);
        }
    }
    let mut out = Vec::new();
    if !wr.is_empty() {
        out.push(Verdict {
            kind: CriticalKind::AttributeWriteRead,
            witnesses: wr,
        });
    }
    if !ww.is_empty() {
        out.push(Verdict {
            kind: CriticalKind::AttributeWriteWrite,
            witnesses: ww,
        });
    }
    out
}

fn conflict_verdicts(r1: &Rule, r2: &Rule, o: &Overlap) -> Vec<Verdict> {
    let mut out = Vec::new();
    let deleted: Vec<Witness> = r1
        .deleted()
        .into_iter()
        .map(|x| image(&o.m1, x))
        .filter(|h| o.shared.contains(h))
        .map(witness)
        .collect();
    if !deleted.is_empty() {
        out.push(Verdict {
            kind: CriticalKind::DeleteUse,
            witnesses: deleted,
        });
    }
    let written: Vec<(NodeId, String)> = r1
        .lhs
        .node_ids()
        .flat_map(|n| r1.written_attrs(n).into_iter().map(move |a| (n, a)))
        .map(|(n, a)| (o.m1.nodes[&n], a))
        .collect();
    out.extend(attribute_verdicts(&written, o, r2, true));
    out
}

fn dependency_verdicts(r1: &Rule, r2: &Rule, o: &Overlap) -> Vec<Verdict> {
    let mut out = Vec::new();
    let created: Vec<Witness> = r1
        .created()
        .into_iter()
        .map(|x| image(&o.m1, x))
        .filter(|h| o.shared.contains(h))
        .map(witness)
        .collect();
    if !created.is_empty() {
        out.push(Verdict {
            kind: CriticalKind::ProduceUse,
            witnesses: created,
        });
    }
    let preserved = r1.right.node_image();
    let written: Vec<(NodeId, String)> = r1
        .rhs
        .node_ids()
        .filter(|n| preserved.contains(n))
        .flat_map(|n| r1.produced_attrs(n).into_iter().map(move |a| (n, a)))
        .map(|(n, a)| (o.m1.nodes[&n], a))
        .collect();
    out.extend(attribute_verdicts(&written, o, r2, false));
    out
}

fn writes_anything(r: &Rule) -> bool {
    r.lhs.node_ids().any(|n| !r.written_attrs(n).is_empty())
}

/// Analyzes one ordered rule pair.
pub fn analyze_pair(r1: &Rule, r2: &Rule, mode: Mode, bound: usize) -> Result<Cell, GraphError> {
    let mut cell = Cell {
        rule1: r1.name.clone(),
        rule2: r2.name.clone(),
        count: 0,
        critical: Vec::new(),
        examined: 0,
        truncated: false,
    };
    let relevant = match mode {
        Mode::Conflicts => !r1.deleted().is_empty() || writes_anything(r1),
        Mode::Dependencies => !r1.created().is_empty() || writes_anything(r1),
    };
    if !relevant {
        return Ok(cell);
    }
    let (a, a_leg) = match mode {
        Mode::Conflicts => (&r1.lhs, &r1.left),
        Mode::Dependencies => (&r1.rhs, &r1.right),
    };
    let self_pair = mode == Mode::Conflicts && r1.name == r2.name;
    let mut err = None;
    let (examined, truncated) = for_each_pairing(a, &r2.lhs, bound, |p| {
        if err.is_some() || (self_pair && is_identity_pairing(p, a)) {
            return;
        }
        let o = match glue(a, &r2.lhs, p) {
            Ok(o) => o,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        if gluing_violation(a_leg, a, &o.m1, &o.glue).is_some()
            || gluing_violation(&r2.left, &r2.lhs, &o.m2, &o.glue).is_some()
        {
            return;
        }
        let verdicts = match mode {
            Mode::Conflicts => conflict_verdicts(r1, r2, &o),
            Mode::Dependencies => dependency_verdicts(r1, r2, &o),
        };
        if !verdicts.is_empty() {
            cell.critical.push(CriticalPair {
                overlap: o,
                verdicts,
            });
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    cell.count = cell.critical.len();
    cell.examined = examined;
    cell.truncated = truncated;
    Ok(cell)
}

fn analyze(rules: &[Rule], mode: Mode) -> Result<CpaReport, GraphError> {
    let bound = overlap_bound();
    let names: Vec<String> = rules.iter().map(|r| r.name.clone()).collect();
    let mut matrix = vec![vec![0; rules.len()]; rules.len()];
    let mut cells = Vec::new();
    for (i, r1) in rules.iter().enumerate() {
        for (j, r2) in rules.iter().enumerate() {
            let cell = analyze_pair(r1, r2, mode, bound)?;
            matrix[i][j] = cell.count;
            cells.push(cell);
        }
    }
    Ok(CpaReport {
        mode,
        rules: names,
        matrix,
        cells,
        owners: BTreeMap::new(),
    })
}

/// Overlaps of left-hand sides for every ordered rule pair.
pub fn analyze_conflicts(g: &Grammar) -> Result<CpaReport, GraphError> {
    analyze(&g.rules, Mode::Conflicts)
}

/// Overlaps of the first rule's right-hand side with the second's left.
pub fn analyze_dependencies(g: &Grammar) -> Result<CpaReport, GraphError> {
    analyze(&g.rules, Mode::Dependencies)
}

/// Conflict analysis of the encoded advices of `d`.
pub fn analyze_weaving(d: &Aogg) -> Result<CpaReport, EncodingError> {
    let (encoded, _) = encode_aogg(d)?;
    let mut report = analyze_conflicts(&encoded)?;
    for a in &d.aspects {
        for adv in &a.advices {
            report
                .owners
                .insert(encoded_advice_name(&a.name, &adv.name), a.name.clone());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interference {
    pub order_independent: bool,
    /// Conflicting advice pairs owned by different aspects.
    pub offending: Vec<(String, String, usize)>,
}

impl std::fmt::Display for Interference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.order_independent {
            return f.write_str("order-independent (no cross-aspect conflicts)");
        }
        writeln!(f, "aspects may interact:")?;
        for (a, b, n) in &self.offending {
            writeln!(f, "  {a} / {b}: {n}")?;
        }
        Ok(())
    }
}

pub fn cross_aspect_interference(report: &CpaReport, d: &Aogg) -> Interference {
    let mut owners = report.owners.clone();
    for a in &d.aspects {
        for adv in &a.advices {
            owners
                .entry(encoded_advice_name(&a.name, &adv.name))
                .or_insert_with(|| a.name.clone());
        }
    }
    let offending: Vec<(String, String, usize)> = report
        .nonzero()
        .into_iter()
        .filter(|(a, b, _)| match (owners.get(*a), owners.get(*b)) {
            (Some(x), Some(y)) => x != y,
            _ => false,
        })
        .map(|(a, b, n)| (a.to_string(), b.to_string(), n))
        .collect();
    Interference {
        order_independent: offending.is_empty(),
        offending,
    }
}
