//! Rules as monic spans `L ← K → R` and grammars built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::attr::AttrTerm;
use crate::error::GraphError;
use crate::graph::{same_types, EdgeId, Elem, GraphMorphism, NodeId, TypeGraph, TypedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "K→L",
            Side::Right => "K→R",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RuleViolation {
    #[error("{side} is not a morphism: {detail}")]
    NotMorphism { side: Side, detail: String },
    #[error("{side} is not injective")]
    NotMonic { side: Side },
    #[error("rule graphs are typed over different type graphs")]
    Typing,
    #[error("variable `{var}` used at {node} is not bound by the left-hand side")]
    UnboundVar { var: String, node: NodeId },
    #[error("interface node {node} carries a non-variable term for `{attr}`")]
    NonVarInterface { node: NodeId, attr: String },
}

/// A graph transformation rule.
///
/// `base_name` is what `rulename()` evaluates to. It equals `name` except for
/// woven rules, which keep the name of the base rule they were derived from.
///
/// A `symbolic` rule manipulates attribute terms instead of values: variables
/// of the right-hand side that the left-hand side does not bind are kept as
/// terms, and `rulename()` is not resolved. Encoded advices are symbolic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub base_name: String,
    pub lhs: TypedGraph,
    pub interface: TypedGraph,
    pub rhs: TypedGraph,
    /// `K → L`
    pub left: GraphMorphism,
    /// `K → R`
    pub right: GraphMorphism,
    pub symbolic: bool,
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        lhs: TypedGraph,
        interface: TypedGraph,
        rhs: TypedGraph,
        left: GraphMorphism,
        right: GraphMorphism,
    ) -> Self {
        let name = name.into();
        Rule {
            base_name: name.clone(),
            name,
            lhs,
            interface,
            rhs,
            left,
            right,
            symbolic: false,
        }
    }

    /// The identity rule on `g`.
    pub fn identity(name: impl Into<String>, g: &TypedGraph) -> Self {
        let id = GraphMorphism::identity(g);
        Rule::new(name, g.clone(), g.clone(), g.clone(), id.clone(), id)
    }

    pub fn empty(name: impl Into<String>, types: Arc<TypeGraph>) -> Self {
        Rule::identity(name, &TypedGraph::new(types))
    }

    pub fn types(&self) -> &Arc<TypeGraph> {
        self.lhs.types()
    }

    pub fn widened(&self, types: Arc<TypeGraph>) -> Result<Rule, GraphError> {
        Ok(Rule {
            lhs: self.lhs.widened(types.clone())?,
            interface: self.interface.widened(types.clone())?,
            rhs: self.rhs.widened(types)?,
            ..self.clone()
        })
    }

    /// Left-hand side elements not preserved by the rule.
    pub fn deleted(&self) -> BTreeSet<Elem> {
        let kept = self.left.image();
        self.lhs
            .node_ids()
            .map(Elem::Node)
            .chain(self.lhs.edge_ids().map(Elem::Edge))
            .filter(|e| !kept.contains(e))
            .collect()
    }

    /// Right-hand side elements not coming from the interface.
    pub fn created(&self) -> BTreeSet<Elem> {
        let kept = self.right.image();
        self.rhs
            .node_ids()
            .map(Elem::Node)
            .chain(self.rhs.edge_ids().map(Elem::Edge))
            .filter(|e| !kept.contains(e))
            .collect()
    }

    /// `L` element ↦ `R` element for preserved elements.
    pub fn tracking(&self) -> GraphMorphism {
        self.left.inverse().then(&self.right)
    }

    /// Attributes of left-hand node `n` whose right-hand term differs.
    pub fn written_attrs(&self, n: NodeId) -> BTreeSet<String> {
        let Some(r) = self.tracking().node(n) else {
            return BTreeSet::new();
        };
        let (ln, rn) = (self.lhs.node(n).unwrap(), self.rhs.node(r).unwrap());
        ln.attrs
            .iter()
            .filter(|(k, t)| rn.attrs.get(*k) != Some(*t))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Attributes of right-hand node `n` that the rule sets: all attributes
    /// of created nodes, changed attributes of preserved ones.
    pub fn produced_attrs(&self, n: NodeId) -> BTreeSet<String> {
        let node = self.rhs.node(n).unwrap();
        match self.right.inverse().node(n) {
            None => node.attrs.keys().cloned().collect(),
            Some(k) => {
                let l = self.left.node(k).unwrap();
                self.written_attrs(l)
            }
        }
    }

    /// Whether the rule reads attribute `attr` of left-hand node `n`: the
    /// term is a literal (a constraint), or a variable that occurs anywhere
    /// else in the rule besides its own slot.
    pub fn reads_attr(&self, n: NodeId, attr: &str) -> bool {
        let term = &self.lhs.node(n).unwrap().attrs[attr];
        let var = match term {
            AttrTerm::Var(v) => v,
            AttrTerm::Lit(_) => return true,
            _ => return true,
        };
        let own_r = self.tracking().node(n);
        let mut others = 0usize;
        for (id, node) in self.lhs.nodes() {
            for (a, t) in &node.attrs {
                if id == n && a == attr {
                    continue;
                }
                others += t.var_occurrences(var);
            }
        }
        for (id, node) in self.rhs.nodes() {
            for (a, t) in &node.attrs {
                if Some(id) == own_r && a == attr && t == term {
                    continue;
                }
                others += t.var_occurrences(var);
            }
        }
        others > 0
    }

    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        v.extend(self.interface.vars());
        v.extend(self.rhs.vars());
        v
    }
}

/// Checks the well-formedness conditions of a rule.
pub fn validate_rule(rule: &Rule) -> Result<(), Vec<RuleViolation>> {
    let mut out = Vec::new();
    if !same_types(&rule.lhs, &rule.interface) || !same_types(&rule.interface, &rule.rhs) {
        return Err(vec![RuleViolation::Typing]);
    }
    for (side, m, tgt) in [
        (Side::Left, &rule.left, &rule.lhs),
        (Side::Right, &rule.right, &rule.rhs),
    ] {
        if let Err(e) = m.check(&rule.interface, tgt) {
            out.push(RuleViolation::NotMorphism {
                side,
                detail: e.to_string(),
            });
        } else if !m.is_injective() {
            out.push(RuleViolation::NotMonic { side });
        }
    }
    // symbolic rules may preserve literal terms verbatim
    for (id, n) in rule.interface.nodes().filter(|_| !rule.symbolic) {
        for (attr, t) in &n.attrs {
            if !t.is_var() {
                out.push(RuleViolation::NonVarInterface {
                    node: id,
                    attr: attr.clone(),
                });
            }
        }
    }
    if !rule.symbolic {
        let bound = rule.lhs.vars();
        for (id, n) in rule.rhs.nodes() {
            let mut used = BTreeSet::new();
            n.attrs.values().for_each(|t| t.vars(&mut used));
            for var in used.difference(&bound) {
                out.push(RuleViolation::UnboundVar {
                    var: var.clone(),
                    node: id,
                });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("rule name `{0}` used twice")]
    DuplicateRule(String),
    #[error("rule `{rule}`: {violations:?}")]
    InvalidRule {
        rule: String,
        violations: Vec<RuleViolation>,
    },
    #[error("rule `{0}` is typed over a different type graph")]
    RuleTyping(String),
    #[error("initial graph is typed over a different type graph")]
    InitialTyping,
}

/// A typed graph grammar: type graph, initial graph, named rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub types: Arc<TypeGraph>,
    pub initial: TypedGraph,
    pub rules: Vec<Rule>,
}

impl Grammar {
    pub fn new(
        types: Arc<TypeGraph>,
        initial: TypedGraph,
        rules: Vec<Rule>,
    ) -> Result<Self, GrammarError> {
        if initial.types().as_ref() != types.as_ref() {
            return Err(GrammarError::InitialTyping);
        }
        let mut seen = BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.name.clone()) {
                return Err(GrammarError::DuplicateRule(r.name.clone()));
            }
            if r.types().as_ref() != types.as_ref() {
                return Err(GrammarError::RuleTyping(r.name.clone()));
            }
            validate_rule(r).map_err(|violations| GrammarError::InvalidRule {
                rule: r.name.clone(),
                violations,
            })?;
        }
        Ok(Grammar {
            types,
            initial,
            rules,
        })
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn rule_names(&self) -> Vec<String> {
        self.rules.iter().map(|r| r.name.clone()).collect()
    }
}

/// Convenience builder for rules whose interface is the set of elements
/// shared by name between the two sides. Used by tests and the fixture code.
#[derive(Debug, Clone)]
pub struct SpanBuilder {
    pub lhs: TypedGraph,
    pub rhs: TypedGraph,
}

impl SpanBuilder {
    pub fn new(types: Arc<TypeGraph>) -> Self {
        SpanBuilder {
            lhs: TypedGraph::new(types.clone()),
            rhs: TypedGraph::new(types),
        }
    }

    /// Builds the span; elements with equal labels on both sides form `K`.
    /// Interface attributes are the left-hand term when it is a variable and
    /// a slot variable `_<label>_<attr>` otherwise.
    pub fn build(self, name: impl Into<String>) -> Result<Rule, GraphError> {
        let types = self.lhs.types().clone();
        let mut k = TypedGraph::new(types);
        let mut left = GraphMorphism::empty();
        let mut right = GraphMorphism::empty();
        let mut kn: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for (lid, ln) in self.lhs.nodes() {
            let Some(label) = &ln.label else { continue };
            let Some(rid) = self.rhs.find_node_by_label(label) else {
                continue;
            };
            let attrs: BTreeMap<String, AttrTerm> = ln
                .attrs
                .iter()
                .map(|(a, t)| {
                    let term = if t.is_var() {
                        t.clone()
                    } else {
                        AttrTerm::var(format!("_{label}_{a}"))
                    };
                    (a.clone(), term)
                })
                .collect();
            let id = k.add_labeled_node(label.clone(), &ln.ty, attrs)?;
            left.nodes.insert(id, lid);
            right.nodes.insert(id, rid);
            kn.insert(lid, id);
        }
        for (lid, le) in self.lhs.edges() {
            let Some(label) = &le.label else { continue };
            let Some(rid) = self.rhs.find_edge_by_label(label) else {
                continue;
            };
            let (Some(s), Some(t)) = (kn.get(&le.source), kn.get(&le.target)) else {
                continue;
            };
            let id: EdgeId = k.add_labeled_edge(label.clone(), &le.ty, *s, *t)?;
            left.edges.insert(id, lid);
            right.edges.insert(id, rid);
        }
        let rule = Rule::new(name, self.lhs, k, self.rhs, left, right);
        rule.left.check(&rule.interface, &rule.lhs)?;
        rule.right.check(&rule.interface, &rule.rhs)?;
        Ok(rule)
    }
}

/// Span isomorphism up to renaming of attribute variables: isomorphisms of
/// `L`, `K` and `R` commuting with both legs, with one shared renaming.
pub fn rules_isomorphic(a: &Rule, b: &Rule) -> bool {
    use crate::attr::AlphaMap;
    use crate::search::{for_each_homomorphism, isomorphisms_modulo_vars, SearchOptions};
    use std::ops::ControlFlow;

    if a.lhs.node_count() != b.lhs.node_count()
        || a.lhs.edge_count() != b.lhs.edge_count()
        || a.interface.node_count() != b.interface.node_count()
        || a.interface.edge_count() != b.interface.edge_count()
        || a.rhs.node_count() != b.rhs.node_count()
        || a.rhs.edge_count() != b.rhs.edge_count()
        || !same_types(&a.lhs, &b.lhs)
    {
        return false;
    }
    let node_ok = |p: NodeId, h: NodeId| {
        let (pa, hb) = (&a.lhs.node(p).unwrap().attrs, &b.lhs.node(h).unwrap().attrs);
        pa.iter()
            .all(|(k, t)| t.may_match(&hb[k]) && hb[k].may_match(t))
    };
    let opts = SearchOptions {
        injective: true,
        node_ok: Some(&node_ok),
        fixed: None,
    };
    let mut found = false;
    let _ = for_each_homomorphism(&a.lhs, &b.lhs, opts, |f_l| {
        let mut alpha = AlphaMap::default();
        let lhs_ok = f_l.nodes.iter().all(|(p, h)| {
            let (pa, hb) = (
                &a.lhs.node(*p).unwrap().attrs,
                &b.lhs.node(*h).unwrap().attrs,
            );
            pa.iter().all(|(k, t)| alpha.unify(t, &hb[k]))
        });
        if !lhs_ok {
            return ControlFlow::Continue(());
        }
        // K is determined by the left legs.
        let f_k = a.left.then(f_l).then(&b.left.inverse());
        if f_k.nodes.len() != a.interface.node_count()
            || f_k.edges.len() != a.interface.edge_count()
        {
            return ControlFlow::Continue(());
        }
        let Some((_, alpha)) =
            isomorphisms_modulo_vars(&a.interface, &b.interface, Some(&f_k), alpha)
        else {
            return ControlFlow::Continue(());
        };
        let fixed_r = a.right.inverse().then(&f_k).then(&b.right);
        if isomorphisms_modulo_vars(&a.rhs, &b.rhs, Some(&fixed_r), alpha).is_some() {
            found = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    found
}
