//! Aspect-oriented grammars: advices rewrite rules by double pushouts in the
//! category of rules, and weaving folds the aspects over a base grammar.

use std::collections::BTreeSet;
use std::ops::ControlFlow;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::attr::{AttrTerm, Binding};
use crate::construct::{pushout, pushout_complement, Pushout, PushoutComplement};
use crate::error::{GluingViolation, GraphError};
use crate::graph::{EdgeId, GraphMorphism, NodeId, TypeGraph, TypedGraph};
use crate::rewrite::literal_filter;
use crate::rule::{rules_isomorphic, validate_rule, Grammar, GrammarError, Rule, RuleViolation};
use crate::search::is_isomorphic;
use crate::search::{for_each_homomorphism, SearchOptions};

/// One of the three graph components of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Component {
    L,
    K,
    R,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::L, Component::K, Component::R];

    pub fn of(self, rule: &Rule) -> &TypedGraph {
        match self {
            Component::L => &rule.lhs,
            Component::K => &rule.interface,
            Component::R => &rule.rhs,
        }
    }
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AoggError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("rule morphism {0}")]
    RuleMorphism(String),
    #[error("advice `{advice}` on rule `{rule}`: gluing fails on {component}: {violation}")]
    Gluing {
        advice: String,
        rule: String,
        component: Component,
        violation: GluingViolation,
    },
    #[error("advice `{advice}` on rule `{rule}` yields an ill-formed rule: {violations:?}")]
    IllFormedResult {
        advice: String,
        rule: String,
        violations: Vec<RuleViolation>,
    },
    #[error("advice `{advice}`: {detail}")]
    InvalidAdvice { advice: String, detail: String },
    #[error("unknown aspect `{0}`")]
    UnknownAspect(String),
    #[error("aspect order must be a permutation of the declared aspects")]
    BadOrder,
}

/// Componentwise morphism between two rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleMorphism {
    pub lhs: GraphMorphism,
    pub interface: GraphMorphism,
    pub rhs: GraphMorphism,
}

impl RuleMorphism {
    pub fn component(&self, c: Component) -> &GraphMorphism {
        match c {
            Component::L => &self.lhs,
            Component::K => &self.interface,
            Component::R => &self.rhs,
        }
    }

    pub fn is_injective(&self) -> bool {
        self.lhs.is_injective() && self.interface.is_injective() && self.rhs.is_injective()
    }

    /// Checks that each component is a morphism and both inner squares commute.
    pub fn check(&self, src: &Rule, tgt: &Rule) -> Result<(), AoggError> {
        for c in Component::ALL {
            self.component(c)
                .check(c.of(src), c.of(tgt))
                .map_err(|e| AoggError::RuleMorphism(format!("{c}: {e}")))?;
        }
        if src.left.then(&self.lhs) != self.interface.then(&tgt.left) {
            return Err(AoggError::RuleMorphism(
                "left square does not commute".into(),
            ));
        }
        if src.right.then(&self.rhs) != self.interface.then(&tgt.right) {
            return Err(AoggError::RuleMorphism(
                "right square does not commute".into(),
            ));
        }
        Ok(())
    }
}

/// A second-order rule `pointcut ← interface → effect`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Advice {
    pub name: String,
    pub pointcut: Rule,
    pub interface: Rule,
    pub effect: Rule,
    /// `interface → pointcut`
    pub to_pointcut: RuleMorphism,
    /// `interface → effect`
    pub to_effect: RuleMorphism,
}

impl Advice {
    pub fn validate(&self) -> Result<(), AoggError> {
        let bad = |detail: String| AoggError::InvalidAdvice {
            advice: self.name.clone(),
            detail,
        };
        for r in [&self.pointcut, &self.interface] {
            validate_rule(r).map_err(|v| bad(format!("{}: {v:?}", r.name)))?;
        }
        // effects may introduce variables of their own (e.g. a new story)
        let mut effect = self.effect.clone();
        effect.symbolic = true;
        validate_rule(&effect).map_err(|v| bad(format!("effect: {v:?}")))?;
        self.to_pointcut
            .check(&self.interface, &self.pointcut)
            .map_err(|e| bad(format!("interface→pointcut: {e}")))?;
        self.to_effect
            .check(&self.interface, &self.effect)
            .map_err(|e| bad(format!("interface→effect: {e}")))?;
        if !self.to_pointcut.is_injective() || !self.to_effect.is_injective() {
            return Err(bad("advice span is not monic".into()));
        }
        Ok(())
    }

    pub fn widened(&self, types: Arc<TypeGraph>) -> Result<Advice, GraphError> {
        Ok(Advice {
            pointcut: self.pointcut.widened(types.clone())?,
            interface: self.interface.widened(types.clone())?,
            effect: self.effect.widened(types)?,
            ..self.clone()
        })
    }

    pub fn types(&self) -> &Arc<TypeGraph> {
        self.pointcut.types()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeRef {
    Existing(NodeId),
    New(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewNode {
    pub label: Option<String>,
    pub ty: String,
    pub attrs: Vec<(String, AttrTerm)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewEdge {
    pub label: Option<String>,
    pub ty: String,
    pub source: NodeRef,
    pub target: NodeRef,
}

/// Elements an aspect adds to the initial graph. Edges may attach to
/// existing nodes of the base initial graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphExtension {
    pub nodes: Vec<NewNode>,
    pub edges: Vec<NewEdge>,
}

impl GraphExtension {
    /// Returns `G′` and the inclusion `G → G′`.
    pub fn apply(
        &self,
        g: &TypedGraph,
        types: Arc<TypeGraph>,
    ) -> Result<(TypedGraph, GraphMorphism), GraphError> {
        let mut out = g.widened(types)?;
        let inclusion = GraphMorphism::identity(g);
        let mut fresh = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let id = match &n.label {
                Some(l) => out.add_labeled_node(l.clone(), &n.ty, n.attrs.clone())?,
                None => out.add_node(&n.ty, n.attrs.clone())?,
            };
            fresh.push(id);
        }
        let resolve = |r: NodeRef| match r {
            NodeRef::Existing(id) => id,
            NodeRef::New(i) => fresh[i],
        };
        for e in &self.edges {
            let (s, t) = (resolve(e.source), resolve(e.target));
            match &e.label {
                Some(l) => out.add_labeled_edge(l.clone(), &e.ty, s, t)?,
                None => out.add_edge(&e.ty, s, t)?,
            };
        }
        Ok((out, inclusion))
    }
}

/// Advices plus the type-graph and initial-graph extensions they need.
///
/// Extensions are stored as additions so that an aspect can be woven on top
/// of any accumulated grammar; the advices are typed over the base type
/// graph extended with this aspect's own declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aspect {
    pub name: String,
    pub advices: Vec<Advice>,
    pub type_extension: TypeGraph,
    pub init_extension: GraphExtension,
}

/// A base grammar with an ordered sequence of aspects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aogg {
    pub base: Grammar,
    pub aspects: Vec<Aspect>,
}

impl Aogg {
    pub fn aspect(&self, name: &str) -> Option<&Aspect> {
        self.aspects.iter().find(|a| a.name == name)
    }

    /// The base type graph extended by every aspect, in declaration order.
    pub fn woven_types(&self) -> Result<Arc<TypeGraph>, GraphError> {
        let mut t = self.base.types.as_ref().clone();
        for a in &self.aspects {
            t = t.extended_with(&a.type_extension)?;
        }
        Ok(Arc::new(t))
    }

    pub fn advice_count(&self) -> usize {
        self.aspects.iter().map(|a| a.advices.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdviceMatch {
    /// `pointcut → rule`
    pub morphism: RuleMorphism,
    pub binding: Binding,
}

fn bind_component(
    pattern: &TypedGraph,
    host: &TypedGraph,
    m: &GraphMorphism,
    binding: &mut Binding,
) -> bool {
    crate::rewrite::bind_attributes(pattern, host, m, binding)
}

/// All componentwise-injective rule morphisms `pointcut → rule` whose inner
/// squares commute and whose attribute terms match under one binding.
pub fn find_advice_matches(advice: &Advice, rule: &Rule) -> Result<Vec<AdviceMatch>, AoggError> {
    let p = &advice.pointcut;
    if p.types().as_ref() != rule.types().as_ref() {
        return Err(GraphError::TypeGraphMismatch.into());
    }
    let mut out = Vec::new();
    let filter_l = literal_filter(&p.lhs, &rule.lhs);
    let opts = SearchOptions {
        injective: true,
        node_ok: Some(&filter_l),
        fixed: None,
    };
    let rule_left_inv = rule.left.inverse();
    let mut err = None;
    for_each_homomorphism(&p.lhs, &rule.lhs, opts, |f_l| {
        // the interface component is forced by commutativity of the left square
        let f_k = p.left.then(f_l).then(&rule_left_inv);
        if f_k.nodes.len() != p.interface.node_count()
            || f_k.edges.len() != p.interface.edge_count()
        {
            return ControlFlow::Continue(());
        }
        if f_k.check(&p.interface, &rule.interface).is_err() {
            return ControlFlow::Continue(());
        }
        let mut base = Binding::new();
        if !bind_component(&p.lhs, &rule.lhs, f_l, &mut base)
            || !bind_component(&p.interface, &rule.interface, &f_k, &mut base)
        {
            return ControlFlow::Continue(());
        }
        let fixed = p.right.inverse().then(&f_k).then(&rule.right);
        let filter_r = literal_filter(&p.rhs, &rule.rhs);
        let ropts = SearchOptions {
            injective: true,
            node_ok: Some(&filter_r),
            fixed: Some(&fixed),
        };
        let res = for_each_homomorphism(&p.rhs, &rule.rhs, ropts, |f_r| {
            let mut binding = base.clone();
            if bind_component(&p.rhs, &rule.rhs, f_r, &mut binding) {
                out.push(AdviceMatch {
                    morphism: RuleMorphism {
                        lhs: f_l.clone(),
                        interface: f_k.clone(),
                        rhs: f_r.clone(),
                    },
                    binding,
                });
            }
            ControlFlow::Continue(())
        });
        if let Err(e) = res {
            err = Some(e);
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(out)
}

/// Binds the effect's own variables, renaming those that would capture a
/// variable already used by the rule.
fn freshen_effect_vars(advice: &Advice, rule: &Rule, binding: &Binding) -> Binding {
    let mut binding = binding.clone();
    let mut effect_vars = advice.effect.all_vars();
    effect_vars.extend(advice.pointcut.all_vars());
    let mut taken: BTreeSet<String> = rule.all_vars();
    taken.extend(effect_vars.iter().cloned());
    for v in advice.effect.all_vars() {
        if binding.contains_key(&v) {
            continue;
        }
        if !rule.all_vars().contains(&v) {
            continue;
        }
        let fresh = (1..)
            .map(|i| format!("{v}_{i}"))
            .find(|c| !taken.contains(c))
            .unwrap();
        taken.insert(fresh.clone());
        binding.insert(v, AttrTerm::Var(fresh));
    }
    binding
}

struct ComponentRewrite {
    complement: PushoutComplement,
    glued: Pushout,
}

/// Maps an element of a glued interface graph to the glued left/right graph.
fn induced_leg(
    k: &ComponentRewrite,
    x: &ComponentRewrite,
    rule_leg: &GraphMorphism,
    effect_leg: &GraphMorphism,
    advice: &Advice,
    rule: &Rule,
) -> Result<GraphMorphism, AoggError> {
    let ill = |detail: &str| AoggError::IllFormedResult {
        advice: advice.name.clone(),
        rule: rule.name.clone(),
        violations: vec![RuleViolation::NotMorphism {
            side: crate::rule::Side::Left,
            detail: detail.to_string(),
        }],
    };
    let from_d = k.glued.from_left.inverse();
    let from_e = k.glued.from_right.inverse();
    let mut leg = GraphMorphism::empty();
    for h in k.glued.graph.node_ids() {
        let image = if let Some(d) = from_d.node(h) {
            let target = rule_leg
                .node(d)
                .ok_or_else(|| ill("interface node without image"))?;
            if x.complement.graph.node(target).is_none() {
                return Err(ill("advice deletes the image of a preserved rule node"));
            }
            x.glued.from_left.nodes[&target]
        } else {
            let e = from_e.node(h).expect("pushout is jointly surjective");
            x.glued.from_right.nodes[&effect_leg.nodes[&e]]
        };
        leg.nodes.insert(h, image);
    }
    for h in k.glued.graph.edge_ids() {
        let image: EdgeId = if let Some(d) = from_d.edge(h) {
            let target = rule_leg
                .edge(d)
                .ok_or_else(|| ill("interface edge without image"))?;
            if x.complement.graph.edge(target).is_none() {
                return Err(ill("advice deletes the image of a preserved rule edge"));
            }
            x.glued.from_left.edges[&target]
        } else {
            let e = from_e.edge(h).expect("pushout is jointly surjective");
            x.glued.from_right.edges[&effect_leg.edges[&e]]
        };
        leg.edges.insert(h, image);
    }
    Ok(leg)
}

/// Rewrites `rule` with `advice` at `m`: a pushout complement followed by a
/// pushout on each of the three components, with the induced span legs.
pub fn apply_advice(advice: &Advice, m: &AdviceMatch, rule: &Rule) -> Result<Rule, AoggError> {
    let binding = freshen_effect_vars(advice, rule, &m.binding);
    let mut parts = Vec::with_capacity(3);
    for c in Component::ALL {
        let complement = pushout_complement(
            advice.to_pointcut.component(c),
            c.of(&advice.pointcut),
            m.morphism.component(c),
            c.of(rule),
        )
        .map_err(|violation| AoggError::Gluing {
            advice: advice.name.clone(),
            rule: rule.name.clone(),
            component: c,
            violation,
        })?;
        let glued = pushout(
            &complement.from_interface,
            &complement.graph,
            advice.to_effect.component(c),
            c.of(&advice.effect),
        )?;
        parts.push(ComponentRewrite { complement, glued });
    }
    for (part, c) in parts.iter_mut().zip(Component::ALL) {
        let effect = c.of(&advice.effect);
        for (n, node) in effect.nodes() {
            let h = part.glued.from_right.nodes[&n];
            for (attr, term) in &node.attrs {
                part.glued
                    .graph
                    .set_attr(h, attr, term.substitute(&binding))?;
            }
        }
    }
    let left = induced_leg(
        &parts[1],
        &parts[0],
        &rule.left,
        &advice.effect.left,
        advice,
        rule,
    )?;
    let right = induced_leg(
        &parts[1],
        &parts[2],
        &rule.right,
        &advice.effect.right,
        advice,
        rule,
    )?;
    let mut graphs = parts.into_iter().map(|p| p.glued.graph);
    let (lhs, interface, rhs) = (
        graphs.next().unwrap(),
        graphs.next().unwrap(),
        graphs.next().unwrap(),
    );
    let woven = Rule {
        name: rule.name.clone(),
        base_name: rule.base_name.clone(),
        lhs,
        interface,
        rhs,
        left,
        right,
        symbolic: rule.symbolic,
    };
    validate_rule(&woven).map_err(|violations| AoggError::IllFormedResult {
        advice: advice.name.clone(),
        rule: rule.name.clone(),
        violations,
    })?;
    Ok(woven)
}

pub fn woven_rule_name(rule: &str, advice: &str, k: usize) -> String {
    format!("{rule}@{advice}#{k}")
}

/// Weaves one aspect: unmatched rules are kept, every matched rule is
/// replaced by one rewritten rule per (advice, match) pair.
pub fn weave_aspect(g: &Grammar, aspect: &Aspect) -> Result<Grammar, AoggError> {
    let types = Arc::new(g.types.extended_with(&aspect.type_extension)?);
    let (initial, _) = aspect.init_extension.apply(&g.initial, types.clone())?;
    let advices = aspect
        .advices
        .iter()
        .map(|a| a.widened(types.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rules = Vec::new();
    for rule in &g.rules {
        let rule = rule.widened(types.clone())?;
        let mut rewritten = Vec::new();
        for advice in &advices {
            for (k, m) in find_advice_matches(advice, &rule)?.iter().enumerate() {
                let mut woven = apply_advice(advice, m, &rule)?;
                woven.name = woven_rule_name(&rule.name, &advice.name, k);
                rewritten.push(woven);
            }
        }
        if rewritten.is_empty() {
            rules.push(rule);
        } else {
            rules.extend(rewritten);
        }
    }
    Ok(Grammar::new(types, initial, rules)?)
}

/// Weaves the aspects named in `order` (a permutation of the declared ones).
pub fn weave_in_order(d: &Aogg, order: &[&str]) -> Result<Grammar, AoggError> {
    let declared: BTreeSet<&str> = d.aspects.iter().map(|a| a.name.as_str()).collect();
    let requested: BTreeSet<&str> = order.iter().copied().collect();
    if declared != requested || order.len() != d.aspects.len() {
        return Err(AoggError::BadOrder);
    }
    let mut g = d.base.clone();
    for name in order {
        let a = d
            .aspect(name)
            .ok_or_else(|| AoggError::UnknownAspect(name.to_string()))?;
        g = weave_aspect(&g, a)?;
    }
    Ok(g)
}

pub fn weave_all(d: &Aogg) -> Result<Grammar, AoggError> {
    let order: Vec<&str> = d.aspects.iter().map(|a| a.name.as_str()).collect();
    weave_in_order(d, &order)
}

/// Equal type graphs, isomorphic initial graphs, and a bijection between
/// rule sets relating isomorphic spans. Rule names are ignored.
pub fn grammars_isomorphic(a: &Grammar, b: &Grammar) -> bool {
    if a.types != b.types || a.rules.len() != b.rules.len() {
        return false;
    }
    if is_isomorphic(&a.initial, &b.initial).is_none() {
        return false;
    }
    let compatible: Vec<Vec<bool>> = a
        .rules
        .iter()
        .map(|ra| b.rules.iter().map(|rb| rules_isomorphic(ra, rb)).collect())
        .collect();
    perfect_matching(&compatible)
}

fn perfect_matching(adj: &[Vec<bool>]) -> bool {
    fn augment(
        u: usize,
        adj: &[Vec<bool>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for v in 0..adj[u].len() {
            if adj[u][v] && !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let n = adj.len();
    let mut owner = vec![None; n];
    (0..n).all(|u| augment(u, adj, &mut vec![false; n], &mut owner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attr::Sort;
    use crate::rule::SpanBuilder;

    fn types() -> Arc<TypeGraph> {
        let mut t = TypeGraph::new();
        t.add_node_type("V", [("x".to_string(), Sort::Int)])
            .unwrap();
        t.add_edge_type("E", "V", "V").unwrap();
        Arc::new(t)
    }

    fn empty_advice(t: Arc<TypeGraph>) -> Advice {
        let e = Rule::empty("empty", t);
        Advice {
            name: "noop".into(),
            pointcut: e.clone(),
            interface: e.clone(),
            effect: e,
            to_pointcut: RuleMorphism::default(),
            to_effect: RuleMorphism::default(),
        }
    }

    fn sample_rule(t: Arc<TypeGraph>) -> Rule {
        let mut b = SpanBuilder::new(t);
        let a = b
            .lhs
            .add_labeled_node("a", "V", [("x".into(), AttrTerm::var("v"))])
            .unwrap();
        let c = b
            .lhs
            .add_labeled_node("c", "V", [("x".into(), AttrTerm::int(1))])
            .unwrap();
        b.lhs.add_labeled_edge("e", "E", a, c).unwrap();
        b.rhs
            .add_labeled_node("a", "V", [("x".into(), AttrTerm::var("v"))])
            .unwrap();
        b.build("r").unwrap()
    }

    #[test]
    fn empty_advice_leaves_rule() {
        let t = types();
        let adv = empty_advice(t.clone());
        adv.validate().unwrap();
        let r = sample_rule(t);
        let ms = find_advice_matches(&adv, &r).unwrap();
        assert_eq!(ms.len(), 1);
        let out = apply_advice(&adv, &ms[0], &r).unwrap();
        assert!(rules_isomorphic(&out, &r));
    }

    #[test]
    fn identical_pointcut_matches_identically() {
        let t = types();
        let r = sample_rule(t.clone());
        let adv = Advice {
            name: "self".into(),
            pointcut: r.clone(),
            interface: r.clone(),
            effect: r.clone(),
            to_pointcut: RuleMorphism {
                lhs: GraphMorphism::identity(&r.lhs),
                interface: GraphMorphism::identity(&r.interface),
                rhs: GraphMorphism::identity(&r.rhs),
            },
            to_effect: RuleMorphism {
                lhs: GraphMorphism::identity(&r.lhs),
                interface: GraphMorphism::identity(&r.interface),
                rhs: GraphMorphism::identity(&r.rhs),
            },
        };
        adv.validate().unwrap();
        let ms = find_advice_matches(&adv, &r).unwrap();
        assert!(ms
            .iter()
            .any(|m| m.morphism.lhs == GraphMorphism::identity(&r.lhs)));
    }

    #[test]
    fn no_advices_extends_only() {
        let t = types();
        let g = Grammar::new(
            t.clone(),
            TypedGraph::new(t.clone()),
            vec![sample_rule(t.clone())],
        )
        .unwrap();
        let mut ext = TypeGraph::new();
        ext.add_node_type("W", []).unwrap();
        let aspect = Aspect {
            name: "a".into(),
            advices: vec![],
            type_extension: ext,
            init_extension: GraphExtension {
                nodes: vec![NewNode {
                    label: None,
                    ty: "W".into(),
                    attrs: vec![],
                }],
                edges: vec![],
            },
        };
        let w = weave_aspect(&g, &aspect).unwrap();
        assert_eq!(w.rules.len(), 1);
        assert_eq!(
            w.rules[0].lhs.nodes().collect::<Vec<_>>(),
            g.rules[0].lhs.nodes().collect::<Vec<_>>()
        );
        assert_eq!(w.initial.node_count(), 1);
        assert!(w.types.node_type("W").is_some());
    }

    #[test]
    fn matching_is_bipartite() {
        assert!(perfect_matching(&[vec![true, true], vec![true, false]]));
        assert!(!perfect_matching(&[vec![true, false], vec![true, false]]));
    }
}
