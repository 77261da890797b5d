//! Turns a parsed document into grammar and aspect values.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::syntax::{
    parse_grammar, AdviceDoc, ElemDoc, FormatError, GrammarDoc, GraphDoc, Pos, RuleDoc, SpanDoc,
    TypeDecl,
};
use crate::aogg::{
    Advice, Aogg, Aspect, Component, GraphExtension, NewEdge, NewNode, NodeRef, RuleMorphism,
};
use crate::graph::{GraphMorphism, NodeId, TypeGraph, TypedGraph};
use crate::rewrite::MatchPolicy;
use crate::rule::{validate_rule, Grammar, Rule, SpanBuilder};

/// Execution settings read from `config` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pub policy: MatchPolicy,
    pub seed: Option<u64>,
    pub max_steps: Option<usize>,
    pub snapshot_threshold: Option<usize>,
}

fn err(pos: Pos, msg: impl std::fmt::Display) -> FormatError {
    FormatError::new(pos, msg.to_string())
}

fn types_from(decls: &[TypeDecl], deferred: bool) -> Result<TypeGraph, FormatError> {
    let mut t = TypeGraph::new();
    for d in decls {
        match d {
            TypeDecl::Node { name, attrs, pos } => t
                .add_node_type(name.clone(), attrs.iter().cloned())
                .map_err(|e| err(*pos, e))?,
            TypeDecl::Edge {
                name,
                source,
                target,
                pos,
            } => {
                let r = if deferred {
                    t.add_edge_type_deferred(name.clone(), source.clone(), target.clone())
                } else {
                    t.add_edge_type(name.clone(), source.clone(), target.clone())
                };
                r.map_err(|e| err(*pos, format!("edge type `{name}`: {e}")))?
            }
        }
    }
    Ok(t)
}

fn elem_pos(e: &ElemDoc) -> Pos {
    match e {
        ElemDoc::Node { pos, .. } | ElemDoc::Edge { pos, .. } => *pos,
    }
}

/// Adds the elements of `doc` to `g`. Edges may reference labeled nodes
/// already present in `g`.
fn build_graph(
    doc: &GraphDoc,
    types: &Arc<TypeGraph>,
    g: &mut TypedGraph,
) -> Result<BTreeMap<String, NodeId>, FormatError> {
    let mut labels: BTreeMap<String, NodeId> = g
        .nodes()
        .filter_map(|(id, n)| n.label.clone().map(|l| (l, id)))
        .collect();
    let mut edge_labels: Vec<String> = g.edges().filter_map(|(_, e)| e.label.clone()).collect();
    for e in &doc.elems {
        let pos = elem_pos(e);
        match e {
            ElemDoc::Node {
                label, ty, attrs, ..
            } => {
                if labels.contains_key(label) {
                    return Err(err(pos, format!("duplicate node label `{label}`")));
                }
                if types.node_type(ty).is_none() {
                    return Err(err(pos, format!("undeclared node type `{ty}`")));
                }
                let id = g
                    .add_labeled_node(label.clone(), ty, attrs.iter().cloned())
                    .map_err(|e| err(pos, format!("node `{label}`: {e}")))?;
                labels.insert(label.clone(), id);
            }
            ElemDoc::Edge {
                label,
                ty,
                source,
                target,
                ..
            } => {
                if types.edge_type(ty).is_none() {
                    return Err(err(pos, format!("undeclared edge type `{ty}`")));
                }
                let s = *labels
                    .get(source)
                    .ok_or_else(|| err(pos, format!("unknown node `{source}`")))?;
                let t = *labels
                    .get(target)
                    .ok_or_else(|| err(pos, format!("unknown node `{target}`")))?;
                let what = label
                    .clone()
                    .unwrap_or_else(|| format!("{source} -> {target}"));
                match label {
                    Some(l) => {
                        if edge_labels.contains(l) {
                            return Err(err(pos, format!("duplicate edge label `{l}`")));
                        }
                        edge_labels.push(l.clone());
                        g.add_labeled_edge(l.clone(), ty, s, t)
                    }
                    None => g.add_edge(ty, s, t),
                }
                .map_err(|e| err(pos, format!("edge `{what}`: {e}")))?;
            }
        }
    }
    Ok(labels)
}

fn build_span(
    name: &str,
    span: &SpanDoc,
    types: &Arc<TypeGraph>,
    pos: Pos,
) -> Result<Rule, FormatError> {
    let mut b = SpanBuilder::new(types.clone());
    build_graph(&span.lhs, types, &mut b.lhs)?;
    build_graph(&span.rhs, types, &mut b.rhs)?;
    b.build(name)
        .map_err(|e| err(pos, format!("`{name}`: {e}")))
}

fn build_rule(doc: &RuleDoc, types: &Arc<TypeGraph>) -> Result<Rule, FormatError> {
    let mut rule = build_span(&doc.name, &doc.span, types, doc.pos)?;
    if let Some(b) = &doc.base {
        rule.base_name = b.clone();
    }
    rule.symbolic = doc.symbolic;
    validate_rule(&rule)
        .map_err(|v| err(doc.pos, format!("rule `{}` is ill-formed: {v:?}", doc.name)))?;
    Ok(rule)
}

fn label_map(
    from: &TypedGraph,
    to: &TypedGraph,
    what: &str,
    pos: Pos,
) -> Result<GraphMorphism, FormatError> {
    let mut m = GraphMorphism::empty();
    for (id, n) in from.nodes() {
        let label = n.label.as_deref().unwrap_or_default();
        let img = to
            .find_node_by_label(label)
            .ok_or_else(|| err(pos, format!("{what}: node `{label}` has no counterpart")))?;
        m.nodes.insert(id, img);
    }
    for (id, e) in from.edges() {
        let label = e
            .label
            .as_deref()
            .ok_or_else(|| err(pos, format!("{what}: interface edges need labels")))?;
        let img = to
            .find_edge_by_label(label)
            .ok_or_else(|| err(pos, format!("{what}: edge `{label}` has no counterpart")))?;
        m.edges.insert(id, img);
    }
    Ok(m)
}

fn rule_map(from: &Rule, to: &Rule, what: &str, pos: Pos) -> Result<RuleMorphism, FormatError> {
    let mut parts = Vec::new();
    for c in Component::ALL {
        parts.push(label_map(
            c.of(from),
            c.of(to),
            &format!("{what} ({c})"),
            pos,
        )?);
    }
    let mut parts = parts.into_iter();
    Ok(RuleMorphism {
        lhs: parts.next().unwrap(),
        interface: parts.next().unwrap(),
        rhs: parts.next().unwrap(),
    })
}

fn build_advice(doc: &AdviceDoc, types: &Arc<TypeGraph>) -> Result<Advice, FormatError> {
    let mk = |part: &str, s: &SpanDoc| -> Result<Rule, FormatError> {
        let mut r = build_span(&format!("{}.{part}", doc.name), s, types, doc.pos)?;
        r.symbolic = true;
        Ok(r)
    };
    let pointcut = mk("pointcut", &doc.pointcut)?;
    let interface = mk("interface", &doc.interface)?;
    let effect = mk("effect", &doc.effect)?;
    let to_pointcut = rule_map(&interface, &pointcut, "interface → pointcut", doc.pos)?;
    let to_effect = rule_map(&interface, &effect, "interface → effect", doc.pos)?;
    let advice = Advice {
        name: doc.name.clone(),
        pointcut,
        interface,
        effect,
        to_pointcut,
        to_effect,
    };
    advice.validate().map_err(|e| err(doc.pos, e))?;
    Ok(advice)
}

fn build_extension(
    doc: &GraphDoc,
    base: &TypedGraph,
    types: &Arc<TypeGraph>,
) -> Result<GraphExtension, FormatError> {
    let base_labels: BTreeMap<String, NodeId> = base
        .nodes()
        .filter_map(|(id, n)| n.label.clone().map(|l| (l, id)))
        .collect();
    let mut scratch = base.widened(types.clone()).map_err(|e| err(doc.pos, e))?;
    build_graph(doc, types, &mut scratch)?;
    let mut ext = GraphExtension::default();
    let mut new_index = BTreeMap::new();
    for e in &doc.elems {
        match e {
            ElemDoc::Node {
                label, ty, attrs, ..
            } => {
                new_index.insert(label.clone(), ext.nodes.len());
                ext.nodes.push(NewNode {
                    label: Some(label.clone()),
                    ty: ty.clone(),
                    attrs: attrs.clone(),
                });
            }
            ElemDoc::Edge {
                label,
                ty,
                source,
                target,
                ..
            } => {
                let resolve = |l: &String| match new_index.get(l) {
                    Some(&i) => NodeRef::New(i),
                    None => NodeRef::Existing(base_labels[l]),
                };
                ext.edges.push(NewEdge {
                    label: label.clone(),
                    ty: ty.clone(),
                    source: resolve(source),
                    target: resolve(target),
                });
            }
        }
    }
    Ok(ext)
}

fn settings(doc: &GrammarDoc) -> Result<Settings, FormatError> {
    let mut s = Settings::default();
    for c in &doc.config {
        let bad = || {
            err(
                c.pos,
                format!("invalid value `{}` for `{}`", c.value, c.key),
            )
        };
        match c.key.as_str() {
            "policy" => {
                s.policy = match c.value.as_str() {
                    "injective" => MatchPolicy::Injective,
                    "non-injective" | "non_injective" => MatchPolicy::NonInjective,
                    _ => return Err(bad()),
                }
            }
            "seed" => s.seed = Some(c.value.parse().map_err(|_| bad())?),
            "max_steps" => s.max_steps = Some(c.value.parse().map_err(|_| bad())?),
            "snapshot_threshold" => {
                s.snapshot_threshold = Some(c.value.parse().map_err(|_| bad())?)
            }
            other => return Err(err(c.pos, format!("unknown config key `{other}`"))),
        }
    }
    Ok(s)
}

/// Resolves names, builds every graph, rule and advice, and validates them.
pub fn resolve(doc: &GrammarDoc) -> Result<(Aogg, Settings), FormatError> {
    let types = Arc::new(types_from(&doc.types, false)?);
    let mut initial = TypedGraph::new(types.clone());
    if let Some(g) = &doc.initial {
        build_graph(g, &types, &mut initial)?;
    }
    let mut rules = Vec::new();
    for r in &doc.rules {
        if rules.iter().any(|x: &Rule| x.name == r.name) {
            return Err(err(r.pos, format!("duplicate rule `{}`", r.name)));
        }
        rules.push(build_rule(r, &types)?);
    }
    let base = Grammar::new(types.clone(), initial, rules).map_err(|e| err(Pos::default(), e))?;
    let mut aspects: Vec<Aspect> = Vec::new();
    for a in &doc.aspects {
        if aspects.iter().any(|x| x.name == a.name) {
            return Err(err(a.pos, format!("duplicate aspect `{}`", a.name)));
        }
        let type_extension = types_from(&a.types, true)?;
        let own = Arc::new(
            types
                .extended_with(&type_extension)
                .map_err(|e| err(a.pos, format!("aspect `{}`: {e}", a.name)))?,
        );
        let init_extension = match &a.initial {
            Some(g) => build_extension(g, &base.initial, &own)?,
            None => GraphExtension::default(),
        };
        let mut advices: Vec<Advice> = Vec::new();
        for adv in &a.advices {
            if advices.iter().any(|x| x.name == adv.name) {
                return Err(err(adv.pos, format!("duplicate advice `{}`", adv.name)));
            }
            advices.push(build_advice(adv, &own)?);
        }
        aspects.push(Aspect {
            name: a.name.clone(),
            advices,
            type_extension,
            init_extension,
        });
    }
    let d = Aogg { base, aspects };
    d.woven_types()
        .map_err(|e| err(Pos::default(), format!("aspect type extensions clash: {e}")))?;
    Ok((d, settings(doc)?))
}

/// Parses and resolves a grammar file.
pub fn load(text: &str) -> Result<(Aogg, Settings), FormatError> {
    resolve(&parse_grammar(text)?)
}
