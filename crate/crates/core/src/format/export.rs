//! Converts grammar values back into documents, inventing labels where the
//! values carry none.

use std::collections::{BTreeMap, BTreeSet};

use super::resolve::Settings;
use super::syntax::{
    AdviceDoc, AspectDoc, ConfigEntry, ElemDoc, GrammarDoc, GraphDoc, Pos, RuleDoc, SpanDoc,
    TypeDecl,
};
use crate::aogg::{Advice, Aogg, Aspect, Component, NodeRef, RuleMorphism};
use crate::graph::{Elem, NodeId, TypeGraph, TypedGraph};
use crate::rewrite::MatchPolicy;
use crate::rule::{Grammar, Rule};

pub fn type_decls(t: &TypeGraph) -> Vec<TypeDecl> {
    let nodes = t.node_types().map(|n| TypeDecl::Node {
        name: n.name.clone(),
        attrs: n.attrs.iter().map(|a| (a.name.clone(), a.sort)).collect(),
        pos: Pos::default(),
    });
    let edges = t.edge_types().map(|e| TypeDecl::Edge {
        name: e.name.clone(),
        source: e.source.clone(),
        target: e.target.clone(),
        pos: Pos::default(),
    });
    nodes.chain(edges).collect()
}

#[derive(Default)]
struct Namer {
    used_nodes: BTreeSet<String>,
    used_edges: BTreeSet<String>,
}

impl Namer {
    fn fresh(&mut self, elem: Elem, hint: Option<&str>) -> String {
        let (used, prefix, id) = match elem {
            Elem::Node(n) => (&mut self.used_nodes, "n", n.0),
            Elem::Edge(e) => (&mut self.used_edges, "e", e.0),
        };
        let base = match hint {
            Some(h) if !h.is_empty() => h.to_string(),
            _ => format!("{prefix}{id}"),
        };
        let mut candidate = base.clone();
        let mut k = 2;
        while used.contains(&candidate) {
            candidate = format!("{base}_{k}");
            k += 1;
        }
        used.insert(candidate.clone());
        candidate
    }
}

fn hint(g: &TypedGraph, x: Elem) -> Option<&str> {
    match x {
        Elem::Node(n) => g.node(n)?.label.as_deref(),
        Elem::Edge(e) => g.edge(e)?.label.as_deref(),
    }
}

fn elems(g: &TypedGraph) -> Vec<Elem> {
    g.node_ids()
        .map(Elem::Node)
        .chain(g.edge_ids().map(Elem::Edge))
        .collect()
}

type Labels = BTreeMap<Elem, String>;

/// Labels for the three components of a rule so that preserved elements
/// share a label and `preset` labels are kept.
fn label_rule(rule: &Rule, preset: &[Labels; 3], namer: &mut Namer) -> [Labels; 3] {
    let mut out: [Labels; 3] = Default::default();
    for k in elems(&rule.interface) {
        let l = rule.left.elem(k).unwrap();
        let r = rule.right.elem(k).unwrap();
        let label = preset[1]
            .get(&k)
            .or_else(|| preset[0].get(&l))
            .or_else(|| preset[2].get(&r))
            .cloned()
            .unwrap_or_else(|| {
                let h = hint(&rule.lhs, l).or_else(|| hint(&rule.interface, k));
                namer.fresh(l, h)
            });
        out[0].insert(l, label.clone());
        out[1].insert(k, label.clone());
        out[2].insert(r, label);
    }
    for (i, c) in [(0, Component::L), (2, Component::R)] {
        let g = c.of(rule);
        for x in elems(g) {
            if out[i].contains_key(&x) {
                continue;
            }
            let label = preset[i]
                .get(&x)
                .cloned()
                .unwrap_or_else(|| namer.fresh(x, hint(g, x)));
            out[i].insert(x, label);
        }
    }
    out
}

fn graph_doc(g: &TypedGraph, labels: &Labels, edge_labels: bool) -> GraphDoc {
    let mut doc = GraphDoc::default();
    for (id, n) in g.nodes() {
        doc.elems.push(ElemDoc::Node {
            label: labels[&Elem::Node(id)].clone(),
            ty: n.ty.clone(),
            attrs: n
                .attrs
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            pos: Pos::default(),
        });
    }
    for (id, e) in g.edges() {
        doc.elems.push(ElemDoc::Edge {
            label: if edge_labels {
                labels.get(&Elem::Edge(id)).cloned()
            } else {
                None
            },
            ty: e.ty.clone(),
            source: labels[&Elem::Node(e.source)].clone(),
            target: labels[&Elem::Node(e.target)].clone(),
            pos: Pos::default(),
        });
    }
    doc
}

fn span_doc(rule: &Rule, labels: &[Labels; 3]) -> SpanDoc {
    SpanDoc {
        lhs: graph_doc(&rule.lhs, &labels[0], true),
        rhs: graph_doc(&rule.rhs, &labels[2], true),
    }
}

pub fn rule_doc(rule: &Rule) -> RuleDoc {
    let labels = label_rule(rule, &Default::default(), &mut Namer::default());
    RuleDoc {
        name: rule.name.clone(),
        base: (rule.base_name != rule.name).then(|| rule.base_name.clone()),
        symbolic: rule.symbolic,
        span: span_doc(rule, &labels),
        pos: Pos::default(),
    }
}

fn initial_labels(g: &TypedGraph) -> Labels {
    let mut namer = Namer::default();
    let mut labels = Labels::new();
    for (id, n) in g.nodes() {
        labels.insert(
            Elem::Node(id),
            namer.fresh(Elem::Node(id), n.label.as_deref()),
        );
    }
    for (id, e) in g.edges() {
        if let Some(l) = &e.label {
            labels.insert(Elem::Edge(id), namer.fresh(Elem::Edge(id), Some(l)));
        }
    }
    labels
}

fn initial_doc(g: &TypedGraph) -> (GraphDoc, Labels) {
    let labels = initial_labels(g);
    (graph_doc(g, &labels, true), labels)
}

fn carry(m: &RuleMorphism, from: &[Labels; 3]) -> [Labels; 3] {
    let mut out: [Labels; 3] = Default::default();
    for (i, c) in Component::ALL.into_iter().enumerate() {
        for (x, l) in &from[i] {
            out[i].insert(m.component(c).elem(*x).unwrap(), l.clone());
        }
    }
    out
}

fn advice_doc(a: &Advice) -> AdviceDoc {
    let mut namer = Namer::default();
    let interface = label_rule(&a.interface, &Default::default(), &mut namer);
    let pointcut = label_rule(&a.pointcut, &carry(&a.to_pointcut, &interface), &mut namer);
    let effect = label_rule(&a.effect, &carry(&a.to_effect, &interface), &mut namer);
    AdviceDoc {
        name: a.name.clone(),
        pointcut: span_doc(&a.pointcut, &pointcut),
        interface: span_doc(&a.interface, &interface),
        effect: span_doc(&a.effect, &effect),
        pos: Pos::default(),
    }
}

fn aspect_doc(a: &Aspect, base_labels: &Labels) -> AspectDoc {
    let mut used: BTreeSet<String> = base_labels.values().cloned().collect();
    let mut names = Vec::new();
    let mut elems = Vec::new();
    for (i, n) in a.init_extension.nodes.iter().enumerate() {
        let mut label = n.label.clone().unwrap_or_else(|| format!("x{i}"));
        let stem = label.clone();
        let mut k = 2;
        while used.contains(&label) {
            label = format!("{stem}_{k}");
            k += 1;
        }
        used.insert(label.clone());
        names.push(label.clone());
        elems.push(ElemDoc::Node {
            label,
            ty: n.ty.clone(),
            attrs: n.attrs.clone(),
            pos: Pos::default(),
        });
    }
    let name_of = |r: NodeRef| match r {
        NodeRef::New(i) => names[i].clone(),
        NodeRef::Existing(id) => base_labels[&Elem::Node(id)].clone(),
    };
    for e in &a.init_extension.edges {
        elems.push(ElemDoc::Edge {
            label: e.label.clone(),
            ty: e.ty.clone(),
            source: name_of(e.source),
            target: name_of(e.target),
            pos: Pos::default(),
        });
    }
    AspectDoc {
        name: a.name.clone(),
        types: type_decls(&a.type_extension),
        initial: (!elems.is_empty()).then(|| GraphDoc {
            elems,
            pos: Pos::default(),
        }),
        advices: a.advices.iter().map(advice_doc).collect(),
        pos: Pos::default(),
    }
}

pub fn settings_doc(s: &Settings) -> Vec<ConfigEntry> {
    let mut out = Vec::new();
    let mut push = |key: &str, value: String| {
        out.push(ConfigEntry {
            key: key.into(),
            value,
            pos: Pos::default(),
        })
    };
    if s.policy == MatchPolicy::NonInjective {
        push("policy", "non-injective".into());
    }
    if let Some(v) = s.seed {
        push("seed", v.to_string());
    }
    if let Some(v) = s.max_steps {
        push("max_steps", v.to_string());
    }
    if let Some(v) = s.snapshot_threshold {
        push("snapshot_threshold", v.to_string());
    }
    out
}

pub fn grammar_doc(g: &Grammar) -> GrammarDoc {
    let (initial, _) = initial_doc(&g.initial);
    GrammarDoc {
        types: type_decls(&g.types),
        initial: (!g.initial.is_empty()).then_some(initial),
        rules: g.rules.iter().map(rule_doc).collect(),
        aspects: Vec::new(),
        config: Vec::new(),
    }
}

pub fn aogg_doc(d: &Aogg, settings: &Settings) -> GrammarDoc {
    let mut doc = grammar_doc(&d.base);
    let labels = initial_labels(&d.base.initial);
    doc.aspects = d.aspects.iter().map(|a| aspect_doc(a, &labels)).collect();
    doc.config = settings_doc(settings);
    doc
}

/// Node ids of `g` by the labels `grammar_doc` gives them.
pub fn initial_node_labels(g: &TypedGraph) -> BTreeMap<String, NodeId> {
    initial_labels(g)
        .into_iter()
        .filter_map(|(x, l)| match x {
            Elem::Node(n) => Some((l, n)),
            Elem::Edge(_) => None,
        })
        .collect()
}
