//! Graphviz output. Element order follows identifiers, so equal inputs give
//! byte-identical text.

use std::fmt::Write as _;

use crate::aogg::Component;
use crate::cpa::CpaReport;
use crate::encoding::EncodingTrace;
use crate::graph::{NodeId, TypedGraph};
use crate::rule::Rule;

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\n")
}

fn node_text(g: &TypedGraph, id: NodeId, caption: Option<String>) -> String {
    let n = g.node(id).unwrap();
    let mut text = match caption.or_else(|| n.label.clone()) {
        Some(c) => format!("{c} : {}", n.ty),
        None => format!("n{} : {}", id.0, n.ty),
    };
    for (k, v) in &n.attrs {
        let _ = write!(text, "\n{k} = {v}");
    }
    text
}

fn body(
    out: &mut String,
    g: &TypedGraph,
    prefix: &str,
    indent: &str,
    caption: &dyn Fn(NodeId) -> Option<String>,
) {
    for (id, _) in g.nodes() {
        let _ = writeln!(
            out,
            "{indent}{prefix}n{} [label=\"{}\"];",
            id.0,
            esc(&node_text(g, id, caption(id)))
        );
    }
    for (_, e) in g.edges() {
        let _ = writeln!(
            out,
            "{indent}{prefix}n{} -> {prefix}n{} [label=\"{}\"];",
            e.source.0,
            e.target.0,
            esc(&e.ty)
        );
    }
}

pub fn graph_dot(g: &TypedGraph, name: &str) -> String {
    let mut out = format!("digraph \"{}\" {{\n", esc(name));
    body(&mut out, g, "", "  ", &|_| None);
    out.push_str("}\n");
    out
}

/// `L`, `K` and `R` as clusters, with dashed edges for both span legs.
pub fn rule_dot(rule: &Rule) -> String {
    let mut out = format!("digraph \"{}\" {{\n  rankdir=LR;\n", esc(&rule.name));
    for c in Component::ALL {
        let _ = writeln!(out, "  subgraph cluster_{c} {{\n    label=\"{c}\";");
        body(&mut out, c.of(rule), &format!("{c}_"), "    ", &|_| None);
        out.push_str("  }\n");
    }
    for (side, leg) in [(Component::L, &rule.left), (Component::R, &rule.right)] {
        for (k, x) in &leg.nodes {
            let _ = writeln!(
                out,
                "  K_n{} -> {side}_n{} [style=dashed, arrowhead=open];",
                k.0, x.0
            );
        }
    }
    out.push_str("}\n");
    out
}

/// An encoded graph with each node captioned by its origin.
pub fn encoded_dot(g: &TypedGraph, trace: &EncodingTrace, name: &str) -> String {
    let mut out = format!("digraph \"{}\" {{\n", esc(name));
    body(&mut out, g, "", "  ", &|id| Some(trace.describe_node(id)));
    out.push_str("}\n");
    out
}

/// Rules as nodes, nonzero cells as edges weighted by their count.
pub fn report_dot(report: &CpaReport) -> String {
    let mut out = format!("digraph \"{}\" {{\n", report.mode);
    for (i, r) in report.rules.iter().enumerate() {
        let _ = writeln!(out, "  r{i} [label=\"{}\"];", esc(r));
    }
    for (i, row) in report.matrix.iter().enumerate() {
        for (j, &n) in row.iter().enumerate() {
            if n > 0 {
                let _ = writeln!(out, "  r{i} -> r{j} [label=\"{n}\"];");
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TypeGraph;
    use std::sync::Arc;

    #[test]
    fn empty_graph_is_header_only() {
        let g = TypedGraph::new(Arc::new(TypeGraph::new()));
        assert_eq!(graph_dot(&g, "G"), "digraph \"G\" {\n}\n");
    }

    #[test]
    fn escapes_quotes() {
        let mut t = TypeGraph::new();
        t.add_node_type("A", [("s".to_string(), crate::attr::Sort::String)])
            .unwrap();
        let mut g = TypedGraph::new(Arc::new(t));
        g.add_node("A", [("s".into(), crate::attr::AttrTerm::str("a\"b"))])
            .unwrap();
        let dot = graph_dot(&g, "G");
        assert!(dot.contains("s = \\\"a\\\\\\\"b\\\""), "{dot}");
    }
}
