use std::fmt::Write as _;

use super::syntax::{
    is_plain_ident, AdviceDoc, AspectDoc, ElemDoc, GrammarDoc, GraphDoc, RuleDoc, SpanDoc,
    TypeDecl, KEYWORDS,
};
use crate::attr::{AttrTerm, Sort, Value};

/// Renders a name, quoting it with backticks when it is not a plain
/// identifier or collides with a keyword.
pub fn name(s: &str) -> String {
    if is_plain_ident(s) && !KEYWORDS.contains(&s) {
        s.to_string()
    } else {
        format!("`{s}`")
    }
}

fn attr_name(s: &str) -> String {
    if is_plain_ident(s) {
        s.to_string()
    } else {
        format!("`{s}`")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn term(t: &AttrTerm) -> String {
    match t {
        AttrTerm::Lit(Value::Str(s)) => quote(s),
        AttrTerm::Lit(Value::Int(i)) => i.to_string(),
        AttrTerm::Lit(Value::Bool(b)) => b.to_string(),
        AttrTerm::Var(v) => name(v),
        AttrTerm::RuleName => "rulename()".to_string(),
        AttrTerm::Concat(parts) => parts.iter().map(term).collect::<Vec<_>>().join(" ++ "),
    }
}

fn sort(s: Sort) -> &'static str {
    match s {
        Sort::String => "string",
        Sort::Int => "int",
        Sort::Bool => "bool",
    }
}

fn type_decl(out: &mut String, indent: &str, d: &TypeDecl) {
    match d {
        TypeDecl::Node { name: n, attrs, .. } => {
            let _ = write!(out, "{indent}type node {}", name(n));
            for (a, s) in attrs {
                let _ = write!(out, " {}:{}", attr_name(a), sort(*s));
            }
            out.push('\n');
        }
        TypeDecl::Edge {
            name: n,
            source,
            target,
            ..
        } => {
            let _ = writeln!(
                out,
                "{indent}type edge {} {} -> {}",
                name(n),
                name(source),
                name(target)
            );
        }
    }
}

fn graph(out: &mut String, indent: &str, kw: &str, g: &GraphDoc) {
    let _ = writeln!(out, "{indent}{kw}");
    for e in &g.elems {
        match e {
            ElemDoc::Node {
                label, ty, attrs, ..
            } => {
                let _ = write!(out, "{indent}  node {} : {}", name(label), name(ty));
                for (a, t) in attrs {
                    let _ = write!(out, " {}={}", attr_name(a), term(t));
                }
                out.push('\n');
            }
            ElemDoc::Edge {
                label,
                ty,
                source,
                target,
                ..
            } => {
                let _ = write!(out, "{indent}  edge ");
                if let Some(l) = label {
                    let _ = write!(out, "{} : ", name(l));
                }
                let _ = writeln!(out, "{} {} -> {}", name(ty), name(source), name(target));
            }
        }
    }
    let _ = writeln!(out, "{indent}end");
}

fn span(out: &mut String, indent: &str, s: &SpanDoc) {
    graph(out, indent, "lhs", &s.lhs);
    graph(out, indent, "rhs", &s.rhs);
}

fn rule(out: &mut String, r: &RuleDoc) {
    let _ = write!(out, "rule {}", name(&r.name));
    if let Some(b) = &r.base {
        let _ = write!(out, " base {}", name(b));
    }
    if r.symbolic {
        out.push_str(" symbolic");
    }
    out.push('\n');
    span(out, "  ", &r.span);
    out.push_str("end\n");
}

fn advice(out: &mut String, a: &AdviceDoc) {
    let _ = writeln!(out, "  advice {}", name(&a.name));
    for (kw, s) in [
        ("pointcut", &a.pointcut),
        ("interface", &a.interface),
        ("effect", &a.effect),
    ] {
        let _ = writeln!(out, "    {kw}");
        span(out, "      ", s);
        out.push_str("    end\n");
    }
    out.push_str("  end\n");
}

fn aspect(out: &mut String, a: &AspectDoc) {
    let _ = writeln!(out, "aspect {}", name(&a.name));
    for d in &a.types {
        type_decl(out, "  ", d);
    }
    if let Some(g) = &a.initial {
        graph(out, "  ", "initial", g);
    }
    for adv in &a.advices {
        advice(out, adv);
    }
    out.push_str("end\n");
}

fn config_value(v: &str) -> String {
    if v.parse::<i64>().is_ok_and(|i| i.to_string() == v) {
        v.to_string()
    } else if is_plain_ident(v) {
        name(v)
    } else {
        quote(v)
    }
}

/// Renders a document in the canonical layout accepted by `parse_grammar`.
pub fn print_grammar(doc: &GrammarDoc) -> String {
    let mut out = String::new();
    for d in &doc.types {
        type_decl(&mut out, "", d);
    }
    if let Some(g) = &doc.initial {
        out.push('\n');
        graph(&mut out, "", "initial", g);
    }
    for r in &doc.rules {
        out.push('\n');
        rule(&mut out, r);
    }
    for a in &doc.aspects {
        out.push('\n');
        aspect(&mut out, a);
    }
    if !doc.config.is_empty() {
        out.push('\n');
    }
    for c in &doc.config {
        let _ = writeln!(out, "config {} {}", name(&c.key), config_value(&c.value));
    }
    out
}
