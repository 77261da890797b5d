//! Document model and parser for the grammar text format.

use std::fmt;

use thiserror::Error;

use crate::attr::{AttrTerm, Sort, Value};

/// Source position, 1-based. Positions never take part in equality, so a
/// printed and re-parsed document compares equal to the original.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct FormatError {
    pub pos: Pos,
    pub message: String,
}

impl FormatError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        FormatError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDecl {
    Node {
        name: String,
        attrs: Vec<(String, Sort)>,
        pos: Pos,
    },
    Edge {
        name: String,
        source: String,
        target: String,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElemDoc {
    Node {
        label: String,
        ty: String,
        attrs: Vec<(String, AttrTerm)>,
        pos: Pos,
    },
    Edge {
        label: Option<String>,
        ty: String,
        source: String,
        target: String,
        pos: Pos,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphDoc {
    pub elems: Vec<ElemDoc>,
    pub pos: Pos,
}

/// A span given by its two sides; the interface is the set of elements
/// whose labels occur on both.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanDoc {
    pub lhs: GraphDoc,
    pub rhs: GraphDoc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDoc {
    pub name: String,
    pub base: Option<String>,
    pub symbolic: bool,
    pub span: SpanDoc,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdviceDoc {
    pub name: String,
    pub pointcut: SpanDoc,
    pub interface: SpanDoc,
    pub effect: SpanDoc,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectDoc {
    pub name: String,
    pub types: Vec<TypeDecl>,
    pub initial: Option<GraphDoc>,
    pub advices: Vec<AdviceDoc>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrammarDoc {
    pub types: Vec<TypeDecl>,
    pub initial: Option<GraphDoc>,
    pub rules: Vec<RuleDoc>,
    pub aspects: Vec<AspectDoc>,
    pub config: Vec<ConfigEntry>,
}

impl GrammarDoc {
    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
            && self.initial.is_none()
            && self.rules.is_empty()
            && self.aspects.is_empty()
    }
}

pub(crate) const KEYWORDS: &[&str] = &[
    "type",
    "node",
    "edge",
    "initial",
    "end",
    "rule",
    "lhs",
    "rhs",
    "aspect",
    "advice",
    "pointcut",
    "interface",
    "effect",
    "config",
    "base",
    "symbolic",
    "true",
    "false",
    "rulename",
];

pub(crate) fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident { name: String, quoted: bool },
    Str(String),
    Int(i64),
    Colon,
    Arrow,
    Eq,
    Concat,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident { name, .. } => write!(f, "`{name}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Concat => f.write_str("`++`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
        }
    }
}

struct Line {
    toks: Vec<(Tok, Pos)>,
    pos: Pos,
    end_col: usize,
}

/// Tokens of one line and the column just past the last of them.
fn lex_line(text: &str, line: usize) -> Result<(Vec<(Tok, Pos)>, usize), FormatError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut end = 1;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col: i + 1 };
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '#' => break,
            ':' => {
                out.push((Tok::Colon, pos));
                i += 1;
            }
            '=' => {
                out.push((Tok::Eq, pos));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, pos));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, pos));
                i += 1;
            }
            '+' if chars.get(i + 1) == Some(&'+') => {
                out.push((Tok::Concat, pos));
                i += 2;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, pos));
                i += 2;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(FormatError::new(pos, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => {
                            let esc = match chars.get(i + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('r') => '\r',
                                _ => {
                                    return Err(FormatError::new(
                                        Pos { line, col: i + 1 },
                                        "unknown escape sequence",
                                    ))
                                }
                            };
                            s.push(esc);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push((Tok::Str(s), pos));
            }
            '`' => {
                let start = i + 1;
                let end = chars[start..]
                    .iter()
                    .position(|&ch| ch == '`')
                    .ok_or_else(|| FormatError::new(pos, "unterminated quoted name"))?;
                let name: String = chars[start..start + end].iter().collect();
                if name.is_empty() {
                    return Err(FormatError::new(pos, "empty quoted name"));
                }
                out.push((Tok::Ident { name, quoted: true }, pos));
                i = start + end + 1;
            }
            '-' | '0'..='9' => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse()
                    .map_err(|_| FormatError::new(pos, format!("invalid integer `{s}`")))?;
                out.push((Tok::Int(v), pos));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                out.push((
                    Tok::Ident {
                        name,
                        quoted: false,
                    },
                    pos,
                ));
            }
            other => {
                return Err(FormatError::new(
                    pos,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
        if !matches!(c, ' ' | '\t' | '\r') {
            end = i + 1;
        }
    }
    Ok((out, end))
}

struct Cursor<'a> {
    toks: &'a [(Tok, Pos)],
    i: usize,
    line_pos: Pos,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a Line) -> Self {
        Cursor {
            toks: &line.toks,
            i: 0,
            line_pos: line.pos,
            end_col: line.end_col,
        }
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        match self.toks.get(self.i) {
            Some((_, p)) => *p,
            None => Pos {
                line: self.line_pos.line,
                col: self.end_col,
            },
        }
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        self.i += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn unexpected(&self, wanted: &str) -> FormatError {
        match self.peek() {
            Some(t) => FormatError::new(self.pos(), format!("expected {wanted}, found {t}")),
            None => FormatError::new(self.pos(), format!("expected {wanted}, found end of line")),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, FormatError> {
        match self.peek() {
            Some(Tok::Ident { name, quoted }) if *quoted || !KEYWORDS.contains(&name.as_str()) => {
                self.i += 1;
                Ok(name.clone())
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Attribute names are always followed by `:` or `=`, so keywords are fine.
    fn attr_name(&mut self) -> Result<String, FormatError> {
        match self.peek() {
            Some(Tok::Ident { name, .. }) => {
                self.i += 1;
                Ok(name.clone())
            }
            _ => Err(self.unexpected("attribute name")),
        }
    }

    fn keyword(&self) -> Option<&'a str> {
        match self.peek() {
            Some(Tok::Ident {
                name,
                quoted: false,
            }) => Some(name.as_str()),
            _ => None,
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), FormatError> {
        if self.keyword() == Some(kw) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), FormatError> {
        if self.peek() == Some(&tok) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn finish(&self) -> Result<(), FormatError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }

    fn term(&mut self) -> Result<AttrTerm, FormatError> {
        let mut parts = vec![self.atom()?];
        while self.peek() == Some(&Tok::Concat) {
            self.i += 1;
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            AttrTerm::concat(parts)
        })
    }

    fn atom(&mut self) -> Result<AttrTerm, FormatError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                self.i += 1;
                Ok(AttrTerm::Lit(Value::Str(s.clone())))
            }
            Some(Tok::Int(v)) => {
                self.i += 1;
                Ok(AttrTerm::Lit(Value::Int(*v)))
            }
            Some(Tok::Ident {
                name,
                quoted: false,
            }) if name == "true" || name == "false" => {
                self.i += 1;
                Ok(AttrTerm::Lit(Value::Bool(name == "true")))
            }
            Some(Tok::Ident {
                name,
                quoted: false,
            }) if name == "rulename" => {
                self.i += 1;
                self.expect(Tok::LParen)?;
                self.expect(Tok::RParen)?;
                Ok(AttrTerm::RuleName)
            }
            _ => Ok(AttrTerm::Var(self.name("attribute term")?)),
        }
    }
}

struct Parser {
    lines: Vec<Line>,
    i: usize,
    eof: Pos,
}

impl Parser {
    fn current(&self) -> Option<&Line> {
        self.lines.get(self.i)
    }

    fn eof_error(&self, wanted: &str) -> FormatError {
        FormatError::new(self.eof, format!("expected {wanted}, found end of file"))
    }

    /// Consumes a line that consists of exactly `kw`.
    fn keyword_line(&mut self, kw: &str) -> Result<Pos, FormatError> {
        let line = self
            .current()
            .ok_or_else(|| self.eof_error(&format!("`{kw}`")))?;
        let mut c = Cursor::new(line);
        let pos = c.pos();
        c.expect_keyword(kw)?;
        c.finish()?;
        self.i += 1;
        Ok(pos)
    }

    fn document(&mut self) -> Result<GrammarDoc, FormatError> {
        let mut doc = GrammarDoc::default();
        while let Some(line) = self.current() {
            let c = Cursor::new(line);
            match c.keyword() {
                Some("type") => {
                    doc.types.push(self.type_decl()?);
                }
                Some("initial") => {
                    if doc.initial.is_some() {
                        return Err(FormatError::new(line.pos, "initial graph declared twice"));
                    }
                    doc.initial = Some(self.graph_block("initial")?);
                }
                Some("rule") => doc.rules.push(self.rule()?),
                Some("aspect") => doc.aspects.push(self.aspect()?),
                Some("config") => doc.config.push(self.config()?),
                _ => return Err(c.unexpected("`type`, `initial`, `rule`, `aspect` or `config`")),
            }
        }
        if doc.is_empty() {
            return Err(FormatError::new(Pos { line: 1, col: 1 }, "empty grammar"));
        }
        Ok(doc)
    }

    fn type_decl(&mut self) -> Result<TypeDecl, FormatError> {
        let line = &self.lines[self.i];
        let mut c = Cursor::new(line);
        let pos = c.pos();
        c.expect_keyword("type")?;
        let decl = match c.keyword() {
            Some("node") => {
                c.next();
                let name = c.name("node type name")?;
                let mut attrs = Vec::new();
                while !c.at_end() {
                    let attr = c.attr_name()?;
                    c.expect(Tok::Colon)?;
                    let sort_pos = c.pos();
                    let sort = c.name("sort")?;
                    let sort = Sort::parse(&sort).ok_or_else(|| {
                        FormatError::new(sort_pos, format!("unknown sort `{sort}`"))
                    })?;
                    attrs.push((attr, sort));
                }
                TypeDecl::Node { name, attrs, pos }
            }
            Some("edge") => {
                c.next();
                let name = c.name("edge type name")?;
                let source = c.name("source node type")?;
                c.expect(Tok::Arrow)?;
                let target = c.name("target node type")?;
                c.finish()?;
                TypeDecl::Edge {
                    name,
                    source,
                    target,
                    pos,
                }
            }
            _ => return Err(c.unexpected("`node` or `edge`")),
        };
        self.i += 1;
        Ok(decl)
    }

    fn graph_block(&mut self, kw: &str) -> Result<GraphDoc, FormatError> {
        let pos = self.keyword_line(kw)?;
        let mut elems = Vec::new();
        loop {
            let line = self.current().ok_or_else(|| self.eof_error("`end`"))?;
            let mut c = Cursor::new(line);
            let epos = c.pos();
            match c.keyword() {
                Some("end") => {
                    self.keyword_line("end")?;
                    return Ok(GraphDoc { elems, pos });
                }
                Some("node") => {
                    c.next();
                    let label = c.name("node label")?;
                    c.expect(Tok::Colon)?;
                    let ty = c.name("node type")?;
                    let mut attrs = Vec::new();
                    while !c.at_end() {
                        let attr = c.attr_name()?;
                        c.expect(Tok::Eq)?;
                        attrs.push((attr, c.term()?));
                    }
                    elems.push(ElemDoc::Node {
                        label,
                        ty,
                        attrs,
                        pos: epos,
                    });
                }
                Some("edge") => {
                    c.next();
                    let first = c.name("edge label or type")?;
                    let (label, ty) = if c.peek() == Some(&Tok::Colon) {
                        c.next();
                        (Some(first), c.name("edge type")?)
                    } else {
                        (None, first)
                    };
                    let source = c.name("source label")?;
                    c.expect(Tok::Arrow)?;
                    let target = c.name("target label")?;
                    c.finish()?;
                    elems.push(ElemDoc::Edge {
                        label,
                        ty,
                        source,
                        target,
                        pos: epos,
                    });
                }
                _ => return Err(c.unexpected("`node`, `edge` or `end`")),
            }
            self.i += 1;
        }
    }

    fn span(&mut self) -> Result<SpanDoc, FormatError> {
        let lhs = self.graph_block("lhs")?;
        let rhs = self.graph_block("rhs")?;
        Ok(SpanDoc { lhs, rhs })
    }

    fn rule(&mut self) -> Result<RuleDoc, FormatError> {
        let line = &self.lines[self.i];
        let mut c = Cursor::new(line);
        let pos = c.pos();
        c.expect_keyword("rule")?;
        let name = c.name("rule name")?;
        let mut base = None;
        let mut symbolic = false;
        if c.keyword() == Some("base") {
            c.next();
            base = Some(c.name("base rule name")?);
        }
        if c.keyword() == Some("symbolic") {
            c.next();
            symbolic = true;
        }
        c.finish()?;
        self.i += 1;
        let span = self.span()?;
        self.keyword_line("end")?;
        Ok(RuleDoc {
            name,
            base,
            symbolic,
            span,
            pos,
        })
    }

    fn named_header(&mut self, kw: &str, what: &str) -> Result<(String, Pos), FormatError> {
        let line = &self.lines[self.i];
        let mut c = Cursor::new(line);
        let pos = c.pos();
        c.expect_keyword(kw)?;
        let name = c.name(what)?;
        c.finish()?;
        self.i += 1;
        Ok((name, pos))
    }

    fn aspect(&mut self) -> Result<AspectDoc, FormatError> {
        let (name, pos) = self.named_header("aspect", "aspect name")?;
        let mut aspect = AspectDoc {
            name,
            types: Vec::new(),
            initial: None,
            advices: Vec::new(),
            pos,
        };
        loop {
            let line = self.current().ok_or_else(|| self.eof_error("`end`"))?;
            let c = Cursor::new(line);
            match c.keyword() {
                Some("end") => {
                    self.keyword_line("end")?;
                    return Ok(aspect);
                }
                Some("type") => aspect.types.push(self.type_decl()?),
                Some("initial") => {
                    if aspect.initial.is_some() {
                        return Err(FormatError::new(
                            line.pos,
                            "initial extension declared twice",
                        ));
                    }
                    aspect.initial = Some(self.graph_block("initial")?);
                }
                Some("advice") => aspect.advices.push(self.advice()?),
                _ => return Err(c.unexpected("`type`, `initial`, `advice` or `end`")),
            }
        }
    }

    fn advice(&mut self) -> Result<AdviceDoc, FormatError> {
        let (name, pos) = self.named_header("advice", "advice name")?;
        let mut parts = Vec::with_capacity(3);
        for kw in ["pointcut", "interface", "effect"] {
            self.keyword_line(kw)?;
            parts.push(self.span()?);
            self.keyword_line("end")?;
        }
        self.keyword_line("end")?;
        let mut parts = parts.into_iter();
        Ok(AdviceDoc {
            name,
            pointcut: parts.next().unwrap(),
            interface: parts.next().unwrap(),
            effect: parts.next().unwrap(),
            pos,
        })
    }

    fn config(&mut self) -> Result<ConfigEntry, FormatError> {
        let line = &self.lines[self.i];
        let mut c = Cursor::new(line);
        let pos = c.pos();
        c.expect_keyword("config")?;
        let key = c.name("config key")?;
        let value = match c.next() {
            Some(Tok::Ident { name, .. }) => name.clone(),
            Some(Tok::Int(v)) => v.to_string(),
            Some(Tok::Str(s)) => s.clone(),
            _ => return Err(FormatError::new(c.pos(), "expected config value")),
        };
        c.finish()?;
        self.i += 1;
        Ok(ConfigEntry { key, value, pos })
    }
}

/// Parses a grammar document. Syntax errors carry their line and column.
pub fn parse_grammar(text: &str) -> Result<GrammarDoc, FormatError> {
    let mut lines = Vec::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        last = i + 1;
        let (toks, end_col) = lex_line(raw, i + 1)?;
        if toks.is_empty() {
            continue;
        }
        let col = toks[0].1.col;
        lines.push(Line {
            toks,
            pos: Pos { line: i + 1, col },
            end_col,
        });
    }
    let mut p = Parser {
        lines,
        i: 0,
        eof: Pos {
            line: last.max(1),
            col: 1,
        },
    };
    p.document()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file() {
        let err = parse_grammar("  # nothing\n").unwrap_err();
        assert_eq!(err.message, "empty grammar");
    }

    #[test]
    fn positions() {
        let err = parse_grammar("type node A\ntype edge e A -> \n").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (2, 17));
        let err = parse_grammar("type node A x:float").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (1, 15));
        assert!(err.message.contains("float"));
    }

    #[test]
    fn terms() {
        let doc = parse_grammar(
            "type node A s:string\ninitial\n  node a : A s = \"x\\\"y\" ++ v ++ rulename()\nend\n",
        )
        .unwrap();
        let ElemDoc::Node { attrs, .. } = &doc.initial.unwrap().elems[0] else {
            panic!()
        };
        assert_eq!(
            attrs[0].1,
            AttrTerm::concat(vec![
                AttrTerm::str("x\"y"),
                AttrTerm::var("v"),
                AttrTerm::RuleName
            ])
        );
    }

    #[test]
    fn quoted_names() {
        let doc = parse_grammar("type node `L:A`\ntype node `end`").unwrap();
        assert!(matches!(&doc.types[1], TypeDecl::Node { name, .. } if name == "end"));
        assert!(parse_grammar("type node end").is_err());
    }

    #[test]
    fn unterminated_block() {
        let err = parse_grammar("type node A\nrule r\n lhs\n end\n").unwrap_err();
        assert!(err.message.contains("`rhs`"), "{err}");
    }
}
