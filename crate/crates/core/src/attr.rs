//! Attribute sorts, values and the small term language used on rule nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    String,
    Int,
    Bool,
}

impl Sort {
    pub fn parse(s: &str) -> Option<Sort> {
        match s {
            "string" => Some(Sort::String),
            "int" => Some(Sort::Int),
            "bool" => Some(Sort::Bool),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::String => "string",
            Sort::Int => "int",
            Sort::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Str(String),
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Str(_) => Sort::String,
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Attribute term attached to a node.
///
/// Host graphs being executed carry only literals. Rule graphs use variables,
/// string concatenation and the reflective `rulename()` builtin. Encoded
/// grammars carry rule terms verbatim, so matching works term-against-term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttrTerm {
    Lit(Value),
    Var(String),
    Concat(Vec<AttrTerm>),
    RuleName,
}

/// Variable assignment produced by matching.
pub type Binding = BTreeMap<String, AttrTerm>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("concatenation of non-string value {0}")]
    NonStringConcat(Value),
}

impl AttrTerm {
    pub fn str(s: impl Into<String>) -> Self {
        AttrTerm::Lit(Value::Str(s.into()))
    }

    pub fn int(i: i64) -> Self {
        AttrTerm::Lit(Value::Int(i))
    }

    pub fn var(name: impl Into<String>) -> Self {
        AttrTerm::Var(name.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, AttrTerm::Var(_))
    }

    pub fn as_lit(&self) -> Option<&Value> {
        match self {
            AttrTerm::Lit(v) => Some(v),
            _ => None,
        }
    }

    /// Sort of the term when it can be determined without a declaration.
    pub fn known_sort(&self) -> Option<Sort> {
        match self {
            AttrTerm::Lit(v) => Some(v.sort()),
            AttrTerm::Var(_) => None,
            AttrTerm::Concat(_) | AttrTerm::RuleName => Some(Sort::String),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            AttrTerm::Var(v) => {
                out.insert(v.clone());
            }
            AttrTerm::Concat(parts) => parts.iter().for_each(|p| p.vars(out)),
            AttrTerm::Lit(_) | AttrTerm::RuleName => {}
        }
    }

    pub fn var_occurrences(&self, name: &str) -> usize {
        match self {
            AttrTerm::Var(v) => usize::from(v == name),
            AttrTerm::Concat(parts) => parts.iter().map(|p| p.var_occurrences(name)).sum(),
            AttrTerm::Lit(_) | AttrTerm::RuleName => 0,
        }
    }

    /// Whether a pattern term could match a host term, looking at literals only.
    pub fn may_match(&self, host: &AttrTerm) -> bool {
        match (self, host) {
            (AttrTerm::Lit(a), h) => matches!(h, AttrTerm::Lit(b) if a == b),
            _ => true,
        }
    }

    /// Matches `self` as a pattern against `host`, extending `binding`.
    ///
    /// On failure the binding may contain partial assignments; callers clone
    /// before trying alternatives.
    pub fn match_into(&self, host: &AttrTerm, binding: &mut Binding) -> bool {
        match self {
            AttrTerm::Var(x) => match binding.get(x) {
                Some(bound) => bound == host,
                None => {
                    binding.insert(x.clone(), host.clone());
                    true
                }
            },
            AttrTerm::Lit(v) => matches!(host, AttrTerm::Lit(w) if v == w),
            AttrTerm::RuleName => matches!(host, AttrTerm::RuleName),
            AttrTerm::Concat(ps) => match host {
                AttrTerm::Concat(hs) if hs.len() == ps.len() => {
                    ps.iter().zip(hs).all(|(p, h)| p.match_into(h, binding))
                }
                _ => false,
            },
        }
    }

    /// Replaces bound variables, leaving unbound ones and `rulename()` symbolic.
    pub fn substitute(&self, binding: &Binding) -> AttrTerm {
        match self {
            AttrTerm::Var(x) => binding.get(x).cloned().unwrap_or_else(|| self.clone()),
            AttrTerm::Lit(_) | AttrTerm::RuleName => self.clone(),
            AttrTerm::Concat(parts) => {
                AttrTerm::concat(parts.iter().map(|p| p.substitute(binding)).collect())
            }
        }
    }

    /// Normalising constructor: flattens nested concatenations and folds
    /// adjacent string literals.
    pub fn concat(parts: Vec<AttrTerm>) -> AttrTerm {
        let mut out: Vec<AttrTerm> = Vec::new();
        for part in parts {
            let pieces = match part {
                AttrTerm::Concat(inner) => inner,
                other => vec![other],
            };
            for piece in pieces {
                if let (Some(AttrTerm::Lit(Value::Str(prev))), AttrTerm::Lit(Value::Str(next))) =
                    (out.last_mut(), &piece)
                {
                    prev.push_str(next);
                    continue;
                }
                out.push(piece);
            }
        }
        if out.len() == 1 {
            if let AttrTerm::Lit(Value::Str(_)) = &out[0] {
                return out.pop().unwrap();
            }
        }
        if out.is_empty() {
            return AttrTerm::str("");
        }
        AttrTerm::Concat(out)
    }

    /// Evaluates the term to a value under `binding`, resolving `rulename()`.
    pub fn eval(&self, binding: &Binding, rule_name: &str) -> Result<Value, TermError> {
        match self {
            AttrTerm::Lit(v) => Ok(v.clone()),
            AttrTerm::RuleName => Ok(Value::Str(rule_name.to_string())),
            AttrTerm::Var(x) => match binding.get(x) {
                Some(t) => t.eval(&Binding::new(), rule_name),
                None => Err(TermError::UnboundVar(x.clone())),
            },
            AttrTerm::Concat(parts) => {
                let mut s = String::new();
                for p in parts {
                    match p.eval(binding, rule_name)? {
                        Value::Str(piece) => s.push_str(&piece),
                        other => return Err(TermError::NonStringConcat(other)),
                    }
                }
                Ok(Value::Str(s))
            }
        }
    }

    /// Applies a variable renaming (used for alpha-equivalence checks).
    pub fn rename(&self, f: &impl Fn(&str) -> String) -> AttrTerm {
        match self {
            AttrTerm::Var(x) => AttrTerm::Var(f(x)),
            AttrTerm::Concat(ps) => AttrTerm::Concat(ps.iter().map(|p| p.rename(f)).collect()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for AttrTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrTerm::Lit(v) => write!(f, "{v}"),
            AttrTerm::Var(x) => f.write_str(x),
            AttrTerm::RuleName => f.write_str("rulename()"),
            AttrTerm::Concat(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ++ ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Tracks a bijective variable renaming between two terms.
#[derive(Debug, Clone, Default)]
pub struct AlphaMap {
    fwd: BTreeMap<String, String>,
    bwd: BTreeMap<String, String>,
}

impl AlphaMap {
    pub fn unify(&mut self, a: &AttrTerm, b: &AttrTerm) -> bool {
        match (a, b) {
            (AttrTerm::Var(x), AttrTerm::Var(y)) => match (self.fwd.get(x), self.bwd.get(y)) {
                (Some(y2), _) if y2 != y => false,
                (_, Some(x2)) if x2 != x => false,
                _ => {
                    self.fwd.insert(x.clone(), y.clone());
                    self.bwd.insert(y.clone(), x.clone());
                    true
                }
            },
            (AttrTerm::Concat(ps), AttrTerm::Concat(qs)) => {
                ps.len() == qs.len() && ps.iter().zip(qs).all(|(p, q)| self.unify(p, q))
            }
            (AttrTerm::Lit(v), AttrTerm::Lit(w)) => v == w,
            (AttrTerm::RuleName, AttrTerm::RuleName) => true,
            _ => false,
        }
    }
}
