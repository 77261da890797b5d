//! Typed attributed graph rewriting with the double-pushout approach, aspect
//! weaving over rules, a graph encoding of rules and critical pair analysis.

pub mod aogg;
pub mod attr;
pub mod construct;
pub mod cpa;
pub mod encoding;
pub mod error;
pub mod fixture;
pub mod format;
pub mod graph;
pub mod rewrite;
pub mod rule;
pub mod search;

pub use aogg::{Advice, Aogg, AoggError, Aspect, Component, RuleMorphism};
pub use attr::{AttrTerm, Binding, Sort, Value};
pub use cpa::{CpaReport, CriticalKind, Mode};
pub use error::{GluingViolation, GraphError};
pub use graph::{EdgeId, Elem, GraphMorphism, NodeId, TypeGraph, TypedGraph};
pub use rewrite::{DerivationTrace, Match, MatchPolicy, RewriteError, RunConfig};
pub use rule::{Grammar, GrammarError, Rule, RuleViolation, SpanBuilder};
