//! DPO rule application and seeded nondeterministic execution.

use std::hash::Hasher;
use std::ops::ControlFlow;

use fnv::FnvHasher;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attr::{AttrTerm, Binding, TermError};
use crate::construct::{gluing_violation, pushout, pushout_complement};
use crate::error::{GluingViolation, GraphError};
use crate::graph::{GraphMorphism, NodeId, TypedGraph};
use crate::rule::{Grammar, Rule};
use crate::search::{for_each_homomorphism, is_isomorphic, SearchOptions};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchPolicy {
    #[default]
    Injective,
    NonInjective,
}

impl MatchPolicy {
    pub fn injective(self) -> bool {
        self == MatchPolicy::Injective
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub rule: String,
    /// `L → G`
    pub morphism: GraphMorphism,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("gluing condition violated: {0}")]
    Gluing(#[from] GluingViolation),
    #[error("rule `{rule}`: {source}")]
    Term { rule: String, source: TermError },
}

/// Attribute binding of `lhs` nodes against host terms along `m`.
pub(crate) fn bind_attributes(
    lhs: &TypedGraph,
    host: &TypedGraph,
    m: &GraphMorphism,
    binding: &mut Binding,
) -> bool {
    m.nodes.iter().all(|(p, h)| {
        let (pn, hn) = (lhs.node(*p).unwrap(), host.node(*h).unwrap());
        pn.attrs
            .iter()
            .all(|(a, t)| hn.attrs.get(a).is_some_and(|u| t.match_into(u, binding)))
    })
}

pub(crate) fn literal_filter<'a>(
    lhs: &'a TypedGraph,
    host: &'a TypedGraph,
) -> impl Fn(NodeId, NodeId) -> bool + 'a {
    move |p, h| {
        let (pn, hn) = (lhs.node(p).unwrap(), host.node(h).unwrap());
        pn.attrs
            .iter()
            .all(|(a, t)| hn.attrs.get(a).is_some_and(|u| t.may_match(u)))
    }
}

/// Structural matches of the rule's left-hand side filtered by attribute
/// compatibility. Literals must agree; variables bind consistently.
pub fn find_matches(
    rule: &Rule,
    host: &TypedGraph,
    policy: MatchPolicy,
) -> Result<Vec<Match>, GraphError> {
    let filter = literal_filter(&rule.lhs, host);
    let opts = SearchOptions {
        injective: policy.injective(),
        node_ok: Some(&filter),
        fixed: None,
    };
    let mut out = Vec::new();
    for_each_homomorphism(&rule.lhs, host, opts, |m| {
        let mut binding = Binding::new();
        if bind_attributes(&rule.lhs, host, m, &mut binding) {
            out.push(Match {
                rule: rule.name.clone(),
                morphism: m.clone(),
                binding,
            });
        }
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

pub fn check_gluing(rule: &Rule, m: &Match, host: &TypedGraph) -> Result<(), GluingViolation> {
    match gluing_violation(&rule.left, &rule.lhs, &m.morphism, host) {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

/// A direct derivation `G ⇒ H` with its tracking morphisms.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub result: TypedGraph,
    /// The intermediate graph `D ⊆ G`.
    pub context: TypedGraph,
    /// `D → H`
    pub context_into_result: GraphMorphism,
    /// `R → H`
    pub comatch: GraphMorphism,
}

/// Evaluates (or, for symbolic rules, substitutes) a right-hand side term.
pub(crate) fn rhs_term(
    rule: &Rule,
    term: &AttrTerm,
    binding: &Binding,
) -> Result<AttrTerm, RewriteError> {
    if rule.symbolic {
        Ok(term.substitute(binding))
    } else {
        term.eval(binding, &rule.base_name)
            .map(AttrTerm::Lit)
            .map_err(|source| RewriteError::Term {
                rule: rule.name.clone(),
                source,
            })
    }
}

pub fn derive(rule: &Rule, m: &Match, host: &TypedGraph) -> Result<Derivation, RewriteError> {
    let pc = pushout_complement(&rule.left, &rule.lhs, &m.morphism, host)?;
    let po = pushout(&pc.from_interface, &pc.graph, &rule.right, &rule.rhs)?;
    let mut result = po.graph;
    for (rid, rn) in rule.rhs.nodes() {
        let hid = po.from_right.nodes[&rid];
        for (attr, term) in &rn.attrs {
            let value = rhs_term(rule, term, &m.binding)?;
            result.set_attr(hid, attr, value)?;
        }
    }
    Ok(Derivation {
        result,
        context: pc.graph,
        context_into_result: po.from_left,
        comatch: po.from_right,
    })
}

pub fn apply_rule(rule: &Rule, m: &Match, host: &TypedGraph) -> Result<TypedGraph, RewriteError> {
    derive(rule, m, host).map(|d| d.result)
}

/// Carries a match of `rule` into the result of `d`. Fails when the match
/// touches an element the derivation deleted or its attributes no longer fit.
pub fn track_match(rule: &Rule, m: &Match, d: &Derivation) -> Option<Match> {
    let mut morphism = GraphMorphism::empty();
    for (p, h) in &m.morphism.nodes {
        d.context.node(*h)?;
        morphism.nodes.insert(*p, d.context_into_result.nodes[h]);
    }
    for (p, h) in &m.morphism.edges {
        d.context.edge(*h)?;
        morphism.edges.insert(*p, d.context_into_result.edges[h]);
    }
    let mut binding = Binding::new();
    bind_attributes(&rule.lhs, &d.result, &morphism, &mut binding).then(|| Match {
        rule: m.rule.clone(),
        morphism,
        binding,
    })
}

/// Execution-based independence: each match survives the other derivation,
/// stays applicable, and both orders end in isomorphic graphs.
pub fn parallel_independent(
    r1: &Rule,
    m1: &Match,
    r2: &Rule,
    m2: &Match,
    host: &TypedGraph,
) -> Result<bool, RewriteError> {
    let d1 = derive(r1, m1, host)?;
    let d2 = derive(r2, m2, host)?;
    let second =
        |r: &Rule, m: &Match, d: &Derivation| -> Result<Option<TypedGraph>, RewriteError> {
            let Some(t) = track_match(r, m, d) else {
                return Ok(None);
            };
            if check_gluing(r, &t, &d.result).is_err() {
                return Ok(None);
            }
            apply_rule(r, &t, &d.result).map(Some)
        };
    let (Some(h12), Some(h21)) = (second(r2, m2, &d1)?, second(r1, m1, &d2)?) else {
        return Ok(false);
    };
    Ok(is_isomorphic(&h12, &h21).is_some())
}

/// Valid `(rule index, match)` pairs in stable order.
pub fn valid_pairs(
    g: &Grammar,
    host: &TypedGraph,
    policy: MatchPolicy,
) -> Result<Vec<(usize, Match)>, GraphError> {
    let mut out = Vec::new();
    for (i, rule) in g.rules.iter().enumerate() {
        for m in find_matches(rule, host, policy)? {
            if check_gluing(rule, &m, host).is_ok() {
                out.push((i, m));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    StoppedNoMatch,
    StoppedStepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Snapshot {
    Full(TypedGraph),
    Hash(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub index: usize,
    pub rule: String,
    /// Pattern node label (or id) ↦ host node id.
    pub matched: Vec<(String, NodeId)>,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivationTrace {
    pub seed: u64,
    pub initial: Snapshot,
    pub steps: Vec<TraceStep>,
    pub status: TerminalStatus,
    #[serde(skip)]
    pub final_graph: TypedGraph,
}

impl DerivationTrace {
    pub fn rule_sequence(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.rule.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub seed: u64,
    pub max_steps: usize,
    pub policy: MatchPolicy,
    /// Graphs with more nodes than this are stored as content hashes.
    pub snapshot_threshold: usize,
}

impl RunConfig {
    pub fn new(seed: u64, max_steps: usize) -> Self {
        RunConfig {
            seed,
            max_steps,
            policy: MatchPolicy::Injective,
            snapshot_threshold: 64,
        }
    }
}

/// FNV-1a over the canonical JSON rendering of the graph.
pub fn content_hash(g: &TypedGraph) -> u64 {
    let mut h = FnvHasher::default();
    h.write(
        serde_json::to_string(g)
            .expect("graphs serialize")
            .as_bytes(),
    );
    h.finish()
}

fn snapshot(g: &TypedGraph, threshold: usize) -> Snapshot {
    if g.node_count() <= threshold {
        Snapshot::Full(g.clone())
    } else {
        Snapshot::Hash(content_hash(g))
    }
}

/// Runs the grammar from its initial graph: collect valid pairs, stop if
/// none, otherwise pick one with the seeded generator and apply it.
pub fn run_grammar(g: &Grammar, cfg: RunConfig) -> Result<DerivationTrace, RewriteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = g.initial.clone();
    let mut steps = Vec::new();
    let initial = snapshot(&current, cfg.snapshot_threshold);
    let status = loop {
        if steps.len() >= cfg.max_steps {
            break TerminalStatus::StoppedStepLimit;
        }
        let mut pairs = valid_pairs(g, &current, cfg.policy)?;
        if pairs.is_empty() {
            break TerminalStatus::StoppedNoMatch;
        }
        let pick = rng.random_range(0..pairs.len());
        let (ri, m) = pairs.swap_remove(pick);
        let rule = &g.rules[ri];
        current = apply_rule(rule, &m, &current)?;
        let matched = m
            .morphism
            .nodes
            .iter()
            .map(|(p, h)| {
                let name = rule
                    .lhs
                    .node(*p)
                    .and_then(|n| n.label.clone())
                    .unwrap_or_else(|| p.to_string());
                (name, *h)
            })
            .collect();
        steps.push(TraceStep {
            index: steps.len() + 1,
            rule: rule.name.clone(),
            matched,
            snapshot: snapshot(&current, cfg.snapshot_threshold),
        });
    };
    Ok(DerivationTrace {
        seed: cfg.seed,
        initial,
        steps,
        status,
        final_graph: current,
    })
}
