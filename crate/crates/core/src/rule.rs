//! Closed-path rules and their exact statistical measures.
//!
//! A rule `P1(x,z1) & ... & Pn(z_{n-1},y) => P0(x,y)` is stored as a head
//! predicate plus the ordered body path. Measures are computed by joining the
//! body path left to right, keyed by the start entity `x`, so every body
//! grounding is a distinct `(x, y)` pair.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{EntityId, KgError, KnowledgeGraph, PredicateId};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule body must contain at least one atom")]
    EmptyBody,
    #[error("cannot parse rule {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error(transparent)]
    Kg(#[from] KgError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rule {
    pub head: PredicateId,
    pub body: Vec<PredicateId>,
}

impl Rule {
    pub fn new(head: PredicateId, body: Vec<PredicateId>) -> Result<Self, RuleError> {
        if body.is_empty() {
            return Err(RuleError::EmptyBody);
        }
        Ok(Rule { head, body })
    }

    /// Rule length counts the head: `body.len() + 1`.
    pub fn len(&self) -> usize {
        self.body.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn display<'a>(&'a self, kg: &'a KnowledgeGraph) -> RuleText<'a> {
        RuleText { rule: self, kg }
    }

    pub fn to_text(&self, kg: &KnowledgeGraph) -> String {
        self.display(kg).to_string()
    }

    /// Parses the text form produced by [`Rule::display`].
    pub fn parse(text: &str, kg: &KnowledgeGraph) -> Result<Self, RuleError> {
        let err = |reason: &str| RuleError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (body_text, head_text) = text.split_once(" => ").ok_or_else(|| err("missing ' => '"))?;
        let (head_name, head_args) = split_atom(head_text.trim()).ok_or_else(|| err("bad head atom"))?;
        if head_args != ("x", "y") {
            return Err(err("head must be over (x,y)"));
        }
        let atoms: Vec<&str> = body_text.split(" & ").map(str::trim).collect();
        let n = atoms.len();
        let mut body = Vec::with_capacity(n);
        for (i, atom) in atoms.iter().enumerate() {
            let (name, args) = split_atom(atom).ok_or_else(|| err("bad body atom"))?;
            let (from, to) = chain_vars(i, n);
            if args.0 != from || args.1 != to {
                return Err(err("body atoms do not form a closed path"));
            }
            body.push(kg.parse_predicate(name)?);
        }
        Ok(Rule {
            head: kg.parse_predicate(head_name)?,
            body,
        })
    }
}

fn chain_vars(i: usize, n: usize) -> (String, String) {
    let from = if i == 0 { "x".to_string() } else { format!("z{i}") };
    let to = if i + 1 == n { "y".to_string() } else { format!("z{}", i + 1) };
    (from, to)
}

fn split_atom(atom: &str) -> Option<(&str, (&str, &str))> {
    let open = atom.rfind('(')?;
    let inner = atom[open + 1..].strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((&atom[..open], (a.trim(), b.trim())))
}

pub struct RuleText<'a> {
    rule: &'a Rule,
    kg: &'a KnowledgeGraph,
}

impl fmt::Display for RuleText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.rule.body.len();
        for (i, &p) in self.rule.body.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            let (from, to) = chain_vars(i, n);
            write!(f, "{}({from},{to})", self.kg.predicate_name(p))?;
        }
        write!(f, " => {}(x,y)", self.kg.predicate_name(self.rule.head))
    }
}

/// Statistics of a rule over a graph. All ratios are 0 on empty denominators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub supp: usize,
    pub body_count: usize,
    pub head_count: usize,
    pub pca_body_count: usize,
    pub conf: f64,
    pub hc: f64,
    pub pca_conf: f64,
    /// Set when the grounding budget was exhausted; counts are then partial.
    pub truncated: bool,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Distinct `(x, y)` pairs realizing a body path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Groundings {
    /// Sorted by `x`, then `y`.
    pub pairs: Vec<(EntityId, EntityId)>,
    pub truncated: bool,
}

/// Stamp-based membership marker over entity ids, reused across join steps.
struct Marker {
    stamps: Vec<u32>,
    current: u32,
}

impl Marker {
    fn new(n: usize) -> Self {
        Marker {
            stamps: vec![0; n],
            current: 0,
        }
    }

    fn reset(&mut self) {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.current = 1;
        }
    }

    /// Returns true the first time `e` is seen since the last reset.
    #[inline]
    fn insert(&mut self, e: EntityId) -> bool {
        let slot = &mut self.stamps[e.index()];
        if *slot == self.current {
            false
        } else {
            *slot = self.current;
            true
        }
    }
}

/// Enumerates body groundings. `limit` caps the number of edge expansions;
/// when it is hit the result is flagged and holds the pairs found so far.
pub fn body_groundings(kg: &KnowledgeGraph, body: &[PredicateId], limit: Option<usize>) -> Groundings {
    let mut out = Groundings::default();
    if body.is_empty() {
        return out;
    }
    let mut marker = Marker::new(kg.num_entities());
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    let mut expansions = 0usize;
    for &x in kg.subjects_of(body[0]) {
        frontier.clear();
        frontier.push(x);
        for &p in body {
            marker.reset();
            next.clear();
            for &z in &frontier {
                let nbrs = kg.neighbors(z, p);
                expansions += nbrs.len();
                for &w in nbrs {
                    if marker.insert(w) {
                        next.push(w);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            if frontier.is_empty() {
                break;
            }
            if limit.is_some_and(|l| expansions > l) {
                out.truncated = true;
                return out;
            }
        }
        frontier.sort_unstable();
        out.pairs.extend(frontier.iter().map(|&y| (x, y)));
    }
    out
}

/// Computes support, CWA and PCA confidence and head coverage in one join.
pub fn evaluate(kg: &KnowledgeGraph, rule: &Rule, limit: Option<usize>) -> RuleStats {
    let g = body_groundings(kg, &rule.body, limit);
    stats_from_groundings(kg, rule.head, &g)
}

pub fn stats_from_groundings(kg: &KnowledgeGraph, head: PredicateId, g: &Groundings) -> RuleStats {
    let mut supp = 0;
    let mut pca_body_count = 0;
    let mut last_x = None;
    let mut x_has_head = false;
    for &(x, y) in &g.pairs {
        if last_x != Some(x) {
            last_x = Some(x);
            x_has_head = !kg.neighbors(x, head).is_empty();
        }
        if x_has_head {
            pca_body_count += 1;
            if kg.contains(x, head, y) {
                supp += 1;
            }
        }
    }
    let body_count = g.pairs.len();
    let head_count = kg.predicate_count(head);
    RuleStats {
        supp,
        body_count,
        head_count,
        pca_body_count,
        conf: ratio(supp, body_count),
        hc: ratio(supp, head_count),
        pca_conf: ratio(supp, pca_body_count),
        truncated: g.truncated,
    }
}

pub fn support(kg: &KnowledgeGraph, rule: &Rule) -> usize {
    evaluate(kg, rule, None).supp
}

pub fn confidence(kg: &KnowledgeGraph, rule: &Rule) -> f64 {
    evaluate(kg, rule, None).conf
}

pub fn head_coverage(kg: &KnowledgeGraph, rule: &Rule) -> f64 {
    evaluate(kg, rule, None).hc
}

pub fn pca_confidence(kg: &KnowledgeGraph, rule: &Rule) -> f64 {
    evaluate(kg, rule, None).pca_conf
}

/// Entities reachable at the end of a body prefix from any start entity.
/// For an empty prefix every entity qualifies and `None` is returned.
pub fn prefix_end_nodes(kg: &KnowledgeGraph, prefix: &[PredicateId]) -> Option<Vec<EntityId>> {
    let (&first, rest) = prefix.split_first()?;
    let mut marker = Marker::new(kg.num_entities());
    marker.reset();
    let mut nodes: Vec<EntityId> = Vec::new();
    for &s in kg.subjects_of(first) {
        for &o in kg.neighbors(s, first) {
            if marker.insert(o) {
                nodes.push(o);
            }
        }
    }
    for &p in rest {
        marker.reset();
        let mut next = Vec::new();
        for &z in &nodes {
            for &o in kg.neighbors(z, p) {
                if marker.insert(o) {
                    next.push(o);
                }
            }
        }
        nodes = next;
    }
    Some(nodes)
}

/// One child per vocabulary predicate appended to the body prefix, in
/// vocabulary order, skipping children whose body has no grounding.
pub fn refine(kg: &KnowledgeGraph, prefix: &[PredicateId]) -> Vec<PredicateId> {
    let vocab = kg.predicate_vocabulary();
    match prefix_end_nodes(kg, prefix) {
        None => vocab.into_iter().filter(|&p| kg.predicate_count(p) > 0).collect(),
        Some(nodes) => vocab
            .into_iter()
            .filter(|&p| nodes.iter().any(|&z| !kg.neighbors(z, p).is_empty()))
            .collect(),
    }
}
