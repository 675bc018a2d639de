//! Value-guided best-first rule search.
//!
//! Candidates are partial rules: a head plus a body prefix, encoded for the
//! value function with the remaining slots masked. New candidates wait in a
//! buffer until it holds a full batch (or the heap runs dry), are valued in
//! batches, pruned below `min_value`, and pushed into a max-heap. The best
//! candidate is refined by one atom; complete rules are scored and emitted.

mod output;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{State, ValueFunction};
use crate::embedding::RuleScorer;
use crate::kg::{KnowledgeGraph, PredicateId};
use crate::rule::{body_groundings, refine, stats_from_groundings, Rule, RuleStats};

pub use output::{read_rules, write_rules};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("head {0} must be an original predicate")]
    InverseHead(u32),
    #[error("bad rule file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Statistical half of the hybrid score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    #[default]
    Cwa,
    Pca,
}

impl Measure {
    pub fn pick(self, stats: &RuleStats) -> f64 {
        match self {
            Measure::Cwa => stats.conf,
            Measure::Pca => stats.pca_conf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Rule length including the head, so bodies have `length - 1` atoms.
    pub length: usize,
    pub batch_size: usize,
    pub min_conf: f64,
    pub min_hc: f64,
    pub min_value: f64,
    pub lambda: f64,
    pub time_limit_secs: Option<f64>,
    pub measure: Measure,
    /// Cap on join expansions per rule evaluation.
    pub grounding_limit: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            length: 3,
            batch_size: 128,
            min_conf: 0.1,
            min_hc: 0.01,
            min_value: 0.0001,
            lambda: 0.9,
            time_limit_secs: None,
            measure: Measure::Cwa,
            grounding_limit: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if self.length < 2 {
            return bad("length must be at least 2");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0, 1]");
        }
        for (name, v) in [("min_conf", self.min_conf), ("min_hc", self.min_hc), ("min_value", self.min_value)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SearchError::Config(format!("{name} must be a non-negative number")));
            }
        }
        if let Some(t) = self.time_limit_secs {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("time_limit_secs must be non-negative");
            }
        }
        Ok(())
    }

    fn time_limit(&self) -> Option<Duration> {
        self.time_limit_secs.map(Duration::from_secs_f64)
    }
}

/// `lambda * psi + (1 - lambda) * rho`, with `psi` chosen by `measure`.
pub fn hybrid_score(stats: &RuleStats, rho: f64, lambda: f64, measure: Measure) -> Result<f64, SearchError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SearchError::Config("lambda must be in [0, 1]".into()));
    }
    Ok(lambda * measure.pick(stats) + (1.0 - lambda) * rho)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinedRule {
    pub rule: Rule,
    pub stats: RuleStats,
    pub rho: f64,
    pub score: f64,
    /// Seconds from the start of the run to emission; not part of rule files.
    pub emitted_secs: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCounters {
    /// Candidates created, the root included.
    pub generated: usize,
    /// Candidates passed to the value function.
    pub valued: usize,
    /// Candidates pushed into the heap.
    pub admitted: usize,
    /// Candidates popped from the heap.
    pub explored: usize,
    /// Complete rules whose statistics were computed.
    pub evaluated: usize,
    pub emitted: usize,
}

impl SearchCounters {
    fn add(&mut self, o: &SearchCounters) {
        self.generated += o.generated;
        self.valued += o.valued;
        self.admitted += o.admitted;
        self.explored += o.explored;
        self.evaluated += o.evaluated;
        self.emitted += o.emitted;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub head: PredicateId,
    /// Sorted by score descending, then rule text ascending.
    pub rules: Vec<MinedRule>,
    /// The time limit stopped the search early.
    pub truncated: bool,
    pub counters: SearchCounters,
}

struct Candidate {
    value: f64,
    seq: u64,
    body: Vec<PredicateId>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // higher value first, then earlier insertion
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Sorts by score descending, ties by rule text ascending.
pub fn sort_rules(kg: &KnowledgeGraph, rules: &mut [MinedRule]) {
    let mut keyed: Vec<(String, MinedRule)> = rules.iter().map(|r| (r.rule.to_text(kg), r.clone())).collect();
    keyed.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then_with(|| a.0.cmp(&b.0)));
    for (slot, (_, r)) in rules.iter_mut().zip(keyed) {
        *slot = r;
    }
}

/// Mines rules of length `cfg.length` with head `head`.
pub fn mine<V, S>(
    kg: &KnowledgeGraph,
    head: PredicateId,
    cfg: &SearchConfig,
    value_fn: &V,
    scorer: &S,
) -> Result<SearchOutcome, SearchError>
where
    V: ValueFunction + ?Sized,
    S: RuleScorer + ?Sized,
{
    mine_with(kg, head, cfg, value_fn, scorer, None, |_| {})
}

/// As [`mine`], with an optional absolute deadline and a callback invoked for
/// every rule at the moment it is emitted.
pub fn mine_with<V, S, F>(
    kg: &KnowledgeGraph,
    head: PredicateId,
    cfg: &SearchConfig,
    value_fn: &V,
    scorer: &S,
    deadline: Option<Instant>,
    mut on_emit: F,
) -> Result<SearchOutcome, SearchError>
where
    V: ValueFunction + ?Sized,
    S: RuleScorer + ?Sized,
    F: FnMut(&MinedRule),
{
    cfg.validate()?;
    if head.is_inverse() {
        return Err(SearchError::InverseHead(head.0));
    }
    let start = Instant::now();
    let deadline = match (deadline, cfg.time_limit()) {
        (Some(d), Some(t)) => Some(d.min(start + t)),
        (d, t) => d.or(t.map(|t| start + t)),
    };
    let body_len = cfg.length - 1;
    let mut counters = SearchCounters {
        generated: 1,
        ..Default::default()
    };
    let mut queue: Vec<Vec<PredicateId>> = vec![Vec::new()];
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut rules = Vec::new();
    let mut truncated = false;
    let mut batch_states = Vec::with_capacity(cfg.batch_size);

    while !heap.is_empty() || !queue.is_empty() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            truncated = true;
            break;
        }
        if heap.is_empty() || queue.len() >= cfg.batch_size {
            for chunk in queue.chunks(cfg.batch_size) {
                batch_states.clear();
                batch_states.extend(chunk.iter().map(|b| State::with_prefix(head, b, body_len)));
                let values = value_fn.values(&batch_states);
                counters.valued += chunk.len();
                for (body, v) in chunk.iter().zip(values) {
                    if v >= cfg.min_value {
                        heap.push(Candidate {
                            value: v,
                            seq,
                            body: body.clone(),
                        });
                        seq += 1;
                        counters.admitted += 1;
                    }
                }
            }
            queue.clear();
        }
        let Some(cand) = heap.pop() else { continue };
        counters.explored += 1;
        if cand.body.len() < body_len {
            for p in refine(kg, &cand.body) {
                // `head <= head` holds trivially and predicts nothing new
                if body_len == 1 && p == head {
                    continue;
                }
                let mut child = cand.body.clone();
                child.push(p);
                queue.push(child);
                counters.generated += 1;
            }
        } else {
            let g = body_groundings(kg, &cand.body, cfg.grounding_limit);
            let stats = stats_from_groundings(kg, head, &g);
            counters.evaluated += 1;
            let psi = cfg.measure.pick(&stats);
            if psi >= cfg.min_conf && stats.hc >= cfg.min_hc {
                let rho = scorer.score(head, &cand.body);
                let score = hybrid_score(&stats, rho, cfg.lambda, cfg.measure)?;
                let mined = MinedRule {
                    rule: Rule { head, body: cand.body },
                    stats,
                    rho,
                    score,
                    emitted_secs: start.elapsed().as_secs_f64(),
                };
                on_emit(&mined);
                counters.emitted += 1;
                rules.push(mined);
            }
        }
    }
    sort_rules(kg, &mut rules);
    Ok(SearchOutcome {
        head,
        rules,
        truncated,
        counters,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadOutcome {
    pub head: PredicateId,
    pub rules: Vec<MinedRule>,
    pub truncated: bool,
    pub counters: SearchCounters,
    pub error: Option<String>,
}

/// Mines every head in `heads`, sweeping lengths from 2 to `cfg.length` and
/// merging the results. `cfg.time_limit_secs` is a per-head budget shared by
/// the sweep. Up to `jobs` heads run concurrently; results keep the order of
/// `heads`.
pub fn mine_all<V, S>(
    kg: &KnowledgeGraph,
    heads: &[PredicateId],
    cfg: &SearchConfig,
    value_fn: &V,
    scorer: &S,
    jobs: usize,
) -> Result<Vec<HeadOutcome>, SearchError>
where
    V: ValueFunction + Sync + ?Sized,
    S: RuleScorer + Sync + ?Sized,
{
    cfg.validate()?;
    let run_head = |head: PredicateId| -> HeadOutcome {
        let deadline = cfg.time_limit().map(|t| Instant::now() + t);
        let mut out = HeadOutcome {
            head,
            rules: Vec::new(),
            truncated: false,
            counters: SearchCounters::default(),
            error: None,
        };
        let mut seen = HashSet::new();
        for length in 2..=cfg.length {
            let c = SearchConfig {
                length,
                time_limit_secs: None,
                ..cfg.clone()
            };
            match mine_with(kg, head, &c, value_fn, scorer, deadline, |_| {}) {
                Ok(res) => {
                    out.counters.add(&res.counters);
                    out.truncated |= res.truncated;
                    out.rules.extend(res.rules.into_iter().filter(|r| seen.insert(r.rule.clone())));
                    if res.truncated {
                        break;
                    }
                }
                Err(e) => {
                    log::error!("mining head {} failed: {e}", kg.predicate_name(head));
                    out.error = Some(e.to_string());
                    break;
                }
            }
        }
        sort_rules(kg, &mut out.rules);
        out
    };

    let jobs = jobs.max(1).min(heads.len().max(1));
    if jobs == 1 {
        return Ok(heads.iter().map(|&h| run_head(h)).collect());
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<HeadOutcome>>> = Mutex::new(vec![None; heads.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                if i >= heads.len() {
                    break;
                }
                let res = run_head(heads[i]);
                slots.lock().expect("result lock")[i] = Some(res);
            });
        }
    });
    Ok(slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every head ran"))
        .collect())
}
