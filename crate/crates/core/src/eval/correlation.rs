//! Agreement between a value function and the true quality of partial rules.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{State, ValueFunction};
use crate::kg::{KnowledgeGraph, PredicateId};
use crate::rule::{evaluate, refine, Rule};

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("correlation needs at least two distinct states, got {0}")]
    TooFewSamples(usize),
    #[error("correlation is undefined: one of the series is constant")]
    ZeroVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationConfig {
    pub samples: usize,
    /// Rule lengths (head included) to draw states from; each at least 3.
    pub lengths: Vec<usize>,
    pub min_conf: f64,
    /// Enumerate completions exhaustively up to this many, else sample.
    pub max_exhaustive: usize,
    pub sampled_completions: usize,
    pub seed: u64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            samples: 2000,
            lengths: vec![3, 4],
            min_conf: 0.1,
            max_exhaustive: 4096,
            sampled_completions: 512,
            seed: 0,
        }
    }
}

/// States the search could hold: a head, a non-empty body prefix reached by
/// refinement, and masked remaining slots.
pub fn sample_search_states<G: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    heads: &[PredicateId],
    lengths: &[usize],
    count: usize,
    rng: &mut G,
) -> Vec<State> {
    let mut out = Vec::with_capacity(count);
    let mut children_cache: HashMap<Vec<PredicateId>, Vec<PredicateId>> = HashMap::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let (Some(&head), Some(&len)) = (heads.choose(rng), lengths.choose(rng)) else {
            break;
        };
        if len < 3 {
            continue;
        }
        let k = rng.gen_range(1..=len - 2);
        let mut prefix = Vec::with_capacity(k);
        while prefix.len() < k {
            let children = children_cache.entry(prefix.clone()).or_insert_with(|| refine(kg, &prefix));
            match children.choose(rng) {
                Some(&p) => prefix.push(p),
                None => break,
            }
        }
        if prefix.len() == k {
            out.push(State::with_prefix(head, &prefix, len - 1));
        }
    }
    out
}

fn count_passing(kg: &KnowledgeGraph, head: PredicateId, prefix: &mut Vec<PredicateId>, body_len: usize, min_conf: f64) -> usize {
    if prefix.len() == body_len {
        let rule = Rule {
            head,
            body: prefix.clone(),
        };
        return usize::from(evaluate(kg, &rule, None).conf >= min_conf);
    }
    let mut n = 0;
    for p in refine(kg, prefix) {
        prefix.push(p);
        n += count_passing(kg, head, prefix, body_len, min_conf);
        prefix.pop();
    }
    n
}

/// Fraction of the `|Gamma|^m` completions of the state's `m` masked
/// trailing slots whose confidence reaches `min_conf`. Completions without
/// any grounding count as failing. Exhaustive when `|Gamma|^m` is at most
/// `max_exhaustive`, otherwise estimated from `samples` uniform completions.
pub fn quality_ratio<G: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    state: &State,
    min_conf: f64,
    max_exhaustive: usize,
    samples: usize,
    rng: &mut G,
) -> f64 {
    let mut prefix: Vec<PredicateId> = state.slots().iter().map_while(|s| *s).collect();
    assert_eq!(prefix.len() + state.num_masked(), state.body_len(), "masked slots must be trailing");
    let vocab = kg.vocabulary_size();
    let m = state.num_masked() as u32;
    let total = (vocab as u128).checked_pow(m).unwrap_or(u128::MAX);
    if total == 0 {
        return 0.0;
    }
    if total <= max_exhaustive as u128 {
        let hits = count_passing(kg, state.head(), &mut prefix, state.body_len(), min_conf);
        return hits as f64 / total as f64;
    }
    let mut hits = 0;
    for _ in 0..samples {
        let mut body = prefix.clone();
        while body.len() < state.body_len() {
            body.push(PredicateId(rng.gen_range(0..vocab as u32)));
        }
        let rule = Rule {
            head: state.head(),
            body,
        };
        hits += usize::from(evaluate(kg, &rule, None).conf >= min_conf);
    }
    hits as f64 / samples.max(1) as f64
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Pearson correlation between `V(s)` and the quality ratio of `s` over
/// sampled search states. Heads are the original predicates with facts.
pub fn value_quality_correlation<V: ValueFunction + ?Sized>(
    kg: &KnowledgeGraph,
    value_fn: &V,
    cfg: &CorrelationConfig,
) -> Result<f64, CorrelationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let heads: Vec<PredicateId> = kg
        .original_predicates()
        .into_iter()
        .filter(|&p| kg.predicate_count(p) > 0)
        .collect();
    let states = sample_search_states(kg, &heads, &cfg.lengths, cfg.samples, &mut rng);
    let distinct: HashSet<&State> = states.iter().collect();
    if distinct.len() < 2 {
        return Err(CorrelationError::TooFewSamples(distinct.len()));
    }
    let mut cache: HashMap<State, f64> = HashMap::new();
    let quality: Vec<f64> = states
        .iter()
        .map(|s| {
            if let Some(&q) = cache.get(s) {
                return q;
            }
            let q = quality_ratio(kg, s, cfg.min_conf, cfg.max_exhaustive, cfg.sampled_completions, &mut rng);
            cache.insert(s.clone(), q);
            q
        })
        .collect();
    let values = value_fn.values(&states);
    pearson(&values, &quality).ok_or(CorrelationError::ZeroVariance)
}
