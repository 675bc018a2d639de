use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_rules, Prediction};
use crate::kg::{EntityId, Fact, KnowledgeGraph, PredicateId};
use crate::search::MinedRule;

/// Train graph plus held-out facts drawn per predicate.
#[derive(Clone, Debug)]
pub struct EvalSplit {
    pub train: KnowledgeGraph,
    /// Sorted.
    pub held_out: Vec<Fact>,
    pub ratio: f64,
    pub seed: u64,
}

impl EvalSplit {
    /// Holds out `round(ratio * n)` uniformly chosen facts of each predicate
    /// in `heads` (each with `n` facts). Facts of other predicates stay in
    /// the train graph.
    pub fn new(kg: &KnowledgeGraph, heads: &[PredicateId], ratio: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&ratio), "ratio must be in [0, 1]");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut held = Vec::new();
        let mut heads: Vec<PredicateId> = heads.iter().map(|p| p.base()).collect();
        heads.sort_unstable();
        heads.dedup();
        for p in heads {
            let mut facts: Vec<Fact> = kg.pairs(p).map(|(s, o)| Fact::new(s, p, o)).collect();
            facts.shuffle(&mut rng);
            let k = (ratio * facts.len() as f64).round() as usize;
            held.extend_from_slice(&facts[..k]);
        }
        held.sort_unstable();
        let set: HashSet<Fact> = held.iter().copied().collect();
        EvalSplit {
            train: kg.without(&set),
            held_out: held,
            ratio,
            seed,
        }
    }

    pub fn held_out_set(&self) -> HashSet<Fact> {
        self.held_out.iter().copied().collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictivePower {
    /// Predictions that land in the held-out set.
    pub facts: usize,
    /// Those with confidence degree at least 0.7.
    pub quality_facts: usize,
}

pub const QUALITY_CD: f64 = 0.7;

/// Applies rules mined on the train graph and counts held-out hits.
pub fn predictive_power(split: &EvalSplit, rules: &[MinedRule]) -> PredictivePower {
    let held = split.held_out_set();
    let mut out = PredictivePower::default();
    for p in apply_rules(&split.train, rules) {
        if held.contains(&p.fact) {
            out.facts += 1;
            if p.cd >= QUALITY_CD {
                out.quality_facts += 1;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub mrr: f64,
    pub hits_at_1: f64,
    pub hits_at_10: f64,
    pub queries: usize,
}

impl RankingMetrics {
    pub fn from_ranks(ranks: &[f64]) -> Self {
        if ranks.is_empty() {
            return RankingMetrics::default();
        }
        let n = ranks.len() as f64;
        RankingMetrics {
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
            hits_at_1: ranks.iter().filter(|&&r| r <= 1.0).count() as f64 / n,
            hits_at_10: ranks.iter().filter(|&&r| r <= 10.0).count() as f64 / n,
            queries: ranks.len(),
        }
    }
}

/// Rank of an answer scoring `answer` among `candidates` entities (answer
/// included). `others` holds the positive scores of the other candidates;
/// the rest score 0. Ties share the average of the ranks they span.
pub fn average_rank(answer: f64, others: &[f64], candidates: usize) -> f64 {
    assert!(candidates > others.len(), "more scored candidates than candidates");
    let zeros = candidates - 1 - others.len();
    let greater = others.iter().filter(|&&s| s > answer).count();
    let mut ties = others.iter().filter(|&&s| s == answer).count();
    if answer <= 0.0 {
        ties += zeros;
    }
    1.0 + greater as f64 + ties as f64 / 2.0
}

/// Filtered link prediction over the held-out facts in both directions.
/// Candidates known to be true (train or held out), other than the answer,
/// are removed from each ranking.
pub fn link_prediction(split: &EvalSplit, rules: &[MinedRule]) -> RankingMetrics {
    let preds = apply_rules(&split.train, rules);
    let held = split.held_out_set();
    let n = split.train.num_entities();
    let mut tails: HashMap<(EntityId, PredicateId), Vec<(EntityId, f64)>> = HashMap::new();
    let mut heads: HashMap<(PredicateId, EntityId), Vec<(EntityId, f64)>> = HashMap::new();
    for p in &preds {
        let f = p.fact;
        tails.entry((f.subject, f.predicate)).or_default().push((f.object, p.cd));
        heads.entry((f.predicate, f.object)).or_default().push((f.subject, p.cd));
    }
    let known = |s: EntityId, p: PredicateId, o: EntityId| split.train.contains(s, p, o) || held.contains(&Fact::new(s, p, o));
    // true answers to (s, p, ?) and (?, p, o) in train plus held out
    let mut true_tails: HashMap<(EntityId, PredicateId), HashSet<EntityId>> = HashMap::new();
    let mut true_heads: HashMap<(PredicateId, EntityId), HashSet<EntityId>> = HashMap::new();
    let mut preds_held: Vec<PredicateId> = split.held_out.iter().map(|f| f.predicate).collect();
    preds_held.sort_unstable();
    preds_held.dedup();
    for &p in &preds_held {
        let held_pairs = split.held_out.iter().filter(|h| h.predicate == p).map(|h| (h.subject, h.object));
        for (s, o) in split.train.pairs(p).chain(held_pairs) {
            true_tails.entry((s, p)).or_default().insert(o);
            true_heads.entry((p, o)).or_default().insert(s);
        }
    }

    let mut ranks = Vec::with_capacity(2 * split.held_out.len());
    for f in &split.held_out {
        let (s, p, o) = (f.subject, f.predicate, f.object);
        let lookup = |list: Option<&Vec<(EntityId, f64)>>, answer: EntityId, is_filtered: &dyn Fn(EntityId) -> bool| {
            let mut score = 0.0;
            let mut others = Vec::new();
            for &(e, cd) in list.into_iter().flatten() {
                if e == answer {
                    score = cd;
                } else if !is_filtered(e) && cd > 0.0 {
                    others.push(cd);
                }
            }
            (score, others)
        };
        let filtered_t = true_tails.get(&(s, p)).map_or(0, |set| set.len() - usize::from(set.contains(&o)));
        let (score, others) = lookup(tails.get(&(s, p)), o, &|e| known(s, p, e));
        ranks.push(average_rank(score, &others, n - filtered_t));

        let filtered_h = true_heads.get(&(p, o)).map_or(0, |set| set.len() - usize::from(set.contains(&s)));
        let (score, others) = lookup(heads.get(&(p, o)), s, &|e| known(e, p, o));
        ranks.push(average_rank(score, &others, n - filtered_h));
    }
    RankingMetrics::from_ranks(&ranks)
}

/// New predictions ranked by confidence degree with whether each hits
/// `truth`, for precision curves.
pub fn precision_curve(preds: &[Prediction], truth: &HashSet<Fact>) -> Vec<(f64, bool)> {
    let mut out: Vec<(f64, bool)> = preds
        .iter()
        .filter(|p| !p.known)
        .map(|p| (p.cd, truth.contains(&p.fact)))
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::LoadOptions;

    #[test]
    fn rank_conventions() {
        assert_eq!(average_rank(0.9, &[], 10), 1.0);
        assert_eq!(average_rank(0.0, &[], 9), 5.0);
        assert_eq!(average_rank(0.5, &[0.9, 0.5, 0.1], 4), 2.5);
        assert_eq!(average_rank(0.0, &[0.9], 4), 3.0);
    }

    #[test]
    fn metrics_from_ranks() {
        let m = RankingMetrics::from_ranks(&[1.0, 2.0, 20.0, 1.5]);
        assert_eq!(m.queries, 4);
        assert_eq!(m.hits_at_1, 0.25);
        assert_eq!(m.hits_at_10, 0.75);
        assert!((m.mrr - (1.0 + 0.5 + 0.05 + 1.0 / 1.5) / 4.0).abs() < 1e-15);
        assert!(m.hits_at_10 >= m.hits_at_1);
    }

    #[test]
    fn split_is_disjoint_and_complete() {
        let mut text = String::new();
        for i in 0..20 {
            text.push_str(&format!("e{i}\tP\te{}\ne{i}\tQ\te{}\n", i + 1, i + 2));
        }
        let kg = KnowledgeGraph::load_triples(text.as_bytes(), &LoadOptions::default()).unwrap();
        let p = kg.parse_predicate("P").unwrap();
        let split = EvalSplit::new(&kg, &[p], 0.3, 7);
        assert_eq!(split.held_out.len(), 6);
        for f in &split.held_out {
            assert_eq!(f.predicate, p);
            assert!(!split.train.contains_fact(f));
            assert!(kg.contains_fact(f));
        }
        assert_eq!(split.train.num_facts() + 6, kg.num_facts());
        assert_eq!(split.held_out, EvalSplit::new(&kg, &[p], 0.3, 7).held_out);
    }
}
