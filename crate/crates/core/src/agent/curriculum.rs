use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::State;
use super::AgentError;
use crate::embedding::RuleScorer;
use crate::kg::{KnowledgeGraph, PredicateId};
use crate::rule::Rule;

/// Shortest body length covered by `phi`.
pub const MIN_BODY_LEN: usize = 2;
/// Longest body length covered by `phi`.
pub const MAX_BODY_LEN: usize = 6;

/// One row of the curriculum: a distribution over body lengths 2..=6, the
/// probability `q` of a fully masked start, and an episode budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumStage {
    pub phi: [f64; 5],
    pub q: f64,
    pub episodes: usize,
}

impl CurriculumStage {
    /// The four stages with their full-scale budgets (50K, 100K, 100K, 150K).
    pub fn paper_stages() -> Vec<CurriculumStage> {
        vec![
            CurriculumStage {
                phi: [0.25, 0.25, 0.50, 0.0, 0.0],
                q: 0.0,
                episodes: 50_000,
            },
            CurriculumStage {
                phi: [0.17, 0.33, 0.50, 0.0, 0.0],
                q: 0.3,
                episodes: 100_000,
            },
            CurriculumStage {
                phi: [0.15, 0.20, 0.25, 0.40, 0.0],
                q: 0.6,
                episodes: 100_000,
            },
            CurriculumStage {
                phi: [0.10, 0.15, 0.20, 0.25, 0.30],
                q: 0.8,
                episodes: 150_000,
            },
        ]
    }

    /// The paper stages with every budget replaced.
    pub fn scaled(budgets: [usize; 4]) -> Vec<CurriculumStage> {
        Self::paper_stages()
            .into_iter()
            .zip(budgets)
            .map(|(s, episodes)| CurriculumStage { episodes, ..s })
            .collect()
    }

    /// Always fully masked, body length fixed.
    pub fn fixed_length(body_len: usize, episodes: usize) -> CurriculumStage {
        assert!((MIN_BODY_LEN..=MAX_BODY_LEN).contains(&body_len));
        let mut phi = [0.0; 5];
        phi[body_len - MIN_BODY_LEN] = 1.0;
        CurriculumStage { phi, q: 1.0, episodes }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.phi.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(AgentError::Config("phi entries must be in [0, 1]".into()));
        }
        let sum: f64 = self.phi.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(AgentError::Config(format!("phi sums to {sum}, expected 1")));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(AgentError::Config("q must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn sample_length<G: Rng + ?Sized>(&self, rng: &mut G) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = MIN_BODY_LEN;
        for (i, &p) in self.phi.iter().enumerate() {
            if p > 0.0 {
                last = MIN_BODY_LEN + i;
            }
            acc += p;
            if u < acc {
                return MIN_BODY_LEN + i;
            }
        }
        last
    }
}

/// Initial state for an episode. With probability `1 - q` a seed rule is
/// partially masked (between one and all of its body slots); otherwise a
/// head is drawn from `heads` and the body of a `phi`-sampled length is fully
/// masked.
pub fn curriculum_init<G: Rng + ?Sized>(
    stage: &CurriculumStage,
    seeds: &[Rule],
    heads: &[PredicateId],
    rng: &mut G,
) -> Result<State, AgentError> {
    let p: f64 = rng.gen();
    if p > stage.q {
        let rule = seeds
            .choose(rng)
            .ok_or_else(|| AgentError::Config("curriculum stage needs seed rules but none were given".into()))?;
        let n = rule.body.len();
        let m = rng.gen_range(1..=n);
        let mut slots: Vec<Option<PredicateId>> = rule.body.iter().copied().map(Some).collect();
        for i in index::sample(rng, n, m) {
            slots[i] = None;
        }
        Ok(State::from_slots(rule.head, slots))
    } else {
        let len = stage.sample_length(rng);
        let head = *heads
            .choose(rng)
            .ok_or_else(|| AgentError::Config("no head predicates to sample".into()))?;
        Ok(State::masked(head, len))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    /// Seeds to return.
    pub count: usize,
    /// Candidates drawn to fix the score threshold.
    pub pool: usize,
    /// Fraction of the pool, by score, that passes.
    pub top_fraction: f64,
    /// Absolute lower bound on the score of a seed.
    pub min_score: f64,
    /// Total candidates drawn before giving up.
    pub max_attempts: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            count: 1000,
            pool: 50_000,
            top_fraction: 0.1,
            min_score: 0.0,
            max_attempts: 500_000,
        }
    }
}

impl SeedConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.count == 0 || self.pool == 0 {
            return Err(AgentError::Config("seed count and pool must be positive".into()));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(AgentError::Config("top_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedSample {
    pub rules: Vec<Rule>,
    pub threshold: f64,
    /// Fewer than the requested count were found.
    pub partial: bool,
}

fn random_rule<G: Rng + ?Sized>(heads: &[PredicateId], vocab: usize, rng: &mut G) -> Rule {
    let head = heads[rng.gen_range(0..heads.len())];
    let len = rng.gen_range(2..=3);
    let body = (0..len).map(|_| PredicateId(rng.gen_range(0..vocab as u32))).collect();
    Rule { head, body }
}

/// Draws random rules (original head, body of 2 or 3 atoms over the whole
/// vocabulary) and keeps distinct ones scoring in the top `top_fraction` of
/// an initial pool.
pub fn sample_seed_rules<S: RuleScorer + ?Sized, G: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    scorer: &S,
    cfg: &SeedConfig,
    rng: &mut G,
) -> Result<SeedSample, AgentError> {
    cfg.validate()?;
    let heads = kg.original_predicates();
    let vocab = kg.vocabulary_size();
    if heads.is_empty() {
        return Ok(SeedSample {
            rules: Vec::new(),
            threshold: f64::INFINITY,
            partial: true,
        });
    }
    let pool: Vec<(Rule, f64)> = (0..cfg.pool)
        .map(|_| {
            let r = random_rule(&heads, vocab, rng);
            let s = scorer.score(r.head, &r.body);
            (r, s)
        })
        .collect();
    let mut scores: Vec<f64> = pool.iter().map(|(_, s)| *s).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let keep = ((cfg.pool as f64 * cfg.top_fraction).ceil() as usize).clamp(1, cfg.pool);
    let threshold = scores[keep - 1].max(cfg.min_score);

    let mut seen = HashSet::new();
    let mut rules = Vec::new();
    let mut offer = |r: Rule, s: f64, rules: &mut Vec<Rule>| {
        if s >= threshold && rules.len() < cfg.count && seen.insert(r.clone()) {
            rules.push(r);
        }
    };
    for (r, s) in pool {
        offer(r, s, &mut rules);
    }
    let mut attempts = cfg.pool;
    while rules.len() < cfg.count && attempts < cfg.max_attempts {
        let r = random_rule(&heads, vocab, rng);
        let s = scorer.score(r.head, &r.body);
        offer(r, s, &mut rules);
        attempts += 1;
    }
    let partial = rules.len() < cfg.count;
    if partial {
        log::warn!(
            "seed sampling found {} of {} rules above {threshold:.6} after {attempts} draws",
            rules.len(),
            cfg.count
        );
    }
    Ok(SeedSample {
        rules,
        threshold,
        partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Sum;
    impl RuleScorer for Sum {
        fn score(&self, head: PredicateId, body: &[PredicateId]) -> f64 {
            let s: u32 = body.iter().map(|p| p.0).sum::<u32>() + head.0;
            s as f64 / 100.0
        }
    }

    fn kg() -> KnowledgeGraph {
        let text = "a\tP\tb\nb\tQ\tc\nc\tR\ta\n";
        KnowledgeGraph::load_triples(text.as_bytes(), &Default::default()).unwrap()
    }

    #[test]
    fn table_rows() {
        let st = CurriculumStage::paper_stages();
        assert_eq!(st.len(), 4);
        assert_eq!(st[0].q, 0.0);
        assert_eq!(st[3].phi, [0.10, 0.15, 0.20, 0.25, 0.30]);
        assert_eq!(st.iter().map(|s| s.episodes).collect::<Vec<_>>(), vec![50_000, 100_000, 100_000, 150_000]);
        for s in &st {
            s.validate().unwrap();
        }
    }

    #[test]
    fn stage_zero_always_uses_seeds() {
        let stage = &CurriculumStage::paper_stages()[0];
        let seeds = vec![Rule::new(PredicateId(0), vec![PredicateId(2), PredicateId(4), PredicateId(3)]).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = curriculum_init(stage, &seeds, &[PredicateId(0)], &mut rng).unwrap();
            assert_eq!(s.body_len(), 3);
            assert!(s.num_masked() >= 1);
            for (slot, orig) in s.slots().iter().zip(&seeds[0].body) {
                assert!(slot.is_none() || *slot == Some(*orig));
            }
        }
    }

    #[test]
    fn q_one_matches_phi() {
        let stage = CurriculumStage {
            q: 1.0,
            ..CurriculumStage::paper_stages()[3].clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 5];
        let heads = [PredicateId(0), PredicateId(2)];
        for _ in 0..10_000 {
            let s = curriculum_init(&stage, &[], &heads, &mut rng).unwrap();
            assert_eq!(s.num_masked(), s.body_len());
            assert!(!s.head().is_inverse());
            counts[s.body_len() - 2] += 1;
        }
        for (c, p) in counts.iter().zip(stage.phi) {
            assert!((*c as f64 / 10_000.0 - p).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn empty_seed_set_is_a_config_error() {
        let stage = &CurriculumStage::paper_stages()[0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            curriculum_init(stage, &[], &[PredicateId(0)], &mut rng),
            Err(AgentError::Config(_))
        ));
    }

    #[test]
    fn seeds_are_short_and_above_threshold() {
        let kg = kg();
        let cfg = SeedConfig {
            count: 20,
            pool: 2000,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = sample_seed_rules(&kg, &Sum, &cfg, &mut rng).unwrap();
        assert_eq!(out.rules.len(), 20);
        assert!(!out.partial);
        let mut mean_seed = 0.0;
        for r in &out.rules {
            assert!((2..=3).contains(&r.body.len()));
            assert!(!r.head.is_inverse());
            let s = Sum.score(r.head, &r.body);
            assert!(s >= out.threshold);
            mean_seed += s / 20.0;
        }
        let heads = kg.original_predicates();
        let mean_rand: f64 = (0..2000)
            .map(|_| {
                let r = random_rule(&heads, kg.vocabulary_size(), &mut rng);
                Sum.score(r.head, &r.body)
            })
            .sum::<f64>()
            / 2000.0;
        assert!(mean_seed > mean_rand);
    }

    #[test]
    fn unreachable_floor_gives_partial_set() {
        let cfg = SeedConfig {
            count: 5,
            pool: 100,
            min_score: 2.0,
            max_attempts: 1000,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = sample_seed_rules(&kg(), &Sum, &cfg, &mut rng).unwrap();
        assert!(out.partial);
        assert!(out.rules.is_empty());
    }
}
