//! Rule application, held-out evaluation and test-data generation.

mod correlation;
mod planted;
mod split;

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::kg::{Fact, KnowledgeGraph};
use crate::rule::body_groundings;
use crate::search::MinedRule;

pub use correlation::{pearson, quality_ratio, sample_search_states, value_quality_correlation, CorrelationConfig, CorrelationError};
pub use planted::{generate_planted_kg, PlantedKg, PlantedSpec};
pub use split::{
    average_rank, link_prediction, precision_curve, predictive_power, EvalSplit, PredictivePower, RankingMetrics,
};

/// Rule scores are capped here before aggregation so that no single rule
/// makes the product vanish.
pub const MAX_RULE_SCORE: f64 = 1.0 - 1e-9;

/// Largest `f64` strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// `1 - prod(1 - s_i)` over the capped scores, evaluated exactly in rational
/// arithmetic and rounded once, so the result is independent of order and
/// never decreases when a score is added.
pub fn noisy_or(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let one = BigRational::one();
    let mut prod = one.clone();
    for &s in scores {
        let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, MAX_RULE_SCORE) };
        let s = BigRational::from_float(s).unwrap_or_else(BigRational::zero);
        prod *= &one - s;
    }
    let cd = (one - prod).to_f64().unwrap_or(0.0);
    cd.min(BELOW_ONE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub fact: Fact,
    /// Confidence degree.
    pub cd: f64,
    /// Indices into the applied rule list.
    pub rules: Vec<usize>,
    /// The fact is already in the graph the rules were applied to.
    pub known: bool,
}

/// Grounds every rule body on `kg` and aggregates the scores of all rules
/// deriving each head fact. Sorted by confidence degree descending, then fact.
pub fn apply_rules(kg: &KnowledgeGraph, rules: &[MinedRule]) -> Vec<Prediction> {
    let mut derived: BTreeMap<Fact, Vec<usize>> = BTreeMap::new();
    for (i, r) in rules.iter().enumerate() {
        let g = body_groundings(kg, &r.rule.body, None);
        for (x, y) in g.pairs {
            derived.entry(Fact::new(x, r.rule.head, y)).or_default().push(i);
        }
    }
    let mut out: Vec<Prediction> = derived
        .into_iter()
        .map(|(fact, ids)| {
            let scores: Vec<f64> = ids.iter().map(|&i| rules[i].score).collect();
            Prediction {
                fact,
                cd: noisy_or(&scores),
                known: kg.contains_fact(&fact),
                rules: ids,
            }
        })
        .collect();
    out.sort_by(|a, b| b.cd.total_cmp(&a.cd).then_with(|| a.fact.cmp(&b.fact)));
    out
}

/// Writes `subject<TAB>predicate<TAB>object<TAB>cd<TAB>rule_ids`.
pub fn write_predictions<W: Write>(mut w: W, kg: &KnowledgeGraph, preds: &[Prediction]) -> std::io::Result<()> {
    for p in preds {
        let ids: Vec<String> = p.rules.iter().map(usize::to_string).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{:.6}\t{}",
            kg.entity_name(p.fact.subject),
            kg.predicate_name(p.fact.predicate),
            kg.entity_name(p.fact.object),
            p.cd,
            ids.join(",")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::LoadOptions;
    use crate::rule::{Rule, RuleStats};
    use proptest::prelude::*;

    #[test]
    fn single_and_pair() {
        assert_eq!(noisy_or(&[]), 0.0);
        assert_eq!(noisy_or(&[0.3]), 0.3);
        assert_eq!(noisy_or(&[0.5, 0.5]), 0.75);
        assert_eq!(noisy_or(&[1.0]), MAX_RULE_SCORE);
        assert!(noisy_or(&[1.0; 50]) < 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn bounds_order_and_monotonicity(
            mut scores in proptest::collection::vec(0.0f64..=1.0, 1..12),
            extra in 0.0f64..=1.0,
        ) {
            let cd = noisy_or(&scores);
            let max = scores.iter().cloned().fold(0.0, f64::max).min(MAX_RULE_SCORE);
            prop_assert!(cd >= max && cd < 1.0);
            let mut rev = scores.clone();
            rev.reverse();
            prop_assert_eq!(noisy_or(&rev), cd);
            scores.push(extra);
            prop_assert!(noisy_or(&scores) >= cd);
        }
    }

    fn mined(rule: Rule, score: f64) -> MinedRule {
        MinedRule {
            rule,
            stats: RuleStats::default(),
            rho: 0.0,
            score,
            emitted_secs: 0.0,
        }
    }

    #[test]
    fn apply_aggregates_rules() {
        let kg = KnowledgeGraph::load_triples(
            "a\tP\tb\nb\tQ\tc\na\tR\tc\nH\tH\tH\n".as_bytes(),
            &LoadOptions::default(),
        )
        .unwrap();
        let [p, q, r, h] = ["P", "Q", "R", "H"].map(|n| kg.parse_predicate(n).unwrap());
        let rules = vec![
            mined(Rule::new(h, vec![p, q]).unwrap(), 0.5),
            mined(Rule::new(h, vec![r]).unwrap(), 0.5),
        ];
        let preds = apply_rules(&kg, &rules);
        let ac = preds
            .iter()
            .find(|x| x.fact.predicate == h && kg.entity_name(x.fact.subject) == "a")
            .unwrap();
        assert_eq!(ac.cd, 0.75);
        assert_eq!(ac.rules, vec![0, 1]);
        assert!(!ac.known);
        let swapped = apply_rules(&kg, &[rules[1].clone(), rules[0].clone()]);
        assert_eq!(swapped[0].cd, 0.75);
        let mut out = Vec::new();
        write_predictions(&mut out, &kg, &preds).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("a\tH\tc\t0.750000\t0,1\n"));
    }
}
