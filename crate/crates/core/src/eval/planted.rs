//! Synthetic graphs with known rules.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kg::{EntityId, Fact, KnowledgeGraph, SymbolTable};
use crate::rule::{body_groundings, Rule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub entities: usize,
    /// Names of the original predicates; rule ids refer to this order.
    pub predicates: Vec<String>,
    pub rules: Vec<Rule>,
    /// Random body paths laid down per rule before closure.
    pub chains_per_rule: usize,
    /// Probability that a derivable head fact is left out.
    pub dropout: f64,
    /// Random facts added after closure, as a fraction of the closed graph.
    pub noise: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PlantedKg {
    pub kg: KnowledgeGraph,
    pub rules: Vec<Rule>,
}

fn build(entities: &SymbolTable, predicates: &SymbolTable, facts: &[Fact]) -> KnowledgeGraph {
    KnowledgeGraph::from_parts(entities.clone(), predicates.clone(), facts.iter().copied())
        .expect("generated ids are in range")
}

/// Lays down random body paths for every rule, closes the graph under the
/// rules (each derivable head fact kept with probability `1 - dropout`,
/// decided once per rule and pair) until nothing changes, then adds uniform
/// random facts.
pub fn generate_planted_kg(spec: &PlantedSpec) -> PlantedKg {
    assert!(spec.entities >= 2, "need at least two entities");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let entities = SymbolTable::from_names((0..spec.entities).map(|i| format!("e{i}")));
    let predicates = SymbolTable::from_names(spec.predicates.iter().map(String::as_str));
    let n = spec.entities as u32;

    let mut facts: Vec<Fact> = Vec::new();
    for rule in &spec.rules {
        for _ in 0..spec.chains_per_rule {
            let mut z = EntityId(rng.gen_range(0..n));
            for &p in &rule.body {
                let next = EntityId(rng.gen_range(0..n));
                facts.push(Fact::new(z, p, next).canonical());
                z = next;
            }
        }
    }

    let mut decided: HashSet<(usize, EntityId, EntityId)> = HashSet::new();
    loop {
        let kg = build(&entities, &predicates, &facts);
        let mut added = false;
        for (ri, rule) in spec.rules.iter().enumerate() {
            for (x, y) in body_groundings(&kg, &rule.body, None).pairs {
                if decided.insert((ri, x, y)) && rng.gen::<f64>() >= spec.dropout {
                    let f = Fact::new(x, rule.head, y).canonical();
                    if !kg.contains_fact(&f) {
                        facts.push(f);
                        added = true;
                    }
                }
            }
        }
        if !added {
            break;
        }
    }

    let closed = build(&entities, &predicates, &facts);
    let n_noise = (spec.noise * closed.num_facts() as f64).round() as usize;
    let n_pred = spec.predicates.len();
    let mut facts: Vec<Fact> = closed.facts().to_vec();
    for _ in 0..n_noise {
        let s = EntityId(rng.gen_range(0..n));
        let o = EntityId(rng.gen_range(0..n));
        let p = crate::kg::PredicateId::from_base(rng.gen_range(0..n_pred));
        facts.push(Fact::new(s, p, o));
    }
    PlantedKg {
        kg: build(&entities, &predicates, &facts),
        rules: spec.rules.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::PredicateId;
    use crate::rule::evaluate;

    fn spec(dropout: f64, noise: f64, chains: usize) -> PlantedSpec {
        let p = PredicateId::from_base;
        PlantedSpec {
            entities: 3000,
            predicates: ["h", "a", "b"].map(String::from).to_vec(),
            rules: vec![Rule::new(p(0), vec![p(1), p(2).inverse()]).unwrap()],
            chains_per_rule: chains,
            dropout,
            noise,
            seed: 5,
        }
    }

    #[test]
    fn clean_closure_has_unit_confidence() {
        let g = generate_planted_kg(&spec(0.0, 0.0, 200));
        let st = evaluate(&g.kg, &g.rules[0], None);
        assert!(st.body_count >= 200);
        assert_eq!(st.conf, 1.0);
    }

    #[test]
    fn dropout_sets_confidence() {
        let g = generate_planted_kg(&spec(0.2, 0.0, 1000));
        let st = evaluate(&g.kg, &g.rules[0], None);
        assert!(st.body_count >= 1000);
        assert!((st.conf - 0.8).abs() < 0.05, "conf {}", st.conf);
    }

    #[test]
    fn fixed_seed_fixed_bytes() {
        let s = spec(0.1, 0.1, 100);
        let mut a = Vec::new();
        let mut b = Vec::new();
        generate_planted_kg(&s).kg.write_triples(&mut a).unwrap();
        generate_planted_kg(&s).kg.write_triples(&mut b).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }
}
