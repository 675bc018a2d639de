//! Acceptance suite. Each test covers one criterion and prints a single
//! `criterion N ... PASS|FAIL` line to stderr before asserting. Tests take a
//! shared lock so that wall-clock budgets are not eaten by each other.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlmine::agent::{sample_seed_rules, train_agent, CurriculumStage, NetworkShape, SeedConfig, TrainOutcome};
use rlmine::embedding::{train_transe, EmbeddingModel, ModelKind};
use rlmine::eval::{
    generate_planted_kg, link_prediction, noisy_or, value_quality_correlation, CorrelationConfig, EvalSplit,
    PlantedSpec,
};
use rlmine::kg::{EntityId, Fact, KnowledgeGraph, LoadOptions, SymbolTable};
use rlmine::rule::{evaluate, Rule, RuleStats};
use rlmine::search::{mine_all, Measure};
use rlmine::{AgentTrainConfig, EmbedTrainConfig, MinedRule, PredicateId, SearchConfig, State, ValueNetwork};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: usize, pass: bool, detail: impl std::fmt::Display) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2} {verdict} {detail}");
}

fn toy_graph() -> KnowledgeGraph {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy.tsv");
    let text = std::fs::read(path).unwrap();
    KnowledgeGraph::load_triples(text.as_slice(), &LoadOptions::default()).unwrap()
}

// ---- 1: rule statistics against a nested-loop oracle

fn random_graph(seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities = SymbolTable::from_names((0..40).map(|i| format!("e{i}")));
    let predicates = SymbolTable::from_names(["p", "q", "r", "s"]);
    let facts: Vec<Fact> = (0..200)
        .map(|_| {
            Fact::new(
                EntityId(rng.gen_range(0..40)),
                PredicateId::from_base(rng.gen_range(0..4)),
                EntityId(rng.gen_range(0..40)),
            )
        })
        .collect();
    KnowledgeGraph::from_parts(entities, predicates, facts).unwrap()
}

/// Statistics by brute force over every `(x, y)` and, for two atoms, every
/// middle entity.
fn oracle_stats(kg: &KnowledgeGraph, rule: &Rule) -> RuleStats {
    let triples: HashSet<(u32, u32, u32)> = kg
        .facts()
        .iter()
        .map(|f| (f.subject.0, f.predicate.0, f.object.0))
        .collect();
    let holds = |s: u32, p: PredicateId, o: u32| {
        if p.is_inverse() {
            triples.contains(&(o, p.base().0, s))
        } else {
            triples.contains(&(s, p.0, o))
        }
    };
    let n = kg.num_entities() as u32;
    let head = rule.head;
    let (mut supp, mut body_count, mut pca_body_count) = (0, 0, 0);
    for x in 0..n {
        let x_has_head = (0..n).any(|y| holds(x, head, y));
        for y in 0..n {
            let body = match rule.body.as_slice() {
                [a] => holds(x, *a, y),
                [a, b] => (0..n).any(|z| holds(x, *a, z) && holds(z, *b, y)),
                _ => unreachable!(),
            };
            if body {
                body_count += 1;
                if x_has_head {
                    pca_body_count += 1;
                }
                if holds(x, head, y) {
                    supp += 1;
                }
            }
        }
    }
    let head_count = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| holds(x, head, y)).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    RuleStats {
        supp,
        body_count,
        head_count,
        pca_body_count,
        conf: ratio(supp, body_count),
        hc: ratio(supp, head_count),
        pca_conf: ratio(supp, pca_body_count),
        truncated: false,
    }
}

fn all_bodies(vocab: usize, max_len: usize) -> Vec<Vec<PredicateId>> {
    let mut out: Vec<Vec<PredicateId>> = Vec::new();
    let mut frontier: Vec<Vec<PredicateId>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for b in &frontier {
            for p in 0..vocab as u32 {
                let mut c = b.clone();
                c.push(PredicateId(p));
                next.push(c);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn criterion_01_statistics_match_oracle() {
    let _g = serial();
    let start = Instant::now();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for seed in 0..5 {
        let kg = random_graph(seed);
        assert!(kg.num_facts() <= 200);
        for head in kg.original_predicates() {
            for body in all_bodies(kg.vocabulary_size(), 2) {
                let rule = Rule::new(head, body).unwrap();
                let got = evaluate(&kg, &rule, None);
                let want = oracle_stats(&kg, &rule);
                checked += 1;
                if (got.supp, got.body_count, got.conf, got.hc, got.pca_conf)
                    != (want.supp, want.body_count, want.conf, want.hc, want.pca_conf)
                {
                    mismatches.push(format!("seed {seed}: {rule:?} got {got:?} want {want:?}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches.is_empty() && secs < 30.0;
    report(1, pass, format!("{checked} rules, {} mismatches, {secs:.2}s (< 30s)", mismatches.len()));
    assert!(mismatches.is_empty(), "{:#?}", &mismatches[..mismatches.len().min(5)]);
    assert!(secs < 30.0);
}

// ---- 2: search completeness with no value pruning

#[test]
fn criterion_02_search_is_complete_without_pruning() {
    let _g = serial();
    let start = Instant::now();
    let kg = toy_graph();
    let cfg = SearchConfig {
        length: 3,
        min_value: 0.0,
        time_limit_secs: None,
        ..SearchConfig::default()
    };
    let net = ValueNetwork::<f32>::new(NetworkShape::desk(kg.vocabulary_size()), 3);
    let model = train_transe::<f32>(
        &kg,
        &EmbedTrainConfig {
            dim: 8,
            epochs: 5,
            ..EmbedTrainConfig::default()
        },
    )
    .unwrap();
    assert_eq!(cfg.measure, Measure::Cwa);
    let heads = kg.original_predicates();
    let outcomes = mine_all(&kg, &heads, &cfg, &net, &model, 1).unwrap();
    let mined: BTreeSet<Rule> = outcomes.iter().flat_map(|o| o.rules.iter().map(|r| r.rule.clone())).collect();

    let mut expected = BTreeSet::new();
    for &head in &heads {
        for body in all_bodies(kg.vocabulary_size(), cfg.length - 1) {
            if body == [head] {
                continue;
            }
            let rule = Rule::new(head, body).unwrap();
            let s = evaluate(&kg, &rule, None);
            if s.conf >= cfg.min_conf && s.hc >= cfg.min_hc {
                expected.insert(rule);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mined == expected && secs < 60.0;
    report(
        2,
        pass,
        format!("mined {} rules, enumerator {} rules, {secs:.2}s (< 60s)", mined.len(), expected.len()),
    );
    assert!(outcomes.iter().all(|o| !o.truncated));
    assert_eq!(
        mined.symmetric_difference(&expected).collect::<Vec<_>>(),
        Vec::<&Rule>::new()
    );
    assert!(secs < 60.0);
}

// ---- planted graph shared by 3, 7 and 8

struct Planted {
    kg: KnowledgeGraph,
    rules: Vec<Rule>,
    model: EmbeddingModel<f32>,
    seeds: Vec<Rule>,
}

fn planted_spec() -> PlantedSpec {
    let p = PredicateId::from_base;
    let (b1, b2, b3) = (p(5), p(6), p(7));
    PlantedSpec {
        entities: 10_000,
        predicates: ["h1", "h2", "h3", "h4", "h5", "b1", "b2", "b3"].map(String::from).to_vec(),
        rules: vec![
            Rule::new(p(0), vec![b1, b2]).unwrap(),
            Rule::new(p(1), vec![b2, b3.inverse()]).unwrap(),
            Rule::new(p(2), vec![b3, b1]).unwrap(),
            Rule::new(p(3), vec![b1, b2, b3]).unwrap(),
            Rule::new(p(4), vec![b3.inverse(), b1, b2]).unwrap(),
        ],
        chains_per_rule: 300,
        dropout: 0.1,
        noise: 0.1,
        seed: 7,
    }
}

/// Paper stage shapes restricted to the body lengths the planted rules use.
fn planted_stages(budgets: [usize; 4]) -> Vec<CurriculumStage> {
    CurriculumStage::scaled(budgets)
        .into_iter()
        .map(|mut s| {
            for w in &mut s.phi[2..] {
                *w = 0.0;
            }
            let z: f64 = s.phi.iter().sum();
            s.phi.iter_mut().for_each(|w| *w /= z);
            s
        })
        .collect()
}

fn planted_agent_config(seed: u64, updates_per_episode: usize) -> AgentTrainConfig {
    AgentTrainConfig {
        token_dim: 16,
        hidden: 16,
        batch_size: 32,
        learning_rate: 0.003,
        updates_per_episode,
        seed,
        ..AgentTrainConfig::default()
    }
}

fn build_planted() -> Planted {
    let g = generate_planted_kg(&planted_spec());
    let model = train_transe::<f32>(
        &g.kg,
        &EmbedTrainConfig {
            dim: 32,
            negatives: 8,
            epochs: 100,
            eta: 2.0,
            seed: 1,
            ..EmbedTrainConfig::default()
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seeds = sample_seed_rules(
        &g.kg,
        &model,
        &SeedConfig {
            count: 200,
            pool: 5000,
            ..SeedConfig::default()
        },
        &mut rng,
    )
    .unwrap()
    .rules;
    Planted {
        kg: g.kg,
        rules: g.rules,
        model,
        seeds,
    }
}

struct PlantedRun {
    planted: Planted,
    agent: TrainOutcome<f32>,
    /// Generation, embedding, seeding and agent training.
    build_time: Duration,
}

fn planted_run() -> &'static PlantedRun {
    static RUN: OnceLock<PlantedRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let planted = build_planted();
        let agent = train_agent::<f32, _>(
            &planted.kg,
            &planted.model,
            &planted.seeds,
            &planted_stages([1000, 1000, 500, 300]),
            &planted_agent_config(0, 2),
        )
        .unwrap();
        PlantedRun {
            planted,
            agent,
            build_time: start.elapsed(),
        }
    })
}

// ---- 3: planted-rule recovery

#[test]
fn criterion_03_planted_rules_are_recovered() {
    let _g = serial();
    let run = planted_run();
    let p = &run.planted;
    let start = Instant::now();
    let cfg = SearchConfig {
        length: 4,
        ..SearchConfig::default()
    };
    let heads: Vec<PredicateId> = p.rules.iter().map(|r| r.head).collect();
    let outcomes = mine_all(&p.kg, &heads, &cfg, &run.agent.network, &p.model, 1).unwrap();
    let total = run.build_time + start.elapsed();
    let mut found = 0;
    let mut details = Vec::new();
    for (rule, o) in p.rules.iter().zip(&outcomes) {
        match o.rules.iter().find(|m| m.rule == *rule) {
            Some(m) if m.stats.conf >= 0.8 => found += 1,
            Some(m) => details.push(format!("{} conf {:.3}", rule.display(&p.kg), m.stats.conf)),
            None => details.push(format!("{} not mined", rule.display(&p.kg))),
        }
    }
    let secs = total.as_secs_f64();
    let pass = found == p.rules.len() && secs < 300.0;
    report(3, pass, format!("{found}/{} planted rules with conf >= 0.8, {secs:.1}s (< 300s)", p.rules.len()));
    assert!(details.is_empty(), "{details:?}");
    assert!(secs < 300.0);
}

// ---- 4: embedding score analytics

#[test]
fn criterion_04_rho_analytics() {
    let _g = serial();
    let eta = 1.5;
    // one dimension; predicate k sits at 0.25 k
    let preds: Vec<f64> = (0..40).map(|k| 0.25 * k as f64).collect();
    let m = EmbeddingModel::<f64>::from_parts(ModelKind::TransE, 1, eta, vec![0.0], preds).unwrap();
    let p = PredicateId::from_base;

    // distance exactly eta: 1.5 - 0 with predicate 6 as head and 0 as body
    let at_eta = m.rho_parts(p(6), &[p(0)]).unwrap();
    let ok_mid = (at_eta - 0.5).abs() <= 1e-12;

    let sweep: Vec<f64> = (0..40).map(|k| m.rho_parts(p(k), &[p(0)]).unwrap()).collect();
    let ok_sweep = sweep.windows(2).all(|w| w[1] < w[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = 16;
    let random = EmbeddingModel::<f32>::from_parts(
        ModelKind::TransE,
        d,
        6.0,
        vec![0.0; d],
        (0..8 * d).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
    )
    .unwrap();
    let mut ok_perm = true;
    for _ in 0..200 {
        let head = p(rng.gen_range(0..8));
        let mut body: Vec<PredicateId> = (0..rng.gen_range(2..6)).map(|_| PredicateId(rng.gen_range(0..16))).collect();
        let base = random.rho_parts(head, &body).unwrap();
        for _ in 0..10 {
            body.shuffle(&mut rng);
            ok_perm &= random.rho_parts(head, &body).unwrap() == base;
        }
    }
    let pass = ok_mid && ok_sweep && ok_perm;
    report(
        4,
        pass,
        format!("rho(eta) - 0.5 = {:.1e}, sweep decreasing {ok_sweep}, permutation invariant {ok_perm}", at_eta - 0.5),
    );
    assert!(ok_mid && ok_sweep && ok_perm);
}

// ---- 5: gradient check

#[test]
fn criterion_05_gradient_check() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let shape = NetworkShape {
            predicates: 2 * rng.gen_range(1..4),
            token_dim: rng.gen_range(2..6),
            hidden: rng.gen_range(2..6),
            layers: rng.gen_range(1..3),
        };
        let mut net = ValueNetwork::<f64>::new(shape, i);
        let head = PredicateId::from_base(rng.gen_range(0..shape.predicates / 2));
        let slots: Vec<Option<PredicateId>> = (0..rng.gen_range(1..5))
            .map(|_| rng.gen_bool(0.6).then(|| PredicateId(rng.gen_range(0..shape.predicates as u32))))
            .collect();
        let s = State::from_slots(head, slots);

        let mut ws = net.workspace();
        net.forward(&s, &mut ws);
        let mut grad = vec![0.0; net.num_params()];
        net.backward(&mut ws, 1.0, &mut grad);
        let h = 1e-5;
        let mut num = vec![0.0; grad.len()];
        for (k, n) in num.iter_mut().enumerate() {
            let orig = net.params()[k];
            net.params_mut()[k] = orig + h;
            let up = net.value(&s);
            net.params_mut()[k] = orig - h;
            let down = net.value(&s);
            net.params_mut()[k] = orig;
            *n = (up - down) / (2.0 * h);
        }
        let diff = grad.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(num.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(diff / scale);
    }
    let pass = worst < 1e-4;
    report(5, pass, format!("worst relative error {worst:.2e} over 20 instances (< 1e-4)"));
    assert!(pass);
}

// ---- 6: TD learning against value iteration

fn optimal_value(s: &State, m: &EmbeddingModel<f64>, gamma: f64, vocab: usize) -> f64 {
    match s.rule() {
        Some(r) => m.rho(&r).unwrap(),
        None => s
            .actions(vocab)
            .into_iter()
            .map(|a| gamma * optimal_value(&s.apply(a).unwrap(), m, gamma, vocab))
            .fold(f64::MIN, f64::max),
    }
}

#[test]
fn criterion_06_td_matches_value_iteration() {
    let _g = serial();
    let kg = KnowledgeGraph::load_triples("a\tP\tb\nb\tQ\tc\n".as_bytes(), &LoadOptions::default()).unwrap();
    let model = EmbeddingModel::<f64>::from_parts(ModelKind::TransE, 2, 1.0, vec![0.0; 6], vec![1.0, 0.0, 0.0, 1.5])
        .unwrap();
    let cfg = AgentTrainConfig {
        learning_rate: 0.003,
        batch_size: 32,
        updates_per_episode: 4,
        token_dim: 16,
        hidden: 16,
        seed: 1,
        ..AgentTrainConfig::default()
    };
    let episodes = 2500;
    let updates = episodes * cfg.updates_per_episode;
    let out = train_agent::<f32, _>(&kg, &model, &[], &[CurriculumStage::fixed_length(2, episodes)], &cfg).unwrap();

    let vocab = kg.vocabulary_size();
    let options: Vec<Option<PredicateId>> =
        std::iter::once(None).chain((0..vocab as u32).map(|p| Some(PredicateId(p)))).collect();
    let mut worst: f64 = 0.0;
    let mut states = 0;
    for head in kg.original_predicates() {
        for &a in &options {
            for &b in &options {
                let s = State::from_slots(head, vec![a, b]);
                let v = f64::from(out.network.value(&s));
                worst = worst.max((v - optimal_value(&s, &model, cfg.gamma, vocab)).abs());
                states += 1;
            }
        }
    }
    let pass = worst < 0.05 && updates <= 20_000;
    report(6, pass, format!("max |V - V*| = {worst:.4} over {states} states after {updates} updates (< 0.05)"));
    assert!(pass);
}

// ---- 7: curriculum against training on the last stage alone

#[test]
fn criterion_07_curriculum_is_not_worse() {
    let _g = serial();
    let p = &planted_run().planted;
    let budgets = [500, 500, 500, 1000];
    let total: usize = budgets.iter().sum();
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..3 {
        let cfg = planted_agent_config(100 + seed, 1);
        let curriculum = planted_stages(budgets);
        let last = curriculum.len() - 1;
        let baseline = vec![CurriculumStage {
            episodes: total,
            ..curriculum[last].clone()
        }];
        let with = train_agent::<f32, _>(&p.kg, &p.model, &p.seeds, &curriculum, &cfg).unwrap();
        let without = train_agent::<f32, _>(&p.kg, &p.model, &p.seeds, &baseline, &cfg).unwrap();
        let a = with.log.tail_mean(last, 1000).unwrap();
        let b = without.log.tail_mean(0, 1000).unwrap();
        if a >= b {
            wins += 1;
        }
        lines.push(format!("seed {seed}: {a:.4} vs {b:.4}"));
    }
    let pass = wins >= 2;
    report(7, pass, format!("curriculum >= baseline on {wins}/3 seeds ({})", lines.join(", ")));
    assert!(pass);
}

// ---- 8: value against quality of partial rules

#[test]
fn criterion_08_value_tracks_quality() {
    let _g = serial();
    let run = planted_run();
    let cfg = CorrelationConfig {
        samples: 2000,
        ..CorrelationConfig::default()
    };
    let r = value_quality_correlation(&run.planted.kg, &run.agent.network, &cfg).unwrap();
    let pass = r > 0.3;
    report(8, pass, format!("pearson r = {r:.4} over {} states (> 0.3)", cfg.samples));
    assert!(pass, "r = {r}");
}

// ---- 9: Noisy-OR aggregation

#[test]
fn criterion_09_noisy_or() {
    let _g = serial();
    let exact = noisy_or(&[0.5, 0.5]) == 0.75;
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(1000));
    let props = runner.run(
        &(proptest::collection::vec(0.0f64..=1.0, 0..12), 0.0f64..=1.0, any::<u64>()),
        |(scores, extra, seed)| {
            let cd = noisy_or(&scores);
            let mut shuffled = scores.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(noisy_or(&shuffled), cd);
            let mut more = scores.clone();
            more.push(extra);
            prop_assert!(noisy_or(&more) >= cd);
            prop_assert!(cd < 1.0);
            let max = scores.iter().copied().fold(0.0, f64::max).min(rlmine::eval::MAX_RULE_SCORE);
            prop_assert!(cd >= max);
            Ok(())
        },
    );
    let pass = exact && props.is_ok();
    report(9, pass, format!("cd(0.5, 0.5) == 0.75: {exact}; 1000-case property run: {props:?}"));
    assert!(pass);
}

// ---- 10: ranking metrics on hand-built cases

fn split_of(text: &str, held: &[(&str, &str, &str)]) -> EvalSplit {
    let kg = KnowledgeGraph::load_triples(text.as_bytes(), &LoadOptions::default()).unwrap();
    let ent = |n: &str| EntityId(kg.entities().get(n).unwrap());
    let held_out: Vec<Fact> = held
        .iter()
        .map(|&(s, p, o)| Fact::new(ent(s), kg.parse_predicate(p).unwrap(), ent(o)))
        .collect();
    let set: HashSet<Fact> = held_out.iter().copied().collect();
    EvalSplit {
        train: kg.without(&set),
        held_out,
        ratio: 0.0,
        seed: 0,
    }
}

fn rule(kg: &KnowledgeGraph, head: &str, body: &str, score: f64) -> MinedRule {
    MinedRule {
        rule: Rule::new(kg.parse_predicate(head).unwrap(), vec![kg.parse_predicate(body).unwrap()]).unwrap(),
        stats: RuleStats::default(),
        rho: 0.0,
        score,
        emitted_secs: 0.0,
    }
}

#[test]
fn criterion_10_ranking_metrics() {
    let _g = serial();
    let mut results = Vec::new();

    // A: the tail query ranks b behind d; c scores higher still but is a
    // known train fact and is filtered. Ranks [2, 1].
    let a = split_of(
        "a\tq\tb\na\tu\tc\na\tw\td\na\tt\tc\na\tt\tb\n",
        &[("a", "t", "b")],
    );
    let rules = [rule(&a.train, "t", "q", 0.5), rule(&a.train, "t", "u", 0.9), rule(&a.train, "t", "w", 0.8)];
    let m = link_prediction(&a, &rules);
    results.push(("A", (m.mrr, m.hits_at_10, m.queries), ((1.0 / 2.0 + 1.0 / 1.0) / 2.0, 1.0, 2)));

    // B: the only rule's body predicate has no train facts, so nothing
    // fires; 30 candidates tie at zero and both ranks are 15.5.
    let mut text = String::from("e0\tt\te1\n");
    for i in 0..30 {
        text.push_str(&format!("e{i}\tlink\te{}\n", (i + 1) % 30));
    }
    let b = split_of(&text, &[("e0", "t", "e1")]);
    let rules = [rule(&b.train, "t", "t", 0.9)];
    let m = link_prediction(&b, &rules);
    results.push(("B", (m.mrr, m.hits_at_10, m.queries), ((1.0 / 15.5 + 1.0 / 15.5) / 2.0, 0.0, 2)));

    // C: one better candidate and two tied with the answer: ranks [3, 1].
    let c = split_of(
        "a\tq\tb\na\tq\td\na\tq\te\na\tu\tc\na\tt\tb\n",
        &[("a", "t", "b")],
    );
    let rules = [rule(&c.train, "t", "q", 0.5), rule(&c.train, "t", "u", 0.9)];
    let m = link_prediction(&c, &rules);
    results.push(("C", (m.mrr, m.hits_at_10, m.queries), ((1.0 / 3.0 + 1.0 / 1.0) / 2.0, 1.0, 2)));

    let pass = results.iter().all(|(_, got, want)| got == want);
    let detail: Vec<String> = results
        .iter()
        .map(|(n, got, _)| format!("{n}: mrr {:.4} hits@10 {}", got.0, got.1))
        .collect();
    report(10, pass, detail.join("; "));
    for (name, got, want) in &results {
        assert_eq!(got, want, "scenario {name}");
    }
}

// ---- 11: end-to-end determinism

fn run_pipeline(out: &Path) {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy.toml");
    let status = Command::new(env!("CARGO_BIN_EXE_rlmine"))
        .args(["--config", config.to_str().unwrap(), "-q", "run"])
        .env("RLMINE_OUTPUT_DIR", out)
        .status()
        .unwrap();
    assert!(status.success());
}

fn artifacts(out: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(out.join("rules"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "rules"))
        .collect();
    files.sort();
    files.extend(["metrics.txt", "metrics.json", "predictions.tsv"].map(|f| out.join(f)));
    files
        .into_iter()
        .map(|f| (f.strip_prefix(out).unwrap().to_path_buf(), std::fs::read(&f).unwrap()))
        .collect()
}

#[test]
fn criterion_11_pipeline_is_deterministic() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_pipeline(&a);
    run_pipeline(&b);
    let (fa, fb) = (artifacts(&a), artifacts(&b));
    let differing: Vec<String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.display().to_string())
        .collect();
    let pass = fa.len() == fb.len() && differing.is_empty() && fa.len() > 3;
    report(11, pass, format!("{} files compared, differing: {differing:?}", fa.len()));
    assert!(pass);
}
