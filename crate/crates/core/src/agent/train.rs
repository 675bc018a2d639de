use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::curriculum::{curriculum_init, CurriculumStage};
use super::network::{RmsProp, ValueFunction, ValueNetwork};
use super::replay::ReplayMemory;
use super::state::{Action, State, TransitionRecord};
use super::{AgentError, AgentTrainConfig};
use crate::embedding::RuleScorer;
use crate::kg::KnowledgeGraph;
use crate::rule::Rule;
use crate::scalar::Scalar;

/// Linear decay from `start` at episode 0 to `end` at episode `total - 1`.
pub fn epsilon_at(episode: usize, total: usize, start: f64, end: f64) -> f64 {
    if total <= 1 {
        return start;
    }
    let t = episode.min(total - 1) as f64 / (total - 1) as f64;
    start + (end - start) * t
}

/// With probability `epsilon` a uniformly random valid action, otherwise the
/// action whose successor has the highest value, ties going to the lowest
/// `(slot, predicate)`.
pub fn epsilon_greedy<V: ValueFunction + ?Sized, G: Rng + ?Sized>(
    value_fn: &V,
    s: &State,
    epsilon: f64,
    vocabulary: usize,
    rng: &mut G,
) -> Result<Action, AgentError> {
    let actions = s.actions(vocabulary);
    if actions.is_empty() {
        return Err(AgentError::NoValidAction);
    }
    if rng.gen::<f64>() < epsilon {
        return Ok(actions[rng.gen_range(0..actions.len())]);
    }
    let values = value_fn.successor_values(s, vocabulary);
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    Ok(actions[best])
}

/// One RMSprop step on the mean L1 distance between `V(s')` and the target
/// `r + gamma * max_a' V(T(s', a'))` (just `r` for terminal `s'`). Targets
/// come from the network before the step and carry no gradient. Returns the
/// mean loss.
pub fn td_update<T: Scalar>(
    net: &mut ValueNetwork<T>,
    opt: &mut RmsProp<T>,
    batch: &[&TransitionRecord],
    gamma: f64,
) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    // successor maxima for every distinct non-terminal s'
    let mut slot: HashMap<&State, usize> = HashMap::new();
    let mut pending = Vec::new();
    for rec in batch {
        if !rec.next.is_terminal() && !slot.contains_key(&rec.next) {
            slot.insert(&rec.next, pending.len());
            pending.push(rec.next.clone());
        }
    }
    let best: Vec<f64> = net
        .successor_values_many(&pending)
        .into_iter()
        .map(|vs| vs.into_iter().map(Scalar::to_f64_lossy).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let targets: Vec<f64> = batch
        .iter()
        .map(|rec| match slot.get(&rec.next) {
            Some(&i) => rec.reward + gamma * best[i],
            None => rec.reward,
        })
        .collect();

    let n = batch.len() as f64;
    let mut grad = vec![T::zero(); net.num_params()];
    let mut ws = net.workspace();
    let mut loss = 0.0;
    for (rec, &q) in batch.iter().zip(&targets) {
        let v = net.forward(&rec.next, &mut ws).to_f64_lossy();
        let diff = v - q;
        loss += diff.abs();
        if diff != 0.0 {
            net.backward(&mut ws, T::from_f64_lossy(diff.signum() / n), &mut grad);
        }
    }
    opt.step(net.params_mut(), &grad);
    loss / n
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub stage: usize,
    pub epsilon: f64,
    /// Reward collected on reaching the terminal state.
    pub reward: f64,
    /// Mean TD loss of the updates after this episode.
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
}

impl TrainingLog {
    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.reward)
    }

    /// Mean reward of the last `n` episodes of `stage`.
    pub fn tail_mean(&self, stage: usize, n: usize) -> Option<f64> {
        let rs: Vec<f64> = self.records.iter().filter(|r| r.stage == stage).map(|r| r.reward).collect();
        if rs.is_empty() {
            return None;
        }
        let tail = &rs[rs.len().saturating_sub(n)..];
        Some(tail.iter().sum::<f64>() / tail.len() as f64)
    }

    /// Tab-separated lines after a `# seed` header.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# seed\t{}", self.seed)?;
        writeln!(w, "episode\tstage\tepsilon\treward\tloss")?;
        for r in &self.records {
            writeln!(w, "{}\t{}\t{:.6}\t{:.6}\t{:.6}", r.episode, r.stage, r.epsilon, r.reward, r.loss)?;
        }
        Ok(())
    }
}

pub struct TrainOutcome<T> {
    pub network: ValueNetwork<T>,
    pub log: TrainingLog,
}

/// Trains a freshly initialized value network. See [`train_agent_from`].
pub fn train_agent<T: Scalar, S: RuleScorer + ?Sized>(
    kg: &KnowledgeGraph,
    scorer: &S,
    seeds: &[Rule],
    stages: &[CurriculumStage],
    cfg: &AgentTrainConfig,
) -> Result<TrainOutcome<T>, AgentError> {
    cfg.validate()?;
    let net = ValueNetwork::new(cfg.shape(kg.vocabulary_size()), cfg.seed.wrapping_add(0x5eed));
    train_agent_from(net, kg, scorer, seeds, stages, cfg)
}

/// Runs the stages in order. Each episode starts from a curriculum state,
/// follows the epsilon-greedy policy to a terminal state storing every
/// transition, then performs `updates_per_episode` TD updates on replay
/// batches. Epsilon decays linearly over all episodes of all stages.
pub fn train_agent_from<T: Scalar, S: RuleScorer + ?Sized>(
    mut net: ValueNetwork<T>,
    kg: &KnowledgeGraph,
    scorer: &S,
    seeds: &[Rule],
    stages: &[CurriculumStage],
    cfg: &AgentTrainConfig,
) -> Result<TrainOutcome<T>, AgentError> {
    cfg.validate()?;
    for s in stages {
        s.validate()?;
    }
    let vocab = kg.vocabulary_size();
    if net.shape().predicates != vocab {
        return Err(AgentError::Config(format!(
            "network expects {} predicates, graph has {vocab}",
            net.shape().predicates
        )));
    }
    let heads = kg.original_predicates();
    if heads.is_empty() {
        return Err(AgentError::Config("graph has no predicates".into()));
    }
    let total: usize = stages.iter().map(|s| s.episodes).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut memory = ReplayMemory::new(cfg.replay_capacity);
    let mut opt = RmsProp::new(net.num_params(), cfg.learning_rate);
    let mut log = TrainingLog {
        seed: cfg.seed,
        records: Vec::with_capacity(total),
    };
    let mut episode = 0;
    for (stage_idx, stage) in stages.iter().enumerate() {
        for _ in 0..stage.episodes {
            let epsilon = epsilon_at(episode, total, cfg.epsilon_start, cfg.epsilon_end);
            let mut s = curriculum_init(stage, seeds, &heads, &mut rng)?;
            if cfg.train_entry_states {
                memory.push(TransitionRecord::entry(&s));
            }
            let mut reward = 0.0;
            while !s.is_terminal() {
                let a = epsilon_greedy(&net, &s, epsilon, vocab, &mut rng)?;
                let rec = TransitionRecord::step(&s, a, scorer)?;
                reward += rec.reward;
                s = rec.next.clone();
                memory.push(rec);
            }
            let mut loss = 0.0;
            for _ in 0..cfg.updates_per_episode {
                let batch = memory.sample(cfg.batch_size, &mut rng);
                loss += td_update(&mut net, &mut opt, &batch, cfg.gamma);
            }
            if cfg.updates_per_episode > 0 {
                loss /= cfg.updates_per_episode as f64;
            }
            log.records.push(EpisodeRecord {
                episode,
                stage: stage_idx,
                epsilon,
                reward,
                loss,
            });
            if (episode + 1) % 500 == 0 {
                log::debug!("episode {} stage {stage_idx} epsilon {epsilon:.3} loss {loss:.5}", episode + 1);
            }
            episode += 1;
        }
    }
    Ok(TrainOutcome { network: net, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::network::{FnValue, NetworkShape};
    use crate::kg::PredicateId;

    #[test]
    fn epsilon_endpoints() {
        assert_eq!(epsilon_at(0, 100, 0.95, 0.05), 0.95);
        assert!((epsilon_at(99, 100, 0.95, 0.05) - 0.05).abs() < 1e-15);
        assert!((epsilon_at(50, 101, 0.95, 0.05) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_picks_strict_max_and_breaks_ties_low() {
        let s = State::masked(PredicateId(0), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pick3 = FnValue(|t: &State| if t.slots()[1] == Some(PredicateId(3)) { 0.9 } else { 0.1 });
        for _ in 0..50 {
            assert_eq!(
                epsilon_greedy(&pick3, &s, 0.0, 4, &mut rng).unwrap(),
                Action { slot: 1, predicate: PredicateId(3) }
            );
        }
        let flat = FnValue(|_: &State| 0.5);
        assert_eq!(
            epsilon_greedy(&flat, &s, 0.0, 4, &mut rng).unwrap(),
            Action { slot: 0, predicate: PredicateId(0) }
        );
        let done = State::from_rule(&Rule::new(PredicateId(0), vec![PredicateId(1)]).unwrap());
        assert!(matches!(
            epsilon_greedy(&flat, &done, 0.0, 4, &mut rng),
            Err(AgentError::NoValidAction)
        ));
    }

    #[test]
    fn greedy_choice_survives_monotone_transform() {
        let s = State::masked(PredicateId(2), 3);
        let f = |t: &State| {
            t.slots().iter().enumerate().map(|(i, x)| x.map_or(0.0, |p| ((p.0 * 7 + i as u32 * 3) % 5) as f64)).sum::<f64>()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = epsilon_greedy(&FnValue(f), &s, 0.0, 6, &mut rng).unwrap();
        let b = epsilon_greedy(&FnValue(|t: &State| (f(t) * 3.0).exp()), &s, 0.0, 6, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_exploration() {
        let s = State::masked(PredicateId(0), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let flat = FnValue(|_: &State| 0.5);
        let mut counts = [0f64; 8];
        let n = 10_000;
        for _ in 0..n {
            let a = epsilon_greedy(&flat, &s, 1.0, 4, &mut rng).unwrap();
            counts[a.slot * 4 + a.predicate.index()] += 1.0;
        }
        let e = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|c| (c - e) * (c - e) / e).sum();
        // 7 degrees of freedom, 99.9th percentile
        assert!(chi2 < 24.32, "chi2 {chi2}");
    }

    fn tiny_net() -> ValueNetwork<f64> {
        ValueNetwork::new(
            NetworkShape {
                predicates: 4,
                token_dim: 3,
                hidden: 3,
                layers: 1,
            },
            0,
        )
    }

    #[test]
    fn fixed_point_has_zero_loss_and_no_step() {
        let mut net = tiny_net();
        let s = State::with_prefix(PredicateId(0), &[PredicateId(1)], 2);
        let a = Action { slot: 1, predicate: PredicateId(2) };
        let next = s.apply(a).unwrap();
        let v = net.value(&next);
        let rec = TransitionRecord { state: s, action: Some(a), next, reward: v };
        let before = net.params().to_vec();
        let mut opt = RmsProp::new(net.num_params(), 0.001);
        let loss = td_update(&mut net, &mut opt, &[&rec], 0.99);
        assert_eq!(loss, 0.0);
        assert_eq!(net.params(), &before[..]);
    }

    #[test]
    fn terminal_loss_is_distance_to_reward() {
        let mut net = tiny_net();
        net.set_head(0.0, -1000.0);
        let s = State::with_prefix(PredicateId(0), &[PredicateId(1)], 2);
        let a = Action { slot: 1, predicate: PredicateId(2) };
        let rec = TransitionRecord { state: s.clone(), action: Some(a), next: s.apply(a).unwrap(), reward: 1.0 };
        let mut opt = RmsProp::new(net.num_params(), 0.001);
        assert_eq!(td_update(&mut net, &mut opt, &[&rec], 0.99), 1.0);
    }

    #[test]
    fn nonterminal_target_uses_successor_max() {
        let mut net = tiny_net();
        net.set_head(0.0, 0.0);
        let s = State::masked(PredicateId(0), 2);
        let a = Action { slot: 0, predicate: PredicateId(1) };
        let rec = TransitionRecord { state: s.clone(), action: Some(a), next: s.apply(a).unwrap(), reward: 0.0 };
        let mut opt = RmsProp::new(net.num_params(), 0.001);
        // V = 0.5 everywhere, so the target is 0.99 * 0.5
        let loss = td_update(&mut net, &mut opt, &[&rec], 0.99);
        assert!((loss - (0.5 - 0.495)).abs() < 1e-12);
    }
}
