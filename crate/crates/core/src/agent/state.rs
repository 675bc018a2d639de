use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::embedding::RuleScorer;
use crate::kg::PredicateId;
use crate::rule::Rule;

/// A rule under construction: a head and a fixed number of body slots, each
/// filled or masked. Token form is `[head, SEP, slot_1, ..., slot_n]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    head: PredicateId,
    body: Vec<Option<PredicateId>>,
}

/// Fill body slot `slot` (0-based) with `predicate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub slot: usize,
    pub predicate: PredicateId,
}

impl State {
    pub fn masked(head: PredicateId, body_len: usize) -> Self {
        State {
            head,
            body: vec![None; body_len],
        }
    }

    pub fn from_rule(rule: &Rule) -> Self {
        State {
            head: rule.head,
            body: rule.body.iter().copied().map(Some).collect(),
        }
    }

    /// Body prefix in the leftmost slots, the rest masked.
    pub fn with_prefix(head: PredicateId, prefix: &[PredicateId], body_len: usize) -> Self {
        assert!(prefix.len() <= body_len, "prefix longer than body");
        let mut s = State::masked(head, body_len);
        for (slot, &p) in s.body.iter_mut().zip(prefix) {
            *slot = Some(p);
        }
        s
    }

    pub fn from_slots(head: PredicateId, body: Vec<Option<PredicateId>>) -> Self {
        State { head, body }
    }

    pub fn head(&self) -> PredicateId {
        self.head
    }

    pub fn slots(&self) -> &[Option<PredicateId>] {
        &self.body
    }

    pub fn body_len(&self) -> usize {
        self.body.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.body.iter().all(Option::is_some)
    }

    pub fn masked_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.body
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| i)
    }

    pub fn num_masked(&self) -> usize {
        self.body.iter().filter(|s| s.is_none()).count()
    }

    /// The completed rule, or `None` while any slot is masked.
    pub fn rule(&self) -> Option<Rule> {
        let body: Option<Vec<PredicateId>> = self.body.iter().copied().collect();
        body.filter(|b| !b.is_empty()).map(|body| Rule {
            head: self.head,
            body,
        })
    }

    /// Valid actions in (slot, predicate) lexicographic order.
    pub fn actions(&self, vocabulary: usize) -> Vec<Action> {
        self.masked_slots()
            .flat_map(|slot| {
                (0..vocabulary as u32).map(move |p| Action {
                    slot,
                    predicate: PredicateId(p),
                })
            })
            .collect()
    }

    /// `T(s, a)` for every action, in the order of [`actions`](Self::actions).
    pub fn successors(&self, vocabulary: usize) -> Vec<State> {
        self.actions(vocabulary)
            .into_iter()
            .map(|a| self.apply(a).expect("enumerated actions are valid"))
            .collect()
    }

    pub fn apply(&self, a: Action) -> Result<State, AgentError> {
        match self.body.get(a.slot) {
            Some(None) => {
                let mut next = self.clone();
                next.body[a.slot] = Some(a.predicate);
                Ok(next)
            }
            Some(Some(_)) => Err(AgentError::InvalidAction(format!("slot {} already filled", a.slot))),
            None => Err(AgentError::InvalidAction(format!("slot {} out of range", a.slot))),
        }
    }

    /// Token ids for a vocabulary of `vocabulary` predicates: predicates map to
    /// their own id, then the separator, then the mask token.
    pub fn tokens(&self, vocabulary: usize) -> Vec<usize> {
        let mut t = Vec::with_capacity(self.body.len() + 2);
        self.write_tokens(vocabulary, &mut t);
        t
    }

    pub fn write_tokens(&self, vocabulary: usize, out: &mut Vec<usize>) {
        out.clear();
        out.push(self.head.index());
        out.push(separator_token(vocabulary));
        out.extend(
            self.body
                .iter()
                .map(|s| s.map_or(mask_token(vocabulary), PredicateId::index)),
        );
    }
}

pub fn separator_token(vocabulary: usize) -> usize {
    vocabulary
}

pub fn mask_token(vocabulary: usize) -> usize {
    vocabulary + 1
}

/// Deterministic transition: fill one masked slot.
pub fn transition(s: &State, a: Action) -> Result<State, AgentError> {
    s.apply(a)
}

/// Sparse reward: the score of the completed rule when the action finishes
/// it, otherwise exactly 0.
pub fn reward<S: RuleScorer + ?Sized>(s: &State, a: Action, scorer: &S) -> Result<f64, AgentError> {
    let next = s.apply(a)?;
    Ok(terminal_reward(&next, scorer))
}

pub(crate) fn terminal_reward<S: RuleScorer + ?Sized>(next: &State, scorer: &S) -> f64 {
    match next.rule() {
        Some(rule) => scorer.score(rule.head, &rule.body),
        None => 0.0,
    }
}

/// One `(s, a, s', r)` tuple. An entry record has no action and
/// `state == next`: it stands for arriving at the episode's initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub state: State,
    pub action: Option<Action>,
    pub next: State,
    pub reward: f64,
}

impl TransitionRecord {
    pub fn step<S: RuleScorer + ?Sized>(state: &State, action: Action, scorer: &S) -> Result<Self, AgentError> {
        let next = state.apply(action)?;
        let reward = terminal_reward(&next, scorer);
        Ok(TransitionRecord {
            state: state.clone(),
            action: Some(action),
            next,
            reward,
        })
    }

    pub fn entry(state: &State) -> Self {
        TransitionRecord {
            state: state.clone(),
            action: None,
            next: state.clone(),
            reward: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Const(f64);
    impl RuleScorer for Const {
        fn score(&self, _: PredicateId, _: &[PredicateId]) -> f64 {
            self.0
        }
    }

    #[test]
    fn fill_first_slot_of_masked_state() {
        let s = State::masked(PredicateId(0), 2);
        let n = transition(&s, Action { slot: 0, predicate: PredicateId(3) }).unwrap();
        assert_eq!(n.slots(), &[Some(PredicateId(3)), None]);
        assert!(!n.is_terminal());
        assert!(n.rule().is_none());
        assert_eq!(s.num_masked(), 2);
    }

    #[test]
    fn last_mask_makes_terminal() {
        let s = State::from_slots(PredicateId(0), vec![Some(PredicateId(2)), None]);
        let n = s.apply(Action { slot: 1, predicate: PredicateId(4) }).unwrap();
        assert!(n.is_terminal());
        assert_eq!(n.rule().unwrap(), Rule::new(PredicateId(0), vec![PredicateId(2), PredicateId(4)]).unwrap());
    }

    #[test]
    fn filled_slot_is_invalid() {
        let s = State::with_prefix(PredicateId(0), &[PredicateId(2)], 2);
        assert!(matches!(
            s.apply(Action { slot: 0, predicate: PredicateId(2) }),
            Err(AgentError::InvalidAction(_))
        ));
    }

    #[test]
    fn reward_is_sparse() {
        let s = State::masked(PredicateId(0), 2);
        let a = Action { slot: 1, predicate: PredicateId(1) };
        assert_eq!(reward(&s, a, &Const(0.7)).unwrap(), 0.0);
        let s2 = s.apply(a).unwrap();
        assert_eq!(reward(&s2, Action { slot: 0, predicate: PredicateId(0) }, &Const(0.7)).unwrap(), 0.7);
    }

    #[test]
    fn tokens_layout() {
        let s = State::with_prefix(PredicateId(3), &[PredicateId(1)], 3);
        assert_eq!(s.tokens(4), vec![3, 4, 1, 5, 5]);
        assert_eq!(s.actions(4).len(), 8);
        assert_eq!(s.actions(4)[0], Action { slot: 1, predicate: PredicateId(0) });
    }
}
