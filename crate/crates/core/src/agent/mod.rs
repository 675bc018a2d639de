//! Rule-generation MDP, recurrent value network and TD training with
//! curriculum initialization.

mod checkpoint;
mod curriculum;
mod network;
mod replay;
mod state;
mod train;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use checkpoint::{read_agent_checkpoint, write_agent_checkpoint, AgentCheckpoint};
pub use curriculum::{curriculum_init, sample_seed_rules, CurriculumStage, SeedConfig, SeedSample};
pub use network::{FnValue, NetworkShape, RmsProp, ValueFunction, ValueNetwork, Workspace};
pub use replay::ReplayMemory;
pub use state::{mask_token, reward, separator_token, transition, Action, State, TransitionRecord};
pub use train::{
    epsilon_at, epsilon_greedy, td_update, train_agent, train_agent_from, EpisodeRecord, TrainOutcome, TrainingLog,
};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("terminal state has no valid action")]
    NoValidAction,
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("bad agent checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentTrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Gradient steps after each simulated episode.
    pub updates_per_episode: usize,
    /// Also store an entry record per episode so that initial states, which
    /// are never a successor, receive a bootstrapped target.
    pub train_entry_states: bool,
    pub token_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub seed: u64,
}

impl Default for AgentTrainConfig {
    fn default() -> Self {
        AgentTrainConfig {
            gamma: 0.99,
            learning_rate: 0.001,
            replay_capacity: 10_000,
            batch_size: 128,
            epsilon_start: 0.95,
            epsilon_end: 0.05,
            updates_per_episode: 1,
            train_entry_states: true,
            token_dim: 32,
            hidden: 64,
            layers: 1,
            seed: 0,
        }
    }
}

impl AgentTrainConfig {
    /// Network sizes used at full scale: 256-d tokens, 512 hidden units.
    pub fn paper_scale() -> Self {
        AgentTrainConfig {
            token_dim: 256,
            hidden: 512,
            ..Self::default()
        }
    }

    pub fn shape(&self, predicates: usize) -> NetworkShape {
        NetworkShape {
            predicates,
            token_dim: self.token_dim,
            hidden: self.hidden,
            layers: self.layers,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.replay_capacity == 0 || self.batch_size == 0 {
            return bad("replay_capacity and batch_size must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon endpoints must be in [0, 1]");
        }
        if self.epsilon_start < self.epsilon_end {
            return bad("epsilon_start must be >= epsilon_end");
        }
        if self.token_dim == 0 || self.hidden == 0 || self.layers == 0 {
            return bad("network sizes must be positive");
        }
        Ok(())
    }

    /// SHA-256 over the configuration and stage table, stored in checkpoints.
    pub fn fingerprint(&self, stages: &[CurriculumStage]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(format!("{self:?}").as_bytes());
        for s in stages {
            h.update(format!("{s:?}").as_bytes());
        }
        h.finalize().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        AgentTrainConfig::default().validate().unwrap();
        AgentTrainConfig::paper_scale().validate().unwrap();
        let c = AgentTrainConfig::default();
        assert_eq!((c.replay_capacity, c.batch_size, c.gamma, c.learning_rate), (10_000, 128, 0.99, 0.001));
    }

    #[test]
    fn rejects_bad_values() {
        for c in [
            AgentTrainConfig { gamma: 0.0, ..Default::default() },
            AgentTrainConfig { gamma: 1.5, ..Default::default() },
            AgentTrainConfig { epsilon_start: 0.01, ..Default::default() },
            AgentTrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = AgentTrainConfig::default();
        let b = AgentTrainConfig { seed: 1, ..Default::default() };
        assert_ne!(a.fingerprint(&[]), b.fingerprint(&[]));
        assert_eq!(a.fingerprint(&[]), a.clone().fingerprint(&[]));
    }
}
