//! Value-guided mining of closed-path rules over knowledge graphs.
//!
//! A TransE embedding scores candidate rules, a recurrent value network is
//! trained by temporal-difference learning over a rule-generation MDP, and a
//! best-first search uses that network to prune the rule space.

pub mod agent;
pub mod embedding;
pub mod eval;
pub mod kg;
pub mod rule;
pub mod scalar;
pub mod search;

pub use agent::{AgentTrainConfig, CurriculumStage, State, ValueFunction, ValueNetwork};
pub use embedding::{EmbedTrainConfig, EmbeddingModel, RuleScorer};
pub use kg::{EntityId, Fact, KnowledgeGraph, PredicateId};
pub use rule::{Rule, RuleStats};
pub use scalar::Scalar;
pub use search::{MinedRule, SearchConfig};

/// Single-precision embedding, the checkpoint precision.
pub type Embedding = EmbeddingModel<f32>;
pub type Embedding64 = EmbeddingModel<f64>;
pub type ValueNet = ValueNetwork<f32>;
pub type ValueNet64 = ValueNetwork<f64>;
