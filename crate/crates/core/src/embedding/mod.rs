//! Translation-based embeddings and the embedding score of a rule.
//!
//! Only original predicates own a vector; the vector of `P^-1` is `-P`. The
//! score of `P1 & ... & Pn => P0` is `sigmoid(eta - |P0 - sum Pi|_1)`, with the
//! same `eta` that served as the training margin.

mod checkpoint;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{KnowledgeGraph, PredicateId};
use crate::rule::Rule;
use crate::scalar::Scalar;

pub use checkpoint::{read_checkpoint, write_checkpoint, EmbeddingCheckpoint};
pub use train::{train_bilinear, train_transe, train_transe_logged};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid embedding config: {0}")]
    Config(String),
    #[error("cannot train on an empty graph")]
    EmptyGraph,
    #[error("predicate id {0} has no vector")]
    UnknownPredicate(u32),
    #[error("operation needs a {expected:?} model, found {found:?}")]
    KindMismatch { expected: ModelKind, found: ModelKind },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// `s + P ≈ o` under L1 distance.
    TransE,
    /// `<s, P, o>` trilinear product with a diagonal relation matrix.
    DiagonalBilinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedTrainConfig {
    pub dim: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub eta: f64,
    pub seed: u64,
}

impl Default for EmbedTrainConfig {
    fn default() -> Self {
        EmbedTrainConfig {
            dim: 100,
            negatives: 16,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 128,
            eta: 12.0,
            seed: 0,
        }
    }
}

impl EmbedTrainConfig {
    /// Full-scale setting: 1000 dimensions, 256 negatives, margin 24.
    pub fn paper_scale() -> Self {
        EmbedTrainConfig {
            dim: 1000,
            negatives: 256,
            eta: 24.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::Config(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive and finite");
        }
        if self.negatives == 0 {
            return bad("negatives must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        Ok(())
    }
}

/// Scores a complete rule in `[0, 1]`.
pub trait RuleScorer {
    fn score(&self, head: PredicateId, body: &[PredicateId]) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel<T> {
    kind: ModelKind,
    dim: usize,
    eta: f64,
    entity_vecs: Vec<T>,
    predicate_vecs: Vec<T>,
}

impl<T: Scalar> EmbeddingModel<T> {
    /// Builds a model from explicit row-major matrices.
    pub fn from_parts(
        kind: ModelKind,
        dim: usize,
        eta: f64,
        entity_vecs: Vec<T>,
        predicate_vecs: Vec<T>,
    ) -> Result<Self, EmbeddingError> {
        if dim == 0 || entity_vecs.len() % dim != 0 || predicate_vecs.len() % dim != 0 {
            return Err(EmbeddingError::Config("matrix sizes do not match dim".into()));
        }
        if !(eta > 0.0) {
            return Err(EmbeddingError::Config("eta must be positive".into()));
        }
        if entity_vecs.iter().chain(&predicate_vecs).any(|v| !v.is_finite()) {
            return Err(EmbeddingError::Config("non-finite embedding entry".into()));
        }
        Ok(EmbeddingModel {
            kind,
            dim,
            eta,
            entity_vecs,
            predicate_vecs,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn num_entities(&self) -> usize {
        self.entity_vecs.len() / self.dim
    }

    pub fn num_base_predicates(&self) -> usize {
        self.predicate_vecs.len() / self.dim
    }

    pub fn entity_matrix(&self) -> &[T] {
        &self.entity_vecs
    }

    pub fn predicate_matrix(&self) -> &[T] {
        &self.predicate_vecs
    }

    pub fn entity_vector(&self, e: usize) -> &[T] {
        &self.entity_vecs[e * self.dim..(e + 1) * self.dim]
    }

    /// Vector of an original predicate; inverses share it (negated for TransE).
    pub fn base_vector(&self, p: PredicateId) -> Result<&[T], EmbeddingError> {
        let i = p.base_index();
        if i >= self.num_base_predicates() {
            return Err(EmbeddingError::UnknownPredicate(p.0));
        }
        Ok(&self.predicate_vecs[i * self.dim..(i + 1) * self.dim])
    }

    /// Translation vector of `p` in f64, inverse predicates negated.
    pub fn translation(&self, p: PredicateId) -> Result<Vec<f64>, EmbeddingError> {
        let sign = if p.is_inverse() { -1.0 } else { 1.0 };
        Ok(self.base_vector(p)?.iter().map(|v| sign * v.to_f64_lossy()).collect())
    }

    fn expect_kind(&self, expected: ModelKind) -> Result<(), EmbeddingError> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(EmbeddingError::KindMismatch {
                expected,
                found: self.kind,
            })
        }
    }

    /// `|P0 - sum Pi|_1` for a TransE model. The body is summed in sorted
    /// order so the result does not depend on atom order.
    pub fn composition_distance(&self, head: PredicateId, body: &[PredicateId]) -> Result<f64, EmbeddingError> {
        self.expect_kind(ModelKind::TransE)?;
        let mut acc = self.translation(head)?;
        let mut sorted = body.to_vec();
        sorted.sort_unstable();
        for &p in &sorted {
            let sign = if p.is_inverse() { -1.0 } else { 1.0 };
            for (a, v) in acc.iter_mut().zip(self.base_vector(p)?) {
                *a -= sign * v.to_f64_lossy();
            }
        }
        Ok(acc.iter().map(|a| a.abs()).sum())
    }

    /// Embedding score of a rule.
    pub fn rho(&self, rule: &Rule) -> Result<f64, EmbeddingError> {
        self.rho_parts(rule.head, &rule.body)
    }

    pub fn rho_parts(&self, head: PredicateId, body: &[PredicateId]) -> Result<f64, EmbeddingError> {
        let d = self.composition_distance(head, body)?;
        Ok(rho_from_distance(self.eta, d))
    }

    /// Bilinear score: cosine between the elementwise product of the body
    /// vectors and the head vector, mapped to `[0, 1]` by `(1 + cos) / 2`.
    pub fn rho_bilinear(&self, rule: &Rule) -> Result<f64, EmbeddingError> {
        self.expect_kind(ModelKind::DiagonalBilinear)?;
        let head: Vec<f64> = self.base_vector(rule.head)?.iter().map(|v| v.to_f64_lossy()).collect();
        let mut comp = vec![1.0f64; self.dim];
        let mut sorted = rule.body.clone();
        sorted.sort_unstable();
        for &p in &sorted {
            for (c, v) in comp.iter_mut().zip(self.base_vector(p)?) {
                *c *= v.to_f64_lossy();
            }
        }
        Ok((1.0 + cosine(&comp, &head)) / 2.0)
    }

    /// TransE plausibility distance `|s + P - o|_1` of a triple.
    pub fn triple_distance(&self, s: usize, p: PredicateId, o: usize) -> f64 {
        let sign = if p.is_inverse() { -1.0 } else { 1.0 };
        let pv = &self.predicate_vecs[p.base_index() * self.dim..(p.base_index() + 1) * self.dim];
        self.entity_vector(s)
            .iter()
            .zip(pv)
            .zip(self.entity_vector(o))
            .map(|((a, b), c)| (a.to_f64_lossy() + sign * b.to_f64_lossy() - c.to_f64_lossy()).abs())
            .sum()
    }

    /// True when the model covers every predicate of the graph.
    pub fn covers(&self, kg: &KnowledgeGraph) -> bool {
        self.num_base_predicates() == kg.num_base_predicates() && self.num_entities() == kg.num_entities()
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingModel<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossy())).collect();
        EmbeddingModel {
            kind: self.kind,
            dim: self.dim,
            eta: self.eta,
            entity_vecs: conv(&self.entity_vecs),
            predicate_vecs: conv(&self.predicate_vecs),
        }
    }
}

impl<T: Scalar> RuleScorer for EmbeddingModel<T> {
    fn score(&self, head: PredicateId, body: &[PredicateId]) -> f64 {
        match self.kind {
            ModelKind::TransE => self.rho_parts(head, body),
            ModelKind::DiagonalBilinear => self.rho_bilinear(&Rule {
                head,
                body: body.to_vec(),
            }),
        }
        .expect("scored predicates must belong to the embedding vocabulary")
    }
}

/// `sigmoid(eta - distance)`.
pub fn rho_from_distance(eta: f64, distance: f64) -> f64 {
    crate::scalar::sigmoid(eta - distance)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}
