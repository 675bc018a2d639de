use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbedTrainConfig, EmbeddingError, EmbeddingModel, ModelKind};
use crate::kg::{Fact, KnowledgeGraph};
use crate::scalar::{sigmoid, Scalar};

/// Row-sparse Adam: only rows touched in a batch are stepped.
struct SparseAdam<T> {
    dim: usize,
    lr: T,
    m: Vec<T>,
    v: Vec<T>,
    grad: Vec<T>,
    touched: Vec<bool>,
    rows: Vec<usize>,
    step: i32,
}

impl<T: Scalar> SparseAdam<T> {
    fn new(rows: usize, dim: usize, lr: f64) -> Self {
        SparseAdam {
            dim,
            lr: T::from_f64_lossy(lr),
            m: vec![T::zero(); rows * dim],
            v: vec![T::zero(); rows * dim],
            grad: vec![T::zero(); rows * dim],
            touched: vec![false; rows],
            rows: Vec::new(),
            step: 0,
        }
    }

    #[inline]
    fn row_grad(&mut self, row: usize) -> &mut [T] {
        if !self.touched[row] {
            self.touched[row] = true;
            self.rows.push(row);
        }
        &mut self.grad[row * self.dim..(row + 1) * self.dim]
    }

    fn apply(&mut self, params: &mut [T]) {
        self.step += 1;
        let b1 = T::from_f64_lossy(0.9);
        let b2 = T::from_f64_lossy(0.999);
        let eps = T::from_f64_lossy(1e-8);
        let one = T::one();
        let c1 = one - b1.powi(self.step);
        let c2 = one - b2.powi(self.step);
        // sorted so the update order never depends on visit order
        self.rows.sort_unstable();
        for &row in &self.rows {
            let r = row * self.dim..(row + 1) * self.dim;
            for i in r {
                let g = self.grad[i];
                self.m[i] = b1 * self.m[i] + (one - b1) * g;
                self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
                let mh = self.m[i] / c1;
                let vh = self.v[i] / c2;
                params[i] -= self.lr * mh / (vh.sqrt() + eps);
                self.grad[i] = T::zero();
            }
            self.touched[row] = false;
        }
        self.rows.clear();
    }
}

fn init_uniform<T: Scalar>(rng: &mut ChaCha8Rng, n: usize, range: f64) -> Vec<T> {
    (0..n)
        .map(|_| T::from_f64_lossy(rng.gen_range(-range..range)))
        .collect()
}

fn corrupt(rng: &mut ChaCha8Rng, f: &Fact, n_ent: usize) -> (usize, usize) {
    let e = rng.gen_range(0..n_ent);
    if rng.gen_bool(0.5) {
        (e, f.object.index())
    } else {
        (f.subject.index(), e)
    }
}

/// Trains TransE with the logistic margin loss
/// `-log sigmoid(eta - d+) - mean_j log sigmoid(d-_j - eta)` over uniformly
/// corrupted triples. Single-threaded and deterministic for a given seed.
pub fn train_transe<T: Scalar>(
    kg: &KnowledgeGraph,
    cfg: &EmbedTrainConfig,
) -> Result<EmbeddingModel<T>, EmbeddingError> {
    train_transe_logged(kg, cfg).map(|(m, _)| m)
}

/// As [`train_transe`], also returning the mean loss of every epoch.
pub fn train_transe_logged<T: Scalar>(
    kg: &KnowledgeGraph,
    cfg: &EmbedTrainConfig,
) -> Result<(EmbeddingModel<T>, Vec<f64>), EmbeddingError> {
    cfg.validate()?;
    if kg.is_empty() {
        return Err(EmbeddingError::EmptyGraph);
    }
    let d = cfg.dim;
    let n_ent = kg.num_entities();
    let n_pred = kg.num_base_predicates();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let range = (cfg.eta + 2.0) / d as f64;
    let mut ent: Vec<T> = init_uniform(&mut rng, n_ent * d, range);
    let mut rel: Vec<T> = init_uniform(&mut rng, n_pred * d, range);
    let mut ent_opt = SparseAdam::<T>::new(n_ent, d, cfg.learning_rate);
    let mut rel_opt = SparseAdam::<T>::new(n_pred, d, cfg.learning_rate);

    let eta = T::from_f64_lossy(cfg.eta);
    let inv_k = T::from_f64_lossy(1.0 / cfg.negatives as f64);
    let mut residual = vec![T::zero(); d];
    let mut order: Vec<usize> = (0..kg.num_facts()).collect();
    let facts = kg.facts();
    let mut losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        for batch in order.chunks(cfg.batch_size) {
            let scale = T::from_f64_lossy(1.0 / batch.len() as f64);
            for &fi in batch {
                let f = &facts[fi];
                let p = f.predicate.base_index();
                // positive triple
                let mut dist = T::zero();
                for i in 0..d {
                    residual[i] = ent[f.subject.index() * d + i] + rel[p * d + i] - ent[f.object.index() * d + i];
                    dist += residual[i].abs();
                }
                epoch_loss += crate::scalar::neg_log_sigmoid(eta - dist).to_f64_lossy();
                let g = sigmoid(dist - eta) * scale;
                accumulate(&mut ent_opt, &mut rel_opt, &residual, f.subject.index(), p, f.object.index(), g);

                for _ in 0..cfg.negatives {
                    let (s, o) = corrupt(&mut rng, f, n_ent);
                    let mut dist = T::zero();
                    for i in 0..d {
                        residual[i] = ent[s * d + i] + rel[p * d + i] - ent[o * d + i];
                        dist += residual[i].abs();
                    }
                    epoch_loss +=
                        (crate::scalar::neg_log_sigmoid(dist - eta) * inv_k).to_f64_lossy();
                    let g = -sigmoid(eta - dist) * inv_k * scale;
                    accumulate(&mut ent_opt, &mut rel_opt, &residual, s, p, o, g);
                }
            }
            ent_opt.apply(&mut ent);
            rel_opt.apply(&mut rel);
        }
        let mean = epoch_loss / facts.len() as f64;
        log::debug!("transe epoch {epoch} loss {mean:.6}");
        losses.push(mean);
    }
    let model = EmbeddingModel::from_parts(ModelKind::TransE, d, cfg.eta, ent, rel)?;
    Ok((model, losses))
}

/// Adds `g * d|s + P - o|_1 / d(params)` to the accumulated gradients.
fn accumulate<T: Scalar>(
    ent_opt: &mut SparseAdam<T>,
    rel_opt: &mut SparseAdam<T>,
    residual: &[T],
    s: usize,
    p: usize,
    o: usize,
    g: T,
) {
    let signed = |r: T| if r > T::zero() { g } else if r < T::zero() { -g } else { T::zero() };
    for (gs, &r) in ent_opt.row_grad(s).iter_mut().zip(residual) {
        *gs += signed(r);
    }
    for (go, &r) in ent_opt.row_grad(o).iter_mut().zip(residual) {
        *go -= signed(r);
    }
    for (gp, &r) in rel_opt.row_grad(p).iter_mut().zip(residual) {
        *gp += signed(r);
    }
}

/// Trains a diagonal bilinear model with logistic loss on uniformly corrupted
/// triples. Its vectors feed the optional bilinear rule score.
pub fn train_bilinear<T: Scalar>(
    kg: &KnowledgeGraph,
    cfg: &EmbedTrainConfig,
) -> Result<EmbeddingModel<T>, EmbeddingError> {
    cfg.validate()?;
    if kg.is_empty() {
        return Err(EmbeddingError::EmptyGraph);
    }
    let d = cfg.dim;
    let n_ent = kg.num_entities();
    let n_pred = kg.num_base_predicates();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let range = 1.0 / (d as f64).sqrt();
    let mut ent: Vec<T> = init_uniform(&mut rng, n_ent * d, range);
    let mut rel: Vec<T> = init_uniform(&mut rng, n_pred * d, range);
    let mut ent_opt = SparseAdam::<T>::new(n_ent, d, cfg.learning_rate);
    let mut rel_opt = SparseAdam::<T>::new(n_pred, d, cfg.learning_rate);
    let inv_k = T::from_f64_lossy(1.0 / cfg.negatives as f64);
    let mut order: Vec<usize> = (0..kg.num_facts()).collect();
    let facts = kg.facts();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let scale = T::from_f64_lossy(1.0 / batch.len() as f64);
            for &fi in batch {
                let f = &facts[fi];
                let p = f.predicate.base_index();
                // coef is +1 for the positive triple, -1 for corruptions
                let grad_of = |s: usize, o: usize, coef: T, ent: &[T], rel: &[T]| {
                    let score: T = (0..d).map(|i| ent[s * d + i] * rel[p * d + i] * ent[o * d + i]).sum();
                    -sigmoid(-coef * score) * coef
                };
                let g = grad_of(f.subject.index(), f.object.index(), T::one(), &ent, &rel);
                bilinear_grad(&mut ent_opt, &mut rel_opt, &ent, &rel, d, f.subject.index(), p, f.object.index(), g * scale);
                for _ in 0..cfg.negatives {
                    let (s, o) = corrupt(&mut rng, f, n_ent);
                    let g = grad_of(s, o, -T::one(), &ent, &rel);
                    bilinear_grad(&mut ent_opt, &mut rel_opt, &ent, &rel, d, s, p, o, g * inv_k * scale);
                }
            }
            ent_opt.apply(&mut ent);
            rel_opt.apply(&mut rel);
        }
    }
    EmbeddingModel::from_parts(ModelKind::DiagonalBilinear, d, cfg.eta, ent, rel)
}

#[allow(clippy::too_many_arguments)]
fn bilinear_grad<T: Scalar>(
    ent_opt: &mut SparseAdam<T>,
    rel_opt: &mut SparseAdam<T>,
    ent: &[T],
    rel: &[T],
    d: usize,
    s: usize,
    p: usize,
    o: usize,
    g: T,
) {
    for i in 0..d {
        let (sv, pv, ov) = (ent[s * d + i], rel[p * d + i], ent[o * d + i]);
        ent_opt.row_grad(s)[i] += g * pv * ov;
        ent_opt.row_grad(o)[i] += g * sv * pv;
        rel_opt.row_grad(p)[i] += g * sv * ov;
    }
}
