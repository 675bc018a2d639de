//! Recurrent value network `V(s) = sigmoid(w . mean_t BiLSTM(embed(s))_t + b)`.
//!
//! All parameters live in one flat vector so optimizers, checkpoints and
//! finite-difference checks can treat them uniformly. Layout:
//!
//! ```text
//! token embedding   [tokens x token_dim]
//! per layer, per direction (forward then backward):
//!     W  [4h x input]   gate rows ordered i, f, g, o
//!     U  [4h x h]
//!     b  [4h]
//! head w [2h], head b [1]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::State;
use crate::scalar::{sigmoid, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkShape {
    /// Predicate vocabulary size, inverses included.
    pub predicates: usize,
    pub token_dim: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl NetworkShape {
    pub fn desk(predicates: usize) -> Self {
        NetworkShape {
            predicates,
            token_dim: 32,
            hidden: 64,
            layers: 1,
        }
    }

    pub fn paper(predicates: usize) -> Self {
        NetworkShape {
            predicates,
            token_dim: 256,
            hidden: 512,
            layers: 1,
        }
    }

    /// Predicates plus separator and mask.
    pub fn tokens(&self) -> usize {
        self.predicates + 2
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.token_dim
        } else {
            2 * self.hidden
        }
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cell {
    w: usize,
    u: usize,
    b: usize,
    input: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    cells: Vec<[Cell; 2]>,
    head_w: usize,
    head_b: usize,
    total: usize,
}

impl Layout {
    fn new(shape: &NetworkShape) -> Self {
        let h4 = 4 * shape.hidden;
        let mut off = shape.tokens() * shape.token_dim;
        let mut cells = Vec::with_capacity(shape.layers);
        for l in 0..shape.layers {
            let input = shape.layer_input(l);
            let mut mk = || {
                let c = Cell {
                    w: off,
                    u: off + h4 * input,
                    b: off + h4 * input + h4 * shape.hidden,
                    input,
                };
                off = c.b + h4;
                c
            };
            let fwd = mk();
            let bwd = mk();
            cells.push([fwd, bwd]);
        }
        let head_w = off;
        let head_b = head_w + shape.output_dim();
        Layout {
            cells,
            head_w,
            head_b,
            total: head_b + 1,
        }
    }
}

/// Activations of one forward pass, kept for backpropagation.
#[derive(Clone, Debug, Default)]
pub struct Workspace<T> {
    tokens: Vec<usize>,
    len: usize,
    /// per layer: `len x input` inputs
    inputs: Vec<Vec<T>>,
    /// per layer and direction: `len x 4h` gate activations
    gates: Vec<Vec<T>>,
    /// per layer and direction: `len x h`
    cells: Vec<Vec<T>>,
    hiddens: Vec<Vec<T>>,
    pooled: Vec<T>,
    value: T,
    scratch: Vec<T>,
    d_out: Vec<T>,
    d_in: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueNetwork<T> {
    shape: NetworkShape,
    layout: Layout,
    params: Vec<T>,
}

impl<T: Scalar> ValueNetwork<T> {
    /// Random initialization: LSTM weights uniform in `±1/sqrt(h)`, forget
    /// gate bias 1, token embeddings uniform in `±0.5`.
    pub fn new(shape: NetworkShape, seed: u64) -> Self {
        let layout = Layout::new(&shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![T::zero(); layout.total];
        let h = shape.hidden;
        let embed_end = shape.tokens() * shape.token_dim;
        for p in &mut params[..embed_end] {
            *p = T::from_f64_lossy(rng.gen_range(-0.5..0.5));
        }
        let k = 1.0 / (h as f64).sqrt();
        for pair in &layout.cells {
            for c in pair {
                for p in &mut params[c.w..c.b] {
                    *p = T::from_f64_lossy(rng.gen_range(-k..k));
                }
                for p in &mut params[c.b + h..c.b + 2 * h] {
                    *p = T::one();
                }
            }
        }
        let kh = 1.0 / (shape.output_dim() as f64).sqrt();
        for p in &mut params[layout.head_w..layout.head_b] {
            *p = T::from_f64_lossy(rng.gen_range(-kh..kh));
        }
        ValueNetwork { shape, layout, params }
    }

    pub fn from_params(shape: NetworkShape, params: Vec<T>) -> Option<Self> {
        let layout = Layout::new(&shape);
        (params.len() == layout.total).then_some(ValueNetwork { shape, layout, params })
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.layout.total
    }

    /// Sets the output projection, e.g. to zero for a constant 0.5 network.
    pub fn set_head(&mut self, weight: T, bias: T) {
        let (w, b) = (self.layout.head_w, self.layout.head_b);
        for p in &mut self.params[w..b] {
            *p = weight;
        }
        self.params[b] = bias;
    }

    pub fn cast<U: Scalar>(&self) -> ValueNetwork<U> {
        ValueNetwork {
            shape: self.shape,
            layout: self.layout.clone(),
            params: self.params.iter().map(|p| U::from_f64_lossy(p.to_f64_lossy())).collect(),
        }
    }

    pub fn workspace(&self) -> Workspace<T> {
        Workspace::default()
    }

    /// V(s) for one state.
    pub fn value(&self, state: &State) -> T {
        let mut ws = self.workspace();
        self.forward(state, &mut ws)
    }

    /// Batched forward pass; results match [`value`](Self::value) exactly.
    pub fn values(&self, states: &[State]) -> Vec<T> {
        let mut ws = self.workspace();
        if states.len() < 2 {
            return states.iter().map(|s| self.forward(s, &mut ws)).collect();
        }
        let table = self.input_table();
        states.iter().map(|s| self.forward_impl(s, &mut ws, Some(&table))).collect()
    }

    /// First-layer gate pre-activations `b + W x` for every token and
    /// direction, laid out `[direction][token][4h]`.
    fn input_table(&self) -> Vec<T> {
        let h4 = 4 * self.shape.hidden;
        let td = self.shape.token_dim;
        let tokens = self.shape.tokens();
        let mut table = Vec::with_capacity(2 * tokens * h4);
        for cell in &self.layout.cells[0] {
            let w = &self.params[cell.w..cell.u];
            let b = &self.params[cell.b..cell.b + h4];
            for tok in 0..tokens {
                let x = &self.params[tok * td..(tok + 1) * td];
                for r in 0..h4 {
                    let mut a = b[r];
                    a += dot(&w[r * td..(r + 1) * td], x);
                    table.push(a);
                }
            }
        }
        table
    }

    /// `V` of every successor of `state`, in the order of
    /// [`State::actions`]. Equal to [`values`](Self::values) on the successor
    /// states.
    pub fn successor_values(&self, state: &State) -> Vec<T> {
        self.successor_values_many(std::slice::from_ref(state)).pop().unwrap_or_default()
    }

    /// [`successor_values`](Self::successor_values) for several states.
    /// Single-layer networks reuse the recurrent states a successor shares
    /// with its parent: only the positions downstream of the filled slot are
    /// recomputed in each direction.
    pub fn successor_values_many(&self, states: &[State]) -> Vec<Vec<T>> {
        if self.shape.layers != 1 {
            let vocab = self.shape.predicates;
            return states
                .iter()
                .map(|s| self.values(&s.successors(vocab)))
                .collect();
        }
        let table = self.input_table();
        let mut ws = self.workspace();
        states.iter().map(|s| self.successors_single_layer(s, &table, &mut ws)).collect()
    }

    fn successors_single_layer(&self, state: &State, table: &[T], ws: &mut Workspace<T>) -> Vec<T> {
        let shape = &self.shape;
        let h = shape.hidden;
        let h4 = 4 * h;
        let tokens_n = shape.tokens();
        self.forward_impl(state, ws, Some(table));
        let len = ws.len;
        let (hf, cf, hb, cb) = (&ws.hiddens[0], &ws.cells[0], &ws.hiddens[1], &ws.cells[1]);
        let u_f = &self.params[self.layout.cells[0][0].u..self.layout.cells[0][0].b];
        let u_b = &self.params[self.layout.cells[0][1].u..self.layout.cells[0][1].b];
        let head_w = &self.params[self.layout.head_w..self.layout.head_b];
        let head_b = self.params[self.layout.head_b];
        let inv_len = T::one() / T::from_usize(len).expect("sequence length fits");

        // prefix[t] = sum of forward hidden states before position t
        let mut prefix = vec![T::zero(); (len + 1) * h];
        for t in 0..len {
            for j in 0..h {
                prefix[(t + 1) * h + j] = prefix[t * h + j] + hf[t * h + j];
            }
        }

        let mut a = vec![T::zero(); h4];
        let mut hbuf = vec![T::zero(); 2 * h];
        let mut cbuf = vec![T::zero(); 2 * h];
        let mut bwd_new = vec![T::zero(); len * h];
        let mut pooled = vec![T::zero(); 2 * h];
        let mut out = Vec::new();
        let first_slot = 2;
        for (slot, filled) in state.slots().iter().enumerate() {
            if filled.is_some() {
                continue;
            }
            let pos = first_slot + slot;
            for p in 0..shape.predicates {
                let tok_at = |t: usize| if t == pos { p } else { ws.tokens[t] };
                // forward direction from pos to the end
                pooled[..h].copy_from_slice(&prefix[pos * h..(pos + 1) * h]);
                hbuf[..h].copy_from_slice(&hf[(pos - 1) * h..pos * h]);
                cbuf[..h].copy_from_slice(&cf[(pos - 1) * h..pos * h]);
                for t in pos..len {
                    let off = tok_at(t) * h4;
                    a.copy_from_slice(&table[off..off + h4]);
                    let (hp, hn) = hbuf.split_at_mut(h);
                    let (cp, cn) = cbuf.split_at_mut(h);
                    cell_step(u_f, &mut a, Some((hp, cp)), cn, hn);
                    for j in 0..h {
                        pooled[j] += hn[j];
                    }
                    hbuf.copy_within(h..2 * h, 0);
                    cbuf.copy_within(h..2 * h, 0);
                }
                // backward direction from pos down to the start
                for t in (0..=pos).rev() {
                    let off = (tokens_n + tok_at(t)) * h4;
                    a.copy_from_slice(&table[off..off + h4]);
                    let out_h = &mut bwd_new[t * h..(t + 1) * h];
                    let (hn, cn) = (&mut hbuf[h..], &mut cbuf[h..]);
                    if t == pos {
                        if pos + 1 < len {
                            let r = (pos + 1) * h..(pos + 2) * h;
                            cell_step(u_b, &mut a, Some((&hb[r.clone()], &cb[r])), cn, hn);
                        } else {
                            cell_step(u_b, &mut a, None, cn, hn);
                        }
                    } else {
                        let (hp, hn) = hbuf.split_at_mut(h);
                        let (cp, cn) = cbuf.split_at_mut(h);
                        cell_step(u_b, &mut a, Some((hp, cp)), cn, hn);
                    }
                    out_h.copy_from_slice(&hbuf[h..]);
                    hbuf.copy_within(h..2 * h, 0);
                    cbuf.copy_within(h..2 * h, 0);
                }
                for j in 0..h {
                    pooled[h + j] = T::zero();
                }
                for t in 0..len {
                    let src = if t <= pos { &bwd_new[t * h..(t + 1) * h] } else { &hb[t * h..(t + 1) * h] };
                    for j in 0..h {
                        pooled[h + j] += src[j];
                    }
                }
                for v in &mut pooled {
                    *v *= inv_len;
                }
                out.push(sigmoid(dot(head_w, &pooled) + head_b));
            }
        }
        out
    }

    /// Forward pass leaving activations in `ws` for [`backward`](Self::backward).
    pub fn forward(&self, state: &State, ws: &mut Workspace<T>) -> T {
        self.forward_impl(state, ws, None)
    }

    fn forward_impl(&self, state: &State, ws: &mut Workspace<T>, table: Option<&[T]>) -> T {
        let shape = &self.shape;
        let layout = &self.layout;
        let h = shape.hidden;
        let h4 = 4 * h;
        state.write_tokens(shape.predicates, &mut ws.tokens);
        let len = ws.tokens.len();
        ws.len = len;
        let nl = shape.layers;
        ws.inputs.resize_with(nl, Vec::new);
        ws.gates.resize_with(2 * nl, Vec::new);
        ws.cells.resize_with(2 * nl, Vec::new);
        ws.hiddens.resize_with(2 * nl, Vec::new);

        // layer 0 input: token embeddings
        let td = shape.token_dim;
        let x0 = &mut ws.inputs[0];
        x0.clear();
        for &tok in &ws.tokens {
            x0.extend_from_slice(&self.params[tok * td..(tok + 1) * td]);
        }

        for l in 0..nl {
            if l > 0 {
                let prev_h = &ws.hiddens;
                let x = &mut ws.inputs[l];
                x.clear();
                for t in 0..len {
                    x.extend_from_slice(&prev_h[2 * (l - 1)][t * h..(t + 1) * h]);
                    x.extend_from_slice(&prev_h[2 * (l - 1) + 1][t * h..(t + 1) * h]);
                }
            }
            for dir in 0..2 {
                let cell = layout.cells[l][dir];
                let idx = 2 * l + dir;
                let gates = &mut ws.gates[idx];
                let cs = &mut ws.cells[idx];
                let hs = &mut ws.hiddens[idx];
                gates.clear();
                gates.resize(len * h4, T::zero());
                cs.clear();
                cs.resize(len * h, T::zero());
                hs.clear();
                hs.resize(len * h, T::zero());
                let x = &ws.inputs[l];
                let w = &self.params[cell.w..cell.u];
                let u = &self.params[cell.u..cell.b];
                let b = &self.params[cell.b..cell.b + h4];
                let mut prev: Option<usize> = None;
                for step in 0..len {
                    let t = if dir == 0 { step } else { len - 1 - step };
                    let xt = &x[t * cell.input..(t + 1) * cell.input];
                    let a = &mut gates[t * h4..(t + 1) * h4];
                    match table {
                        Some(tab) if l == 0 => {
                            let off = (dir * shape.tokens() + ws.tokens[t]) * h4;
                            a.copy_from_slice(&tab[off..off + h4]);
                        }
                        _ => {
                            a.copy_from_slice(b);
                            for (r, ar) in a.iter_mut().enumerate() {
                                *ar += dot(&w[r * cell.input..(r + 1) * cell.input], xt);
                            }
                        }
                    }
                    match prev {
                        Some(pt) => {
                            let (h_prev, h_out) = split_prev(hs, t, pt, h);
                            let (c_prev, c_out) = split_prev(cs, t, pt, h);
                            cell_step(u, a, Some((h_prev, c_prev)), c_out, h_out);
                        }
                        None => cell_step(u, a, None, &mut cs[t * h..(t + 1) * h], &mut hs[t * h..(t + 1) * h]),
                    }
                    prev = Some(t);
                }
            }
        }

        // mean pooling over positions of the top layer, directions concatenated
        let top = 2 * (nl - 1);
        ws.pooled.clear();
        ws.pooled.resize(2 * h, T::zero());
        let inv_len = T::one() / T::from_usize(len).expect("sequence length fits");
        for t in 0..len {
            for j in 0..h {
                ws.pooled[j] += ws.hiddens[top][t * h + j];
                ws.pooled[h + j] += ws.hiddens[top + 1][t * h + j];
            }
        }
        for p in &mut ws.pooled {
            *p *= inv_len;
        }
        let z = dot(&self.params[layout.head_w..layout.head_b], &ws.pooled) + self.params[layout.head_b];
        ws.value = sigmoid(z);
        ws.value
    }

    /// Accumulates `d_value * dV/dtheta` into `grad` for the pass held in `ws`.
    pub fn backward(&self, ws: &mut Workspace<T>, d_value: T, grad: &mut [T]) {
        assert_eq!(grad.len(), self.params.len());
        let shape = &self.shape;
        let layout = &self.layout;
        let h = shape.hidden;
        let h4 = 4 * h;
        let len = ws.len;
        let nl = shape.layers;
        let v = ws.value;
        let dz = d_value * v * (T::one() - v);

        // head
        for (g, &p) in grad[layout.head_w..layout.head_b].iter_mut().zip(&ws.pooled) {
            *g += dz * p;
        }
        grad[layout.head_b] += dz;
        let inv_len = T::one() / T::from_usize(len).expect("sequence length fits");
        // gradient w.r.t. each top-layer output position, directions concatenated
        ws.d_out.clear();
        ws.d_out.resize(len * 2 * h, T::zero());
        for t in 0..len {
            for j in 0..2 * h {
                ws.d_out[t * 2 * h + j] = dz * self.params[layout.head_w + j] * inv_len;
            }
        }

        for l in (0..nl).rev() {
            let input = shape.layer_input(l);
            ws.d_in.clear();
            ws.d_in.resize(len * input, T::zero());
            for dir in 0..2 {
                let cell = layout.cells[l][dir];
                let idx = 2 * l + dir;
                let gates = &ws.gates[idx];
                let cs = &ws.cells[idx];
                let hs = &ws.hiddens[idx];
                let x = &ws.inputs[l];
                ws.scratch.clear();
                // scratch: dh_next [h], dc_next [h], da [4h]
                ws.scratch.resize(2 * h + h4, T::zero());
                let (dh_next, rest) = ws.scratch.split_at_mut(h);
                let (dc_next, da) = rest.split_at_mut(h);
                for step in (0..len).rev() {
                    let t = if dir == 0 { step } else { len - 1 - step };
                    let prev = if step == 0 {
                        None
                    } else if dir == 0 {
                        Some(t - 1)
                    } else {
                        Some(t + 1)
                    };
                    let g = &gates[t * h4..(t + 1) * h4];
                    for j in 0..h {
                        let dh = ws.d_out[t * 2 * h + dir * h + j] + dh_next[j];
                        let c = cs[t * h + j];
                        let tc = c.tanh();
                        let (gi, gf, gg, go) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                        let dc = dh * go * (T::one() - tc * tc) + dc_next[j];
                        let c_prev = prev.map_or(T::zero(), |pt| cs[pt * h + j]);
                        da[j] = dc * gg * gi * (T::one() - gi);
                        da[h + j] = dc * c_prev * gf * (T::one() - gf);
                        da[2 * h + j] = dc * gi * (T::one() - gg * gg);
                        da[3 * h + j] = dh * tc * go * (T::one() - go);
                        dc_next[j] = dc * gf;
                    }
                    // parameter gradients
                    let xt = &x[t * input..(t + 1) * input];
                    for r in 0..h4 {
                        let dar = da[r];
                        if dar == T::zero() {
                            continue;
                        }
                        let gw = &mut grad[cell.w + r * input..cell.w + (r + 1) * input];
                        for (gwi, &xi) in gw.iter_mut().zip(xt) {
                            *gwi += dar * xi;
                        }
                        grad[cell.b + r] += dar;
                    }
                    // input gradient
                    let w = &self.params[cell.w..cell.u];
                    let dxt = &mut ws.d_in[t * input..(t + 1) * input];
                    for r in 0..h4 {
                        let dar = da[r];
                        for (dx, &wi) in dxt.iter_mut().zip(&w[r * input..(r + 1) * input]) {
                            *dx += dar * wi;
                        }
                    }
                    // recurrent gradient
                    for j in 0..h {
                        dh_next[j] = T::zero();
                    }
                    if let Some(pt) = prev {
                        let hp = &hs[pt * h..(pt + 1) * h];
                        let u = &self.params[cell.u..cell.b];
                        for r in 0..h4 {
                            let dar = da[r];
                            let gu = &mut grad[cell.u + r * h..cell.u + (r + 1) * h];
                            for (gui, &hi) in gu.iter_mut().zip(hp) {
                                *gui += dar * hi;
                            }
                            for (dn, &ui) in dh_next.iter_mut().zip(&u[r * h..(r + 1) * h]) {
                                *dn += dar * ui;
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut ws.d_out, &mut ws.d_in);
        }

        // d_out now holds gradients w.r.t. the token embeddings
        let td = shape.token_dim;
        for (t, &tok) in ws.tokens.iter().enumerate() {
            for j in 0..td {
                grad[tok * td + j] += ws.d_out[t * td + j];
            }
        }
    }
}

/// One LSTM step. `a` holds the input part of the gate pre-activations on
/// entry and the gate activations on exit.
fn cell_step<T: Scalar>(u: &[T], a: &mut [T], prev: Option<(&[T], &[T])>, c_out: &mut [T], h_out: &mut [T]) {
    let h = h_out.len();
    if let Some((hp, _)) = prev {
        for (r, ar) in a.iter_mut().enumerate() {
            *ar += dot(&u[r * h..(r + 1) * h], hp);
        }
    }
    for j in 0..h {
        a[j] = sigmoid(a[j]);
        a[h + j] = sigmoid(a[h + j]);
        a[2 * h + j] = a[2 * h + j].tanh();
        a[3 * h + j] = sigmoid(a[3 * h + j]);
    }
    for j in 0..h {
        let c_prev = prev.map_or(T::zero(), |(_, cp)| cp[j]);
        let c = a[h + j] * c_prev + a[j] * a[2 * h + j];
        c_out[j] = c;
        h_out[j] = a[3 * h + j] * c.tanh();
    }
}

/// Row `pt` for reading and row `t` for writing of a `rows x h` buffer.
fn split_prev<T>(v: &mut [T], t: usize, pt: usize, h: usize) -> (&[T], &mut [T]) {
    if pt < t {
        let (lo, hi) = v.split_at_mut(t * h);
        (&lo[pt * h..(pt + 1) * h], &mut hi[..h])
    } else {
        let (lo, hi) = v.split_at_mut(pt * h);
        (&hi[..h], &mut lo[t * h..(t + 1) * h])
    }
}

/// Four independent accumulators; the summation order is fixed, so results
/// are reproducible.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        acc[0] += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Anything that can value a batch of states.
pub trait ValueFunction {
    fn values(&self, states: &[State]) -> Vec<f64>;

    fn value(&self, state: &State) -> f64 {
        self.values(std::slice::from_ref(state))[0]
    }

    /// Values of the successors of `state`, in the order of
    /// [`State::actions`].
    fn successor_values(&self, state: &State, vocabulary: usize) -> Vec<f64> {
        self.values(&state.successors(vocabulary))
    }
}

impl<T: Scalar> ValueFunction for ValueNetwork<T> {
    fn values(&self, states: &[State]) -> Vec<f64> {
        ValueNetwork::values(self, states)
            .into_iter()
            .map(Scalar::to_f64_lossy)
            .collect()
    }

    fn successor_values(&self, state: &State, vocabulary: usize) -> Vec<f64> {
        assert_eq!(vocabulary, self.shape.predicates, "vocabulary does not match the network");
        ValueNetwork::successor_values(self, state)
            .into_iter()
            .map(Scalar::to_f64_lossy)
            .collect()
    }
}

impl<V: ValueFunction + ?Sized> ValueFunction for &V {
    fn values(&self, states: &[State]) -> Vec<f64> {
        (**self).values(states)
    }

    fn successor_values(&self, state: &State, vocabulary: usize) -> Vec<f64> {
        (**self).successor_values(state, vocabulary)
    }
}

/// Wraps a closure as a value function.
pub struct FnValue<F>(pub F);

impl<F: Fn(&State) -> f64> ValueFunction for FnValue<F> {
    fn values(&self, states: &[State]) -> Vec<f64> {
        states.iter().map(&self.0).collect()
    }
}

/// RMSprop with decay 0.9 and epsilon 1e-7.
#[derive(Clone, Debug)]
pub struct RmsProp<T> {
    pub learning_rate: T,
    pub decay: T,
    pub epsilon: T,
    cache: Vec<T>,
}

impl<T: Scalar> RmsProp<T> {
    pub fn new(n: usize, learning_rate: f64) -> Self {
        RmsProp {
            learning_rate: T::from_f64_lossy(learning_rate),
            decay: T::from_f64_lossy(0.9),
            epsilon: T::from_f64_lossy(1e-7),
            cache: vec![T::zero(); n],
        }
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        let one = T::one();
        for ((p, &g), c) in params.iter_mut().zip(grad).zip(self.cache.iter_mut()) {
            *c = self.decay * *c + (one - self.decay) * g * g;
            *p -= self.learning_rate * g / (c.sqrt() + self.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::PredicateId;

    fn shape() -> NetworkShape {
        NetworkShape {
            predicates: 6,
            token_dim: 4,
            hidden: 5,
            layers: 2,
        }
    }

    fn state() -> State {
        State::from_slots(PredicateId(2), vec![Some(PredicateId(5)), None, Some(PredicateId(0))])
    }

    #[test]
    fn zero_head_gives_half() {
        let mut net = ValueNetwork::<f64>::new(shape(), 1);
        net.set_head(0.0, 0.0);
        for s in [state(), State::masked(PredicateId(0), 1), State::masked(PredicateId(4), 5)] {
            assert_eq!(net.value(&s), 0.5);
        }
    }

    #[test]
    fn batched_equals_single_and_in_range() {
        let net = ValueNetwork::<f32>::new(shape(), 7);
        let states = vec![state(), State::masked(PredicateId(1), 2), state()];
        let batch = net.values(&states);
        for (s, v) in states.iter().zip(&batch) {
            assert_eq!(net.value(s), *v);
            assert!(*v > 0.0 && *v < 1.0);
        }
        assert_eq!(batch[0], batch[2]);
    }

    fn successor_check<T: Scalar + std::fmt::Debug>(shape: NetworkShape, seed: u64, s: &State) {
        let net = ValueNetwork::<T>::new(shape, seed);
        assert_eq!(net.successor_values(s), net.values(&s.successors(shape.predicates)));
    }

    proptest::proptest! {
        #[test]
        fn successor_values_match_full_passes(
            seed in 0u64..1000,
            head in 0u32..6,
            slots in proptest::collection::vec(proptest::option::of(0u32..6), 1..6),
            layers in 1usize..3,
        ) {
            let s = State::from_slots(PredicateId(head), slots.into_iter().map(|o| o.map(PredicateId)).collect());
            let shape = NetworkShape { layers, ..shape() };
            successor_check::<f32>(shape, seed, &s);
            successor_check::<f64>(shape, seed, &s);
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut net = ValueNetwork::<f64>::new(shape(), 11);
        let s = state();
        let mut ws = net.workspace();
        net.forward(&s, &mut ws);
        let mut grad = vec![0.0; net.num_params()];
        net.backward(&mut ws, 1.0, &mut grad);
        let eps = 1e-6;
        let mut num = vec![0.0; net.num_params()];
        for i in 0..net.num_params() {
            let orig = net.params[i];
            net.params[i] = orig + eps;
            let up = net.value(&s);
            net.params[i] = orig - eps;
            let down = net.value(&s);
            net.params[i] = orig;
            num[i] = (up - down) / (2.0 * eps);
        }
        let diff: f64 = grad.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-6, "relative error {}", diff / norm);
    }

    #[test]
    fn rmsprop_moves_against_gradient() {
        let mut opt = RmsProp::<f64>::new(2, 0.1);
        let mut p = vec![1.0, -1.0];
        opt.step(&mut p, &[2.0, -3.0]);
        assert!(p[0] < 1.0 && p[1] > -1.0);
        let mut q = vec![0.5];
        RmsProp::<f64>::new(1, 0.1).step(&mut q, &[0.0]);
        assert_eq!(q[0], 0.5);
    }
}
