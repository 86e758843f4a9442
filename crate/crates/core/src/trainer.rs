//! Negative-sampling SGD over the heterogeneous network.
//!
//! Each iteration draws one edge from the word-context network and one from
//! the word-identity network, both proportional to edge weight, and applies
//! a unit-weight update with `negatives` noise senses drawn from the shared
//! `count^0.75` sense distribution. For an edge `(j, a)` the per-edge loss is
//!
//! ```text
//! -log σ(w_j · a) - Σ_n log σ(-w_n · a)
//! ```
//!
//! where `a` is a context or identity vector.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hetnet::{build_noise_table, AliasTable, BipartiteNetwork, HeterogeneousNetwork};
use crate::model::{dot, Anchor, AnchorKind, EmbeddingModel, Matrix};

pub const DEFAULT_DIM: usize = 100;
pub const DEFAULT_NEGATIVES: usize = 5;
pub const DEFAULT_RHO0: f64 = 0.025;
pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_SAMPLES: u64 = 10_000_000;
/// The learning rate never decays below `rho0 * LR_FLOOR`.
pub const LR_FLOOR: f64 = 1e-4;
/// Draws allowed per negative before giving up on a collision with the
/// positive sense.
pub const NEGATIVE_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub dim: usize,
    pub negatives: usize,
    /// Iterations; each performs one word-context and one word-identity
    /// update, so `2 * samples` edges are drawn in total.
    pub samples: u64,
    pub rho0: f64,
    pub window: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            negatives: DEFAULT_NEGATIVES,
            samples: DEFAULT_SAMPLES,
            rho0: DEFAULT_RHO0,
            window: DEFAULT_WINDOW,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.samples == 0 {
            return bad("samples must be at least 1");
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return bad("rho0 must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

/// Logistic function, evaluated without overflow for any finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)`, accurate in both tails.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Linearly decaying rate `rho0 (1 - t/T)`, floored at `rho0 * 1e-4`.
pub fn learning_rate(t: u64, total: u64, rho0: f64) -> f64 {
    let progress = t as f64 / total as f64;
    (rho0 * (1.0 - progress)).max(rho0 * LR_FLOOR)
}

/// Negative-sampling loss of one unit-weight edge `(source, anchor)`.
pub fn edge_loss(model: &EmbeddingModel, source: u32, anchor: Anchor, negatives: &[u32]) -> f64 {
    let a = model.anchor(anchor);
    let positive = -log_sigmoid(dot(model.sense(source), a));
    let noise: f64 = negatives
        .iter()
        .map(|&n| -log_sigmoid(-dot(model.sense(n), a)))
        .sum();
    positive + noise
}

/// Gradient of [`edge_loss`]; sense rows are merged when repeated.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGradient {
    pub senses: Vec<(u32, Vec<f64>)>,
    pub anchor: Vec<f64>,
}

pub fn edge_gradient(model: &EmbeddingModel, source: u32, anchor: Anchor, negatives: &[u32]) -> EdgeGradient {
    let a = model.anchor(anchor);
    let mut grad = EdgeGradient {
        senses: Vec::new(),
        anchor: vec![0.0; a.len()],
    };
    let terms = std::iter::once((source, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (row, label) in terms {
        let w = model.sense(row);
        let coef = sigmoid(dot(w, a)) - label;
        let slot = match grad.senses.iter().position(|(r, _)| *r == row) {
            Some(i) => i,
            None => {
                grad.senses.push((row, vec![0.0; a.len()]));
                grad.senses.len() - 1
            }
        };
        for (g, x) in grad.senses[slot].1.iter_mut().zip(a) {
            *g += coef * x;
        }
        for (g, x) in grad.anchor.iter_mut().zip(w) {
            *g += coef * x;
        }
    }
    grad
}

/// One SGD step on a single edge. Only the source, negative and anchor rows
/// change.
pub fn sgd_update(model: &mut EmbeddingModel, source: u32, anchor: Anchor, negatives: &[u32], rho: f64) {
    let mut buffers = Buffers::new(model.dim());
    apply_edge(&mut PlainTables(model), source, anchor, negatives, rho, &mut buffers);
}

/// Softmax over all senses conditioned on `anchor`. Meant for small models;
/// training never materializes it.
pub fn evaluate_softmax(model: &EmbeddingModel, anchor: Anchor) -> Vec<f64> {
    let a = model.anchor(anchor);
    let scores: Vec<f64> = (0..model.num_senses() as u32)
        .map(|r| dot(model.sense(r), a))
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Row storage the update kernel reads from and writes to.
trait Tables {
    fn load(&self, kind: Option<AnchorKind>, row: u32, out: &mut [f64]);
    fn add(&mut self, kind: Option<AnchorKind>, row: u32, delta: &[f64]);
}

struct PlainTables<'a>(&'a mut EmbeddingModel);

impl PlainTables<'_> {
    fn matrix(&self, kind: Option<AnchorKind>) -> &Matrix {
        match kind {
            None => &self.0.sense_vectors,
            Some(AnchorKind::Context) => &self.0.context_vectors,
            Some(AnchorKind::Identity) => &self.0.identity_vectors,
        }
    }
}

impl Tables for PlainTables<'_> {
    #[inline]
    fn load(&self, kind: Option<AnchorKind>, row: u32, out: &mut [f64]) {
        out.copy_from_slice(self.matrix(kind).row(row as usize));
    }

    #[inline]
    fn add(&mut self, kind: Option<AnchorKind>, row: u32, delta: &[f64]) {
        let target = match kind {
            None => self.0.sense_vectors.row_mut(row as usize),
            Some(k) => self.0.anchor_mut(Anchor { kind: k, row }),
        };
        for (t, d) in target.iter_mut().zip(delta) {
            *t += d;
        }
    }
}

/// Lock-free shared copy of the three tables for multi-worker training.
/// Concurrent read-modify-write on one entry may lose an update.
struct AtomicTables {
    dim: usize,
    sense: Vec<AtomicU64>,
    context: Vec<AtomicU64>,
    identity: Vec<AtomicU64>,
}

impl AtomicTables {
    fn from_model(model: &EmbeddingModel) -> Self {
        let wrap = |m: &Matrix| m.as_slice().iter().map(|v| AtomicU64::new(v.to_bits())).collect();
        Self {
            dim: model.dim(),
            sense: wrap(&model.sense_vectors),
            context: wrap(&model.context_vectors),
            identity: wrap(&model.identity_vectors),
        }
    }

    fn write_back(&self, model: &mut EmbeddingModel) {
        let unwrap = |src: &[AtomicU64], dst: &mut Matrix| {
            for (d, s) in dst.as_mut_slice().iter_mut().zip(src) {
                *d = f64::from_bits(s.load(Ordering::Relaxed));
            }
        };
        unwrap(&self.sense, &mut model.sense_vectors);
        unwrap(&self.context, &mut model.context_vectors);
        unwrap(&self.identity, &mut model.identity_vectors);
    }

    fn row(&self, kind: Option<AnchorKind>, row: u32) -> &[AtomicU64] {
        let table = match kind {
            None => &self.sense,
            Some(AnchorKind::Context) => &self.context,
            Some(AnchorKind::Identity) => &self.identity,
        };
        let start = row as usize * self.dim;
        &table[start..start + self.dim]
    }
}

#[derive(Clone, Copy)]
struct SharedTables<'a>(&'a AtomicTables);

impl Tables for SharedTables<'_> {
    #[inline]
    fn load(&self, kind: Option<AnchorKind>, row: u32, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.0.row(kind, row)) {
            *o = f64::from_bits(v.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn add(&mut self, kind: Option<AnchorKind>, row: u32, delta: &[f64]) {
        for (v, d) in self.0.row(kind, row).iter().zip(delta) {
            let current = f64::from_bits(v.load(Ordering::Relaxed));
            v.store((current + d).to_bits(), Ordering::Relaxed);
        }
    }
}

struct Buffers {
    anchor: Vec<f64>,
    anchor_grad: Vec<f64>,
    sense: Vec<f64>,
    delta: Vec<f64>,
}

impl Buffers {
    fn new(dim: usize) -> Self {
        Self {
            anchor: vec![0.0; dim],
            anchor_grad: vec![0.0; dim],
            sense: vec![0.0; dim],
            delta: vec![0.0; dim],
        }
    }
}

/// Descends the edge loss by `rho`: the positive sense moves by
/// `rho (1 - σ) a`, each negative by `-rho σ a`, and the anchor accumulates
/// the matching terms computed from the pre-update sense rows.
#[inline]
fn apply_edge<T: Tables>(tables: &mut T, source: u32, anchor: Anchor, negatives: &[u32], rho: f64, buf: &mut Buffers) {
    tables.load(Some(anchor.kind), anchor.row, &mut buf.anchor);
    buf.anchor_grad.fill(0.0);
    let terms = std::iter::once((source, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (row, label) in terms {
        tables.load(None, row, &mut buf.sense);
        let g = rho * (label - sigmoid(dot(&buf.sense, &buf.anchor)));
        for k in 0..buf.sense.len() {
            buf.anchor_grad[k] += g * buf.sense[k];
            buf.delta[k] = g * buf.anchor[k];
        }
        tables.add(None, row, &buf.delta);
    }
    tables.add(Some(anchor.kind), anchor.row, &buf.anchor_grad);
}

/// Counters reported by [`train`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainStats {
    pub word_context_updates: u64,
    pub word_identity_updates: u64,
    /// Negatives abandoned after repeatedly colliding with the positive.
    pub dropped_negatives: u64,
}

impl std::ops::AddAssign for TrainStats {
    fn add_assign(&mut self, rhs: Self) {
        self.word_context_updates += rhs.word_context_updates;
        self.word_identity_updates += rhs.word_identity_updates;
        self.dropped_negatives += rhs.dropped_negatives;
    }
}

/// Seeded model with sense and context rows uniform in `[-0.5/d, 0.5/d]`
/// and zero identity rows.
pub fn initialize(net: &HeterogeneousNetwork, dim: usize, seed: u64) -> EmbeddingModel {
    let mut model = EmbeddingModel::for_network(net, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let half = 0.5 / dim as f64;
    for m in [&mut model.sense_vectors, &mut model.context_vectors] {
        for v in m.as_mut_slice() {
            *v = rng.gen_range(-half..half);
        }
    }
    model
}

struct Samplers<'a> {
    word_context: &'a BipartiteNetwork,
    word_identity: &'a BipartiteNetwork,
    wc_edges: AliasTable,
    wi_edges: AliasTable,
    noise: AliasTable,
}

fn draw_negatives<R: Rng>(noise: &AliasTable, positive: u32, k: usize, rng: &mut R, out: &mut Vec<u32>) -> u64 {
    out.clear();
    let mut dropped = 0;
    for _ in 0..k {
        let drawn = (0..NEGATIVE_RETRIES)
            .map(|_| noise.sample(rng) as u32)
            .find(|&n| n != positive);
        match drawn {
            Some(n) => out.push(n),
            None => dropped += 1,
        }
    }
    dropped
}

fn run_worker<T: Tables>(
    tables: &mut T,
    samplers: &Samplers<'_>,
    config: &TrainerConfig,
    counter: &AtomicU64,
    mut rng: ChaCha8Rng,
) -> TrainStats {
    let mut buf = Buffers::new(config.dim);
    let mut negatives = Vec::with_capacity(config.negatives);
    let mut stats = TrainStats::default();
    loop {
        let t = counter.fetch_add(1, Ordering::Relaxed);
        if t >= config.samples {
            break;
        }
        let rho = learning_rate(t, config.samples, config.rho0);

        let e = samplers.word_context.edges()[samplers.wc_edges.sample(&mut rng)];
        stats.dropped_negatives += draw_negatives(&samplers.noise, e.source, config.negatives, &mut rng, &mut negatives);
        apply_edge(tables, e.source, Anchor::context(e.target), &negatives, rho, &mut buf);
        stats.word_context_updates += 1;

        let e = samplers.word_identity.edges()[samplers.wi_edges.sample(&mut rng)];
        stats.dropped_negatives += draw_negatives(&samplers.noise, e.source, config.negatives, &mut rng, &mut negatives);
        apply_edge(tables, e.source, Anchor::identity(e.target), &negatives, rho, &mut buf);
        stats.word_identity_updates += 1;
    }
    stats
}

fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + worker as u64);
    rng
}

/// Embeds `net`. With one worker the result is a pure function of the
/// network and the config; with several, workers update shared rows
/// without locks.
pub fn train(net: &HeterogeneousNetwork, config: &TrainerConfig) -> Result<(EmbeddingModel, TrainStats)> {
    config.validate()?;
    if net.word_context.is_empty() {
        return Err(Error::EmptyNetwork("word-context"));
    }
    if net.word_identity.is_empty() {
        return Err(Error::EmptyNetwork("word-identity"));
    }
    let samplers = Samplers {
        word_context: &net.word_context,
        word_identity: &net.word_identity,
        wc_edges: AliasTable::new(&net.word_context.edge_weights())?,
        wi_edges: AliasTable::new(&net.word_identity.edge_weights())?,
        noise: build_noise_table(net.senses.counts())?,
    };
    let mut model = initialize(net, config.dim, config.seed);
    let counter = AtomicU64::new(0);

    let stats = if config.workers == 1 {
        run_worker(&mut PlainTables(&mut model), &samplers, config, &counter, worker_rng(config.seed, 0))
    } else {
        let shared = AtomicTables::from_model(&model);
        let stats = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..config.workers)
                .map(|w| {
                    let (samplers, counter, shared) = (&samplers, &counter, &shared);
                    scope.spawn(move || {
                        run_worker(&mut SharedTables(shared), samplers, config, counter, worker_rng(config.seed, w))
                    })
                })
                .collect();
            let mut total = TrainStats::default();
            for h in handles {
                total += h.join().expect("training worker panicked");
            }
            total
        });
        shared.write_back(&mut model);
        stats
    };
    Ok((model, stats))
}
