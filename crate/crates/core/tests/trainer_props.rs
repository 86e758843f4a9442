#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeMap;

use ise::corpus::{CorpusOptions, LabeledCorpus};
use ise::hetnet::HeterogeneousNetwork;
use ise::model::{Anchor, AnchorKind, EmbeddingModel};
use ise::trainer::{edge_gradient, edge_loss, train, TrainerConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn perturbed(model: &EmbeddingModel, table: Option<AnchorKind>, row: usize, k: usize, h: f64) -> EmbeddingModel {
    let mut m = model.clone();
    let matrix = match table {
        None => &mut m.sense_vectors,
        Some(AnchorKind::Context) => &mut m.context_vectors,
        Some(AnchorKind::Identity) => &mut m.identity_vectors,
    };
    matrix.row_mut(row)[k] += h;
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(
        seed in any::<u64>(),
        dim in prop::sample::select(vec![2usize, 10, 50]),
        k in prop::sample::select(vec![1usize, 5]),
        identity_anchor in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, 8, 3, dim);
        let source = rng.gen_range(0..model.num_senses() as u32);
        let negatives: Vec<u32> = (0..k).map(|_| rng.gen_range(0..model.num_senses() as u32)).collect();
        let anchor = if identity_anchor { Anchor::identity(rng.gen_range(0..3)) } else { Anchor::context(rng.gen_range(0..8)) };
        let grad = edge_gradient(&model, source, anchor, &negatives);
        let h = 1e-5;
        let numeric = |table, row, j| {
            let up = edge_loss(&perturbed(&model, table, row, j, h), source, anchor, &negatives);
            let down = edge_loss(&perturbed(&model, table, row, j, -h), source, anchor, &negatives);
            (up - down) / (2.0 * h)
        };
        let close = |a: f64, n: f64| (a - n).abs() <= 1e-4 * a.abs().max(n.abs()).max(1e-6);
        for (row, g) in &grad.senses {
            for j in 0..dim {
                let n = numeric(None, *row as usize, j);
                prop_assert!(close(g[j], n), "sense {row}[{j}]: {} vs {n}", g[j]);
            }
        }
        for j in 0..dim {
            let n = numeric(Some(anchor.kind), anchor.row as usize, j);
            prop_assert!(close(grad.anchor[j], n), "anchor[{j}]: {} vs {n}", grad.anchor[j]);
        }
    }
}

#[test]
fn full_batch_loss_is_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut model = common::random_model(&mut rng, 6, 2, 8);
    let edges: Vec<(u32, Anchor, Vec<u32>)> = (0..10)
        .map(|e| {
            let anchor = if e % 2 == 0 { Anchor::context(rng.gen_range(0..6)) } else { Anchor::identity(rng.gen_range(0..2)) };
            let negs = (0..3).map(|_| rng.gen_range(0..12)).collect();
            (rng.gen_range(0..12), anchor, negs)
        })
        .collect();
    let total = |m: &EmbeddingModel| edges.iter().map(|(s, a, n)| edge_loss(m, *s, *a, n)).sum::<f64>();
    let rho = 0.01;
    let mut prev = total(&model);
    for _ in 0..100 {
        let grads: Vec<_> = edges.iter().map(|(s, a, n)| (edge_gradient(&model, *s, *a, n), *a)).collect();
        for (g, a) in grads {
            for (row, v) in g.senses {
                for (x, d) in model.sense_vectors.row_mut(row as usize).iter_mut().zip(v) {
                    *x -= rho * d;
                }
            }
            let table = match a.kind {
                AnchorKind::Context => &mut model.context_vectors,
                AnchorKind::Identity => &mut model.identity_vectors,
            };
            for (x, d) in table.row_mut(a.row as usize).iter_mut().zip(&g.anchor) {
                *x -= rho * d;
            }
        }
        let now = total(&model);
        assert!(now <= prev + 1e-12, "{now} > {prev}");
        prev = now;
    }
}

#[test]
fn training_stays_finite_and_balanced() {
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = common::random_corpus(&mut rng, 30, 3, 20, 40);
        let net = HeterogeneousNetwork::build(&corpus, 3).unwrap();
        let config = TrainerConfig {
            dim: 16,
            samples: 50_000,
            rho0: 0.5,
            seed,
            ..Default::default()
        };
        let (model, stats) = train(&net, &config).unwrap();
        assert!(model.all_finite());
        assert_eq!(stats.word_context_updates, 50_000);
        assert_eq!(stats.word_identity_updates, 50_000);
    }
}

#[test]
fn baseline_mode_is_a_plain_word_context_graph() {
    let text = "a b c a d\nb d d a c e\ne a b\n";
    let opts = CorpusOptions { min_count: 1, ..Default::default() };
    let corpus = LabeledCorpus::parse(text, false, &opts).unwrap().with_single_identity();
    let window = 2;
    let net = HeterogeneousNetwork::build(&corpus, window).unwrap();
    let mut brute: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for doc in &corpus.docs {
        for p in 0..doc.words.len() {
            for q in 0..doc.words.len() {
                if p != q && p.abs_diff(q) <= window {
                    *brute.entry((doc.words[p], doc.words[q])).or_default() += 1.0;
                }
            }
        }
    }
    let got: BTreeMap<(u32, u32), f64> = net
        .word_context
        .edges()
        .iter()
        .map(|e| ((net.senses.sense(e.source).word, e.target), e.weight))
        .collect();
    assert_eq!(got, brute);
    for e in net.word_identity.edges() {
        assert_eq!(e.target, 0);
        assert_eq!(e.weight, corpus.vocab.freq(net.senses.sense(e.source).word) as f64);
    }
}
