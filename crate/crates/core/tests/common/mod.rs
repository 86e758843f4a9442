#![allow(dead_code)]

pub mod synthetic;

use ise::corpus::{Document, IdentityKind, LabeledCorpus, Vocabulary};
use ise::hetnet::SenseRegistry;
use ise::model::{EmbeddingModel, Matrix};
use rand::Rng;

/// Random identity-labeled corpus over `vocab` words and `identities`
/// identities. Every word occurs at least once.
pub fn random_corpus<R: Rng>(rng: &mut R, vocab: usize, identities: u32, docs: usize, max_len: usize) -> LabeledCorpus {
    let mut documents: Vec<Document> = (0..docs)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            let words: Vec<u32> = (0..len).map(|_| rng.gen_range(0..vocab as u32)).collect();
            let mut d = Document::new(words, Some(rng.gen_range(0..2)));
            d.identities = (0..d.words.len()).map(|_| rng.gen_range(0..identities)).collect();
            d
        })
        .collect();
    let mut extra = Document::new((0..vocab as u32).collect(), Some(0));
    extra.identities = (0..vocab).map(|_| rng.gen_range(0..identities)).collect();
    documents.push(extra);
    let mut freq = vec![0u64; vocab];
    for d in &documents {
        for &w in &d.words {
            freq[w as usize] += 1;
        }
    }
    LabeledCorpus {
        vocab: Vocabulary::from_parts((0..vocab).map(|i| format!("w{i}")).collect(), freq),
        docs: documents,
        classes: vec!["a".into(), "b".into()],
        identity_kind: Some(IdentityKind::Category),
        num_identities: identities,
    }
}

/// Model with `words` words, each having senses for identities
/// `0..senses_per_word`, and entries uniform in [-1, 1].
pub fn random_model<R: Rng>(rng: &mut R, words: usize, senses_per_word: u32, dim: usize) -> EmbeddingModel {
    let pairs = (0..words as u32)
        .flat_map(|w| (0..senses_per_word).map(move |i| ((w, i), 1 + (w as u64 + i as u64) % 7)))
        .collect();
    let senses = SenseRegistry::from_counts(words, pairs);
    let mut fill = |rows: usize| {
        Matrix::from_vec(rows, dim, (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    };
    let s = fill(senses.len());
    let c = fill(words);
    let i = fill(senses_per_word as usize);
    EmbeddingModel::from_parts((0..words).map(|i| format!("w{i}")).collect(), senses, senses_per_word, s, c, i).unwrap()
}
