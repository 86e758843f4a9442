//! Token identity assignment.
//!
//! Training corpora are labeled with topics (collapsed Gibbs sampling for
//! LDA), sentiments (ratio-selected polar words take their document's
//! polarity) or categories (every token takes its document's class).
//! Tokens of unseen documents are labeled from a trained model by picking
//! the sense that best matches the mean context vector of the rest of the
//! document.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{IdentityId, IdentityKind, LabeledCorpus, WordId};
use crate::error::{Error, Result};
use crate::model::{dot, EmbeddingModel};

pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_SWEEPS: usize = 200;
pub const DEFAULT_SENTIMENT_THRESHOLD: f64 = 10.0;

pub const NEGATIVE: IdentityId = 0;
pub const POSITIVE: IdentityId = 1;
pub const NEUTRAL: IdentityId = 2;

/// Default symmetric document-topic prior, `50 / K`.
pub fn default_alpha(topics: usize) -> f64 {
    50.0 / topics as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
}

impl LdaParams {
    pub fn new(topics: usize) -> Self {
        Self {
            topics,
            alpha: default_alpha(topics.max(1)),
            beta: DEFAULT_BETA,
            sweeps: DEFAULT_SWEEPS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::InvalidParameter("topic count must be at least 1".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidParameter("sweep count must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidParameter("alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler state.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModelState {
    topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    assignments: Vec<Vec<u32>>,
    /// `[word * topics + topic]`
    word_topic: Vec<u32>,
    /// `[doc * topics + topic]`
    doc_topic: Vec<u32>,
    topic_totals: Vec<u32>,
}

impl TopicModelState {
    /// Assigns every token a uniformly random topic.
    pub fn initialize<R: Rng>(corpus: &LabeledCorpus, params: &LdaParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        if corpus.num_tokens() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let k = params.topics;
        let mut state = Self {
            topics: k,
            vocab_size: corpus.vocab.len(),
            alpha: params.alpha,
            beta: params.beta,
            assignments: Vec::with_capacity(corpus.docs.len()),
            word_topic: vec![0; corpus.vocab.len() * k],
            doc_topic: vec![0; corpus.docs.len() * k],
            topic_totals: vec![0; k],
        };
        for (d, doc) in corpus.docs.iter().enumerate() {
            let z: Vec<u32> = doc.words.iter().map(|_| rng.gen_range(0..k as u32)).collect();
            for (&w, &t) in doc.words.iter().zip(&z) {
                state.word_topic[w as usize * k + t as usize] += 1;
                state.doc_topic[d * k + t as usize] += 1;
                state.topic_totals[t as usize] += 1;
            }
            state.assignments.push(z);
        }
        Ok(state)
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn word_topic_count(&self, word: WordId, topic: usize) -> u32 {
        self.word_topic[word as usize * self.topics + topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.topics + topic]
    }

    pub fn topic_count(&self, topic: usize) -> u32 {
        self.topic_totals[topic]
    }

    /// Full conditional of the topic of token `position` in `doc`, with the
    /// token's own assignment excluded from the counts:
    /// `p(k) ∝ (n_wk + β) / (n_k + Vβ) · (n_dk + α)`.
    pub fn conditional(&self, corpus: &LabeledCorpus, doc: usize, position: usize) -> Vec<f64> {
        let w = corpus.docs[doc].words[position] as usize;
        let current = self.assignments[doc][position] as usize;
        let v_beta = self.vocab_size as f64 * self.beta;
        let mut p: Vec<f64> = (0..self.topics)
            .map(|k| {
                let own = u32::from(k == current);
                let n_wk = (self.word_topic[w * self.topics + k] - own) as f64;
                let n_k = (self.topic_totals[k] - own) as f64;
                let n_dk = (self.doc_topic[doc * self.topics + k] - own) as f64;
                (n_wk + self.beta) / (n_k + v_beta) * (n_dk + self.alpha)
            })
            .collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        p
    }

    /// Resamples every token once, in corpus order.
    pub fn sweep<R: Rng>(&mut self, corpus: &LabeledCorpus, rng: &mut R) {
        let k = self.topics;
        let v_beta = self.vocab_size as f64 * self.beta;
        let mut cumulative = vec![0.0; k];
        for (d, doc) in corpus.docs.iter().enumerate() {
            for (pos, &w) in doc.words.iter().enumerate() {
                let w = w as usize;
                let old = self.assignments[d][pos] as usize;
                self.word_topic[w * k + old] -= 1;
                self.doc_topic[d * k + old] -= 1;
                self.topic_totals[old] -= 1;

                let word_row = &self.word_topic[w * k..(w + 1) * k];
                let doc_row = &self.doc_topic[d * k..(d + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    total += (word_row[t] as f64 + self.beta) / (self.topic_totals[t] as f64 + v_beta)
                        * (doc_row[t] as f64 + self.alpha);
                    cumulative[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.word_topic[w * k + new] += 1;
                self.doc_topic[d * k + new] += 1;
                self.topic_totals[new] += 1;
                self.assignments[d][pos] = new as u32;
            }
        }
    }

    /// Smoothed topic proportions of training document `doc`.
    pub fn doc_topic_proportions(&self, doc: usize) -> Vec<f64> {
        let row = &self.doc_topic[doc * self.topics..(doc + 1) * self.topics];
        let n: u32 = row.iter().sum();
        let denom = n as f64 + self.topics as f64 * self.alpha;
        row.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
    }

    /// Topic proportions of an unseen document, estimated by Gibbs sampling
    /// its assignments with the word-topic counts held fixed.
    pub fn infer_proportions<R: Rng>(&self, words: &[WordId], sweeps: usize, rng: &mut R) -> Vec<f64> {
        let k = self.topics;
        let v_beta = self.vocab_size as f64 * self.beta;
        let words: Vec<usize> = words
            .iter()
            .map(|&w| w as usize)
            .filter(|&w| w < self.vocab_size)
            .collect();
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.gen_range(0..k);
                counts[t] += 1;
                t
            })
            .collect();
        let mut cumulative = vec![0.0; k];
        for _ in 0..sweeps {
            for (pos, &w) in words.iter().enumerate() {
                counts[z[pos]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (self.word_topic[w * k + t] as f64 + self.beta) / (self.topic_totals[t] as f64 + v_beta)
                        * (counts[t] as f64 + self.alpha);
                    cumulative[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                z[pos] = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
                counts[z[pos]] += 1;
            }
        }
        let denom = words.len() as f64 + k as f64 * self.alpha;
        counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
    }
}

/// Runs the Gibbs sampler for `params.sweeps` sweeps, calling `observe`
/// after each one.
pub fn run_lda(
    corpus: &LabeledCorpus,
    params: &LdaParams,
    seed: u64,
    mut observe: impl FnMut(usize, &TopicModelState),
) -> Result<TopicModelState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = TopicModelState::initialize(corpus, params, &mut rng)?;
    for s in 0..params.sweeps {
        state.sweep(corpus, &mut rng);
        observe(s, &state);
    }
    Ok(state)
}

/// Labels every token with its topic after the final sweep.
pub fn label_topics(corpus: &LabeledCorpus, params: &LdaParams, seed: u64) -> Result<LabeledCorpus> {
    let state = run_lda(corpus, params, seed, |_, _| {})?;
    Ok(apply_topics(corpus, &state))
}

pub fn apply_topics(corpus: &LabeledCorpus, state: &TopicModelState) -> LabeledCorpus {
    let mut out = corpus.clone();
    for (doc, z) in out.docs.iter_mut().zip(state.assignments()) {
        doc.identities = z.clone();
    }
    out.identity_kind = Some(IdentityKind::Topic);
    out.num_identities = state.topics() as u32;
    out
}

/// Words whose class-conditional probability ratio passes the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    pub selected: BTreeMap<WordId, IdentityId>,
    pub threshold: f64,
}

impl SentimentLexicon {
    pub fn polarity(&self, word: WordId) -> Option<IdentityId> {
        self.selected.get(&word).copied()
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Writes `word<TAB>polarity` lines with polarity `pos` or `neg`.
    pub fn save(&self, path: impl AsRef<Path>, corpus: &LabeledCorpus) -> Result<()> {
        let path = path.as_ref();
        let mut text = format!("# threshold={}\n", self.threshold);
        for (&w, &p) in &self.selected {
            let polarity = if p == POSITIVE { "pos" } else { "neg" };
            text.push_str(&format!("{}\t{polarity}\n", corpus.vocab.token(w)));
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Selects polar words by the smoothed ratio
/// `p̂(w|pos) / p̂(w|neg)` (or its inverse) `≥ threshold`, where
/// `p̂(w|c) = (count(w, c) + 1) / (N_c + |V|)`. Class 0 is negative and
/// class 1 positive.
pub fn select_sentiment_words(corpus: &LabeledCorpus, threshold: f64) -> Result<SentimentLexicon> {
    if threshold.is_nan() || threshold <= 1.0 {
        return Err(Error::InvalidParameter("sentiment threshold must exceed 1".into()));
    }
    let labels = corpus.labels()?;
    match corpus.num_classes() {
        0 | 1 => return Err(Error::SingleClass),
        2 => {}
        n => return Err(Error::NotBinary(n)),
    }
    if !labels.contains(&NEGATIVE) || !labels.contains(&POSITIVE) {
        return Err(Error::SingleClass);
    }
    let v = corpus.vocab.len();
    let mut counts = vec![[0u64; 2]; v];
    let mut totals = [0u64; 2];
    for (doc, &label) in corpus.docs.iter().zip(&labels) {
        for &w in &doc.words {
            counts[w as usize][label as usize] += 1;
        }
        totals[label as usize] += doc.words.len() as u64;
    }
    let mut selected = BTreeMap::new();
    for (w, c) in counts.iter().enumerate() {
        let p_neg = (c[0] + 1) as f64 / (totals[0] + v as u64) as f64;
        let p_pos = (c[1] + 1) as f64 / (totals[1] + v as u64) as f64;
        if p_pos / p_neg >= threshold {
            selected.insert(w as WordId, POSITIVE);
        } else if p_neg / p_pos >= threshold {
            selected.insert(w as WordId, NEGATIVE);
        }
    }
    Ok(SentimentLexicon { selected, threshold })
}

/// Lexicon words take their document's polarity; every other token gets
/// the shared neutral identity.
pub fn label_sentiment(corpus: &LabeledCorpus, lexicon: &SentimentLexicon) -> Result<LabeledCorpus> {
    let labels = corpus.labels()?;
    let mut out = corpus.clone();
    for (doc, label) in out.docs.iter_mut().zip(labels) {
        doc.identities = doc
            .words
            .iter()
            .map(|&w| if lexicon.polarity(w).is_some() { label } else { NEUTRAL })
            .collect();
    }
    out.identity_kind = Some(IdentityKind::Sentiment);
    out.num_identities = 3;
    Ok(out)
}

/// Every token takes its document's class id.
pub fn label_category(corpus: &LabeledCorpus) -> Result<LabeledCorpus> {
    let labels = corpus.labels()?;
    let mut out = corpus.clone();
    for (doc, label) in out.docs.iter_mut().zip(labels) {
        doc.identities = vec![label; doc.words.len()];
    }
    out.identity_kind = Some(IdentityKind::Category);
    out.num_identities = corpus.num_classes() as u32;
    Ok(out)
}

/// Picks the sense of `words[target]` whose vector has the largest dot
/// product with the mean context vector of every other position. Ties go
/// to the lowest identity. Without other words, the most frequent sense
/// wins.
pub fn infer_identity(model: &EmbeddingModel, words: &[WordId], target: usize) -> Result<IdentityId> {
    let word = *words
        .get(target)
        .ok_or_else(|| Error::InvalidParameter(format!("target {target} outside document")))?;
    let mut mean = vec![0.0; model.dim()];
    let mut others = 0usize;
    for (i, &w) in words.iter().enumerate() {
        if i != target && (w as usize) < model.words.len() {
            for (m, c) in mean.iter_mut().zip(model.context(w)) {
                *m += c;
            }
            others += 1;
        }
    }
    mean.iter_mut().for_each(|m| *m /= others.max(1) as f64);
    pick_sense(model, word, (others > 0).then_some(mean.as_slice()))
}

fn pick_sense(model: &EmbeddingModel, word: WordId, context: Option<&[f64]>) -> Result<IdentityId> {
    let rows = model.senses.senses_of(word);
    if rows.is_empty() {
        let name = model
            .words
            .get(word as usize)
            .cloned()
            .unwrap_or_else(|| format!("<id {word}>"));
        return Err(Error::UnknownWord(name));
    }
    // rows are in ascending identity order, so strict comparison keeps the
    // lowest identity on ties
    let score = |row: u32| match context {
        Some(c) => dot(model.sense(row), c),
        None => model.senses.count(row) as f64,
    };
    let mut best = rows[0];
    let mut best_score = score(best);
    for &row in &rows[1..] {
        let s = score(row);
        if s > best_score {
            best = row;
            best_score = s;
        }
    }
    Ok(model.senses.sense(best).identity)
}

/// Identities for every token of a document; `None` for words without a
/// sense in the model.
pub fn infer_document_identities(model: &EmbeddingModel, words: &[WordId]) -> Vec<Option<IdentityId>> {
    let dim = model.dim();
    let known: Vec<bool> = words.iter().map(|&w| (w as usize) < model.words.len()).collect();
    let mut sum = vec![0.0; dim];
    let mut n_known = 0usize;
    for (&w, &k) in words.iter().zip(&known) {
        if k {
            for (s, c) in sum.iter_mut().zip(model.context(w)) {
                *s += c;
            }
            n_known += 1;
        }
    }
    let mut mean = vec![0.0; dim];
    words
        .iter()
        .zip(&known)
        .map(|(&w, &k)| {
            if !k {
                return None;
            }
            let others = n_known - 1;
            let context = if others > 0 {
                for ((m, s), c) in mean.iter_mut().zip(&sum).zip(model.context(w)) {
                    *m = (s - c) / others as f64;
                }
                Some(mean.as_slice())
            } else {
                None
            };
            pick_sense(model, w, context).ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusOptions;
    use crate::hetnet::SenseRegistry;
    use crate::model::Matrix;

    fn opts() -> CorpusOptions {
        CorpusOptions { min_count: 1, ..Default::default() }
    }

    fn random_corpus(tokens: usize, vocab: usize, seed: u64) -> LabeledCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut text = String::new();
        let mut written = 0;
        while written < tokens {
            let len = rng.gen_range(1..30).min(tokens - written);
            let line: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
            written += len;
        }
        LabeledCorpus::parse(&text, false, &opts()).unwrap()
    }

    #[test]
    fn single_topic_forces_zero() {
        let c = random_corpus(200, 20, 1);
        let labeled = label_topics(&c, &LdaParams { sweeps: 3, ..LdaParams::new(1) }, 5).unwrap();
        assert!(labeled.docs.iter().all(|d| d.identities.iter().all(|&i| i == 0)));
        assert_eq!(labeled.num_identities, 1);
        assert_eq!(labeled.identity_kind, Some(IdentityKind::Topic));
    }

    #[test]
    fn counts_are_conserved_every_sweep() {
        let c = random_corpus(500, 40, 2);
        let params = LdaParams { sweeps: 20, ..LdaParams::new(7) };
        run_lda(&c, &params, 9, |_, state| {
            for w in 0..c.vocab.len() as u32 {
                let total: u32 = (0..7).map(|k| state.word_topic_count(w, k)).sum();
                assert_eq!(total as u64, c.vocab.freq(w));
            }
            for k in 0..7 {
                let by_word: u32 = (0..c.vocab.len() as u32).map(|w| state.word_topic_count(w, k)).sum();
                assert_eq!(by_word, state.topic_count(k));
            }
            assert!(state.assignments().iter().flatten().all(|&z| z < 7));
        })
        .unwrap();
    }

    #[test]
    fn rejects_bad_lda_input() {
        let c = random_corpus(50, 5, 3);
        assert!(label_topics(&c, &LdaParams::new(0), 1).is_err());
        assert!(label_topics(&c, &LdaParams { sweeps: 0, ..LdaParams::new(2) }, 1).is_err());
        let empty = c.subset(&[]);
        assert!(matches!(label_topics(&empty, &LdaParams::new(2), 1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn conditional_single_topic_and_uniform() {
        let c = random_corpus(100, 10, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let state = TopicModelState::initialize(&c, &LdaParams::new(1), &mut rng).unwrap();
        assert_eq!(state.conditional(&c, 0, 0), vec![1.0]);

        // after excluding the target (topic 0) every topic holds one token
        let c = LabeledCorpus::parse("a a a a\n", false, &opts()).unwrap();
        let mut state = TopicModelState::initialize(&c, &LdaParams::new(3), &mut rng).unwrap();
        state.assignments = vec![vec![0, 0, 1, 2]];
        state.word_topic = vec![2, 1, 1];
        state.doc_topic = vec![2, 1, 1];
        state.topic_totals = vec![2, 1, 1];
        let p = state.conditional(&c, 0, 0);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn conditional_matches_closed_form() {
        let c = random_corpus(120, 12, 6);
        let params = LdaParams { alpha: 0.3, beta: 0.05, sweeps: 2, topics: 4 };
        let state = run_lda(&c, &params, 3, |_, _| {}).unwrap();
        let v = c.vocab.len() as f64;
        for (d, doc) in c.docs.iter().enumerate().take(4) {
            for pos in 0..doc.words.len() {
                let w = doc.words[pos];
                let z = state.assignments()[d][pos] as usize;
                let raw: Vec<f64> = (0..4)
                    .map(|k| {
                        let ex = if k == z { 1.0 } else { 0.0 };
                        let nwk = state.word_topic_count(w, k) as f64 - ex;
                        let nk = state.topic_count(k) as f64 - ex;
                        let ndk = state.doc_topic_count(d, k) as f64 - ex;
                        (nwk + 0.05) / (nk + v * 0.05) * (ndk + 0.3)
                    })
                    .collect();
                let z_sum: f64 = raw.iter().sum();
                let p = state.conditional(&c, d, pos);
                for (a, b) in p.iter().zip(&raw) {
                    assert!((a - b / z_sum).abs() < 1e-14);
                }
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sentiment_ratio_rule() {
        // 9 positive occurrences, none negative, N_pos = N_neg = 100, |V| = 50
        let mut pos = vec!["x".to_string(); 9];
        let mut neg = Vec::new();
        for i in 0..49 {
            neg.push(format!("f{i}"));
        }
        while pos.len() < 100 {
            pos.push(format!("f{}", pos.len() % 49));
        }
        while neg.len() < 100 {
            neg.push(format!("f{}", neg.len() % 49));
        }
        let text = format!("pos\t{}\nneg\t{}\n", pos.join(" "), neg.join(" "));
        let c = LabeledCorpus::parse(&text, true, &opts()).unwrap();
        assert_eq!(c.vocab.len(), 50);
        let lex = select_sentiment_words(&c, 10.0).unwrap();
        let x = c.vocab.id("x").unwrap();
        assert_eq!(lex.polarity(x), Some(POSITIVE));
        assert!(select_sentiment_words(&c, 10.0 + 1e-9).unwrap().polarity(x).is_none());
    }

    #[test]
    fn sentiment_balanced_word_not_selected() {
        let text = "pos\tgood good good good good plain\nneg\tgood good good good plain bad\n";
        let c = LabeledCorpus::parse(text, true, &opts()).unwrap();
        let lex = select_sentiment_words(&c, 10.0).unwrap();
        assert!(lex.polarity(c.vocab.id("good").unwrap()).is_none());
    }

    #[test]
    fn sentiment_needs_two_classes() {
        let c = LabeledCorpus::parse("pos\ta b\npos\tc\n", true, &opts()).unwrap();
        assert!(matches!(select_sentiment_words(&c, 10.0), Err(Error::SingleClass)));
        let c = LabeledCorpus::parse("a\tx\nb\ty\nc\tz\n", true, &opts()).unwrap();
        assert!(matches!(select_sentiment_words(&c, 10.0), Err(Error::NotBinary(3))));
    }

    #[test]
    fn sentiment_labeling_rules() {
        let c = LabeledCorpus::parse("pos\tgood movie\nneg\tgood\nneg\tplain movie\n", true, &opts()).unwrap();
        let good = c.vocab.id("good").unwrap();
        let lex = SentimentLexicon {
            selected: [(good, POSITIVE)].into_iter().collect(),
            threshold: 10.0,
        };
        let out = label_sentiment(&c, &lex).unwrap();
        assert_eq!(out.docs[0].identities, vec![POSITIVE, NEUTRAL]);
        assert_eq!(out.docs[1].identities, vec![NEGATIVE]);
        assert_eq!(out.docs[2].identities, vec![NEUTRAL, NEUTRAL]);
        assert_eq!(out.num_identities, 3);
    }

    #[test]
    fn category_labeling() {
        let c = LabeledCorpus::parse("a\tx y\nd\ty z\nb\tz\nc\tx\n", true, &opts()).unwrap();
        let out = label_category(&c).unwrap();
        assert_eq!(out.docs[1].identities, vec![3, 3]);
        assert_eq!(out.num_identities, 4);
        let two = LabeledCorpus::parse("a\tx y\nb\tx\n", true, &opts()).unwrap();
        let out = label_category(&two).unwrap();
        assert_eq!(out.num_identities, 2);
        let senses = SenseRegistry::from_corpus(&out).unwrap();
        assert_eq!(senses.senses_of(out.vocab.id("x").unwrap()).len(), 2);
        let unlabeled = LabeledCorpus::parse("x y\n", false, &opts()).unwrap();
        assert!(matches!(label_category(&unlabeled), Err(Error::UnlabeledDocument { doc: 0 })));
    }

    fn two_sense_model() -> EmbeddingModel {
        // words: w (two senses), a, b (one sense each)
        let words = vec!["w".to_string(), "a".into(), "b".into()];
        let senses = SenseRegistry::from_counts(3, vec![((0, 0), 5), ((0, 1), 9), ((1, 0), 2), ((2, 1), 2)]);
        let sense_vectors = Matrix::from_vec(4, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 1.0]).unwrap();
        let context_vectors = Matrix::from_vec(3, 2, vec![0.0, 0.0, 0.9, 0.1, 0.1, 0.9]).unwrap();
        let identity_vectors = Matrix::zeros(2, 2);
        EmbeddingModel::from_parts(words, senses, 2, sense_vectors, context_vectors, identity_vectors).unwrap()
    }

    #[test]
    fn infer_argmax_of_dot_products() {
        let m = two_sense_model();
        // context mean (0.9, 0.1) → w#0
        assert_eq!(infer_identity(&m, &[0, 1], 0).unwrap(), 0);
        assert_eq!(infer_identity(&m, &[0, 2], 0).unwrap(), 1);
        // singleton sense regardless of context
        assert_eq!(infer_identity(&m, &[1, 2, 2], 0).unwrap(), 0);
        assert_eq!(infer_identity(&m, &[2, 1, 1], 0).unwrap(), 1);
    }

    #[test]
    fn infer_fallback_and_ties() {
        let mut m = two_sense_model();
        // no other words: most frequent sense (w#1 has count 9)
        assert_eq!(infer_identity(&m, &[0], 0).unwrap(), 1);
        // equal dot products → lowest identity
        m.context_vectors.row_mut(1).copy_from_slice(&[0.5, 0.5]);
        assert_eq!(infer_identity(&m, &[0, 1], 0).unwrap(), 0);
    }

    #[test]
    fn infer_unknown_word() {
        let m = two_sense_model();
        assert!(matches!(infer_identity(&m, &[7, 1], 0), Err(Error::UnknownWord(_))));
        assert!(infer_identity(&m, &[0], 3).is_err());
    }

    #[test]
    fn document_inference_matches_per_token() {
        let m = two_sense_model();
        let doc = [0, 1, 2, 0, 2, 2, 1];
        let all = infer_document_identities(&m, &doc);
        for (i, got) in all.iter().enumerate() {
            assert_eq!(got.unwrap(), infer_identity(&m, &doc, i).unwrap());
        }
    }
}
