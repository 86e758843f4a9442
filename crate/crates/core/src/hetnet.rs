//! The heterogeneous word network: a word-context bipartite network and a
//! word-identity bipartite network sharing one set of sense nodes.
//!
//! A sense node is an observed `(word, identity)` pair. Context nodes are
//! plain vocabulary words (identities ignored); identity nodes are the
//! identity ids themselves.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::corpus::{CorpusMeta, IdentityId, IdentityKind, LabeledCorpus, Vocabulary, WordId, META_FILE, VOCAB_FILE};
use crate::error::{Error, Result};

mod alias;

pub use alias::{alias_slots, build_noise_table, AliasTable, NOISE_EXPONENT};

/// A `(word, identity)` pair and its row in the sense embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SenseId {
    pub word: WordId,
    pub identity: IdentityId,
    pub row: u32,
}

/// Dense row assignment for every observed sense, ordered by
/// `(word, identity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseRegistry {
    pairs: Vec<(WordId, IdentityId)>,
    counts: Vec<u64>,
    by_word: Vec<Vec<u32>>,
    lookup: HashMap<(WordId, IdentityId), u32>,
}

impl SenseRegistry {
    /// Collects every `(word, identity)` pair seen in an identity-labeled
    /// corpus along with its token count.
    pub fn from_corpus(corpus: &LabeledCorpus) -> Result<Self> {
        require_identities(corpus)?;
        let mut counts: HashMap<(WordId, IdentityId), u64> = HashMap::new();
        for doc in &corpus.docs {
            for (&w, &i) in doc.words.iter().zip(&doc.identities) {
                *counts.entry((w, i)).or_default() += 1;
            }
        }
        let mut pairs: Vec<((WordId, IdentityId), u64)> = counts.into_iter().collect();
        pairs.sort_unstable_by_key(|&(key, _)| key);
        Ok(Self::from_counts(corpus.vocab.len(), pairs))
    }

    /// `pairs` must be sorted by key and free of duplicates.
    pub fn from_counts(vocab_len: usize, pairs: Vec<((WordId, IdentityId), u64)>) -> Self {
        let mut by_word = vec![Vec::new(); vocab_len];
        let mut lookup = HashMap::with_capacity(pairs.len());
        for (row, &((w, i), _)) in pairs.iter().enumerate() {
            by_word[w as usize].push(row as u32);
            lookup.insert((w, i), row as u32);
        }
        Self {
            pairs: pairs.iter().map(|&(k, _)| k).collect(),
            counts: pairs.iter().map(|&(_, c)| c).collect(),
            by_word,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn row(&self, word: WordId, identity: IdentityId) -> Option<u32> {
        self.lookup.get(&(word, identity)).copied()
    }

    pub fn sense(&self, row: u32) -> SenseId {
        let (word, identity) = self.pairs[row as usize];
        SenseId { word, identity, row }
    }

    /// Rows of all senses of `word`, in ascending identity order.
    pub fn senses_of(&self, word: WordId) -> &[u32] {
        self.by_word.get(word as usize).map_or(&[], Vec::as_slice)
    }

    /// Number of tokens of this sense in the training corpus.
    pub fn count(&self, row: u32) -> u64 {
        self.counts[row as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn vocab_len(&self) -> usize {
        self.by_word.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = SenseId> + '_ {
        (0..self.len() as u32).map(|r| self.sense(r))
    }
}

pub(crate) fn require_identities(corpus: &LabeledCorpus) -> Result<()> {
    if corpus.is_identity_labeled() {
        Ok(())
    } else {
        Err(Error::MissingIdentities)
    }
}

/// Node sets a bipartite network can connect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSide {
    Sense,
    Context,
    Identity,
}

impl fmt::Display for NodeSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeSide::Sense => "sense",
            NodeSide::Context => "context",
            NodeSide::Identity => "identity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: u32,
    pub target: u32,
    pub weight: f64,
}

/// Weighted edge list between two node sets, with per-node degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteNetwork {
    source_side: NodeSide,
    target_side: NodeSide,
    edges: Vec<Edge>,
    source_degrees: Vec<f64>,
    target_degrees: Vec<f64>,
}

impl BipartiteNetwork {
    /// Validates and indexes an aggregated edge list.
    pub fn from_edges(
        source_side: NodeSide,
        target_side: NodeSide,
        num_sources: usize,
        num_targets: usize,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        let mut source_degrees = vec![0.0; num_sources];
        let mut target_degrees = vec![0.0; num_targets];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidWeights(format!(
                    "edge ({}, {}) has weight {}",
                    e.source, e.target, e.weight
                )));
            }
            if e.source as usize >= num_sources || e.target as usize >= num_targets {
                return Err(Error::InvalidParameter(format!(
                    "edge ({}, {}) outside {num_sources}x{num_targets} network",
                    e.source, e.target
                )));
            }
            if !seen.insert((e.source, e.target)) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge ({}, {})",
                    e.source, e.target
                )));
            }
            source_degrees[e.source as usize] += e.weight;
            target_degrees[e.target as usize] += e.weight;
        }
        Ok(Self {
            source_side,
            target_side,
            edges,
            source_degrees,
            target_degrees,
        })
    }

    fn from_counts(
        source_side: NodeSide,
        target_side: NodeSide,
        num_sources: usize,
        num_targets: usize,
        counts: HashMap<(u32, u32), u64>,
    ) -> Result<Self> {
        let mut edges: Vec<Edge> = counts
            .into_iter()
            .map(|((source, target), c)| Edge {
                source,
                target,
                weight: c as f64,
            })
            .collect();
        edges.sort_unstable_by_key(|e| (e.source, e.target));
        Self::from_edges(source_side, target_side, num_sources, num_targets, edges)
    }

    pub fn source_side(&self) -> NodeSide {
        self.source_side
    }

    pub fn target_side(&self) -> NodeSide {
        self.target_side
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn source_degrees(&self) -> &[f64] {
        &self.source_degrees
    }

    /// For the word-identity network these are the identity prestiges.
    pub fn target_degrees(&self) -> &[f64] {
        &self.target_degrees
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn edge_weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }
}

/// Counts, for every token with sense `s` and every other token within
/// `window` positions in the same document, one `(s, context word)`
/// co-occurrence.
pub fn build_word_context_network(
    corpus: &LabeledCorpus,
    senses: &SenseRegistry,
    window: usize,
) -> Result<BipartiteNetwork> {
    require_identities(corpus)?;
    if window == 0 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    for doc in &corpus.docs {
        let n = doc.words.len();
        for p in 0..n {
            let sense = senses
                .row(doc.words[p], doc.identities[p])
                .ok_or_else(|| Error::UnknownSense(format!("{}#{}", doc.words[p], doc.identities[p])))?;
            let lo = p.saturating_sub(window);
            let hi = (p + window).min(n - 1);
            for q in (lo..=hi).filter(|&q| q != p) {
                *counts.entry((sense, doc.words[q])).or_default() += 1;
            }
        }
    }
    BipartiteNetwork::from_counts(NodeSide::Sense, NodeSide::Context, senses.len(), corpus.vocab.len(), counts)
}

/// Links every sense `(w, i)` to identity `i` with weight equal to the
/// number of tokens of `w` labeled `i`.
pub fn build_word_identity_network(corpus: &LabeledCorpus, senses: &SenseRegistry) -> Result<BipartiteNetwork> {
    require_identities(corpus)?;
    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    for doc in &corpus.docs {
        for (&w, &i) in doc.words.iter().zip(&doc.identities) {
            let sense = senses
                .row(w, i)
                .ok_or_else(|| Error::UnknownSense(format!("{w}#{i}")))?;
            *counts.entry((sense, i)).or_default() += 1;
        }
    }
    BipartiteNetwork::from_counts(
        NodeSide::Sense,
        NodeSide::Identity,
        senses.len(),
        corpus.num_identities as usize,
        counts,
    )
}

pub const WORD_CONTEXT_FILE: &str = "word_context.tsv";
pub const WORD_IDENTITY_FILE: &str = "word_identity.tsv";

/// Both networks together with the registries needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousNetwork {
    pub vocab: Vocabulary,
    pub senses: SenseRegistry,
    pub identity_kind: IdentityKind,
    pub num_identities: u32,
    pub classes: Vec<String>,
    pub word_context: BipartiteNetwork,
    pub word_identity: BipartiteNetwork,
}

impl HeterogeneousNetwork {
    pub fn build(corpus: &LabeledCorpus, window: usize) -> Result<Self> {
        let senses = SenseRegistry::from_corpus(corpus)?;
        let word_context = build_word_context_network(corpus, &senses, window)?;
        let word_identity = build_word_identity_network(corpus, &senses)?;
        Ok(Self {
            vocab: corpus.vocab.clone(),
            senses,
            identity_kind: corpus.identity_kind.ok_or(Error::MissingIdentities)?,
            num_identities: corpus.num_identities,
            classes: corpus.classes.clone(),
            word_context,
            word_identity,
        })
    }

    /// Renders a sense row as `word#identity`.
    pub fn sense_name(&self, row: u32) -> String {
        let s = self.senses.sense(row);
        format!("{}#{}", self.vocab.token(s.word), s.identity)
    }

    /// Writes the vocabulary, metadata and both networks as TSV into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.vocab.save(dir.join(VOCAB_FILE))?;
        CorpusMeta {
            identity_kind: Some(self.identity_kind),
            num_identities: self.num_identities,
            classes: self.classes.clone(),
        }
        .save(dir.join(META_FILE))?;
        self.write_network(&dir.join(WORD_CONTEXT_FILE), &self.word_context, |w| {
            self.vocab.token(w).to_string()
        })?;
        self.write_network(&dir.join(WORD_IDENTITY_FILE), &self.word_identity, |i| i.to_string())
    }

    fn write_network(&self, path: &Path, net: &BipartiteNetwork, target: impl Fn(u32) -> String) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for e in net.edges() {
            // `{}` on f64 prints the shortest string that parses back exactly
            writeln!(out, "{}\t{}\t{}", self.sense_name(e.source), target(e.target), e.weight)
                .map_err(|err| Error::io(path, err))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reloads a directory written by [`HeterogeneousNetwork::save`]. The
    /// sense registry is recovered from the word-identity edges.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let vocab = Vocabulary::load(dir.join(VOCAB_FILE))?;
        let meta_path = dir.join(META_FILE);
        let meta = CorpusMeta::load(&meta_path)?;
        let identity_kind = meta
            .identity_kind
            .ok_or_else(|| Error::format(&meta_path, 0, "network metadata lacks an identity kind"))?;

        let wi_path = dir.join(WORD_IDENTITY_FILE);
        let wi_rows = read_tsv(&wi_path)?;
        let mut pairs = Vec::with_capacity(wi_rows.len());
        for (line, source, target, weight) in &wi_rows {
            let (word, identity) = parse_sense(&vocab, source).map_err(|m| Error::format(&wi_path, *line, m))?;
            let target: IdentityId = target
                .parse()
                .map_err(|_| Error::format(&wi_path, *line, format!("bad identity `{target}`")))?;
            if target != identity || target >= meta.num_identities {
                return Err(Error::format(&wi_path, *line, "sense linked to the wrong identity"));
            }
            if weight.fract() != 0.0 || *weight <= 0.0 {
                return Err(Error::format(&wi_path, *line, "word-identity weight must be a positive count"));
            }
            pairs.push(((word, identity), *weight as u64));
        }
        let mut sorted = pairs.clone();
        sorted.sort_unstable_by_key(|&(k, _)| k);
        sorted.dedup_by_key(|&mut (k, _)| k);
        if sorted.len() != pairs.len() {
            return Err(Error::format(&wi_path, 0, "duplicate sense rows"));
        }
        let senses = SenseRegistry::from_counts(vocab.len(), sorted);

        let wi_edges = wi_rows
            .iter()
            .zip(&pairs)
            .map(|((_, _, _, weight), &((w, i), _))| Edge {
                source: senses.row(w, i).expect("registered above"),
                target: i,
                weight: *weight,
            })
            .collect();
        let word_identity = BipartiteNetwork::from_edges(
            NodeSide::Sense,
            NodeSide::Identity,
            senses.len(),
            meta.num_identities as usize,
            wi_edges,
        )?;

        let wc_path = dir.join(WORD_CONTEXT_FILE);
        let mut wc_edges = Vec::new();
        for (line, source, target, weight) in read_tsv(&wc_path)? {
            let (word, identity) = parse_sense(&vocab, &source).map_err(|m| Error::format(&wc_path, line, m))?;
            let source = senses
                .row(word, identity)
                .ok_or_else(|| Error::format(&wc_path, line, format!("sense `{source}` missing from word-identity network")))?;
            let target = vocab
                .id(&target)
                .ok_or_else(|| Error::format(&wc_path, line, format!("unknown context word `{target}`")))?;
            wc_edges.push(Edge { source, target, weight });
        }
        let word_context =
            BipartiteNetwork::from_edges(NodeSide::Sense, NodeSide::Context, senses.len(), vocab.len(), wc_edges)?;

        Ok(Self {
            vocab,
            senses,
            identity_kind,
            num_identities: meta.num_identities,
            classes: meta.classes,
            word_context,
            word_identity,
        })
    }
}

/// Splits `word#identity` and resolves the word against `vocab`.
pub fn parse_sense(vocab: &Vocabulary, text: &str) -> std::result::Result<(WordId, IdentityId), String> {
    let (word, identity) = text
        .rsplit_once('#')
        .ok_or_else(|| format!("sense `{text}` is not of the form word#identity"))?;
    let identity = identity
        .parse()
        .map_err(|_| format!("bad identity in sense `{text}`"))?;
    let word = vocab.id(word).ok_or_else(|| format!("unknown word `{word}`"))?;
    Ok((word, identity))
}

fn read_tsv(path: &Path) -> Result<Vec<(usize, String, String, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split('\t');
        let (Some(a), Some(b), Some(w), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
            return Err(Error::format(path, n + 1, "expected source<TAB>target<TAB>weight"));
        };
        let weight: f64 = w
            .parse()
            .map_err(|_| Error::format(path, n + 1, format!("bad weight `{w}`")))?;
        rows.push((n + 1, a.to_string(), b.to_string(), weight));
    }
    Ok(rows)
}
