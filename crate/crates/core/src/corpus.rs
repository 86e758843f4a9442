//! Tokenization, vocabulary construction and document storage.
//!
//! A [`LabeledCorpus`] owns its [`Vocabulary`]; word ids in every
//! [`Document`] index into it. Identities are attached later by the
//! labelers in [`crate::identity`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type WordId = u32;
pub type IdentityId = u32;
pub type ClassId = u32;

pub const DEFAULT_MIN_COUNT: u64 = 5;

/// Lowercases `text`, splits it on every non-alphanumeric character and
/// drops stopwords. Token order is preserved.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|piece| !piece.is_empty())
        .map(str::to_lowercase)
        .filter(|token| !stopwords.contains(token))
        .collect()
}

/// Reads a stopword list, one token per line. Blank lines are ignored.
pub fn read_stopwords(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|line| line.trim().to_lowercase())
        .filter(|line| !line.is_empty())
        .collect())
}

/// Bidirectional token/id map with corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, WordId>,
    freq: Vec<u64>,
}

impl Vocabulary {
    /// Counts tokens, drops those seen fewer than `min_count` times and
    /// assigns ids by descending frequency (ties by first appearance).
    pub fn build<D, S>(docs: &[D], min_count: u64) -> Result<Self>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        if min_count == 0 {
            return Err(Error::InvalidParameter("min_count must be at least 1".into()));
        }
        let mut first_seen: HashMap<&str, usize> = HashMap::new();
        let mut counts: Vec<(&str, u64)> = Vec::new();
        for token in docs.iter().flat_map(|d| d.as_ref()) {
            let token = token.as_ref();
            match first_seen.get(token) {
                Some(&slot) => counts[slot].1 += 1,
                None => {
                    first_seen.insert(token, counts.len());
                    counts.push((token, 1));
                }
            }
        }
        // stable sort keeps first-appearance order among equal counts
        counts.retain(|&(_, c)| c >= min_count);
        counts.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
        if counts.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        Ok(Self::from_parts(
            counts.iter().map(|(t, _)| t.to_string()).collect(),
            counts.iter().map(|&(_, c)| c).collect(),
        ))
    }

    /// Builds a vocabulary from tokens already in id order.
    pub fn from_parts(tokens: Vec<String>, freq: Vec<u64>) -> Self {
        assert_eq!(tokens.len(), freq.len());
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as WordId))
            .collect();
        Self { tokens, index, freq }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Corpus occurrence count t(w).
    pub fn freq(&self, id: WordId) -> u64 {
        self.freq[id as usize]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.freq
    }

    pub fn total_count(&self) -> u64 {
        self.freq.iter().sum()
    }

    /// Writes `token<TAB>freq` lines in id order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (token, freq) in self.tokens.iter().zip(&self.freq) {
            writeln!(out, "{token}\t{freq}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut tokens = Vec::new();
        let mut freq = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let (token, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(path, n + 1, "expected token<TAB>count"))?;
            let count = count
                .parse()
                .map_err(|_| Error::format(path, n + 1, format!("bad count `{count}`")))?;
            tokens.push(token.to_string());
            freq.push(count);
        }
        let vocab = Self::from_parts(tokens, freq);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(Error::format(path, 0, "duplicate tokens in vocabulary"));
        }
        Ok(vocab)
    }
}

/// The kind of identity attached to every token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentityKind {
    Topic,
    Sentiment,
    Category,
    /// One universal identity; the plain word-context baseline.
    Single,
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdentityKind::Topic => "topic",
            IdentityKind::Sentiment => "sentiment",
            IdentityKind::Category => "category",
            IdentityKind::Single => "none",
        })
    }
}

impl FromStr for IdentityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topic" => Ok(IdentityKind::Topic),
            "sentiment" => Ok(IdentityKind::Sentiment),
            "category" => Ok(IdentityKind::Category),
            "none" => Ok(IdentityKind::Single),
            other => Err(Error::InvalidParameter(format!("unknown identity kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub words: Vec<WordId>,
    /// Empty until a labeler runs; afterwards one entry per word.
    pub identities: Vec<IdentityId>,
    pub label: Option<ClassId>,
}

impl Document {
    pub fn new(words: Vec<WordId>, label: Option<ClassId>) -> Self {
        Self {
            words,
            identities: Vec::new(),
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// True when every token carries an identity.
    pub fn is_identity_labeled(&self) -> bool {
        self.identities.len() == self.words.len()
    }
}

/// Documents plus everything needed to interpret their ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub vocab: Vocabulary,
    pub docs: Vec<Document>,
    /// Class names indexed by class id (sorted by name).
    pub classes: Vec<String>,
    /// `None` until identities are assigned.
    pub identity_kind: Option<IdentityKind>,
    pub num_identities: u32,
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub min_count: u64,
    pub stopwords: HashSet<String>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            min_count: DEFAULT_MIN_COUNT,
            stopwords: HashSet::new(),
        }
    }
}

struct RawLine {
    label: Option<String>,
    tokens: Vec<String>,
}

fn parse_lines(text: &str, labeled: bool, path: &Path, stopwords: &HashSet<String>) -> Result<Vec<RawLine>> {
    let mut lines = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, body) = if labeled {
            let (label, body) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(path, n + 1, "labeled line has no TAB separator"))?;
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::format(path, n + 1, "empty label"));
            }
            (Some(label.to_string()), body)
        } else {
            (None, line)
        };
        lines.push(RawLine {
            label,
            tokens: tokenize(body, stopwords),
        });
    }
    Ok(lines)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl LabeledCorpus {
    /// Parses corpus text (one document per non-empty line, optionally
    /// `label<TAB>text`) and builds a fresh vocabulary from it. Tokens
    /// below `min_count` are removed from the documents.
    pub fn parse(text: &str, labeled: bool, options: &CorpusOptions) -> Result<Self> {
        Self::parse_at(text, labeled, options, Path::new("<memory>"))
    }

    fn parse_at(text: &str, labeled: bool, options: &CorpusOptions, path: &Path) -> Result<Self> {
        let lines = parse_lines(text, labeled, path, &options.stopwords)?;
        let token_docs: Vec<&[String]> = lines.iter().map(|l| l.tokens.as_slice()).collect();
        let vocab = Vocabulary::build(&token_docs, options.min_count)?;
        let mut classes: Vec<String> = lines.iter().filter_map(|l| l.label.clone()).collect();
        classes.sort();
        classes.dedup();
        let docs = lines
            .iter()
            .map(|l| to_document(l, &vocab, &classes).0)
            .collect();
        Ok(Self {
            vocab,
            docs,
            classes,
            identity_kind: None,
            num_identities: 0,
        })
    }

    /// Parses text against an existing vocabulary and class list, e.g. a
    /// test split. Out-of-vocabulary tokens are dropped; the number dropped
    /// is returned alongside. Unknown class labels are an error.
    pub fn parse_with_vocab(
        text: &str,
        labeled: bool,
        vocab: &Vocabulary,
        classes: &[String],
        stopwords: &HashSet<String>,
    ) -> Result<(Self, usize)> {
        Self::parse_with_vocab_at(text, labeled, vocab, classes, stopwords, Path::new("<memory>"))
    }

    fn parse_with_vocab_at(
        text: &str,
        labeled: bool,
        vocab: &Vocabulary,
        classes: &[String],
        stopwords: &HashSet<String>,
        path: &Path,
    ) -> Result<(Self, usize)> {
        let mut lines = parse_lines(text, labeled, path, stopwords)?;
        let mut dropped = 0;
        let mut docs = Vec::with_capacity(lines.len());
        for (n, line) in lines.iter_mut().enumerate() {
            if let Some(label) = &line.label {
                if classes.binary_search(label).is_err() {
                    return Err(Error::format(path, n + 1, format!("unknown class label `{label}`")));
                }
            }
            let (doc, oov) = to_document(line, vocab, classes);
            dropped += oov;
            docs.push(doc);
        }
        Ok((
            Self {
                vocab: vocab.clone(),
                docs,
                classes: classes.to_vec(),
                identity_kind: None,
                num_identities: 0,
            },
            dropped,
        ))
    }

    /// Loads a corpus file; labeled files use `label<TAB>text` lines.
    pub fn load(path: impl AsRef<Path>, labeled: bool, options: &CorpusOptions) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_at(&read_text(path)?, labeled, options, path)
    }

    pub fn load_with_vocab(
        path: impl AsRef<Path>,
        labeled: bool,
        vocab: &Vocabulary,
        classes: &[String],
        stopwords: &HashSet<String>,
    ) -> Result<(Self, usize)> {
        let path = path.as_ref();
        Self::parse_with_vocab_at(&read_text(path)?, labeled, vocab, classes, stopwords, path)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Document::len).sum()
    }

    pub fn is_identity_labeled(&self) -> bool {
        self.identity_kind.is_some() && self.docs.iter().all(Document::is_identity_labeled)
    }

    /// Labels of all documents; errors on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<ClassId>> {
        self.docs
            .iter()
            .enumerate()
            .map(|(i, d)| d.label.ok_or(Error::UnlabeledDocument { doc: i }))
            .collect()
    }

    /// Collapses every token onto identity 0: the single-identity baseline.
    pub fn with_single_identity(mut self) -> Self {
        for doc in &mut self.docs {
            doc.identities = vec![0; doc.words.len()];
        }
        self.identity_kind = Some(IdentityKind::Single);
        self.num_identities = 1;
        self
    }

    /// Keeps only the documents at `indices`, in that order. Vocabulary and
    /// classes are shared unchanged.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            vocab: self.vocab.clone(),
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
            classes: self.classes.clone(),
            identity_kind: self.identity_kind,
            num_identities: self.num_identities,
        }
    }

    /// Renders one document per line as `word#identity` tokens, prefixed
    /// with `label<TAB>` when the document has a class.
    pub fn render_labeled(&self) -> String {
        let mut out = String::new();
        for doc in &self.docs {
            if let Some(label) = doc.label {
                out.push_str(&self.classes[label as usize]);
                out.push('\t');
            }
            let rendered: Vec<String> = if doc.is_identity_labeled() {
                doc.words
                    .iter()
                    .zip(&doc.identities)
                    .map(|(&w, &i)| format!("{}#{}", self.vocab.token(w), i))
                    .collect()
            } else {
                doc.words.iter().map(|&w| self.vocab.token(w).to_string()).collect()
            };
            out.push_str(&rendered.join(" "));
            out.push('\n');
        }
        out
    }

    /// Writes `corpus.txt`, `vocab.tsv` and `meta.txt` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let corpus_path = dir.join(CORPUS_FILE);
        fs::write(&corpus_path, self.render_labeled()).map_err(|e| Error::io(&corpus_path, e))?;
        self.vocab.save(dir.join(VOCAB_FILE))?;
        let meta = CorpusMeta {
            identity_kind: self.identity_kind,
            num_identities: self.num_identities,
            classes: self.classes.clone(),
        };
        meta.save(dir.join(META_FILE))
    }

    /// Reloads a directory written by [`LabeledCorpus::save`].
    pub fn load_saved(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let vocab = Vocabulary::load(dir.join(VOCAB_FILE))?;
        let meta = CorpusMeta::load(dir.join(META_FILE))?;
        let corpus_path = dir.join(CORPUS_FILE);
        let text = read_text(&corpus_path)?;
        let mut docs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let err = |msg: String| Error::format(&corpus_path, n + 1, msg);
            let (label, body) = match line.split_once('\t') {
                Some((label, body)) => {
                    let id = meta
                        .classes
                        .binary_search_by(|c| c.as_str().cmp(label))
                        .map_err(|_| err(format!("unknown class label `{label}`")))?;
                    (Some(id as ClassId), body)
                }
                None => (None, line),
            };
            let mut doc = Document::new(Vec::new(), label);
            for token in body.split_whitespace() {
                let word = match meta.identity_kind {
                    Some(_) => {
                        let (word, identity) = token
                            .rsplit_once('#')
                            .ok_or_else(|| err(format!("token `{token}` lacks #identity")))?;
                        let identity: IdentityId = identity
                            .parse()
                            .map_err(|_| err(format!("bad identity in `{token}`")))?;
                        if identity >= meta.num_identities {
                            return Err(err(format!("identity {identity} out of range")));
                        }
                        doc.identities.push(identity);
                        word
                    }
                    None => token,
                };
                let id = vocab
                    .id(word)
                    .ok_or_else(|| err(format!("word `{word}` not in vocabulary")))?;
                doc.words.push(id);
            }
            docs.push(doc);
        }
        Ok(Self {
            vocab,
            docs,
            classes: meta.classes,
            identity_kind: meta.identity_kind,
            num_identities: meta.num_identities,
        })
    }
}

pub const CORPUS_FILE: &str = "corpus.txt";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const META_FILE: &str = "meta.txt";

fn to_document(line: &RawLine, vocab: &Vocabulary, classes: &[String]) -> (Document, usize) {
    let words: Vec<WordId> = line.tokens.iter().filter_map(|t| vocab.id(t)).collect();
    let oov = line.tokens.len() - words.len();
    let label = line
        .label
        .as_ref()
        .and_then(|l| classes.binary_search(l).ok())
        .map(|i| i as ClassId);
    (Document::new(words, label), oov)
}

/// `key=value` metadata stored next to a saved corpus or network.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CorpusMeta {
    pub identity_kind: Option<IdentityKind>,
    pub num_identities: u32,
    pub classes: Vec<String>,
}

impl CorpusMeta {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let kind = self
            .identity_kind
            .map(|k| k.to_string())
            .unwrap_or_else(|| "unset".into());
        let mut text = format!("identity_kind={kind}\nnum_identities={}\n", self.num_identities);
        for class in &self.classes {
            text.push_str(&format!("class={class}\n"));
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read_text(path)?;
        let mut meta = CorpusMeta {
            identity_kind: None,
            num_identities: 0,
            classes: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(path, n + 1, "expected key=value"))?;
            match key {
                "identity_kind" => {
                    meta.identity_kind = match value {
                        "unset" => None,
                        kind => Some(kind.parse().map_err(|_| {
                            Error::format(path, n + 1, format!("unknown identity kind `{kind}`"))
                        })?),
                    }
                }
                "num_identities" => {
                    meta.num_identities = value
                        .parse()
                        .map_err(|_| Error::format(path, n + 1, "bad num_identities"))?
                }
                "class" => meta.classes.push(value.to_string()),
                other => return Err(Error::format(path, n + 1, format!("unknown key `{other}`"))),
            }
        }
        Ok(meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stop(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat sat", &stop(&["the"])), vec!["cat", "sat"]);
        assert!(tokenize("", &stop(&[])).is_empty());
        assert_eq!(tokenize("a a b", &stop(&[])), vec!["a", "a", "b"]);
        assert_eq!(tokenize("Hello, world!It's", &stop(&[])), vec!["hello", "world", "it", "s"]);
    }

    #[test]
    fn vocabulary_counts_and_threshold() {
        let docs = vec![vec!["a", "b", "a"]];
        let v = Vocabulary::build(&docs, 1).unwrap();
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.freq(0), 2);
        assert_eq!(v.freq(v.id("b").unwrap()), 1);

        let v = Vocabulary::build(&docs, 2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.tokens(), ["a"]);
    }

    #[test]
    fn vocabulary_ties_by_first_appearance() {
        let docs = vec![vec!["z", "y", "x", "y", "z", "x"]];
        let v = Vocabulary::build(&docs, 1).unwrap();
        assert_eq!(v.tokens(), ["z", "y", "x"]);
    }

    #[test]
    fn vocabulary_all_dropped_is_error() {
        let docs = vec![vec!["a", "b"]];
        assert!(matches!(
            Vocabulary::build(&docs, 2),
            Err(Error::EmptyVocabulary { min_count: 2 })
        ));
        assert!(Vocabulary::build(&docs, 0).is_err());
    }

    #[test]
    fn labeled_parse_maps_classes() {
        let opts = CorpusOptions { min_count: 1, ..Default::default() };
        let c = LabeledCorpus::parse("pos\tgood film\nneg\tbad film\n", true, &opts).unwrap();
        assert_eq!(c.docs.len(), 2);
        assert_eq!(c.classes, ["neg", "pos"]);
        assert_eq!(c.docs[0].label, Some(1));
        assert_eq!(c.docs[1].label, Some(0));
    }

    #[test]
    fn unlabeled_parse() {
        let opts = CorpusOptions { min_count: 1, ..Default::default() };
        let c = LabeledCorpus::parse("one line here\n\n", false, &opts).unwrap();
        assert_eq!(c.docs.len(), 1);
        assert_eq!(c.docs[0].label, None);
    }

    #[test]
    fn missing_tab_reports_line() {
        let opts = CorpusOptions { min_count: 1, ..Default::default() };
        let err = LabeledCorpus::parse("pos\tfine\nno tab here\n", true, &opts).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = LabeledCorpus::load("/nonexistent/corpus.txt", false, &CorpusOptions::default());
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn with_vocab_drops_oov() {
        let opts = CorpusOptions { min_count: 1, ..Default::default() };
        let train = LabeledCorpus::parse("a\tx y\nb\ty z\n", true, &opts).unwrap();
        let (test, dropped) =
            LabeledCorpus::parse_with_vocab("b\tq y w\n", true, &train.vocab, &train.classes, &HashSet::new())
                .unwrap();
        assert_eq!(dropped, 2);
        assert_eq!(test.docs[0].words, vec![train.vocab.id("y").unwrap()]);
        assert_eq!(test.docs[0].label, Some(1));
        assert!(LabeledCorpus::parse_with_vocab("c\ty\n", true, &train.vocab, &train.classes, &HashSet::new())
            .is_err());
    }
}
