//! Sense, context and identity embedding tables.

use std::collections::HashMap;

use crate::corpus::{IdentityId, WordId};
use crate::error::{Error, Result};
use crate::hetnet::{HeterogeneousNetwork, SenseRegistry};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Which table the conditioning vertex of an edge lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorKind {
    Context,
    Identity,
}

/// The conditioning side of an edge: a context word or an identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub kind: AnchorKind,
    pub row: u32,
}

impl Anchor {
    pub fn context(word: WordId) -> Self {
        Self {
            kind: AnchorKind::Context,
            row: word,
        }
    }

    pub fn identity(identity: IdentityId) -> Self {
        Self {
            kind: AnchorKind::Identity,
            row: identity,
        }
    }
}

/// Identity-sensitive word embeddings.
///
/// `sense_vectors` has one row per registered sense, `context_vectors` one
/// row per vocabulary word and `identity_vectors` one row per identity.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub words: Vec<String>,
    pub senses: SenseRegistry,
    pub num_identities: u32,
    pub sense_vectors: Matrix,
    pub context_vectors: Matrix,
    pub identity_vectors: Matrix,
    word_index: HashMap<String, WordId>,
}

impl EmbeddingModel {
    pub fn zeros(words: Vec<String>, senses: SenseRegistry, num_identities: u32, dim: usize) -> Self {
        let sense_vectors = Matrix::zeros(senses.len(), dim);
        let context_vectors = Matrix::zeros(words.len(), dim);
        let identity_vectors = Matrix::zeros(num_identities as usize, dim);
        Self::from_parts(words, senses, num_identities, sense_vectors, context_vectors, identity_vectors)
            .expect("shapes agree by construction")
    }

    /// Zero-initialized model shaped for `net`.
    pub fn for_network(net: &HeterogeneousNetwork, dim: usize) -> Self {
        Self::zeros(net.vocab.tokens().to_vec(), net.senses.clone(), net.num_identities, dim)
    }

    pub fn from_parts(
        words: Vec<String>,
        senses: SenseRegistry,
        num_identities: u32,
        sense_vectors: Matrix,
        context_vectors: Matrix,
        identity_vectors: Matrix,
    ) -> Result<Self> {
        let dim = sense_vectors.cols();
        for m in [&context_vectors, &identity_vectors] {
            if m.cols() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: m.cols() });
            }
        }
        let expect = [
            (sense_vectors.rows(), senses.len()),
            (context_vectors.rows(), words.len()),
            (identity_vectors.rows(), num_identities as usize),
        ];
        for (got, want) in expect {
            if got != want {
                return Err(Error::LengthMismatch { left: got, right: want });
            }
        }
        if senses.vocab_len() != words.len() {
            return Err(Error::LengthMismatch {
                left: senses.vocab_len(),
                right: words.len(),
            });
        }
        let word_index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as WordId))
            .collect();
        Ok(Self {
            words,
            senses,
            num_identities,
            sense_vectors,
            context_vectors,
            identity_vectors,
            word_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.sense_vectors.cols()
    }

    pub fn num_senses(&self) -> usize {
        self.senses.len()
    }

    pub fn word_id(&self, word: &str) -> Option<WordId> {
        self.word_index.get(word).copied()
    }

    pub fn sense(&self, row: u32) -> &[f64] {
        self.sense_vectors.row(row as usize)
    }

    pub fn context(&self, word: WordId) -> &[f64] {
        self.context_vectors.row(word as usize)
    }

    pub fn identity(&self, identity: IdentityId) -> &[f64] {
        self.identity_vectors.row(identity as usize)
    }

    pub fn anchor(&self, anchor: Anchor) -> &[f64] {
        match anchor.kind {
            AnchorKind::Context => self.context(anchor.row),
            AnchorKind::Identity => self.identity(anchor.row),
        }
    }

    pub(crate) fn anchor_mut(&mut self, anchor: Anchor) -> &mut [f64] {
        match anchor.kind {
            AnchorKind::Context => self.context_vectors.row_mut(anchor.row as usize),
            AnchorKind::Identity => self.identity_vectors.row_mut(anchor.row as usize),
        }
    }

    /// `word#identity` for a sense row.
    pub fn sense_name(&self, row: u32) -> String {
        let s = self.senses.sense(row);
        format!("{}#{}", self.words[s.word as usize], s.identity)
    }

    /// Resolves `word#identity` to a sense row.
    pub fn find_sense(&self, name: &str) -> Result<u32> {
        let unknown = || Error::UnknownSense(name.to_string());
        let (word, identity) = name.rsplit_once('#').ok_or_else(unknown)?;
        let identity: IdentityId = identity.parse().map_err(|_| unknown())?;
        let word = self.word_id(word).ok_or_else(unknown)?;
        self.senses.row(word, identity).ok_or_else(unknown)
    }

    pub fn all_finite(&self) -> bool {
        [&self.sense_vectors, &self.context_vectors, &self.identity_vectors]
            .iter()
            .all(|m| m.as_slice().iter().all(|v| v.is_finite()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
