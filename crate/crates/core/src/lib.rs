//! Identity-sensitive word embeddings.
//!
//! Every token of a corpus is first labeled with an identity (a topic, a
//! sentiment polarity or a document category). Each observed
//! `(word, identity)` pair becomes a sense node in a heterogeneous network
//! that links senses to the words around them and to their identity. The
//! network is embedded with edge-sampled, negative-sampled SGD, which
//! yields one vector per sense plus context and identity vectors.
//!
//! Pipeline: [`corpus`] → [`identity`] → [`hetnet`] → [`trainer`] →
//! [`eval`].

pub mod corpus;
pub mod error;
pub mod eval;
pub mod hetnet;
pub mod identity;
pub mod model;
pub mod model_io;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
