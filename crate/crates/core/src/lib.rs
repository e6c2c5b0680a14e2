//! Probing algorithms for scalar adjectives and scalar implicature.
//!
//! This crate is `no_std` (with `alloc`). It holds the data model for
//! half-scales and implicature items, the backend scoring contract, and every
//! probe and metric. File formats, caching, subprocess backends and the
//! experiment runner live in the companion `scalar-probe` crate.
//!
//! The probes fall into three families:
//!
//! * direct probes over contextual representations ([`direct`]): scale
//!   membership by cosine ranking against scale vectors, and intensity
//!   ranking against a global intensity direction;
//! * indirect template probes ([`indirect`]): top-k completion for
//!   membership and minimal-pair perplexity for intensity;
//! * the scalar-diversity probe ([`pragmatics`]): yes/no answer
//!   probabilities with neutral-context calibration, plus a logistic
//!   regression baseline over surprisal features.
#![no_std]
#![forbid(unsafe_code)]
// NaN must fail checks like `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod backend;
pub mod corpus;
pub mod direct;
pub mod error;
pub mod indirect;
pub mod logistic;
pub mod metrics;
pub mod mock;
pub mod ngram;
pub mod pragmatics;
pub mod representations;
pub mod rng;
pub mod static_vectors;
pub mod vector;

pub use backend::{Backend, BackendDescriptor, CharSpan, Family, SequenceScore};
pub use corpus::{
    Adjective, ContextSet, HalfScale, Relation, ScaleDataset, ScalePair, SiDataset, SiItem,
};
pub use error::{BackendError, CorpusError, ProbeError};
pub use representations::{PoolingMode, RepresentationMode, ScaleReps};
