//! Frame-semantic parsing workbench.
//!
//! - [`fndata`]: annotated lexicon and corpora, ingestion, validation, splits.
//! - [`valence`]: valence patterns and the loose-matching index.
//! - [`paraphrase`]: paraphrastic candidate lattices, sentence generation and
//!   annotation projection.
//! - [`embeddings`]: word-vector tables and semantic candidate filters.
//! - [`deptree`]: dependency trees and candidate argument spans.
//! - [`argid`]: sparse linear argument identification (features, squared
//!   hinge training with AdaDelta, beam decoding).
//! - [`eval`]: weighted precision/recall/F1 and bootstrap significance.
//! - [`analysis`]: per-FE scores, febar ratio, PT.GF breakdown, coverage,
//!   rank-frequency profiles.
//! - [`query`]: valence-pattern queries shared with the HTTP service.

pub mod analysis;
pub mod argid;
pub mod deptree;
pub mod embeddings;
pub mod eval;
pub mod fndata;
pub mod paraphrase;
pub mod query;
pub mod valence;

mod error;

pub use error::Error;
pub use fndata::{
    AnnoSetId, AnnotationSet, CharSpan, Corpus, Frame, FrameId, LabelSpan, LexicalUnit, LuId,
    Sentence, SentenceId,
};
pub use valence::{ValenceIndex, ValencePattern, ValenceUnit};
