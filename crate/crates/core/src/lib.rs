//! Entity linking over a scholarly knowledge graph.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! the filesystem, the network or a clock lives in the `dblplink` crate; here
//! we keep the algorithms:
//!
//! - [`ntriples`] and [`kg`]: N-Triples grammar and entity extraction into an
//!   [`kg::EntityStore`].
//! - [`index`]: trigram label index used for candidate generation.
//! - [`embed`]: TransE / DistMult / ComplEx scoring and training.
//! - [`encoder`]: 768-dimensional text embeddings (feature hashing).
//! - [`rerank`]: 969-dimensional feature layout and the Siamese re-ranker.
//! - [`span`]: span grammar and the lexicon detector.
//! - [`pipeline`]: detection, candidate generation and disambiguation modes.
//! - [`eval`]: precision / recall / F1 over question sets.
//! - [`synth`]: seeded synthetic graphs, stores and question sets.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod codec;
pub mod embed;
pub mod encoder;
pub mod eval;
pub mod index;
pub mod kg;
pub mod ntriples;
pub mod pipeline;
pub mod rerank;
pub mod span;
pub mod synth;
pub mod text;

pub(crate) mod linalg;

pub use embed::{EmbeddingKind, KgEmbeddingSet};
pub use encoder::{HashEncoder, TextEmbedding, TextEncoder, TEXT_DIM};
pub use index::{Candidate, LabelIndex};
pub use kg::{EntityRecord, EntityStore, EntityType, Triple};
pub use eval::{evaluate, prf1, EvalReport, GoldQuestion};
pub use pipeline::{link, LinkMode, LinkRequest, LinkResult, Resources};
pub use rerank::{FeatureVector, RankedEntity, SiameseParams, FEATURE_DIM, KG_DIM};
pub use span::{SpanDetector, SpanModelId, SpanPrediction};
