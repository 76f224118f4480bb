//! Word embeddings for low-resource languages: corpus preparation,
//! skip-gram training with and without subword units, unsupervised
//! cross-lingual alignment, and intrinsic similarity evaluation.

pub mod align;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod sgns;
pub mod subword;
pub mod synthetic;

pub use align::{align, AlignmentConfig, AlignmentModel};
pub use corpus::{RawCorpus, TokenStream, Vocabulary};
pub use embedding::{EmbeddingMatrix, TrainingConfig, TrainingMode};
pub use error::{Error, Result};
pub use eval::{EvalReport, SimilarityDataset};
