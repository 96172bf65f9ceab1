//! Embedding, exact cosine search, dual-path rank merge and metadata
//! constraints.

mod embedding;
mod index;
mod merge;

pub use embedding::{embed, normalize, EmbeddingProvider, HttpEmbedder, ProviderMode, StubEmbedder};
pub use index::{EntryMeta, IndexEntry, RankedItem, RankedList, VectorIndex, INDEX_SCHEMA};
pub use merge::{apply_constraints, dual_path_merge, rank_score, CandidateSubset, MergeConfig};
