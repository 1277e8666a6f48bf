//! Repository context collection for fill-in-the-middle code completion.
//!
//! A repository is cut into overlapping line chunks that keep links to their
//! neighbors. For a completion point, chunks similar to the prefix and to the
//! suffix are found with a BM25 retriever and a dense retriever fused by
//! weighted reciprocal rank. Each prefix-side hit brings the chunk that follows
//! it and each suffix-side hit brings the chunk that precedes it. The
//! completion file, recent files and those chunk groups are then rendered into
//! one bounded context block.

pub mod chunker;
pub mod cli;
pub mod context;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod lexical;
pub mod ranking;
pub mod semantic;
pub mod store;

pub use chunker::{chunk_file, chunk_repository, Chunk, ChunkConfig, ExtensionFilter, RepoChunks};
pub use context::{
    assemble, AssembledContext, AssemblyOptions, CompletionQuery, ContextEngine, NeighborOrder,
    PositionedHit, RecentFile, RetrievalConfig, Section, SectionLabel, Side,
};
pub use error::{Error, Result};
pub use fusion::{rrf_fuse, FusionConfig};
pub use lexical::{tokenize, Bm25Params, LexicalIndex};
pub use ranking::RankedHit;
pub use semantic::{embed_hashing, Embedder, Embedding, HashingEmbedder, RemoteEmbedder, VectorIndex};
pub use store::ChunkStore;
