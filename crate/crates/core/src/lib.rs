//! Batch analysis engine that maps short text documents into a
//! moral-foundation embedding space and characterizes the corpus.
//!
//! The pipeline: ingest JSONL posts, filter by bounding box / date range /
//! search terms, normalize and tokenize, deduplicate exact texts, score each
//! document's bias and intensity on five moral-foundation axes built from a
//! dictionary and pretrained word vectors, then cluster the 10-dimensional
//! embeddings (k-means with silhouette-guided selection), summarize
//! activations with 95% confidence intervals, extract distinctive
//! vocabulary, and emit 2-D t-SNE plot data. Every randomized stage draws
//! its seed from one root seed, and all artifacts are byte-reproducible.

pub mod cluster;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod export;
pub mod framing;
pub mod lexicon;
pub mod pipeline;
pub mod seeds;
pub mod text;
pub mod tsne;

pub use cluster::{
    cluster_activations, distinctive_vocabulary, kmeans, select_k, silhouette, ActivationSummary,
    ClusterModel, KmeansConfig, SelectKConfig, SelectionResult, SilhouetteReport, VocabularyReport,
};
pub use config::PipelineConfig;
pub use corpus::{
    daily_counts, date_keep, dedup, geo_keep, read_jsonl, BoundingBox, CorpusFilter, DailyCounts,
    DateRange, Document, GroupCounts, IngestedPost, Keyword, KeywordGroup, KeywordSet, RawPost,
};
pub use embedding::{centroid, cosine, EmbeddingTable};
pub use error::{Error, Result};
pub use framing::{
    build_axes, embed, foundation_vocabulary, project_word, AxisSet, BaselineMode, EmbeddingMode,
    FoundationAxis, FoundationVocabulary, MoralEmbedding, MoralScore, Scorer,
};
pub use lexicon::{
    assign_foundation, assign_polarity, Foundation, LexiconEntry, MoralLexicon, Polarity, Pole,
};
pub use pipeline::{run_pipeline, RunManifest, StageCounts};
pub use text::{normalize_text, tokenize};
pub use tsne::{tsne, Projection, TsneConfig};
