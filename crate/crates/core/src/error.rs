//! Error type shared across the engine.

use std::path::PathBuf;

use thiserror::Error;

use crate::lexicon::{Foundation, Pole};

/// Errors produced anywhere in the analysis engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "{path} line {line}: vector has {found} components, expected {expected} \
         (dimensions must be consistent)"
    )]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: no vectors retained")]
    EmptyEmbedding { path: PathBuf },

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero-norm vector where a direction is required")]
    ZeroNorm,

    #[error("no input term resolves in the embedding table")]
    NoTermResolved,

    #[error("{path}: {reason}")]
    Lexicon { path: PathBuf, reason: String },

    #[error("{foundation} {pole} pole: no term resolves in the embedding table")]
    UnresolvablePole { foundation: Foundation, pole: Pole },

    #[error("{foundation} axis is degenerate: pole centroids coincide")]
    DegenerateAxis { foundation: Foundation },

    #[error("0 moral documents: no document contains a scorable lexicon term")]
    EmptyMoralCorpus,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Name of the failing pipeline stage, if this error carries one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
