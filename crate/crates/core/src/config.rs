//! Pipeline configuration: a TOML file mirrors the CLI flags, and flags
//! override file values. Relative paths in a config file resolve against the
//! file's directory.

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{BoundingBox, CorpusFilter, DateRange, KeywordSet};
use crate::error::{Error, Result};
use crate::framing::{BaselineMode, EmbeddingMode};

/// Inclusive k sweep range, written `lo..hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl Default for KRange {
    fn default() -> Self {
        KRange { lo: 2, hi: 10 }
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl std::str::FromStr for KRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once("..")
            .ok_or_else(|| Error::Config(format!("k range `{s}` is not of the form lo..hi")))?;
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad k range bound `{lo}`")))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad k range bound `{hi}`")))?;
        if lo < 2 || lo > hi {
            return Err(Error::Config(format!("invalid k range {lo}..{hi}")));
        }
        Ok(KRange { lo, hi })
    }
}

impl Serialize for KRange {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KRange {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Clustering and report knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Silhouette sample cap; 0 disables sampling.
    pub silhouette_cap: usize,
    pub min_cluster_fraction: f64,
    /// Minimum in-cluster count for distinctive-vocabulary terms.
    pub min_count: u64,
    /// Terms per list in both vocabulary reports.
    pub top_n: usize,
    /// Z-score each embedding dimension before clustering.
    pub standardize: bool,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            silhouette_cap: 10_000,
            min_cluster_fraction: 0.02,
            min_count: 5,
            top_n: 20,
            standardize: false,
        }
    }
}

impl AnalyticsConfig {
    pub fn silhouette_cap_opt(&self) -> Option<usize> {
        (self.silhouette_cap > 0).then_some(self.silhouette_cap)
    }
}

/// t-SNE knobs exposed in configuration; schedule constants stay fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneSettings {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// When set and the corpus is larger, t-SNE runs on a seeded subsample
    /// of this many documents (the O(n^2) memory guard).
    pub subsample: Option<usize>,
}

impl Default for TsneSettings {
    fn default() -> Self {
        TsneSettings {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            subsample: None,
        }
    }
}

impl TsneSettings {
    pub fn to_tsne_config(&self, seed: u64) -> crate::tsne::TsneConfig {
        crate::tsne::TsneConfig {
            perplexity: self.perplexity,
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            early_exaggeration: self.early_exaggeration,
            seed,
            ..crate::tsne::TsneConfig::default()
        }
    }
}

/// Everything a pipeline run needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    pub lexicon: PathBuf,
    pub sentiment: Option<PathBuf>,
    pub keywords_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// `lat_min, lon_min, lat_max, lon_max`.
    pub bbox: [f64; 4],
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub allow_place: bool,
    pub baseline: BaselineMode,
    pub embedding_mode: EmbeddingMode,
    /// Minimum dominant-foundation probability for a lexicon term to count
    /// as moral; 0 keeps every dictionary entry.
    pub moral_threshold: f64,
    /// Fixed k; when unset the k sweep chooses.
    pub k: Option<usize>,
    pub k_range: KRange,
    pub analytics: AnalyticsConfig,
    pub tsne: TsneSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let bbox = BoundingBox::default();
        let dates = DateRange::default();
        PipelineConfig {
            corpus: PathBuf::new(),
            embeddings: PathBuf::new(),
            lexicon: PathBuf::new(),
            sentiment: None,
            keywords_file: None,
            out_dir: PathBuf::from("out"),
            seed: 42,
            bbox: [bbox.lat_min, bbox.lon_min, bbox.lat_max, bbox.lon_max],
            from: dates.start,
            to: dates.end,
            allow_place: false,
            baseline: BaselineMode::Corpus,
            embedding_mode: EmbeddingMode::Poles,
            moral_threshold: 0.0,
            k: None,
            k_range: KRange::default(),
            analytics: AnalyticsConfig::default(),
            tsne: TsneSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_relative_to(base);
        }
        Ok(config)
    }

    /// Rebase relative paths onto `base` (used for paths inside a config
    /// file, which resolve against the file's directory).
    pub fn resolve_relative_to(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut self.corpus);
        rebase(&mut self.embeddings);
        rebase(&mut self.lexicon);
        if let Some(p) = self.sentiment.as_mut() {
            rebase(p);
        }
        if let Some(p) = self.keywords_file.as_mut() {
            rebase(p);
        }
        rebase(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        for (name, path) in [
            ("corpus", &self.corpus),
            ("embeddings", &self.embeddings),
            ("lexicon", &self.lexicon),
        ] {
            if path.as_os_str().is_empty() {
                return Err(Error::Config(format!("`{name}` path is required")));
            }
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(Error::Config("`out_dir` is required".into()));
        }
        BoundingBox::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3])?;
        DateRange::new(self.from, self.to)?;
        if let Some(k) = self.k {
            if k < 2 {
                return Err(Error::Config(format!("k = {k} must be >= 2")));
            }
        }
        if !(0.0..=1.0).contains(&self.analytics.min_cluster_fraction) {
            return Err(Error::Config(
                "min_cluster_fraction must be in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.moral_threshold) {
            return Err(Error::Config("moral_threshold must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// Build the corpus filter this configuration describes.
    pub fn corpus_filter(&self) -> Result<CorpusFilter> {
        let bbox = BoundingBox::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3])?;
        let dates = DateRange::new(self.from, self.to)?;
        let keywords = match &self.keywords_file {
            Some(path) => KeywordSet::from_file(path)?,
            None => KeywordSet::default(),
        };
        Ok(CorpusFilter {
            bbox,
            dates,
            keywords,
            allow_place: self.allow_place,
        })
    }
}
