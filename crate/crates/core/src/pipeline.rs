//! End-to-end pipeline: ingest, filter, score, cluster, project, export.
//!
//! Every stage count is recorded in the run manifest, all randomness derives
//! from the root seed, per-stage outputs are order-stabilized by doc_id, and
//! a re-run with identical inputs and configuration reproduces every
//! artifact byte for byte. On failure a `_FAILED` marker naming the stage is
//! left in the output directory so partial outputs are never mistaken for a
//! completed run.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cluster::{self, ClusterModel, SelectKConfig, SelectionRow, SilhouetteReport};
use crate::config::PipelineConfig;
use crate::corpus::{self, Document, GroupCounts};
use crate::embedding::{EmbeddingLoadReport, EmbeddingTable};
use crate::error::{Error, Result};
use crate::export;
use crate::framing::{self, BaselineMode, EmbeddingMode, MoralEmbedding, Scorer};
use crate::lexicon::{Foundation, LexiconLoadReport, MoralLexicon};
use crate::seeds;
use crate::tsne;

/// Document counts at each pipeline stage. Monotonically non-increasing from
/// ingest through the moral filter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct StageCounts {
    pub ingested: usize,
    pub malformed_lines: usize,
    pub geo_kept: usize,
    pub date_kept: usize,
    pub keyword_matched: GroupCounts,
    pub unique: GroupCounts,
    pub moral: GroupCounts,
    pub nonmoral_dropped: usize,
    pub tsne_points: usize,
}

/// Digest record for one input file.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSeeds {
    pub root: u64,
    pub cluster: u64,
    pub tsne: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisSummary {
    pub foundation: Foundation,
    pub virtue_terms_resolved: usize,
    pub virtue_terms_requested: usize,
    pub vice_terms_resolved: usize,
    pub vice_terms_requested: usize,
    pub baseline_bias: f64,
}

/// The reproducibility record emitted as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Digest of (tool version, input content digests, parameters); every
    /// other artifact references it.
    pub run_id: String,
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub config: PipelineConfig,
    pub seeds: StageSeeds,
    pub embedding_dimension: usize,
    pub embedding_terms: usize,
    pub embedding_load: EmbeddingLoadReport,
    pub lexicon_load: LexiconLoadReport,
    pub scorable_terms: usize,
    pub axes: Vec<AxisSummary>,
    pub stage_counts: StageCounts,
    pub chosen_k: usize,
    pub inertia: f64,
    pub mean_silhouette: f64,
    pub artifacts: Vec<String>,
}

/// The nine artifacts a pipeline run writes.
pub const ARTIFACTS: [&str; 9] = [
    "scores.csv",
    "labels.csv",
    "clusters.json",
    "selection.csv",
    "vocabulary.json",
    "foundation_vocab.json",
    "daily_counts.csv",
    "tsne.csv",
    "manifest.json",
];

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run identity: tool version, input content digests, and every parameter
/// that shapes the outputs. Paths are deliberately excluded so moving the
/// same inputs does not change the id.
fn compute_run_id(config: &PipelineConfig, inputs: &[InputDigest]) -> String {
    let digests: Vec<&str> = inputs.iter().map(|i| i.sha256.as_str()).collect();
    let identity = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "inputs": digests,
        "seed": config.seed,
        "bbox": config.bbox,
        "from": config.from,
        "to": config.to,
        "allow_place": config.allow_place,
        "baseline": config.baseline,
        "embedding_mode": config.embedding_mode,
        "moral_threshold": config.moral_threshold,
        "k": config.k,
        "k_range": config.k_range,
        "analytics": config.analytics,
        "tsne": config.tsne,
    });
    let mut hasher = Sha256::new();
    hasher.update(identity.to_string().as_bytes());
    hex(&hasher.finalize())
}

/// Ingest-side stage counts (everything before scoring).
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub ingested: usize,
    pub malformed_lines: usize,
    pub geo_kept: usize,
    pub date_kept: usize,
    pub keyword_matched: GroupCounts,
    pub unique: GroupCounts,
}

/// Ingest a JSONL corpus and run it through the geo, date, keyword, and
/// dedup stages. The returned documents are order-stabilized by doc_id, with
/// duplicate ids rejected.
pub fn ingest_documents(
    corpus: &Path,
    filter: &corpus::CorpusFilter,
) -> Result<(Vec<Document>, IngestReport)> {
    let (posts, malformed_lines) = corpus::read_jsonl(corpus).map_err(|e| e.in_stage("ingest"))?;
    let ingested = posts.len();

    let posts: Vec<_> = posts
        .into_iter()
        .filter(|p| corpus::geo_keep(p, &filter.bbox, filter.allow_place))
        .collect();
    let geo_kept = posts.len();

    let posts: Vec<_> = posts
        .into_iter()
        .filter(|p| corpus::date_keep(p, &filter.dates))
        .collect();
    let date_kept = posts.len();

    let documents: Vec<Document> = posts
        .iter()
        .filter_map(|p| Document::from_post(p, &filter.keywords))
        .collect();
    let keyword_matched = GroupCounts::tally(&documents);

    let (mut documents, _total, unique) = corpus::dedup(documents);

    documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let mut seen = std::collections::HashSet::new();
    for doc in &documents {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate doc id `{}` in corpus",
                doc.doc_id
            ))
            .in_stage("dedup"));
        }
    }

    Ok((
        documents,
        IngestReport {
            ingested,
            malformed_lines,
            geo_kept,
            date_kept,
            keyword_matched,
            unique,
        },
    ))
}

/// The loaded scoring substrate: lexicon, vectors, axes, and the scorer.
pub struct Frame {
    pub lexicon: MoralLexicon,
    pub table: EmbeddingTable,
    pub axes: crate::framing::AxisSet,
    pub scorer: Scorer,
    pub lexicon_load: LexiconLoadReport,
    pub embedding_load: EmbeddingLoadReport,
}

/// Load the lexicon and embeddings (restricted to terms the run can use) and
/// build the five axes. The baseline starts at zero.
pub fn build_frame(
    lexicon_path: &Path,
    sentiment_path: Option<&Path>,
    embeddings_path: &Path,
    documents: &[Document],
    moral_threshold: f64,
) -> Result<Frame> {
    let (lexicon, lexicon_load) =
        MoralLexicon::load(lexicon_path, sentiment_path).map_err(|e| e.in_stage("lexicon"))?;
    let (lexicon, lexicon_load) = if moral_threshold > 0.0 {
        lexicon
            .with_min_probability(moral_threshold)
            .map_err(|e| e.in_stage("lexicon"))?
    } else {
        (lexicon, lexicon_load)
    };

    let mut vocab: std::collections::HashSet<String> =
        lexicon.terms().map(str::to_string).collect();
    for doc in documents {
        vocab.extend(doc.tokens.iter().cloned());
    }
    let (table, embedding_load) = EmbeddingTable::load(embeddings_path, Some(&vocab))
        .map_err(|e| e.in_stage("embeddings"))?;

    let axes = framing::build_axes(&lexicon, &table).map_err(|e| e.in_stage("axes"))?;
    let scorer = Scorer::new(&lexicon, &axes, &table);
    Ok(Frame {
        lexicon,
        table,
        axes,
        scorer,
        lexicon_load,
        embedding_load,
    })
}

impl Frame {
    /// Drop non-moral documents, returning per-group counts of the
    /// survivors. Errors when nothing survives.
    pub fn moral_filter(&self, documents: Vec<Document>) -> Result<(Vec<Document>, GroupCounts)> {
        let moral_docs: Vec<Document> = documents
            .into_iter()
            .filter(|d| self.scorer.is_moral(&d.tokens))
            .collect();
        if moral_docs.is_empty() {
            return Err(Error::EmptyMoralCorpus.in_stage("moral_filter"));
        }
        let moral = GroupCounts::tally(&moral_docs);
        Ok((moral_docs, moral))
    }

    /// Resolve the baseline for a mode over the given (moral) documents and
    /// apply it to both the axes and the scorer.
    pub fn apply_baseline(
        &mut self,
        mode: BaselineMode,
        documents: &[Document],
    ) -> Result<[f64; 5]> {
        let baseline = match mode {
            BaselineMode::Zero => [0.0; 5],
            BaselineMode::Corpus => self
                .scorer
                .corpus_baseline(documents.iter().map(|d| d.tokens.as_slice()))
                .map_err(|e| e.in_stage("baseline"))?,
        };
        self.axes = self.axes.clone().with_baseline(baseline);
        self.scorer.set_baseline(baseline);
        Ok(baseline)
    }

    /// Score every document (all must be moral).
    pub fn score_all(&self, documents: &[Document]) -> Vec<framing::MoralScore> {
        documents
            .par_iter()
            .map(|d| {
                self.scorer
                    .score(&d.doc_id, &d.tokens)
                    .expect("moral filter guarantees a contributing token")
            })
            .collect()
    }
}

/// Run the whole pipeline described by `config`, writing all artifacts into
/// `config.out_dir` and returning the manifest.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|source| Error::Write {
        path: config.out_dir.clone(),
        source,
    })?;
    let failed_marker = config.out_dir.join("_FAILED");
    let _ = std::fs::remove_file(&failed_marker);

    match execute(config) {
        Ok(manifest) => Ok(manifest),
        Err(error) => {
            let stage = error.stage().unwrap_or("setup");
            let _ = std::fs::write(&failed_marker, format!("stage: {stage}\nerror: {error}\n"));
            Err(error)
        }
    }
}

fn execute(config: &PipelineConfig) -> Result<RunManifest> {
    let filter = config.corpus_filter().map_err(|e| e.in_stage("setup"))?;

    // ingest through dedup
    let (documents, ingest) = ingest_documents(&config.corpus, &filter)?;

    // lexicon, embeddings, axes
    let mut frame = build_frame(
        &config.lexicon,
        config.sentiment.as_deref(),
        &config.embeddings,
        &documents,
        config.moral_threshold,
    )?;

    // moral filter
    let (moral_docs, moral) = frame.moral_filter(documents)?;
    let nonmoral_dropped = ingest.unique.total - moral.total;

    // baseline pass, then scoring
    frame.apply_baseline(config.baseline, &moral_docs)?;
    let scores = frame.score_all(&moral_docs);
    let doc_ids: Vec<String> = scores.iter().map(|s| s.doc_id.clone()).collect();

    let pole_embeddings: Vec<MoralEmbedding> = scores
        .iter()
        .map(|s| framing::embed(s, EmbeddingMode::Poles))
        .collect();
    let cluster_points: Vec<Vec<f64>> = match config.embedding_mode {
        EmbeddingMode::Poles => pole_embeddings.iter().map(|e| e.values.to_vec()).collect(),
        EmbeddingMode::Frameaxis => scores
            .iter()
            .map(|s| framing::embed(s, EmbeddingMode::Frameaxis).values.to_vec())
            .collect(),
    };
    let cluster_points = if config.analytics.standardize {
        standardize(cluster_points)
    } else {
        cluster_points
    };

    // clustering and model selection
    let seed_cluster = seeds::stage_seed(config.seed, "cluster");
    let select_cfg = SelectKConfig {
        seed: seed_cluster,
        restarts: config.analytics.restarts,
        max_iter: config.analytics.max_iter,
        tol: config.analytics.tol,
        min_cluster_fraction: config.analytics.min_cluster_fraction,
        silhouette_cap: config.analytics.silhouette_cap_opt(),
    };
    let (rows, model, silhouette): (Vec<SelectionRow>, ClusterModel, SilhouetteReport) =
        match config.k {
            Some(k) => {
                let model = cluster::kmeans(
                    &cluster_points,
                    &cluster::KmeansConfig {
                        k,
                        seed: seed_cluster,
                        restarts: config.analytics.restarts,
                        max_iter: config.analytics.max_iter,
                        tol: config.analytics.tol,
                    },
                )
                .map_err(|e| e.in_stage("cluster"))?;
                let silhouette = cluster::silhouette(
                    &cluster_points,
                    &model.labels,
                    select_cfg.silhouette_cap,
                    seed_cluster,
                )
                .map_err(|e| e.in_stage("cluster"))?;
                let sizes = model.sizes();
                let n = cluster_points.len() as f64;
                let rows = vec![SelectionRow {
                    k,
                    mean_silhouette: silhouette.mean,
                    inertia: model.inertia,
                    min_fraction: sizes.iter().copied().min().unwrap() as f64 / n,
                    max_fraction: sizes.iter().copied().max().unwrap() as f64 / n,
                    chosen: true,
                }];
                (rows, model, silhouette)
            }
            None => {
                let k_hi = config.k_range.hi.min(cluster_points.len());
                let result =
                    cluster::select_k(&cluster_points, config.k_range.lo, k_hi, &select_cfg)
                        .map_err(|e| e.in_stage("cluster"))?;
                let silhouette = cluster::silhouette(
                    &cluster_points,
                    &result.model.labels,
                    select_cfg.silhouette_cap,
                    seed_cluster,
                )
                .map_err(|e| e.in_stage("cluster"))?;
                (result.rows, result.model, silhouette)
            }
        };

    // activation summaries (always over pole-mode embeddings)
    let activations = cluster::cluster_activations(&pole_embeddings, &model.labels)
        .map_err(|e| e.in_stage("activations"))?;

    // cluster-distinctive vocabulary
    let token_lists: Vec<Vec<String>> = moral_docs.iter().map(|d| d.tokens.clone()).collect();
    let vocabulary = cluster::distinctive_vocabulary(
        &token_lists,
        &model.labels,
        config.analytics.min_count,
        config.analytics.top_n,
    )
    .map_err(|e| e.in_stage("vocabulary"))?;

    // foundation-aligned vocabulary over moral-document term frequencies
    let mut term_counts: BTreeMap<String, u64> = BTreeMap::new();
    for doc in &moral_docs {
        for token in &doc.tokens {
            *term_counts.entry(token.clone()).or_insert(0) += 1;
        }
    }
    let foundation_vocab = framing::foundation_vocabulary(
        &term_counts,
        &frame.lexicon,
        &frame.axes,
        &frame.table,
        config.analytics.top_n,
    );

    // daily counts over moral documents
    let daily = corpus::daily_counts(moral_docs.iter(), &filter.dates);

    // t-SNE (optionally on a seeded subsample)
    let seed_tsne = seeds::stage_seed(config.seed, "tsne");
    let (tsne_indices, tsne_points): (Vec<usize>, Vec<Vec<f64>>) = match config.tsne.subsample {
        Some(cap) if cluster_points.len() > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_tsne);
            let n = cluster_points.len();
            let mut pool: Vec<usize> = (0..n).collect();
            for i in 0..cap {
                let j = rng.random_range(i..n);
                pool.swap(i, j);
            }
            let mut picked = pool[..cap].to_vec();
            picked.sort_unstable();
            let points = picked.iter().map(|&i| cluster_points[i].clone()).collect();
            (picked, points)
        }
        _ => ((0..cluster_points.len()).collect(), cluster_points.clone()),
    };
    let projection = tsne::tsne(&tsne_points, &config.tsne.to_tsne_config(seed_tsne))
        .map_err(|e| e.in_stage("tsne"))?;

    // exports
    let inputs = input_digests(config)?;
    let run_id = compute_run_id(config, &inputs);
    let out = |name: &str| config.out_dir.join(name);

    export::write_scores_csv(&out("scores.csv"), &scores, &run_id)
        .map_err(|e| e.in_stage("export"))?;
    export::write_labels_csv(&out("labels.csv"), &doc_ids, &model.labels, &run_id)
        .map_err(|e| e.in_stage("export"))?;
    export::write_selection_csv(&out("selection.csv"), &rows, &run_id)
        .map_err(|e| e.in_stage("export"))?;
    export::write_json(
        &out("clusters.json"),
        &export::ClustersArtifact {
            run_id: &run_id,
            k: model.k,
            sizes: model.sizes(),
            inertia: model.inertia,
            mean_silhouette: silhouette.mean,
            centroids: &model.centroids,
            activations: &activations,
        },
    )
    .map_err(|e| e.in_stage("export"))?;
    export::write_json(
        &out("vocabulary.json"),
        &export::VocabularyArtifact {
            run_id: &run_id,
            report: &vocabulary,
        },
    )
    .map_err(|e| e.in_stage("export"))?;
    export::write_json(
        &out("foundation_vocab.json"),
        &export::FoundationVocabArtifact {
            run_id: &run_id,
            top_n: config.analytics.top_n,
            foundations: &foundation_vocab,
        },
    )
    .map_err(|e| e.in_stage("export"))?;
    export::write_daily_counts_csv(&out("daily_counts.csv"), &daily, &run_id)
        .map_err(|e| e.in_stage("export"))?;
    let tsne_ids: Vec<String> = tsne_indices.iter().map(|&i| doc_ids[i].clone()).collect();
    let tsne_labels: Vec<usize> = tsne_indices.iter().map(|&i| model.labels[i]).collect();
    export::write_tsne_csv(
        &out("tsne.csv"),
        &tsne_ids,
        &projection.coordinates,
        &tsne_labels,
        &run_id,
    )
    .map_err(|e| e.in_stage("export"))?;

    let manifest = RunManifest {
        run_id,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        inputs,
        config: config.clone(),
        seeds: StageSeeds {
            root: config.seed,
            cluster: seed_cluster,
            tsne: seed_tsne,
        },
        embedding_dimension: frame.table.dimension(),
        embedding_terms: frame.table.len(),
        embedding_load: frame.embedding_load.clone(),
        lexicon_load: frame.lexicon_load.clone(),
        scorable_terms: frame.scorer.scorable_terms(),
        axes: frame
            .axes
            .axes
            .iter()
            .map(|a| AxisSummary {
                foundation: a.foundation,
                virtue_terms_resolved: a.virtue_terms_resolved,
                virtue_terms_requested: a.virtue_terms_requested,
                vice_terms_resolved: a.vice_terms_resolved,
                vice_terms_requested: a.vice_terms_requested,
                baseline_bias: frame.axes.baseline_bias[a.foundation.index()],
            })
            .collect(),
        stage_counts: StageCounts {
            ingested: ingest.ingested,
            malformed_lines: ingest.malformed_lines,
            geo_kept: ingest.geo_kept,
            date_kept: ingest.date_kept,
            keyword_matched: ingest.keyword_matched,
            unique: ingest.unique,
            moral,
            nonmoral_dropped,
            tsne_points: tsne_points.len(),
        },
        chosen_k: model.k,
        inertia: model.inertia,
        mean_silhouette: silhouette.mean,
        artifacts: ARTIFACTS.iter().map(|s| s.to_string()).collect(),
    };
    export::write_json(&out("manifest.json"), &manifest).map_err(|e| e.in_stage("export"))?;
    Ok(manifest)
}

fn input_digests(config: &PipelineConfig) -> Result<Vec<InputDigest>> {
    let mut paths = vec![
        config.corpus.clone(),
        config.embeddings.clone(),
        config.lexicon.clone(),
    ];
    if let Some(p) = &config.sentiment {
        paths.push(p.clone());
    }
    if let Some(p) = &config.keywords_file {
        paths.push(p.clone());
    }
    paths
        .into_iter()
        .map(|path| {
            let sha256 = sha256_file(&path)?;
            Ok(InputDigest { path, sha256 })
        })
        .collect()
}

/// Z-score each column; zero-variance columns are left centered.
fn standardize(mut points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if points.is_empty() {
        return points;
    }
    let n = points.len() as f64;
    let dim = points[0].len();
    for d in 0..dim {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points
            .iter()
            .map(|p| (p[d] - mean) * (p[d] - mean))
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        for p in points.iter_mut() {
            p[d] -= mean;
            if sd > 0.0 {
                p[d] /= sd;
            }
        }
    }
    points
}
