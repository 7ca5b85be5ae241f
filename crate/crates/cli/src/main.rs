//! `moralmap` — batch analysis of short-text corpora in a moral-foundation
//! embedding space.
//!
//! `pipeline` runs everything end to end from a config file and/or flags;
//! the staged subcommands (`ingest`, `score`, `cluster`, `project`,
//! `report`) operate on each other's artifacts for partial re-runs.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use moralmap_core::cluster;
use moralmap_core::config::{KRange, PipelineConfig};
use moralmap_core::corpus::{self, BoundingBox, CorpusFilter, DateRange, KeywordSet};
use moralmap_core::export;
use moralmap_core::framing::{BaselineMode, EmbeddingMode, MoralEmbedding};
use moralmap_core::pipeline::{self, sha256_file};
use moralmap_core::seeds;
use moralmap_core::tsne;

#[derive(Parser)]
#[command(name = "moralmap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, normalize, and dedup a JSONL corpus into documents.jsonl.
    Ingest(IngestArgs),
    /// Score documents on the five foundation axes into scores.csv.
    Score(ScoreArgs),
    /// Cluster scored documents; writes labels.csv, selection.csv, clusters.json.
    Cluster(ClusterArgs),
    /// Emit 2-D t-SNE coordinates for scored documents into tsne.csv.
    Project(ProjectArgs),
    /// Emit vocabulary and daily-count reports from documents and labels.
    Report(ReportArgs),
    /// Run the full pipeline and write every artifact plus manifest.json.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct FilterArgs {
    /// Bounding box `lat_min,lon_min,lat_max,lon_max`.
    #[arg(long, value_parser = parse_bbox)]
    bbox: Option<Bbox>,
    /// Start date (inclusive), e.g. 2020-02-24.
    #[arg(long)]
    from: Option<chrono::NaiveDate>,
    /// End date (inclusive), e.g. 2020-08-24.
    #[arg(long)]
    to: Option<chrono::NaiveDate>,
    /// CSV of `keyword,group` rows replacing the built-in search terms.
    #[arg(long)]
    keywords_file: Option<PathBuf>,
    /// Admit posts without coordinates when they carry a non-empty place.
    #[arg(long)]
    allow_place: bool,
}

#[derive(Clone)]
struct Bbox([f64; 4]);

fn parse_bbox(s: &str) -> Result<Bbox, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err("expected lat_min,lon_min,lat_max,lon_max".into());
    }
    let mut values = [0.0; 4];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| format!("bad coordinate `{part}`"))?;
    }
    Ok(Bbox(values))
}

fn parse_baseline(s: &str) -> Result<BaselineMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_mode(s: &str) -> Result<EmbeddingMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_k_range(s: &str) -> Result<KRange, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl FilterArgs {
    fn to_filter(&self) -> anyhow::Result<CorpusFilter> {
        let defaults = CorpusFilter::default();
        let bbox = match &self.bbox {
            Some(Bbox(b)) => BoundingBox::new(b[0], b[1], b[2], b[3])?,
            None => defaults.bbox,
        };
        let dates = DateRange::new(
            self.from.unwrap_or(defaults.dates.start),
            self.to.unwrap_or(defaults.dates.end),
        )?;
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

#[derive(Args)]
struct IngestArgs {
    /// JSONL corpus, one post object per line.
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// documents.jsonl from `ingest`.
    #[arg(long)]
    documents: PathBuf,
    /// Plain-text word-vector file.
    #[arg(long)]
    embeddings: PathBuf,
    /// Lexicon CSV (`word,care_p,...,sanctity_p[,sentiment]`).
    #[arg(long)]
    lexicon: PathBuf,
    /// Sentiment CSV (`word,score`), required when the lexicon carries none.
    #[arg(long)]
    sentiment: Option<PathBuf>,
    /// Intensity reference point: corpus | zero.
    #[arg(long, default_value = "corpus", value_parser = parse_baseline)]
    baseline: BaselineMode,
    /// Minimum dominant-foundation probability for moral membership.
    #[arg(long, default_value_t = 0.0)]
    moral_threshold: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// scores.csv from `score` or `pipeline`.
    #[arg(long)]
    scores: PathBuf,
    /// Fixed k (skips the sweep).
    #[arg(long)]
    k: Option<usize>,
    /// Sweep range `lo..hi` (inclusive).
    #[arg(long, value_parser = parse_k_range)]
    k_range: Option<KRange>,
    /// Root seed; clustering derives its stage seed from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// 10-vector layout to cluster: poles | frameaxis.
    #[arg(long, default_value = "poles", value_parser = parse_mode)]
    embedding_mode: EmbeddingMode,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    /// scores.csv from `score` or `pipeline`.
    #[arg(long)]
    scores: PathBuf,
    /// labels.csv from `cluster` (joined into the output).
    #[arg(long)]
    labels: PathBuf,
    /// Root seed; the projection derives its stage seed from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// 10-vector layout to project: poles | frameaxis.
    #[arg(long, default_value = "poles", value_parser = parse_mode)]
    embedding_mode: EmbeddingMode,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// documents.jsonl from `ingest`.
    #[arg(long)]
    documents: PathBuf,
    /// labels.csv from `cluster`.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    sentiment: Option<PathBuf>,
    /// Start date for the daily-count series.
    #[arg(long)]
    from: Option<chrono::NaiveDate>,
    /// End date for the daily-count series.
    #[arg(long)]
    to: Option<chrono::NaiveDate>,
    /// Minimum dominant-foundation probability for moral membership.
    #[arg(long, default_value_t = 0.0)]
    moral_threshold: f64,
    /// Minimum in-cluster count for distinctive terms.
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Terms per ranked list.
    #[arg(long, default_value_t = 20)]
    top_n: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML config mirroring these flags; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    sentiment: Option<PathBuf>,
    #[command(flatten)]
    filter: FilterArgs,
    /// Intensity reference point: corpus | zero.
    #[arg(long, value_parser = parse_baseline)]
    baseline: Option<BaselineMode>,
    /// 10-vector layout: poles | frameaxis.
    #[arg(long, value_parser = parse_mode)]
    embedding_mode: Option<EmbeddingMode>,
    /// Fixed k (skips the sweep).
    #[arg(long)]
    k: Option<usize>,
    /// Sweep range `lo..hi` (inclusive).
    #[arg(long, value_parser = parse_k_range)]
    k_range: Option<KRange>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Ingest(args) => run_ingest(args),
        Command::Score(args) => run_score(args),
        Command::Cluster(args) => run_cluster(args),
        Command::Project(args) => run_project(args),
        Command::Report(args) => run_report(args),
        Command::Pipeline(args) => run_pipeline_command(args),
    }
}

fn ensure_out_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Command-scoped run id: digest of the command name, input digests, and
/// parameters, so staged artifacts are traceable like pipeline ones.
fn command_run_id(
    command: &str,
    inputs: &[&Path],
    params: &serde_json::Value,
) -> anyhow::Result<String> {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    for path in inputs {
        hasher.update(sha256_file(path)?.as_bytes());
    }
    hasher.update(params.to_string().as_bytes());
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn run_ingest(args: IngestArgs) -> anyhow::Result<()> {
    let filter = args.filter.to_filter()?;
    let (documents, report) = pipeline::ingest_documents(&args.corpus, &filter)?;
    ensure_out_dir(&args.out_dir)?;
    export::write_documents_jsonl(&args.out_dir.join("documents.jsonl"), &documents)?;
    println!("ingested           {}", report.ingested);
    println!("malformed lines    {}", report.malformed_lines);
    println!("geo kept           {}", report.geo_kept);
    println!("date kept          {}", report.date_kept);
    println!(
        "keyword matched    {} (blm {}, defund {}, all/blue {})",
        report.keyword_matched.total,
        report.keyword_matched.black_lives_matter,
        report.keyword_matched.defund_the_police,
        report.keyword_matched.all_blue_lives_matter
    );
    println!(
        "unique texts       {} (blm {}, defund {}, all/blue {})",
        report.unique.total,
        report.unique.black_lives_matter,
        report.unique.defund_the_police,
        report.unique.all_blue_lives_matter
    );
    println!("wrote {}", args.out_dir.join("documents.jsonl").display());
    Ok(())
}

fn run_score(args: ScoreArgs) -> anyhow::Result<()> {
    let documents = export::read_documents_jsonl(&args.documents)?;
    let mut frame = pipeline::build_frame(
        &args.lexicon,
        args.sentiment.as_deref(),
        &args.embeddings,
        &documents,
        args.moral_threshold,
    )?;
    let total = documents.len();
    let (moral_docs, moral) = frame.moral_filter(documents)?;
    let baseline = frame.apply_baseline(args.baseline, &moral_docs)?;
    let scores = frame.score_all(&moral_docs);

    let mut inputs: Vec<&Path> = vec![&args.documents, &args.embeddings, &args.lexicon];
    if let Some(p) = &args.sentiment {
        inputs.push(p);
    }
    let run_id = command_run_id(
        "score",
        &inputs,
        &serde_json::json!({ "baseline": args.baseline, "moral_threshold": args.moral_threshold }),
    )?;
    ensure_out_dir(&args.out_dir)?;
    export::write_scores_csv(&args.out_dir.join("scores.csv"), &scores, &run_id)?;
    println!(
        "moral documents    {} of {} (dropped {})",
        moral.total,
        total,
        total - moral.total
    );
    println!(
        "baseline           [{}]",
        baseline.map(|b| format!("{b:.4}")).join(", ")
    );
    println!("wrote {}", args.out_dir.join("scores.csv").display());
    Ok(())
}

fn points_for_mode(rows: &[export::ScoreRow], mode: EmbeddingMode) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| match mode {
            EmbeddingMode::Poles => r.poles.to_vec(),
            EmbeddingMode::Frameaxis => r.frameaxis.to_vec(),
        })
        .collect()
}

fn run_cluster(args: ClusterArgs) -> anyhow::Result<()> {
    let rows = export::read_scores_csv(&args.scores)?;
    if rows.is_empty() {
        bail!("no scored documents in {}", args.scores.display());
    }
    let points = points_for_mode(&rows, args.embedding_mode);
    let doc_ids: Vec<String> = rows.iter().map(|r| r.doc_id.clone()).collect();
    let seed = seeds::stage_seed(args.seed, "cluster");
    let select_cfg = cluster::SelectKConfig::new(seed);

    let (selection_rows, model) = match (args.k, args.k_range) {
        (Some(_), Some(_)) => bail!("--k and --k-range are mutually exclusive"),
        (Some(k), None) => {
            let model = cluster::kmeans(&points, &cluster::KmeansConfig::new(k, seed))?;
            let silhouette =
                cluster::silhouette(&points, &model.labels, select_cfg.silhouette_cap, seed)?;
            let sizes = model.sizes();
            let n = points.len() as f64;
            let row = cluster::SelectionRow {
                k,
                mean_silhouette: silhouette.mean,
                inertia: model.inertia,
                min_fraction: sizes.iter().copied().min().unwrap() as f64 / n,
                max_fraction: sizes.iter().copied().max().unwrap() as f64 / n,
                chosen: true,
            };
            (vec![row], model)
        }
        (None, k_range) => {
            let range = k_range.unwrap_or_default();
            let hi = range.hi.min(points.len());
            let result = cluster::select_k(&points, range.lo, hi, &select_cfg)?;
            (result.rows, result.model)
        }
    };

    let run_id = command_run_id(
        "cluster",
        &[&args.scores],
        &serde_json::json!({
            "k": args.k,
            "k_range": args.k_range.map(|r| r.to_string()),
            "seed": args.seed,
            "embedding_mode": args.embedding_mode,
        }),
    )?;
    ensure_out_dir(&args.out_dir)?;
    export::write_labels_csv(
        &args.out_dir.join("labels.csv"),
        &doc_ids,
        &model.labels,
        &run_id,
    )?;
    export::write_selection_csv(
        &args.out_dir.join("selection.csv"),
        &selection_rows,
        &run_id,
    )?;

    let pole_embeddings: Vec<MoralEmbedding> = rows
        .iter()
        .map(|r| MoralEmbedding {
            doc_id: r.doc_id.clone(),
            mode: EmbeddingMode::Poles,
            values: r.poles,
        })
        .collect();
    let activations = cluster::cluster_activations(&pole_embeddings, &model.labels)?;
    let chosen = selection_rows.iter().find(|r| r.chosen).unwrap();
    export::write_json(
        &args.out_dir.join("clusters.json"),
        &export::ClustersArtifact {
            run_id: &run_id,
            k: model.k,
            sizes: model.sizes(),
            inertia: model.inertia,
            mean_silhouette: chosen.mean_silhouette,
            centroids: &model.centroids,
            activations: &activations,
        },
    )?;
    println!("chosen k           {}", model.k);
    println!("cluster sizes      {:?}", model.sizes());
    println!("mean silhouette    {:.4}", chosen.mean_silhouette);
    println!(
        "wrote labels.csv, selection.csv, clusters.json in {}",
        args.out_dir.display()
    );
    Ok(())
}

fn run_project(args: ProjectArgs) -> anyhow::Result<()> {
    let rows = export::read_scores_csv(&args.scores)?;
    let labels = export::read_labels_csv(&args.labels)?;
    let label_map: HashMap<&str, usize> = labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut doc_labels = Vec::with_capacity(rows.len());
    for row in &rows {
        let label = label_map.get(row.doc_id.as_str()).with_context(|| {
            format!("doc {} missing from {}", row.doc_id, args.labels.display())
        })?;
        doc_labels.push(*label);
    }

    let points = points_for_mode(&rows, args.embedding_mode);
    let seed = seeds::stage_seed(args.seed, "tsne");
    let config = tsne::TsneConfig {
        perplexity: args.perplexity,
        iterations: args.iterations,
        seed,
        ..tsne::TsneConfig::default()
    };
    let projection = tsne::tsne(&points, &config)?;

    let run_id = command_run_id(
        "project",
        &[&args.scores, &args.labels],
        &serde_json::json!({
            "seed": args.seed,
            "embedding_mode": args.embedding_mode,
            "perplexity": args.perplexity,
            "iterations": args.iterations,
        }),
    )?;
    ensure_out_dir(&args.out_dir)?;
    let doc_ids: Vec<String> = rows.iter().map(|r| r.doc_id.clone()).collect();
    export::write_tsne_csv(
        &args.out_dir.join("tsne.csv"),
        &doc_ids,
        &projection.coordinates,
        &doc_labels,
        &run_id,
    )?;
    println!(
        "projected {} documents (final KL {:.4})",
        doc_ids.len(),
        projection.kl_trace.last().copied().unwrap_or(f64::NAN)
    );
    println!("wrote {}", args.out_dir.join("tsne.csv").display());
    Ok(())
}

fn run_report(args: ReportArgs) -> anyhow::Result<()> {
    let documents = export::read_documents_jsonl(&args.documents)?;
    let labels = export::read_labels_csv(&args.labels)?;
    let doc_map: HashMap<&str, &corpus::Document> =
        documents.iter().map(|d| (d.doc_id.as_str(), d)).collect();

    let mut labeled_docs = Vec::with_capacity(labels.len());
    let mut label_values = Vec::with_capacity(labels.len());
    for (doc_id, label) in &labels {
        let doc = doc_map
            .get(doc_id.as_str())
            .with_context(|| format!("doc {doc_id} missing from {}", args.documents.display()))?;
        labeled_docs.push((*doc).clone());
        label_values.push(*label);
    }

    let frame = pipeline::build_frame(
        &args.lexicon,
        args.sentiment.as_deref(),
        &args.embeddings,
        &labeled_docs,
        args.moral_threshold,
    )?;

    let token_lists: Vec<Vec<String>> = labeled_docs.iter().map(|d| d.tokens.clone()).collect();
    let vocabulary =
        cluster::distinctive_vocabulary(&token_lists, &label_values, args.min_count, args.top_n)?;

    let mut term_counts = std::collections::BTreeMap::new();
    for doc in &labeled_docs {
        for token in &doc.tokens {
            *term_counts.entry(token.clone()).or_insert(0u64) += 1;
        }
    }
    let foundation_vocab = moralmap_core::framing::foundation_vocabulary(
        &term_counts,
        &frame.lexicon,
        &frame.axes,
        &frame.table,
        args.top_n,
    );

    let defaults = DateRange::default();
    let range = DateRange::new(
        args.from.unwrap_or(defaults.start),
        args.to.unwrap_or(defaults.end),
    )?;
    let daily = corpus::daily_counts(labeled_docs.iter(), &range);

    let mut inputs: Vec<&Path> = vec![
        &args.documents,
        &args.labels,
        &args.embeddings,
        &args.lexicon,
    ];
    if let Some(p) = &args.sentiment {
        inputs.push(p);
    }
    let run_id = command_run_id(
        "report",
        &inputs,
        &serde_json::json!({ "min_count": args.min_count, "top_n": args.top_n }),
    )?;
    ensure_out_dir(&args.out_dir)?;
    export::write_json(
        &args.out_dir.join("vocabulary.json"),
        &export::VocabularyArtifact {
            run_id: &run_id,
            report: &vocabulary,
        },
    )?;
    export::write_json(
        &args.out_dir.join("foundation_vocab.json"),
        &export::FoundationVocabArtifact {
            run_id: &run_id,
            top_n: args.top_n,
            foundations: &foundation_vocab,
        },
    )?;
    export::write_daily_counts_csv(&args.out_dir.join("daily_counts.csv"), &daily, &run_id)?;
    println!(
        "wrote vocabulary.json, foundation_vocab.json, daily_counts.csv in {}",
        args.out_dir.display()
    );
    Ok(())
}

fn run_pipeline_command(args: PipelineArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::from_toml_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.corpus {
        config.corpus = v;
    }
    if let Some(v) = args.embeddings {
        config.embeddings = v;
    }
    if let Some(v) = args.lexicon {
        config.lexicon = v;
    }
    if let Some(v) = args.sentiment {
        config.sentiment = Some(v);
    }
    if let Some(v) = args.filter.keywords_file.clone() {
        config.keywords_file = Some(v);
    }
    if let Some(Bbox(b)) = args.filter.bbox {
        config.bbox = b;
    }
    if let Some(v) = args.filter.from {
        config.from = v;
    }
    if let Some(v) = args.filter.to {
        config.to = v;
    }
    if args.filter.allow_place {
        config.allow_place = true;
    }
    if let Some(v) = args.baseline {
        config.baseline = v;
    }
    if let Some(v) = args.embedding_mode {
        config.embedding_mode = v;
    }
    if let Some(v) = args.k {
        config.k = Some(v);
    }
    if let Some(v) = args.k_range {
        config.k_range = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.out_dir {
        config.out_dir = v;
    }

    let manifest = pipeline::run_pipeline(&config)?;
    let c = &manifest.stage_counts;
    println!("run id             {}", manifest.run_id);
    println!("ingested           {}", c.ingested);
    println!("geo kept           {}", c.geo_kept);
    println!("date kept          {}", c.date_kept);
    println!("keyword matched    {}", c.keyword_matched.total);
    println!("unique texts       {}", c.unique.total);
    println!(
        "moral documents    {} (dropped {})",
        c.moral.total, c.nonmoral_dropped
    );
    println!("chosen k           {}", manifest.chosen_k);
    println!("mean silhouette    {:.4}", manifest.mean_silhouette);
    println!("t-SNE points       {}", c.tsne_points);
    println!(
        "artifacts in {}: {}",
        config.out_dir.display(),
        manifest.artifacts.join(", ")
    );
    Ok(())
}
