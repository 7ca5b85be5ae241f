//! Clustering and corpus analytics: Lloyd's k-means with k-means++ seeding,
//! silhouette evaluation, silhouette-guided model selection, per-cluster
//! activation summaries, and cluster-distinctive vocabulary.
//!
//! Everything here is a pure function of (inputs, seed): restarts use derived
//! substream seeds, parallel loops collect in index order, and term tables
//! iterate sorted, so outputs are byte-stable across runs and worker counts.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::framing::{EmbeddingMode, MoralEmbedding};
use crate::seeds;

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// k-means parameters. Defaults follow the engine-wide convention: 10
/// restarts, 300 iterations, relative-improvement tolerance 1e-6.
#[derive(Debug, Clone, Serialize)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl KmeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KmeansConfig {
            k,
            seed,
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Output of a k-means fit: the best restart by inertia.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
}

impl ClusterModel {
    /// Number of points per cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Recompute inertia from labels and centroids.
    pub fn recompute_inertia(&self, points: &[Vec<f64>]) -> f64 {
        points
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| sq_dist(p, &self.centroids[l]))
            .sum()
    }
}

fn validate_points(points: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidInput("no points".into()));
    };
    let dim = first.len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::LengthMismatch {
                left: dim,
                right: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in point {i}"
            )));
        }
    }
    Ok(dim)
}

/// Best-of-restarts Lloyd's algorithm with k-means++ seeding.
///
/// Empty clusters are reseeded to the point farthest from its assigned
/// centroid (among clusters that can spare one). Iteration stops when the
/// relative inertia improvement falls below `tol` or after `max_iter`.
pub fn kmeans(points: &[Vec<f64>], cfg: &KmeansConfig) -> Result<ClusterModel> {
    validate_points(points)?;
    let n = points.len();
    if cfg.k < 2 {
        return Err(Error::InvalidInput(format!("k = {} must be >= 2", cfg.k)));
    }
    if n < cfg.k {
        return Err(Error::InvalidInput(format!(
            "{n} points cannot form {} clusters",
            cfg.k
        )));
    }
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::InvalidInput(
            "restarts and max_iter must be >= 1".into(),
        ));
    }

    let mut best: Option<ClusterModel> = None;
    for restart in 0..cfg.restarts {
        let run_seed = seeds::substream_seed(cfg.seed, restart as u64);
        let model = lloyd_once(points, cfg, run_seed)?;
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd_once(points: &[Vec<f64>], cfg: &KmeansConfig, run_seed: u64) -> Result<ClusterModel> {
    let n = points.len();
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let mut centroids = kmeanspp_init(points, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut prev_inertia = f64::INFINITY;
    let mut iterations = 0;

    for iter in 0..cfg.max_iter {
        iterations = iter + 1;

        // Assignment: nearest centroid, ties to the lowest index.
        let assigned: Vec<usize> = points
            .par_iter()
            .map(|p| {
                let mut best_c = 0;
                let mut best_d = f64::INFINITY;
                for (c, centroid) in centroids.iter().enumerate() {
                    let d = sq_dist(p, centroid);
                    if d < best_d {
                        best_d = d;
                        best_c = c;
                    }
                }
                best_c
            })
            .collect();
        labels = assigned;

        // Reseed empty clusters from the point farthest from its centroid,
        // stealing only from clusters that keep at least one member.
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let mut steal: Option<(usize, f64)> = None;
            for (i, p) in points.iter().enumerate() {
                if sizes[labels[i]] < 2 {
                    continue;
                }
                let d = sq_dist(p, &centroids[labels[i]]);
                if steal.is_none_or(|(_, best)| d > best) {
                    steal = Some((i, d));
                }
            }
            let (i, _) = steal.expect("n >= k guarantees a donatable point");
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] = 1;
            centroids[empty] = points[i].clone();
        }

        // Update: centroids become the means of their members.
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            centroids[c] = sum.into_iter().map(|s| s / sizes[c] as f64).collect();
        }

        let inertia: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, &centroids[l]))
            .sum();
        debug_assert!(
            inertia <= prev_inertia * (1.0 + 1e-12) + 1e-12,
            "Lloyd iteration increased inertia: {prev_inertia} -> {inertia}"
        );

        if prev_inertia.is_finite() {
            let improvement = (prev_inertia - inertia) / prev_inertia.max(f64::MIN_POSITIVE);
            if improvement < cfg.tol {
                prev_inertia = inertia;
                break;
            }
        }
        prev_inertia = inertia;
    }

    Ok(ClusterModel {
        k,
        centroids,
        labels,
        inertia: prev_inertia,
        seed: cfg.seed,
        restarts: cfg.restarts,
        iterations,
    })
}

/// k-means++: first centroid uniform, the rest drawn proportional to the
/// squared distance from the nearest already-chosen centroid.
fn kmeanspp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let first = rng.random_range(0..n);
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                target -= w;
                if target <= 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            chosen.unwrap_or_else(|| {
                // float underflow at the tail: last positive-weight index
                d2.iter().rposition(|&w| w > 0.0).unwrap()
            })
        } else {
            // all points coincide with chosen centroids; duplicates are
            // resolved later by empty-cluster reseeding
            rng.random_range(0..n)
        };
        let next = points[idx].clone();
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, &next);
            if d < d2[i] {
                d2[i] = d;
            }
        }
        centroids.push(next);
    }
    centroids
}

/// How a capped silhouette was sampled.
#[derive(Debug, Clone, Serialize)]
pub struct SilhouetteSample {
    pub cap: usize,
    pub seed: u64,
    pub size: usize,
}

/// Per-sample silhouette values and their mean.
#[derive(Debug, Clone, Serialize)]
pub struct SilhouetteReport {
    pub per_sample: Vec<f64>,
    pub mean: f64,
    /// Present when the computation ran on a seeded subsample.
    pub sample: Option<SilhouetteSample>,
}

/// Silhouette coefficient `s(i) = (b - a) / max(a, b)` with `a` the mean
/// distance to the point's own cluster (excluding itself) and `b` the
/// smallest mean distance to any other cluster. Points in singleton clusters
/// score 0. When `n > sample_cap`, computed on a seeded uniform subsample.
pub fn silhouette(
    points: &[Vec<f64>],
    labels: &[usize],
    sample_cap: Option<usize>,
    seed: u64,
) -> Result<SilhouetteReport> {
    validate_points(points)?;
    if points.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: labels.len(),
        });
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::InvalidInput(
            "silhouette needs at least 2 clusters".into(),
        ));
    }
    let mut full_counts = vec![0usize; k];
    for &l in labels {
        full_counts[l] += 1;
    }
    if let Some(c) = full_counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!("cluster {c} is empty")));
    }

    let n = points.len();
    let (indices, sample) = match sample_cap {
        Some(cap) if n > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pool: Vec<usize> = (0..n).collect();
            for i in 0..cap {
                let j = rng.random_range(i..n);
                pool.swap(i, j);
            }
            let mut picked = pool[..cap].to_vec();
            picked.sort_unstable();
            (
                picked,
                Some(SilhouetteSample {
                    cap,
                    seed,
                    size: cap,
                }),
            )
        }
        _ => ((0..n).collect(), None),
    };

    let sub_labels: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
    let mut counts = vec![0usize; k];
    for &l in &sub_labels {
        counts[l] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::InvalidInput(
            "silhouette subsample retained fewer than 2 clusters; raise the cap".into(),
        ));
    }

    let per_sample: Vec<f64> = (0..indices.len())
        .into_par_iter()
        .map(|ii| {
            let i = indices[ii];
            let own = labels[i];
            if counts[own] < 2 {
                return 0.0;
            }
            let mut sums = vec![0.0f64; k];
            for (jj, &j) in indices.iter().enumerate() {
                if jj == ii {
                    continue;
                }
                sums[labels[j]] += dist(&points[i], &points[j]);
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let mut b = f64::INFINITY;
            for c in 0..k {
                if c != own && counts[c] > 0 {
                    b = b.min(sums[c] / counts[c] as f64);
                }
            }
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();

    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    Ok(SilhouetteReport {
        per_sample,
        mean,
        sample,
    })
}

/// Model-selection parameters for the k sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SelectKConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Candidates whose smallest cluster holds less than this fraction of
    /// the points are passed over (unless nothing qualifies).
    pub min_cluster_fraction: f64,
    pub silhouette_cap: Option<usize>,
}

impl SelectKConfig {
    pub fn new(seed: u64) -> Self {
        SelectKConfig {
            seed,
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            min_cluster_fraction: 0.02,
            silhouette_cap: Some(10_000),
        }
    }
}

/// One row of the k-sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionRow {
    pub k: usize,
    pub mean_silhouette: f64,
    pub inertia: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub chosen: bool,
}

/// Sweep outcome: the full table plus the fitted model for the chosen k.
#[derive(Debug)]
pub struct SelectionResult {
    pub rows: Vec<SelectionRow>,
    pub chosen_k: usize,
    pub model: ClusterModel,
}

/// Fit every k in `k_lo..=k_hi`, score each by mean silhouette, and choose
/// the best-scoring k whose smallest cluster fraction clears
/// `min_cluster_fraction`. The full table is returned so a caller can
/// override the choice.
pub fn select_k(
    points: &[Vec<f64>],
    k_lo: usize,
    k_hi: usize,
    cfg: &SelectKConfig,
) -> Result<SelectionResult> {
    if k_lo > k_hi {
        return Err(Error::InvalidInput(format!("empty k range {k_lo}..{k_hi}")));
    }
    if k_lo < 2 || k_hi > points.len() {
        return Err(Error::InvalidInput(format!(
            "k range {k_lo}..{k_hi} outside [2, {}]",
            points.len()
        )));
    }

    let n = points.len() as f64;
    let mut rows = Vec::new();
    let mut models = Vec::new();
    for k in k_lo..=k_hi {
        let model = kmeans(
            points,
            &KmeansConfig {
                k,
                seed: cfg.seed,
                restarts: cfg.restarts,
                max_iter: cfg.max_iter,
                tol: cfg.tol,
            },
        )?;
        let sil = silhouette(points, &model.labels, cfg.silhouette_cap, cfg.seed)?;
        let sizes = model.sizes();
        let min_fraction = sizes.iter().copied().min().unwrap() as f64 / n;
        let max_fraction = sizes.iter().copied().max().unwrap() as f64 / n;
        rows.push(SelectionRow {
            k,
            mean_silhouette: sil.mean,
            inertia: model.inertia,
            min_fraction,
            max_fraction,
            chosen: false,
        });
        models.push(model);
    }

    let pick = |eligible: &dyn Fn(&SelectionRow) -> bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, row) in rows.iter().enumerate() {
            if !eligible(row) {
                continue;
            }
            if best.is_none_or(|b| row.mean_silhouette > rows[b].mean_silhouette) {
                best = Some(i);
            }
        }
        best
    };
    let chosen_idx = pick(&|row| row.min_fraction >= cfg.min_cluster_fraction)
        .or_else(|| pick(&|_| true))
        .expect("non-empty range");

    rows[chosen_idx].chosen = true;
    let chosen_k = rows[chosen_idx].k;
    let model = models.swap_remove(chosen_idx);
    Ok(SelectionResult {
        rows,
        chosen_k,
        model,
    })
}

/// Summary statistics for one dimension of one group.
#[derive(Debug, Clone, Serialize)]
pub struct DimStats {
    pub dim: String,
    pub mean: f64,
    /// Sample standard deviation (0 when n < 2).
    pub sd: f64,
    pub ci95_half_width: f64,
}

/// Mean activation of the ten pole dimensions for one group of documents.
#[derive(Debug, Clone, Serialize)]
pub struct ActivationSummary {
    /// Cluster index as text, or "all" for the whole corpus.
    pub group: String,
    pub n: usize,
    pub dims: Vec<DimStats>,
}

fn summarize(group: &str, rows: &[&[f64; 10]], names: &[String; 10]) -> ActivationSummary {
    let n = rows.len();
    let mut dims = Vec::with_capacity(10);
    for d in 0..10 {
        let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            let ss: f64 = rows.iter().map(|r| (r[d] - mean) * (r[d] - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        let ci95_half_width = if sd == 0.0 {
            0.0
        } else {
            1.96 * sd / (n as f64).sqrt()
        };
        dims.push(DimStats {
            dim: names[d].clone(),
            mean,
            sd,
            ci95_half_width,
        });
    }
    ActivationSummary {
        group: group.to_string(),
        n,
        dims,
    }
}

/// Per-cluster and overall mean/sd/CI for the ten pole dimensions. Requires
/// pole-mode embeddings; the overall group comes first.
pub fn cluster_activations(
    embeddings: &[MoralEmbedding],
    labels: &[usize],
) -> Result<Vec<ActivationSummary>> {
    if embeddings.is_empty() {
        return Err(Error::InvalidInput("no embeddings".into()));
    }
    if embeddings.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: embeddings.len(),
            right: labels.len(),
        });
    }
    if embeddings.iter().any(|e| e.mode != EmbeddingMode::Poles) {
        return Err(Error::InvalidInput(
            "activation summaries require pole-mode embeddings".into(),
        ));
    }
    let names = crate::framing::embedding_dim_names(EmbeddingMode::Poles);
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);

    let all: Vec<&[f64; 10]> = embeddings.iter().map(|e| &e.values).collect();
    let mut out = vec![summarize("all", &all, &names)];
    for c in 0..k {
        let rows: Vec<&[f64; 10]> = embeddings
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(e, _)| &e.values)
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidInput(format!("cluster {c} is empty")));
        }
        out.push(summarize(&c.to_string(), &rows, &names));
    }
    Ok(out)
}

/// One cluster-distinctive term.
#[derive(Debug, Clone, Serialize)]
pub struct DistinctiveTerm {
    pub term: String,
    pub count: u64,
    /// In-cluster rate over smoothed out-of-cluster rate.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterVocabulary {
    pub cluster: usize,
    pub terms: Vec<DistinctiveTerm>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VocabularyReport {
    pub min_count: u64,
    pub top_n: usize,
    pub clusters: Vec<ClusterVocabulary>,
}

/// Rank terms by how much more frequent they are inside a cluster than
/// outside it. The out-of-cluster rate is add-one smoothed so
/// cluster-exclusive terms rank finitely (and first).
pub fn distinctive_vocabulary(
    documents: &[Vec<String>],
    labels: &[usize],
    min_count: u64,
    top_n: usize,
) -> Result<VocabularyReport> {
    if documents.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: documents.len(),
            right: labels.len(),
        });
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut cluster_counts: Vec<BTreeMap<&str, u64>> = vec![BTreeMap::new(); k];
    let mut cluster_tokens = vec![0u64; k];
    let mut global_counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total_tokens = 0u64;
    for (tokens, &l) in documents.iter().zip(labels) {
        for t in tokens {
            *cluster_counts[l].entry(t.as_str()).or_insert(0) += 1;
            *global_counts.entry(t.as_str()).or_insert(0) += 1;
            cluster_tokens[l] += 1;
            total_tokens += 1;
        }
    }

    let mut clusters = Vec::with_capacity(k);
    for c in 0..k {
        let mut terms: Vec<DistinctiveTerm> = Vec::new();
        if cluster_tokens[c] > 0 {
            for (term, &count) in &cluster_counts[c] {
                if count < min_count {
                    continue;
                }
                let in_rate = count as f64 / cluster_tokens[c] as f64;
                let out_count = global_counts[term] - count;
                let out_tokens = total_tokens - cluster_tokens[c];
                let out_rate = (out_count as f64 + 1.0) / (out_tokens as f64 + 1.0);
                terms.push(DistinctiveTerm {
                    term: term.to_string(),
                    count,
                    ratio: in_rate / out_rate,
                });
            }
            terms.sort_by(|a, b| {
                b.ratio
                    .partial_cmp(&a.ratio)
                    .unwrap()
                    .then_with(|| b.count.cmp(&a.count))
                    .then_with(|| a.term.cmp(&b.term))
            });
            terms.truncate(top_n);
        }
        clusters.push(ClusterVocabulary { cluster: c, terms });
    }
    Ok(VocabularyReport {
        min_count,
        top_n,
        clusters,
    })
}
