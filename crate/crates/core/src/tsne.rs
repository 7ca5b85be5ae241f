//! Exact (O(n^2)) t-SNE for 2-D plot-data emission.
//!
//! Per-point Gaussian bandwidths are found by binary search so each
//! conditional distribution's entropy matches the target perplexity; the
//! low-dimensional kernel is the Student-t with one degree of freedom.
//! Gradient descent follows the standard schedule: early exaggeration for
//! the first 250 iterations, momentum 0.5 switching to 0.8 at iteration 250,
//! and per-coordinate adaptive gains. The quadratic memory is acceptable at
//! this engine's scale target (tens of thousands of points); larger inputs
//! are expected to be subsampled by the caller.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// t-SNE hyperparameters. Defaults are the standard schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Input affinities are multiplied by this for the first
    /// `exaggeration_iters` iterations.
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Iteration at which momentum switches to `final_momentum`.
    pub momentum_switch_iter: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.iterations < 250 {
            return Err(Error::Config(format!(
                "t-SNE iterations {} must be >= 250",
                self.iterations
            )));
        }
        if self.perplexity.is_nan() || self.perplexity <= 0.0 {
            return Err(Error::Config("t-SNE perplexity must be positive".into()));
        }
        if n < 10 {
            return Err(Error::InvalidInput(format!(
                "t-SNE needs at least 10 points, got {n}"
            )));
        }
        if self.perplexity >= (n as f64 - 1.0) / 3.0 {
            return Err(Error::Config(format!(
                "perplexity {} too large for {n} points (needs perplexity < (n-1)/3)",
                self.perplexity
            )));
        }
        Ok(())
    }
}

/// 2-D coordinates plus the optimization trace.
#[derive(Debug, Clone, Serialize)]
pub struct Projection {
    pub coordinates: Vec<[f64; 2]>,
    /// KL divergence against the (unexaggerated) input affinities, before
    /// the first gradient step.
    pub initial_kl: f64,
    /// KL divergence recorded every 50 iterations; length `iterations / 50`.
    pub kl_trace: Vec<f64>,
    pub config: TsneConfig,
}

/// Run exact t-SNE on row-major points. Deterministic given the seed.
pub fn tsne(points: &[Vec<f64>], config: &TsneConfig) -> Result<Projection> {
    let n = points.len();
    config.validate(n)?;
    let dim = points.first().map_or(0, Vec::len);
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

    let affinities = input_affinities(points, config.perplexity);

    // Seeded Gaussian initialization, sd 1e-4.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            [a * 1e-4, b * 1e-4]
        })
        .collect();

    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];

    let (w, sum_w) = student_t_weights(&y);
    let initial_kl = kl_divergence(&affinities, &w, sum_w);

    let mut kl_trace = Vec::with_capacity(config.iterations / 50);
    for iter in 0..config.iterations {
        let exaggeration = if iter < config.exaggeration_iters {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch_iter {
            config.initial_momentum
        } else {
            config.final_momentum
        };

        let (w, sum_w) = student_t_weights(&y);
        let gradient = gradient(&affinities, &w, sum_w, &y, exaggeration);

        for i in 0..n {
            for d in 0..2 {
                let g = gradient[i][d];
                // Jacobs-style adaptive gains.
                gains[i][d] = if (g > 0.0) == (velocity[i][d] > 0.0) {
                    (gains[i][d] * 0.8).max(0.01)
                } else {
                    gains[i][d] + 0.2
                };
                velocity[i][d] = momentum * velocity[i][d] - config.learning_rate * gains[i][d] * g;
                y[i][d] += velocity[i][d];
            }
        }

        // Re-center so the embedding mean stays at the origin.
        let mut mean = [0.0f64; 2];
        for p in &y {
            mean[0] += p[0];
            mean[1] += p[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for p in y.iter_mut() {
            p[0] -= mean[0];
            p[1] -= mean[1];
        }

        if (iter + 1) % 50 == 0 {
            let (w, sum_w) = student_t_weights(&y);
            kl_trace.push(kl_divergence(&affinities, &w, sum_w));
        }
    }

    Ok(Projection {
        coordinates: y,
        initial_kl,
        kl_trace,
        config: config.clone(),
    })
}

/// Symmetrized input affinities `P = (P_cond + P_cond^T) / 2n`, row-major.
/// Sums to 1 up to float error.
pub fn input_affinities(points: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = points.len();
    let d2: Vec<Vec<f64>> = points
        .par_iter()
        .map(|a| {
            points
                .iter()
                .map(|b| crate::cluster::sq_dist(a, b))
                .collect()
        })
        .collect();

    let conditional: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| conditional_row(&d2[i], i, perplexity))
        .collect();

    let mut p = vec![0.0f64; n * n];
    let norm = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (conditional[i][j] + conditional[j][i]) / norm;
        }
    }
    p
}

/// Binary search the Gaussian precision `beta = 1/(2 sigma^2)` for one row so
/// the conditional distribution's entropy hits `ln(perplexity)` in nats.
fn conditional_row(d2: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let n = d2.len();
    let target = perplexity.ln();
    let mut beta = 1.0f64;
    let mut beta_min = f64::NEG_INFINITY;
    let mut beta_max = f64::INFINITY;
    let mut row = vec![0.0f64; n];

    for _ in 0..200 {
        let mut sum = 0.0;
        for j in 0..n {
            if j == i {
                row[j] = 0.0;
                continue;
            }
            let v = (-beta * d2[j]).exp();
            row[j] = v;
            sum += v;
        }
        if sum <= 0.0 {
            // beta overshot into total underflow; back off
            beta_max = beta;
            beta = if beta_min.is_finite() {
                (beta + beta_min) / 2.0
            } else {
                beta / 2.0
            };
            continue;
        }
        // entropy of the normalized row: H = ln(sum) + beta * E[d2]
        // (row[i] is zero, so the self pair contributes nothing)
        let weighted: f64 = row.iter().zip(d2).map(|(r, d)| r * d).sum();
        let entropy = sum.ln() + beta * weighted / sum;

        let diff = entropy - target;
        if diff.abs() < 1e-7 {
            break;
        }
        if diff > 0.0 {
            beta_min = beta;
            beta = if beta_max.is_finite() {
                (beta + beta_max) / 2.0
            } else {
                beta * 2.0
            };
        } else {
            beta_max = beta;
            beta = if beta_min.is_finite() {
                (beta + beta_min) / 2.0
            } else {
                beta / 2.0
            };
        }
    }

    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    row
}

/// Unnormalized Student-t kernel weights `w_ij = 1/(1+||y_i-y_j||^2)` and
/// their total (over ordered pairs, i != j).
fn student_t_weights(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let w: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let yi = y[i];
            y.iter().enumerate().map(move |(j, yj)| {
                if i == j {
                    0.0
                } else {
                    let dx = yi[0] - yj[0];
                    let dy = yi[1] - yj[1];
                    1.0 / (1.0 + dx * dx + dy * dy)
                }
            })
        })
        .collect();
    // fixed-order reduction
    let sum_w: f64 = w.iter().sum();
    (w, sum_w)
}

fn gradient(p: &[f64], w: &[f64], sum_w: f64, y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let wij = w[i * n + j];
                let qij = wij / sum_w;
                let factor = 4.0 * (exaggeration * p[i * n + j] - qij) * wij;
                g[0] += factor * (y[i][0] - y[j][0]);
                g[1] += factor * (y[i][1] - y[j][1]);
            }
            g
        })
        .collect()
}

/// KL(P || Q) over ordered pairs, guarding the logs.
fn kl_divergence(p: &[f64], w: &[f64], sum_w: f64) -> f64 {
    p.iter()
        .zip(w)
        .map(|(&pij, &wij)| {
            if pij <= 0.0 {
                0.0
            } else {
                let qij = (wij / sum_w).max(1e-12);
                pij * (pij / qij).ln()
            }
        })
        .sum()
}
