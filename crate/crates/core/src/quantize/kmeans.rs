//! Lloyd's k-means with k-means++ seeding and best-of-n restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EmbeddingSet, PcaProjection};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_RESTARTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: DEFAULT_MAX_ITERS,
            restarts: DEFAULT_RESTARTS,
            seed,
        }
    }
}

/// Cluster labels in `[0, k)`, one per input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|l| **l >= k) {
            return Err(Error::param(format!("label {bad} not below k = {k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Splits at `mid`; both halves keep the same `k`.
    pub fn split_at(&self, mid: usize) -> (Assignment, Assignment) {
        let (a, b) = self.labels.split_at(mid);
        (
            Assignment {
                labels: a.to_vec(),
                k: self.k,
            },
            Assignment {
                labels: b.to_vec(),
                k: self.k,
            },
        )
    }
}

/// Fitted quantizer: centroids in the (possibly PCA-reduced) space plus the
/// projection that produced that space.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    /// `k x dim` row-major centroids.
    pub centroids: Vec<f64>,
    pub dim: usize,
    pub k: usize,
    /// Total within-cluster squared distance of the winning restart.
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
    /// Lloyd update steps taken by the winning restart.
    pub iterations: usize,
    /// Index of the winning restart.
    pub restart: usize,
    pub pca: Option<PcaProjection>,
}

impl ClusterModel {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    /// Nearest-centroid labels for points already in the model's space.
    pub fn assign(&self, points: &EmbeddingSet) -> Result<Assignment> {
        crate::error::check_dims(self.dim, points.dim())?;
        let mut labels = vec![0; points.n()];
        let mut dists = vec![0.0; points.n()];
        assign_points(points, &self.centroids, self.k, &mut labels, &mut dists);
        Assignment::new(labels, self.k)
    }
}

/// Runs `restarts` independent Lloyd fits and keeps the one with the lowest
/// inertia (earliest restart on ties). Deterministic for a given seed.
pub fn kmeans(points: &EmbeddingSet, config: &KMeansConfig) -> Result<(ClusterModel, Assignment)> {
    let KMeansConfig {
        k,
        max_iters,
        restarts,
        seed,
    } = *config;
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if k > points.n() {
        return Err(Error::param(format!(
            "k = {k} exceeds the number of points ({})",
            points.n()
        )));
    }
    if restarts == 0 {
        return Err(Error::param("restarts must be at least 1"));
    }

    let runs: Vec<LloydRun> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(points, k, max_iters, &mut rng)
        })
        .collect();

    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|best, cand| if cand.1.inertia < best.1.inertia { cand } else { best })
        .expect("at least one restart");

    let model = ClusterModel {
        centroids: best.centroids,
        dim: points.dim(),
        k,
        inertia: best.inertia,
        inertia_trace: best.trace,
        iterations: best.iterations,
        restart,
        pca: None,
    };
    Ok((model, Assignment { labels: best.labels, k }))
}

struct LloydRun {
    centroids: Vec<f64>,
    labels: Vec<usize>,
    inertia: f64,
    trace: Vec<f64>,
    iterations: usize,
}

fn lloyd(points: &EmbeddingSet, k: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> LloydRun {
    let n = points.n();
    let dim = points.dim();
    let mut centroids = kmeans_plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];

    assign_points(points, &centroids, k, &mut labels, &mut dists);
    let mut trace = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;

    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    let mut next_labels = labels.clone();
    for _ in 0..max_iters {
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (row, &label) in points.rows().zip(&labels) {
            counts[label] += 1;
            for (s, x) in sums[label * dim..(label + 1) * dim].iter_mut().zip(row) {
                *s += x;
            }
        }

        let mut taken = vec![false; n];
        for j in 0..k {
            let target = &mut centroids[j * dim..(j + 1) * dim];
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in target.iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *c = s * inv;
                }
            } else {
                // Reseed an empty cluster at the point farthest from its centroid.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("k <= n leaves a free point");
                taken[far] = true;
                target.copy_from_slice(points.row(far));
            }
        }

        assign_points(points, &centroids, k, &mut next_labels, &mut dists);
        trace.push(dists.iter().sum::<f64>());
        iterations += 1;
        let changed = next_labels != labels;
        std::mem::swap(&mut labels, &mut next_labels);
        if !changed {
            break;
        }
    }

    LloydRun {
        centroids,
        labels,
        inertia: *trace.last().expect("non-empty trace"),
        trace,
        iterations,
    }
}

/// k-means++ seeding: first centroid uniform, the rest by squared-distance
/// sampling. Falls back to uniform picks once every point is covered.
fn kmeans_plus_plus(points: &EmbeddingSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = points.n();
    let dim = points.dim();
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(points.row(first));

    let mut nearest: Vec<f64> = points
        .rows()
        .map(|row| sq_dist(row, points.row(first)))
        .collect();

    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_positive = 0;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 {
                    last_positive = i;
                    acc += w;
                    if acc > target {
                        chosen = Some(i);
                        break;
                    }
                }
            }
            chosen.unwrap_or(last_positive)
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick);
        centroids.extend_from_slice(c);
        for (d, row) in nearest.iter_mut().zip(points.rows()) {
            *d = d.min(sq_dist(row, c));
        }
    }
    centroids
}

/// Nearest centroid per point; ties go to the lower index.
fn assign_points(
    points: &EmbeddingSet,
    centroids: &[f64],
    k: usize,
    labels: &mut [usize],
    dists: &mut [f64],
) {
    let dim = points.dim();
    labels
        .par_iter_mut()
        .zip(dists.par_iter_mut())
        .enumerate()
        .for_each(|(i, (label, dist))| {
            let row = points.row(i);
            let mut best = (0, f64::INFINITY);
            for j in 0..k {
                let d = sq_dist(row, &centroids[j * dim..(j + 1) * dim]);
                if d < best.1 {
                    best = (j, d);
                }
            }
            *label = best.0;
            *dist = best.1;
        });
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
