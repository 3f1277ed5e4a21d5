//! Quantization of two embedding sets into histograms over a shared partition.
//!
//! Both sets are stacked, reduced with PCA, L2-normalized and clustered
//! together; each side's histogram counts how many of its rows land in each
//! cluster.

mod embedding;
mod kmeans;
mod pca;

pub use embedding::EmbeddingSet;
pub use kmeans::{kmeans, Assignment, ClusterModel, KMeansConfig, DEFAULT_MAX_ITERS, DEFAULT_RESTARTS};
pub use pca::{pca_reduce, PcaOutput, PcaProjection};

use crate::divergence::DiscreteDistribution;
use crate::error::{check_dims, Error, Result};

pub const DEFAULT_NUM_BUCKETS: usize = 500;
pub const DEFAULT_EXPLAINED_VARIANCE: f64 = 0.9;

/// Fraction of labels in each of the `k` bins.
pub fn histogram(labels: &[usize], k: usize) -> Result<DiscreteDistribution> {
    if labels.is_empty() {
        return Err(Error::param("cannot build a histogram from no labels"));
    }
    if k == 0 {
        return Err(Error::param("histogram needs at least one bin"));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::param(format!("label {l} not below k = {k}")));
        }
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    DiscreteDistribution::new(counts.into_iter().map(|c| c as f64 / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizeConfig {
    pub k: usize,
    pub explained_variance: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for QuantizeConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_NUM_BUCKETS,
            explained_variance: DEFAULT_EXPLAINED_VARIANCE,
            max_iters: DEFAULT_MAX_ITERS,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

impl QuantizeConfig {
    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            max_iters: self.max_iters,
            restarts: self.restarts,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantizedPair {
    pub p: DiscreteDistribution,
    pub q: DiscreteDistribution,
    pub p_assignment: Assignment,
    pub q_assignment: Assignment,
    pub model: ClusterModel,
}

/// Clusters `p_embeds` and `q_embeds` jointly and returns their histograms
/// over the same `k` bins.
pub fn quantize_pair(
    p_embeds: &EmbeddingSet,
    q_embeds: &EmbeddingSet,
    config: &QuantizeConfig,
) -> Result<QuantizedPair> {
    check_dims(p_embeds.dim(), q_embeds.dim())?;
    let total = p_embeds.n() + q_embeds.n();
    if config.k > total {
        return Err(Error::param(format!(
            "k = {} exceeds the {total} pooled samples",
            config.k
        )));
    }
    let joint = p_embeds.concat(q_embeds)?;
    let PcaOutput {
        reduced,
        projection,
    } = pca_reduce(&joint, config.explained_variance)?;
    let (mut model, assignment) = kmeans(&reduced, &config.kmeans())?;
    model.pca = Some(projection);

    let (p_assignment, q_assignment) = assignment.split_at(p_embeds.n());
    let p = histogram(p_assignment.labels(), config.k)?;
    let q = histogram(q_assignment.labels(), config.k)?;
    Ok(QuantizedPair {
        p,
        q,
        p_assignment,
        q_assignment,
        model,
    })
}
