//! Divergence frontier between two quantized distributions and its area.

mod curve;
mod frechet;

pub use curve::{
    divergence_curve, mauve_from_curve, mixture_grid, CurveConfig, CurvePoint, DivergenceCurve,
    DEFAULT_GRID_SIZE, DEFAULT_SCALING,
};
pub use frechet::frechet_distance;

use serde::{Deserialize, Serialize};

use crate::divergence::{js, kl, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::quantize::{quantize_pair, EmbeddingSet, QuantizeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MauveConfig {
    pub quantize: QuantizeConfig,
    pub curve: CurveConfig,
}

/// Score, frontier and endpoint divergences for one `(P, Q)` comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MauveReport {
    pub mauve: f64,
    /// KL(P~ | Q~) in nats.
    #[serde(with = "crate::serde_ext::extended_real")]
    pub kl_p_q: f64,
    /// KL(Q~ | P~) in nats.
    #[serde(with = "crate::serde_ext::extended_real")]
    pub kl_q_p: f64,
    /// JS(P~, Q~) in nats.
    pub js: f64,
    pub k: usize,
    pub seed: u64,
    pub n_p: usize,
    pub n_q: usize,
    pub p_histogram: DiscreteDistribution,
    pub q_histogram: DiscreteDistribution,
    pub curve: DivergenceCurve,
}

/// Frontier and area for two histograms; the report's sample counts and seed
/// are left at zero.
pub fn mauve_from_histograms(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    config: &CurveConfig,
) -> Result<MauveReport> {
    let curve = divergence_curve(p, q, config)?;
    Ok(MauveReport {
        mauve: mauve_from_curve(&curve)?,
        kl_p_q: kl(p, q)?,
        kl_q_p: kl(q, p)?,
        js: js(p, q)?,
        k: p.len(),
        seed: 0,
        n_p: 0,
        n_q: 0,
        p_histogram: p.clone(),
        q_histogram: q.clone(),
        curve,
    })
}

/// Quantizes both embedding sets jointly, then builds the frontier and its
/// area.
pub fn mauve(
    p_embeds: &EmbeddingSet,
    q_embeds: &EmbeddingSet,
    config: &MauveConfig,
) -> Result<MauveReport> {
    let quantized = quantize_pair(p_embeds, q_embeds, &config.quantize)?;
    let mut report = mauve_from_histograms(&quantized.p, &quantized.q, &config.curve)?;
    report.seed = config.quantize.seed;
    report.n_p = p_embeds.n();
    report.n_q = q_embeds.n();
    Ok(report)
}

/// Area values for each `(c, q)` and the ranking of `q_list` each `c`
/// induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub scalings: Vec<f64>,
    /// `values[i][j]` is the area at `scalings[i]` for `q_list[j]`.
    pub values: Vec<Vec<f64>>,
    /// Indices of `q_list` from highest to lowest area, per scaling.
    pub rankings: Vec<Vec<usize>>,
}

impl ScalingSweep {
    pub fn rank_stable(&self) -> bool {
        self.rankings.windows(2).all(|w| w[0] == w[1])
    }
}

pub fn scaling_sweep(
    p: &DiscreteDistribution,
    q_list: &[DiscreteDistribution],
    scalings: &[f64],
    grid_size: usize,
) -> Result<ScalingSweep> {
    if scalings.is_empty() {
        return Err(Error::param("no scaling constants given"));
    }
    let mut values = Vec::with_capacity(scalings.len());
    let mut rankings = Vec::with_capacity(scalings.len());
    for &c in scalings {
        let config = CurveConfig {
            scaling: c,
            grid_size,
            anchors: true,
        };
        let row = q_list
            .iter()
            .map(|q| mauve_from_curve(&divergence_curve(p, q, &config)?))
            .collect::<Result<Vec<f64>>>()?;
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        values.push(row);
        rankings.push(order);
    }
    let sweep = ScalingSweep {
        scalings: scalings.to_vec(),
        values,
        rankings,
    };
    if !sweep.rank_stable() {
        log::warn!("ranking changed across scaling constants: {:?}", sweep.rankings);
    }
    Ok(sweep)
}
