//! Discrete distributions over a finite support and the divergences between
//! them.
//!
//! Every divergence is in nats. A KL term with positive mass on a bin that the
//! reference assigns zero mass is `f64::INFINITY`; no operation here returns
//! NaN for valid inputs.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Probability vector over `k >= 1` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates `probs` without renormalizing.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some((j, &v)) = probs
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {j} is {v}, expected a finite non-negative value"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Scales non-negative weights to unit mass.
    pub fn renormalize(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// Uniform distribution over `k` bins.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Number of bins with positive mass.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }

    /// Total-variation distance, `0.5 * sum |p - q|`.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        check_dims(self.len(), other.len())?;
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.probs
    }
}

/// Mixture weight in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MixtureWeight(f64);

impl MixtureWeight {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::param(format!(
                "mixture weight {lambda} outside [0, 1]"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl TryFrom<f64> for MixtureWeight {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MixtureWeight> for f64 {
    fn from(w: MixtureWeight) -> Self {
        w.0
    }
}

/// `lambda * p + (1 - lambda) * q`.
pub fn mixture(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    lambda: MixtureWeight,
) -> Result<DiscreteDistribution> {
    check_dims(p.len(), q.len())?;
    let l = lambda.value();
    let probs = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| b + l * (a - b))
        .collect();
    Ok(DiscreteDistribution { probs })
}

/// KL(p | r) in nats; `+inf` when `p` puts mass where `r` has none.
pub fn kl(p: &DiscreteDistribution, r: &DiscreteDistribution) -> Result<f64> {
    check_dims(p.len(), r.len())?;
    Ok(kl_unchecked(&p.probs, &r.probs))
}

pub(crate) fn kl_unchecked(p: &[f64], r: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pj, &rj) in p.iter().zip(r) {
        if pj <= 0.0 {
            continue;
        }
        if rj <= 0.0 {
            return f64::INFINITY;
        }
        total += pj * (pj / rj).ln();
    }
    // Rounding can leave a tiny negative value when p and r nearly coincide.
    total.max(0.0)
}

/// Jensen-Shannon divergence in nats, bounded by `ln 2`.
pub fn js(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    let mid = mixture(p, q, MixtureWeight(0.5))?;
    let value = 0.5 * (kl_unchecked(&p.probs, &mid.probs) + kl_unchecked(&q.probs, &mid.probs));
    Ok(value.clamp(0.0, LN_2))
}
