use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{kl_unchecked, mixture, DiscreteDistribution, MixtureWeight};
use crate::error::{check_dims, Error, Result};

pub const DEFAULT_SCALING: f64 = 5.0;
pub const DEFAULT_GRID_SIZE: usize = 25;

/// One point of the frontier. `lambda` is the mixture weight on `P`; the
/// anchors carry `lambda` 1 at `(0, 1)` and 0 at `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig {
    /// Scaling constant `c > 0` applied inside `exp(-c * KL)`.
    pub scaling: f64,
    /// `n` of the mixture grid `{1/n, ..., (n-1)/n}`.
    pub grid_size: usize,
    pub anchors: bool,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            scaling: DEFAULT_SCALING,
            grid_size: DEFAULT_GRID_SIZE,
            anchors: true,
        }
    }
}

impl CurveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.scaling > 0.0 && self.scaling.is_finite()) {
            return Err(Error::param(format!(
                "scaling constant must be positive, got {}",
                self.scaling
            )));
        }
        if self.grid_size < 2 {
            return Err(Error::param(format!(
                "grid size must be at least 2, got {}",
                self.grid_size
            )));
        }
        Ok(())
    }
}

/// Frontier points sorted by ascending `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCurve {
    pub points: Vec<CurvePoint>,
    pub scaling: f64,
    pub grid: Vec<MixtureWeight>,
    pub anchored: bool,
}

impl DivergenceCurve {
    /// Mirror image across `y = x`, i.e. the curve of the swapped pair.
    pub fn reflected(&self) -> Self {
        let mut points: Vec<CurvePoint> = self
            .points
            .iter()
            .map(|pt| CurvePoint {
                lambda: 1.0 - pt.lambda,
                x: pt.y,
                y: pt.x,
            })
            .collect();
        points.reverse();
        Self {
            points,
            scaling: self.scaling,
            grid: self.grid.iter().rev().map(|w| w.complement()).collect(),
            anchored: self.anchored,
        }
    }
}

/// Uniform interior grid `{1/n, 2/n, ..., (n-1)/n}`.
pub fn mixture_grid(n: usize) -> Vec<MixtureWeight> {
    (1..n)
        .map(|i| MixtureWeight::new(i as f64 / n as f64).expect("interior weight"))
        .collect()
}

/// Evaluates `(exp(-c KL(Q|R)), exp(-c KL(P|R)))` for `R = lambda P + (1 -
/// lambda) Q` over the grid, optionally closed by the `(0, 1)` and `(1, 0)`
/// anchors.
pub fn divergence_curve(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    config: &CurveConfig,
) -> Result<DivergenceCurve> {
    check_dims(p.len(), q.len())?;
    config.validate()?;
    let c = config.scaling;
    let grid = mixture_grid(config.grid_size);

    let mut points: Vec<CurvePoint> = grid
        .par_iter()
        .map(|&lambda| {
            let r = mixture(p, q, lambda).expect("dimensions checked");
            CurvePoint {
                lambda: lambda.value(),
                x: (-c * kl_unchecked(q.probs(), r.probs())).exp(),
                y: (-c * kl_unchecked(p.probs(), r.probs())).exp(),
            }
        })
        .collect();
    if config.anchors {
        points.push(CurvePoint {
            lambda: 1.0,
            x: 0.0,
            y: 1.0,
        });
        points.push(CurvePoint {
            lambda: 0.0,
            x: 1.0,
            y: 0.0,
        });
    }
    // x falls as lambda rises, so ascending x is descending lambda.
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.lambda.total_cmp(&a.lambda)));

    Ok(DivergenceCurve {
        points,
        scaling: c,
        grid,
        anchored: config.anchors,
    })
}

/// Trapezoidal area under the piecewise-linear curve. Points sharing an `x`
/// collapse to their largest `y`.
pub fn mauve_from_curve(curve: &DivergenceCurve) -> Result<f64> {
    area_under(&curve.points)
}

pub(crate) fn area_under(points: &[CurvePoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::param(format!(
            "need at least 2 curve points, got {}",
            points.len()
        )));
    }
    let mut xy: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    xy.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut envelope: Vec<(f64, f64)> = Vec::with_capacity(xy.len());
    for (x, y) in xy {
        match envelope.last_mut() {
            Some(last) if last.0 == x => last.1 = last.1.max(y),
            _ => envelope.push((x, y)),
        }
    }

    Ok(envelope
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum())
}
