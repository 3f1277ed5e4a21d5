//! Divergence-frontier comparison of a model's text distribution against a
//! reference distribution, computed from embedded samples.
//!
//! The pipeline quantizes both embedding sets with a shared PCA + k-means
//! codebook, traces the KL frontier between the two histograms over a grid
//! of mixtures and reports the area under it. Baseline text statistics,
//! Frechet distance and Bradley-Terry ranking of pairwise human judgments
//! live alongside.
//!
//! ```
//! use mauve::divergence::DiscreteDistribution;
//! use mauve::frontier::{mauve_from_histograms, CurveConfig};
//!
//! let p = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
//! let report = mauve_from_histograms(&p, &p, &CurveConfig::default()).unwrap();
//! assert!((report.mauve - 1.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod divergence;
pub mod error;
pub mod frontier;
pub mod io;
pub mod quantize;
pub mod ranking;
mod serde_ext;
pub mod textstats;

pub use error::{Error, Result};
pub use frontier::{mauve, MauveConfig, MauveReport};
