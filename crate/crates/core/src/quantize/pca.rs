//! Principal-component projection followed by per-row L2 normalization.

use nalgebra::{DMatrix, SymmetricEigen};

use super::EmbeddingSet;
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

/// Fitted projection: `reduced = normalize((x - mean) * basis)`.
#[derive(Debug, Clone)]
pub struct PcaProjection {
    /// `d x d'` matrix whose columns are principal directions.
    pub basis: DMatrix<f64>,
    pub mean: Vec<f64>,
    /// Fraction of total variance carried by each kept component.
    pub explained_variance_ratio: Vec<f64>,
    /// Set when the input had no variance; the basis is then the first axis.
    pub degenerate: bool,
}

impl PcaProjection {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Projects and normalizes `points` with this fitted basis.
    pub fn transform(&self, points: &EmbeddingSet) -> Result<EmbeddingSet> {
        crate::error::check_dims(self.input_dim(), points.dim())?;
        let d_out = self.output_dim();
        let mut out = Vec::with_capacity(points.n() * d_out);
        for row in points.rows() {
            for c in 0..d_out {
                let mut acc = 0.0;
                for (j, (&x, &m)) in row.iter().zip(&self.mean).enumerate() {
                    acc += (x - m) * self.basis[(j, c)];
                }
                out.push(acc);
            }
        }
        normalize_rows(&mut out, d_out);
        EmbeddingSet::with_ids(out, points.n(), d_out, points.ids().to_vec())
    }
}

#[derive(Debug, Clone)]
pub struct PcaOutput {
    pub reduced: EmbeddingSet,
    pub projection: PcaProjection,
}

/// Centers `joint`, keeps the fewest leading components whose cumulative
/// explained variance reaches `explained_variance`, and L2-normalizes each
/// projected row. Rows that project to zero stay zero.
pub fn pca_reduce(joint: &EmbeddingSet, explained_variance: f64) -> Result<PcaOutput> {
    if !(explained_variance > 0.0 && explained_variance <= 1.0) {
        return Err(Error::param(format!(
            "explained variance {explained_variance} outside (0, 1]"
        )));
    }
    let n = joint.n();
    let d = joint.dim();
    if n < 2 {
        return Err(Error::param("PCA needs at least 2 samples"));
    }

    let mut mean = vec![0.0; d];
    for row in joint.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| joint.row(i)[j] - mean[j]);

    let (eigenvalues, directions) = principal_directions(&centered);
    let total: f64 = eigenvalues.iter().sum();
    let largest = eigenvalues.first().copied().unwrap_or(0.0);
    let scale = centered.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    if largest <= 0.0 || total <= 0.0 || scale == 0.0 {
        log::warn!("PCA input has no variance; projecting onto the first axis");
        let mut basis = DMatrix::zeros(d, 1);
        basis[(0, 0)] = 1.0;
        let projection = PcaProjection {
            basis,
            mean,
            explained_variance_ratio: vec![1.0],
            degenerate: true,
        };
        let reduced = projection.transform(joint)?;
        return Ok(PcaOutput {
            reduced,
            projection,
        });
    }

    let target = explained_variance * total * (1.0 - RANK_TOLERANCE);
    let mut kept = 0;
    let mut cumulative = 0.0;
    for &ev in &eigenvalues {
        cumulative += ev;
        kept += 1;
        if cumulative >= target {
            break;
        }
    }

    let basis = directions.columns(0, kept).into_owned();
    let explained_variance_ratio = eigenvalues[..kept].iter().map(|ev| ev / total).collect();

    // Column-major storage of the transpose is row-major storage of the projection.
    let mut data = (&centered * &basis).transpose().as_slice().to_vec();
    normalize_rows(&mut data, kept);

    let projection = PcaProjection {
        basis,
        mean,
        explained_variance_ratio,
        degenerate: false,
    };
    let reduced = EmbeddingSet::with_ids(data, n, kept, joint.ids().to_vec())?;
    Ok(PcaOutput {
        reduced,
        projection,
    })
}

/// Non-zero covariance eigenvalues in descending order with their unit
/// eigenvectors as columns of a `d x r` matrix.
///
/// Uses the `d x d` covariance when `d <= n`, otherwise the `n x n` Gram
/// matrix, whose non-zero spectrum is the same.
fn principal_directions(centered: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = centered.nrows();
    let d = centered.ncols();
    let denom = (n - 1) as f64;

    let gram_route = d > n;
    let sym = if gram_route {
        centered * centered.transpose() / denom
    } else {
        centered.transpose() * centered / denom
    };
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let largest = order
        .first()
        .map_or(0.0, |&i| eig.eigenvalues[i].max(0.0));
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| largest > 0.0 && eig.eigenvalues[i] > RANK_TOLERANCE * largest)
        .collect();

    let values: Vec<f64> = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut directions = DMatrix::zeros(d, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let mut v = if gram_route {
            // Map a Gram eigenvector u to the covariance eigenvector X^T u.
            let mut v = centered.transpose() * eig.eigenvectors.column(i);
            let norm = v.norm();
            if norm > 0.0 {
                v /= norm;
            }
            v
        } else {
            eig.eigenvectors.column(i).into_owned()
        };
        // Fix the sign so the largest-magnitude coordinate is positive.
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, x)| {
                if x.abs() > best.1.abs() {
                    (j, *x)
                } else {
                    best
                }
            })
            .0;
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        directions.set_column(c, &v);
    }
    (values, directions)
}

fn normalize_rows(data: &mut [f64], dim: usize) {
    let norms: Vec<f64> = data
        .chunks_exact(dim)
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let scale = norms.iter().cloned().fold(0.0f64, f64::max);
    let floor = scale * f64::EPSILON;
    for (row, norm) in data.chunks_exact_mut(dim).zip(norms) {
        if norm > floor && norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        } else {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}
