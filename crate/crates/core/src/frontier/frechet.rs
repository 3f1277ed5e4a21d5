use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dims, Error, Result};
use crate::quantize::EmbeddingSet;

/// Eigenvalues below this fraction of the largest are clamped to zero.
const CLAMP_RELATIVE: f64 = 1e-12;

/// Squared 2-Wasserstein distance between the Gaussians fitted to the two
/// sets: `|mu_p - mu_q|^2 + tr(S_p + S_q - 2 (S_p S_q)^{1/2})`.
pub fn frechet_distance(p_embeds: &EmbeddingSet, q_embeds: &EmbeddingSet) -> Result<f64> {
    check_dims(p_embeds.dim(), q_embeds.dim())?;
    if p_embeds.n() < 2 || q_embeds.n() < 2 {
        return Err(Error::param(
            "Frechet distance needs at least 2 samples per set",
        ));
    }
    let (mu_p, cov_p) = mean_and_covariance(p_embeds);
    let (mu_q, cov_q) = mean_and_covariance(q_embeds);

    let mean_term = (&mu_p - &mu_q).norm_squared();
    let sqrt_p = psd_sqrt(cov_p.clone());
    let inner = &sqrt_p * &cov_q * &sqrt_p;
    let cross = clamped_eigenvalues(inner)
        .into_iter()
        .map(f64::sqrt)
        .sum::<f64>();

    Ok(mean_term + cov_p.trace() + cov_q.trace() - 2.0 * cross)
}

/// Sample mean and unbiased covariance.
pub(crate) fn mean_and_covariance(set: &EmbeddingSet) -> (DVector<f64>, DMatrix<f64>) {
    let n = set.n();
    let d = set.dim();
    let x = DMatrix::from_row_slice(n, d, set.as_slice());
    let mean = DVector::from_iterator(d, x.column_iter().map(|c| c.mean()));
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    (mean, cov)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn clamped_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let values = SymmetricEigen::new(symmetrize(m)).eigenvalues;
    let largest = values.iter().cloned().fold(0.0f64, f64::max);
    values
        .iter()
        .map(|&v| if v > CLAMP_RELATIVE * largest { v } else { 0.0 })
        .collect()
}

fn psd_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let largest = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let roots = eig.eigenvalues.map(|v| {
        if v > CLAMP_RELATIVE * largest {
            v.sqrt()
        } else {
            0.0
        }
    });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(n: usize, mean: &[f64], stds: &[f64], seed: u64) -> EmbeddingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut data = Vec::new();
        for _ in 0..n {
            for (m, s) in mean.iter().zip(stds) {
                data.push(m + s * normal.sample(&mut rng));
            }
        }
        EmbeddingSet::new(data, n, mean.len()).unwrap()
    }

    #[test]
    fn identical_sets_are_zero() {
        let a = sample(200, &[0.0, 1.0, 2.0], &[1.0, 0.5, 2.0], 1);
        let v = frechet_distance(&a, &a).unwrap();
        assert!(v.abs() < 1e-6, "{v}");
        assert!(v >= -1e-8);
    }

    #[test]
    fn scalar_gaussians_closed_form() {
        // Exact sample variances a^2 and b^2 with equal means.
        let p = EmbeddingSet::from_rows(vec![vec![-2.0], vec![2.0]]).unwrap(); // var 8
        let q = EmbeddingSet::from_rows(vec![vec![-0.5], vec![0.5]]).unwrap(); // var 0.5
        let (a, b) = (8f64.sqrt(), 0.5f64.sqrt());
        let v = frechet_distance(&p, &q).unwrap();
        assert!((v - (a - b).powi(2)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn nuclear_norm_route_agrees() {
        let p = sample(500, &[0.0, 0.0, 0.0], &[1.0, 2.0, 0.5], 2);
        let q = sample(500, &[1.0, 0.0, -1.0], &[3.0, 1.0, 0.5], 3);
        let (mp, cp) = mean_and_covariance(&p);
        let (mq, cq) = mean_and_covariance(&q);
        let sp = psd_sqrt(cp.clone());
        let sq = psd_sqrt(cq.clone());
        // tr (Sp^{1/2} Sq Sp^{1/2})^{1/2} is the nuclear norm of Sp^{1/2} Sq^{1/2}.
        let nuclear: f64 = (&sp * &sq).svd(false, false).singular_values.iter().sum();
        let oracle = (&mp - &mq).norm_squared() + cp.trace() + cq.trace() - 2.0 * nuclear;
        let v = frechet_distance(&p, &q).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn mean_shift_recovered() {
        let p = sample(10_000, &[0.0; 4], &[1.0; 4], 4);
        let q = sample(10_000, &[3.0, 0.0, 0.0, 0.0], &[1.0; 4], 5);
        let v = frechet_distance(&p, &q).unwrap();
        assert!((v - 9.0).abs() < 0.3, "{v}");
    }

    #[test]
    fn errors() {
        let one = EmbeddingSet::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        let two = EmbeddingSet::from_rows(vec![vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert!(frechet_distance(&one, &two).is_err());
        let other = EmbeddingSet::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
        assert!(frechet_distance(&two, &other).is_err());
    }
}
