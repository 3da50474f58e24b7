//! PCA via a cyclic Jacobi eigendecomposition of the sample covariance.

use crate::error::{Error, Result};
use crate::nnkit::Tensor;

/// Fitted PCA parameters: column means, the top `latent` eigenvectors as
/// rows, and whether the covariance was rank-deficient (in which case
/// the trailing components are an arbitrary orthonormal complement).
#[derive(Debug, Clone)]
pub(crate) struct PcaFit {
    pub mean: Vec<f64>,
    /// latent x dim, row-major; rows are components.
    pub components: Vec<f64>,
    pub degenerate: bool,
}

pub(crate) fn fit_pca_params(data: &Tensor, latent: usize) -> Result<PcaFit> {
    let (n, d) = (data.rows(), data.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(data.row_slice(r)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }

    // Sample covariance (divisor n - 1); zero when a single point.
    let mut cov = vec![0.0; d * d];
    if n > 1 {
        for r in 0..n {
            let row = data.row_slice(r);
            for i in 0..d {
                let ci = row[i] - mean[i];
                if ci == 0.0 {
                    continue;
                }
                for j in i..d {
                    cov[i * d + j] += ci * (row[j] - mean[j]);
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] / denom;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
    }

    let (eigvals, eigvecs) = jacobi_eigen_sym(cov, d)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]));

    let max_eig = eigvals[order[0]].max(0.0);
    let rank_tol = max_eig.max(1.0) * 1e-12;
    let rank = order.iter().filter(|&&i| eigvals[i] > rank_tol).count();
    let degenerate = rank < latent;

    let mut components = vec![0.0; latent * d];
    for (p, &col) in order.iter().take(latent).enumerate() {
        for i in 0..d {
            components[p * d + i] = eigvecs[i * d + col];
        }
    }
    fix_signs(&mut components, latent, d);

    Ok(PcaFit {
        mean,
        components,
        degenerate,
    })
}

/// Makes each component's largest-magnitude coordinate positive, so the
/// decomposition is reproducible across runs and platforms.
fn fix_signs(components: &mut [f64], latent: usize, d: usize) {
    for p in 0..latent {
        let row = &mut components[p * d..(p + 1) * d];
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = i;
            }
        }
        if row[best] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
}

const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations on a symmetric matrix. Returns the (unsorted)
/// eigenvalues and the eigenvector matrix with eigenvectors in columns.
pub(crate) fn jacobi_eigen_sym(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n < 2 {
        let vals = (0..n).map(|i| a[i * n + i]).collect();
        return Ok((vals, v));
    }

    for _ in 0..MAX_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                max_off = max_off.max(a[p * n + q].abs());
            }
        }
        if max_off < OFF_DIAG_TOL {
            let vals = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((vals, v));
        }

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < OFF_DIAG_TOL {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 { -t } else { t }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_matrix_is_fixed_point() {
        let a = vec![2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, -1.0];
        let (vals, vecs) = jacobi_eigen_sym(a, 3).unwrap();
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![-1.0, 2.0, 5.0]);
        // eigenvectors stay the identity
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vecs[i * 3 + j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jacobi_known_two_by_two() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let (vals, vecs) = jacobi_eigen_sym(vec![2.0, 1.0, 1.0, 2.0], 2).unwrap();
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        assert!((sorted[0] - 1.0).abs() < 1e-12);
        assert!((sorted[1] - 3.0).abs() < 1e-12);
        // A v = lambda v for each eigenpair
        let a = [2.0, 1.0, 1.0, 2.0];
        for col in 0..2 {
            for row in 0..2 {
                let av: f64 = (0..2).map(|k| a[row * 2 + k] * vecs[k * 2 + col]).sum();
                assert!((av - vals[col] * vecs[row * 2 + col]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_eigenvectors_are_orthonormal() {
        let mut r = crate::rng::seeded(17);
        let n = 8;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = crate::rng::uniform_symmetric(&mut r, 2.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let (_vals, v) = jacobi_eigen_sym(a, n).unwrap();
        for c1 in 0..n {
            for c2 in 0..n {
                let dot: f64 = (0..n).map(|i| v[i * n + c1] * v[i * n + c2]).sum();
                let want = if c1 == c2 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "columns {c1},{c2}: {dot}");
            }
        }
    }

    #[test]
    fn identical_points_are_degenerate() {
        let data = Tensor::matrix(4, 3, [1.0, 2.0, 3.0].repeat(4)).unwrap();
        let fit = fit_pca_params(&data, 2).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.mean, vec![1.0, 2.0, 3.0]);
        // padded components still orthonormal
        for p in 0..2 {
            let row = &fit.components[p * 3..(p + 1) * 3];
            let n: f64 = row.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sign_convention_makes_peak_coordinate_positive() {
        let mut comps = vec![0.1, -0.9, 0.2, 0.5, 0.3, 0.1];
        fix_signs(&mut comps, 2, 3);
        assert_eq!(&comps[..3], &[-0.1, 0.9, -0.2]);
        assert_eq!(&comps[3..], &[0.5, 0.3, 0.1]);
    }
}
