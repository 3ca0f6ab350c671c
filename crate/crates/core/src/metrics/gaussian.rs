use crate::error::{Error, Result};
use crate::numerics::{gemm, Tensor};

use super::eigen::jacobi_eigen;

/// Diagonal loading added to every fitted covariance.
pub const COVARIANCE_REGULARIZER: f64 = 1e-6;

/// Mean and covariance of a sample population.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFit {
    pub mean: Vec<f64>,
    /// Row-major `d × d`.
    pub covariance: Vec<f64>,
}

impl GaussianFit {
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.len() != d * d {
            return Err(Error::Shape {
                op: "gaussian_fit",
                left: vec![d],
                right: vec![covariance.len()],
            });
        }
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased covariance, symmetrized, plus `1e-6 · I`.
pub fn fit_gaussian(samples: &Tensor) -> Result<GaussianFit> {
    let (n, d) = (samples.rows(), samples.cols());
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "fit_gaussian needs at least 2 samples, got {n}"
        )));
    }
    let mut mean = vec![0.0; d];
    for row in samples.iter_rows() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut centered = samples.clone();
    for r in 0..n {
        centered
            .row_mut(r)
            .iter_mut()
            .zip(&mean)
            .for_each(|(v, m)| *v -= m);
    }
    let mut cov = vec![0.0; d * d];
    gemm(
        d,
        n,
        d,
        centered.data(),
        true,
        centered.data(),
        false,
        &mut cov,
        0.0,
    );
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let s = 0.5 * (cov[i * d + j] + cov[j * d + i]) / denom;
            cov[i * d + j] = s;
            cov[j * d + i] = s;
        }
        cov[i * d + i] += COVARIANCE_REGULARIZER;
    }
    GaussianFit::new(mean, cov)
}

fn matmul_sq(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    gemm(d, d, d, a, false, b, false, &mut out, 0.0);
    out
}

/// Squared 2-Wasserstein distance between two Gaussians:
/// `‖μa − μb‖² + tr(Σa + Σb − 2 (Σa Σb)^½)`.
///
/// The trace of the cross term is computed as `tr √(Σa^½ Σb Σa^½)` through
/// two symmetric Jacobi eigendecompositions; negative eigenvalues from
/// rounding are clamped to zero.
pub fn frechet_distance(a: &GaussianFit, b: &GaussianFit) -> Result<f64> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::Shape {
            op: "frechet_distance",
            left: vec![d],
            right: vec![b.dim()],
        });
    }
    let mean_term: f64 = a
        .mean
        .iter()
        .zip(&b.mean)
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let trace = |m: &[f64]| (0..d).map(|i| m[i * d + i]).sum::<f64>();

    let sqrt_a = jacobi_eigen(&a.covariance, d)?.reconstruct_with(|l| l.max(0.0).sqrt());
    let mut inner = matmul_sq(&matmul_sq(&sqrt_a, &b.covariance, d), &sqrt_a, d);
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (inner[i * d + j] + inner[j * d + i]);
            inner[i * d + j] = s;
            inner[j * d + i] = s;
        }
    }
    let cross: f64 = jacobi_eigen(&inner, d)?
        .values
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok((mean_term + trace(&a.covariance) + trace(&b.covariance) - 2.0 * cross).max(0.0))
}
